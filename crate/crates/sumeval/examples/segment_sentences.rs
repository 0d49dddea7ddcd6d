//! Rule-based sentence segmentation.
//!
//! Run with: cargo run --example segment_sentences

use sumeval::segment::segment_sentences;

fn main() {
    let samples = [
        "A cat sat. A dog ran.",
        "Dr. Smith arrived at the U.S. embassy. He left an hour later.",
        "Shares rose 3.5 percent. Analysts expected 2.1 percent.",
        "He said \"stop.\" Then he left. See Fig. 2 for the route.",
        "One sentence without terminal punctuation",
    ];
    for text in samples {
        println!("input:  {text}");
        match segment_sentences(text) {
            Ok(sentences) => {
                for (i, sentence) in sentences.iter().enumerate() {
                    println!("  [{}] {sentence}", i + 1);
                }
            }
            Err(e) => println!("  error: {e}"),
        }
        println!();
    }
}
