//! Renders each task prompt, including an engineering variant.
//!
//! Run with: cargo run --example render_prompts

use sumeval::prompt::{
    render_alignment, render_fact_check, render_keyfact_extraction, render_summarize, Feature,
    PromptVariant, Task,
};

fn main() {
    let document = "The council approved the bridge on Monday. Construction starts in March.";
    let sentences = vec![
        "The bridge was approved on Monday.".to_string(),
        "Construction starts in May.".to_string(),
    ];
    let keyfacts = vec![
        "The bridge was approved.".to_string(),
        "Construction starts in March.".to_string(),
    ];

    let default = PromptVariant::default_for(Task::FactCheck);
    let prompt = render_fact_check(document, &sentences, &default).unwrap();
    println!(
        "=== fact check, default variant ({}, v{}) ===\n{}\n",
        prompt.template_key, prompt.template_version, prompt.text
    );

    let basic = PromptVariant::basic(Task::FactCheck);
    let prompt = render_fact_check(document, &sentences, &basic).unwrap();
    println!(
        "=== fact check, basic variant (no category list) ===\n{}\n",
        prompt.text
    );

    let prompt = render_alignment(
        &keyfacts,
        &sentences,
        &PromptVariant::default_for(Task::KeyfactAlignment),
    )
    .unwrap();
    println!("=== keyfact alignment, default variant ===\n{}\n", prompt.text);

    let prompt = render_keyfact_extraction(
        "The bridge was approved on Monday. Construction starts in March.",
    )
    .unwrap();
    println!("=== keyfact extraction ===\n{}\n", prompt.text);

    let prompt = render_summarize(document).unwrap();
    println!("=== summarize ===\n{}\n", prompt.text);

    // Feature sets outside the allowed rows are rejected.
    let bad = PromptVariant::new(Task::FactCheck, [Feature::Instruction]);
    println!("lone instruction feature: {:?}", bad.validate().unwrap_err());
}
