//! The three percentage scores computed from parsed verdicts and an
//! alignment graph: a summary with 3 sentences (1 factual) and 4 keyfacts
//! (3 matched, over sentences {1, 3}) scores (1/3, 3/4, 2/3).
//!
//! Run with: cargo run --example score_summary

use std::collections::BTreeSet;

use sumeval::model::{AlignmentGraph, ErrorCategory, FactCheckVerdict, KeyfactAlignment};
use sumeval::scoring::{completeness, conciseness, faithfulness};

fn main() {
    let verdicts = vec![
        FactCheckVerdict {
            sentence_index: 1,
            category: ErrorCategory::NoError,
            reason: "matches the article".into(),
        },
        FactCheckVerdict {
            sentence_index: 2,
            category: ErrorCategory::Entity,
            reason: "the duration is wrong".into(),
        },
        FactCheckVerdict {
            sentence_index: 3,
            category: ErrorCategory::OutOfContext,
            reason: "not in the article".into(),
        },
    ];
    let n = verdicts.len();

    let graph = AlignmentGraph::new(vec![
        KeyfactAlignment {
            keyfact_index: 1,
            matched: true,
            line_numbers: [1].into(),
        },
        KeyfactAlignment {
            keyfact_index: 2,
            matched: true,
            line_numbers: [1].into(),
        },
        KeyfactAlignment {
            keyfact_index: 3,
            matched: true,
            line_numbers: [3].into(),
        },
        KeyfactAlignment {
            keyfact_index: 4,
            matched: false,
            line_numbers: BTreeSet::new(),
        },
    ]);
    let m = graph.len();

    let faith = faithfulness(&verdicts, n).unwrap();
    let comp = completeness(&graph, m).unwrap();
    let conc = conciseness(&graph, n).unwrap();

    println!("sentences: {n}, keyfacts: {m}");
    println!("edges: {:?}", graph.edges().collect::<Vec<_>>());
    println!("faithfulness = {faith} = {:.4}", faith.value());
    println!("completeness = {comp} = {:.4}", comp.value());
    println!("conciseness  = {conc} = {:.4}", conc.value());
}
