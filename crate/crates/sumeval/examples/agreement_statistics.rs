//! The statistics toolbox on its own: balanced accuracy, Pearson/Spearman
//! with permutation p-values, rank correlation across systems, Cohen's
//! kappa, and Krippendorff's alpha.
//!
//! Run with: cargo run --example agreement_statistics

use sumeval::meta::{
    balanced_accuracy, cohen_kappa, krippendorff_alpha_nominal, pearson, permutation_p_value,
    spearman, system_rank_correlation, Statistic, SystemScore,
};

fn main() {
    // Sentence-level: binary error decisions vs gold.
    let pred = vec![true, false, false, false, true];
    let gold = vec![true, true, false, false, false];
    let (bacc, counts) = balanced_accuracy(&pred, &gold).unwrap();
    println!(
        "balanced accuracy = {bacc} = {:.4} (sens {}, spec {})",
        bacc.value(),
        counts.sensitivity().unwrap(),
        counts.specificity().unwrap()
    );

    // Summary-level: predicted vs human percentage scores.
    let predicted = [0.33, 0.75, 0.5, 1.0, 0.25, 0.8];
    let human = [0.33, 0.8, 0.4, 1.0, 0.2, 0.75];
    let r = pearson(&predicted, &human).unwrap();
    let rho = spearman(&predicted, &human).unwrap();
    let p_r = permutation_p_value(&predicted, &human, Statistic::Pearson, 10_000, 42).unwrap();
    println!("pearson  = {r:.4} (permutation p = {p_r:.4})");
    println!("spearman = {rho:.4}");

    // System-level: rank the summarizers by mean score on each side.
    let pred_scores: Vec<SystemScore> = [
        ("sys-alpha", 0.62),
        ("sys-beta", 0.75),
        ("sys-gamma", 0.40),
        ("sys-delta", 0.55),
    ]
    .into_iter()
    .map(|(id, score)| SystemScore {
        system_id: id.into(),
        score,
    })
    .collect();
    let gold_scores: Vec<SystemScore> = [
        ("sys-alpha", 0.60),
        ("sys-beta", 0.68),
        ("sys-gamma", 0.45),
        ("sys-delta", 0.52),
    ]
    .into_iter()
    .map(|(id, score)| SystemScore {
        system_id: id.into(),
        score,
    })
    .collect();
    let ranking = system_rank_correlation(&pred_scores, &gold_scores).unwrap();
    println!("system rank correlation = {:.4}", ranking.rank_correlation);
    for row in &ranking.systems {
        println!(
            "  {}: pred mean {:.2} (rank {}), gold mean {:.2} (rank {})",
            row.system_id, row.pred_mean, row.pred_rank, row.gold_mean, row.gold_rank
        );
    }

    // Inter-annotator agreement on binary keyfact matching.
    let rater_a = vec![1, 1, 0, 1, 0, 0, 1, 1];
    let rater_b = vec![1, 0, 0, 1, 0, 1, 1, 1];
    println!(
        "cohen kappa = {:.4}",
        cohen_kappa(&rater_a, &rater_b).unwrap()
    );
    let ratings = vec![
        rater_a.iter().map(|&v| Some(v)).collect::<Vec<_>>(),
        rater_b.iter().map(|&v| Some(v)).collect::<Vec<_>>(),
    ];
    println!(
        "krippendorff alpha (nominal) = {:.4}",
        krippendorff_alpha_nominal(&ratings).unwrap()
    );
}
