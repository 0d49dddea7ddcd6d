//! Rendering of a `MetaReport` into JSON, CSV, or Markdown.
//!
//! Numeric rules: scores, correlations, and accuracies print with 4 decimal
//! places; ratios print as one-decimal percentages. The JSON form keeps the
//! exact rationals.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::benchmark::MetaReport;
use crate::model::Fraction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

fn fmt4(value: f64) -> String {
    format!("{value:.4}")
}

fn fmt4_opt(value: Option<f64>) -> String {
    value.map(fmt4).unwrap_or_else(|| "n/a".to_string())
}

fn fmt_percent(f: Option<Fraction>) -> String {
    match f {
        Some(f) => format!("{:.1}%", f.value() * 100.0),
        None => "n/a".to_string(),
    }
}

/// Renders the report in the requested format.
pub fn render(report: &MetaReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("report serializes"),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => render_markdown(report),
    }
}

/// Flat `section,metric,value` rows.
fn render_csv(report: &MetaReport) -> String {
    let mut out = String::from("section,metric,value\n");
    let mut push = |section: &str, metric: &str, value: String| {
        let _ = writeln!(out, "{section},{metric},{value}");
    };

    push("meta", "instances", report.instances.to_string());
    push(
        "meta",
        "included_instances",
        report.included_instances.to_string(),
    );

    if let Some(s) = &report.sentence_level {
        push(
            "sentence",
            "balanced_accuracy",
            fmt4_opt(s.balanced_accuracy.map(|b| b.value)),
        );
        push(
            "sentence",
            "sensitivity",
            fmt4_opt(s.counts.sensitivity().map(|f| f.value())),
        );
        push(
            "sentence",
            "specificity",
            fmt4_opt(s.counts.specificity().map(|f| f.value())),
        );
        push("sentence", "sentences", s.sentences.to_string());
    }
    if let Some(summary) = &report.summary_level {
        for (dimension, c) in summary {
            push(dimension, "pearson", fmt4_opt(c.pearson));
            push(dimension, "pearson_p", fmt4_opt(c.pearson_p));
            push(dimension, "spearman", fmt4_opt(c.spearman));
            push(dimension, "spearman_p", fmt4_opt(c.spearman_p));
            push(dimension, "n", c.n.to_string());
        }
    }
    if let Some(system) = &report.system_level {
        for (dimension, s) in system {
            push(
                &format!("system_{dimension}"),
                "rank_correlation",
                fmt4_opt(s.report.as_ref().map(|r| r.rank_correlation)),
            );
            push(
                &format!("system_{dimension}"),
                "systems",
                s.systems.to_string(),
            );
        }
    }
    if let Some(loc) = &report.error_localization {
        for (code, accuracy) in &loc.per_category {
            push(
                "localization",
                code,
                fmt4_opt(accuracy.map(|f| f.value())),
            );
        }
        push("localization", "mean", fmt4(loc.mean));
        push(
            "localization",
            "sentences",
            loc.total_sentences.to_string(),
        );
    }
    if let Some(agreement) = &report.agreement {
        push(
            "agreement",
            "keyfact_cohen_kappa",
            fmt4_opt(agreement.keyfact_cohen_kappa),
        );
        push(
            "agreement",
            "keyfact_krippendorff_alpha",
            fmt4_opt(agreement.keyfact_krippendorff_alpha),
        );
        push("agreement", "pairs", agreement.pairs.to_string());
    }
    if let Some(stability) = &report.stability {
        for (dimension, alpha) in &stability.alpha {
            push(
                "stability",
                &format!("{dimension}_alpha"),
                fmt4_opt(*alpha),
            );
        }
        push("stability", "runs", stability.runs.to_string());
    }
    for (task, ratio) in &report.success_ratio {
        push("success_ratio", task, fmt_percent(ratio.ratio));
    }
    for excluded in &report.excluded_instances {
        push(
            "excluded",
            &excluded.instance_id,
            excluded.reason.replace(',', ";"),
        );
    }
    out
}

fn render_markdown(report: &MetaReport) -> String {
    let mut out = String::from("# Benchmark report\n\n");
    let _ = writeln!(
        out,
        "Instances: {} total, {} included after strict-mode exclusion.\n",
        report.instances, report.included_instances
    );

    if let Some(s) = &report.sentence_level {
        out.push_str("## Sentence level\n\n");
        out.push_str("| metric | value |\n|---|---|\n");
        let _ = writeln!(
            out,
            "| balanced accuracy | {} |",
            fmt4_opt(s.balanced_accuracy.map(|b| b.value))
        );
        let _ = writeln!(
            out,
            "| sensitivity | {} |",
            fmt4_opt(s.counts.sensitivity().map(|f| f.value()))
        );
        let _ = writeln!(
            out,
            "| specificity | {} |",
            fmt4_opt(s.counts.specificity().map(|f| f.value()))
        );
        let _ = writeln!(out, "| sentences | {} |", s.sentences);
        if let Some(note) = &s.note {
            let _ = writeln!(out, "\nNote: {note}");
        }
        out.push('\n');
    }
    if let Some(summary) = &report.summary_level {
        out.push_str("## Summary level\n\n");
        out.push_str("| dimension | Pearson | p | Spearman | p | n |\n|---|---|---|---|---|---|\n");
        for (dimension, c) in summary {
            let _ = writeln!(
                out,
                "| {dimension} | {} | {} | {} | {} | {} |",
                fmt4_opt(c.pearson),
                fmt4_opt(c.pearson_p),
                fmt4_opt(c.spearman),
                fmt4_opt(c.spearman_p),
                c.n
            );
        }
        out.push('\n');
    }
    if let Some(system) = &report.system_level {
        out.push_str("## System level\n\n");
        out.push_str("| dimension | rank correlation | systems |\n|---|---|---|\n");
        for (dimension, s) in system {
            let _ = writeln!(
                out,
                "| {dimension} | {} | {} |",
                fmt4_opt(s.report.as_ref().map(|r| r.rank_correlation)),
                s.systems
            );
        }
        out.push('\n');
        for (dimension, s) in system {
            let Some(r) = &s.report else { continue };
            let _ = writeln!(out, "### Systems by {dimension}\n");
            out.push_str(
                "| system | predicted mean | gold mean | predicted rank | gold rank |\n|---|---|---|---|---|\n",
            );
            for row in &r.systems {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    row.system_id,
                    fmt4(row.pred_mean),
                    fmt4(row.gold_mean),
                    row.pred_rank,
                    row.gold_rank
                );
            }
            out.push('\n');
        }
    }
    if let Some(loc) = &report.error_localization {
        out.push_str("## Error localization\n\n");
        out.push_str("| category | accuracy |\n|---|---|\n");
        for (code, accuracy) in &loc.per_category {
            let _ = writeln!(
                out,
                "| {code} | {} |",
                fmt4_opt(accuracy.map(|f| f.value()))
            );
        }
        let _ = writeln!(out, "| mean | {} |", fmt4(loc.mean));
        out.push('\n');
    }
    if let Some(agreement) = &report.agreement {
        out.push_str("## Keyfact-matching agreement\n\n");
        out.push_str("| metric | value |\n|---|---|\n");
        let _ = writeln!(
            out,
            "| Cohen's kappa | {} |",
            fmt4_opt(agreement.keyfact_cohen_kappa)
        );
        let _ = writeln!(
            out,
            "| Krippendorff's alpha | {} |",
            fmt4_opt(agreement.keyfact_krippendorff_alpha)
        );
        let _ = writeln!(out, "| pairs | {} |", agreement.pairs);
        out.push('\n');
    }
    if let Some(stability) = &report.stability {
        out.push_str("## Inter-run stability\n\n");
        let _ = writeln!(
            out,
            "{} runs over {} instances.\n",
            stability.runs, stability.instances
        );
        out.push_str("| dimension | alpha | max pairwise delta |\n|---|---|---|\n");
        for (dimension, alpha) in &stability.alpha {
            let _ = writeln!(
                out,
                "| {dimension} | {} | {} |",
                fmt4_opt(*alpha),
                fmt4(stability.max_pairwise_delta[dimension])
            );
        }
        out.push('\n');
    }
    if !report.success_ratio.is_empty() {
        out.push_str("## Success ratio\n\n");
        out.push_str("| task | ratio |\n|---|---|\n");
        for (task, ratio) in &report.success_ratio {
            let _ = writeln!(out, "| {task} | {} |", fmt_percent(ratio.ratio));
        }
        out.push('\n');
    }
    if !report.excluded_instances.is_empty() {
        out.push_str("## Excluded instances\n\n");
        out.push_str("| instance | reason |\n|---|---|\n");
        for excluded in &report.excluded_instances {
            let _ = writeln!(out, "| {} | {} |", excluded.instance_id, excluded.reason);
        }
        out.push('\n');
    }
    out
}
