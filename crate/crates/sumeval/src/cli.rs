//! Command-line surface: eval, benchmark, extract-keyfacts, summarize,
//! report.
//!
//! Exit-code policy: per-instance data failures are report content and exit
//! 0; only operator errors (bad flags, unreadable files, missing
//! credentials) are nonzero.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::benchmark::{compute_benchmark, BenchmarkOptions, Level, MetaReport};
use crate::gateway::{BackendConfig, BackendKind, Gateway};
use crate::ingest::{load_gold, load_instances, load_keyfacts};
use crate::meta::stability_report;
use crate::model::Document;
use crate::parser::ParseMode;
use crate::pipeline::{
    load_results, run_evaluation, run_keyfact_extraction, run_summarize, write_keyfacts,
    write_results, write_summaries, KeyfactSource, RunConfig,
};
use crate::prompt::{PromptVariant, Task};
use crate::report::{render, ReportFormat};
use crate::scoring::TaskSet;

#[derive(Debug, Parser)]
#[command(
    name = "sumeval",
    about = "Fine-grained summarization evaluation: sentence-level fact checking, keyfact alignment, and meta-evaluation against human judgments.",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score summaries by fact checking and keyfact alignment.
    Eval(EvalArgs),
    /// Measure agreement between predicted results and gold annotations.
    Benchmark(BenchmarkArgs),
    /// Extract keyfacts from reference summaries.
    ExtractKeyfacts(ExtractArgs),
    /// Generate summaries for documents.
    Summarize(SummarizeArgs),
    /// Re-render a saved benchmark report (JSON) as CSV or Markdown.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct BackendArgs {
    /// Completion backend.
    #[arg(long, value_parser = ["openai", "mock"], default_value = "mock")]
    backend: String,
    /// Base URL for the openai backend, e.g. https://api.openai.com/v1
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name sent with each request.
    #[arg(long, default_value = "gpt-4-turbo")]
    model: String,
    /// Fixture JSONL for the mock backend.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Sampling temperature; the default profile keeps 0.
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, default_value_t = 4096)]
    max_output_tokens: u32,
    /// Request timeout in seconds.
    #[arg(long, default_value_t = 120)]
    timeout: u64,
    /// Retries for transport-level failures (5xx, timeouts).
    #[arg(long, default_value_t = 2)]
    max_retries: u32,
    /// Maximum requests in flight.
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    /// Response cache directory; enables resumable runs.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl BackendArgs {
    fn to_config(&self) -> Result<BackendConfig, String> {
        let kind = match self.backend.as_str() {
            "openai" => BackendKind::OpenAiCompatibleHttp,
            "mock" => BackendKind::MockReplay,
            other => return Err(format!("unknown backend {other:?}")),
        };
        Ok(BackendConfig {
            kind,
            endpoint_url: self.endpoint.clone().unwrap_or_default(),
            model_name: self.model.clone(),
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
            request_timeout: Duration::from_secs(self.timeout),
            max_retries: self.max_retries,
            parallelism: self.parallelism,
            cache_dir: self.cache_dir.clone(),
            fixtures_path: self.fixtures.clone(),
        })
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Instances JSONL file.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    backend: BackendArgs,
    /// Which tasks to run.
    #[arg(long, value_parser = ["fact-check", "alignment", "both"], default_value = "both")]
    tasks: String,
    /// Keyfacts JSONL joined onto instances by instance_id.
    #[arg(long)]
    keyfacts: Option<PathBuf>,
    /// Extract keyfacts from a reference summary when none are provided.
    #[arg(long)]
    extract_keyfacts: bool,
    /// Instance field holding the reference summary for extraction.
    #[arg(long, default_value = "reference")]
    reference_field: String,
    /// Cache file for extracted keyfacts (reused across runs).
    #[arg(long)]
    keyfact_cache: Option<PathBuf>,
    /// Parse policy for LLM replies.
    #[arg(long, value_parser = ["strict", "lenient"], default_value = "strict")]
    mode: String,
    /// Fact-check prompt variant: "basic", "default", or a +-joined feature
    /// list, e.g. instruction+categorization+reasoning.
    #[arg(long, default_value = "default")]
    fact_check_variant: String,
    /// Alignment prompt variant: "basic", "default", or e.g. instruction.
    #[arg(long, default_value = "default")]
    alignment_variant: String,
    /// Results JSONL output path.
    #[arg(long)]
    out: PathBuf,
    /// Omit raw LLM text from results rows.
    #[arg(long)]
    no_raw: bool,
    /// Echoed into the run summary.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// Predicted results JSONL (from `eval`).
    #[arg(long)]
    pred: PathBuf,
    /// Gold annotations JSONL.
    #[arg(long)]
    gold: PathBuf,
    /// Comma-separated levels: sentence,summary,system,localization,agreement
    #[arg(long, default_value = "sentence,summary,system,localization,agreement")]
    levels: String,
    /// Permutations for the p-value test.
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include parse-failed instances with failure-default scores in the
    /// summary-level statistics.
    #[arg(long)]
    include_failures: bool,
    #[arg(long, default_value = "json")]
    format: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Additional results files; computes inter-run stability over them
    /// together with --pred.
    #[arg(long, num_args = 1..)]
    stability_runs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Instances JSONL with a reference summary field.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, default_value = "reference")]
    reference_field: String,
    /// Keyfacts JSONL output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    /// Documents JSONL: {"doc_id": ..., "text": ...} per line.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    backend: BackendArgs,
    /// Summaries JSONL output path (instance-row shaped).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// A benchmark report previously saved as JSON.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "markdown")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the CLI; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Eval(args) => cmd_eval(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::ExtractKeyfacts(args) => cmd_extract_keyfacts(args),
        Command::Summarize(args) => cmd_summarize(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn stringify(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn cmd_eval(args: EvalArgs) -> Result<(), String> {
    let task_set = match args.tasks.as_str() {
        "fact-check" => TaskSet::fact_check_only(),
        "alignment" => TaskSet::alignment_only(),
        _ => TaskSet::both(),
    };
    let parse_mode = match args.mode.as_str() {
        "lenient" => ParseMode::Lenient,
        _ => ParseMode::Strict,
    };
    let fact_check_variant =
        PromptVariant::parse(Task::FactCheck, &args.fact_check_variant).map_err(stringify)?;
    let alignment_variant =
        PromptVariant::parse(Task::KeyfactAlignment, &args.alignment_variant)
            .map_err(stringify)?;

    let mut instances = load_instances(&args.input).map_err(stringify)?;

    if let Some(path) = &args.keyfacts {
        let mut lists = load_keyfacts(path).map_err(stringify)?;
        for instance in &mut instances {
            if instance.keyfacts.is_none() {
                if let Some(list) = lists.remove(&instance.instance_id) {
                    instance.keyfacts = Some(list.keyfacts);
                }
            }
        }
    }

    if task_set.alignment && !args.extract_keyfacts {
        let any_keyfacts = instances
            .iter()
            .any(|i| i.keyfacts.as_ref().is_some_and(|k| !k.is_empty()));
        if !any_keyfacts {
            return Err(
                "the alignment task needs keyfacts: provide them inline, via --keyfacts, \
                 or enable --extract-keyfacts"
                    .into(),
            );
        }
    }

    let gateway = Gateway::new(args.backend.to_config()?).map_err(stringify)?;
    let cfg = RunConfig {
        task_set,
        fact_check_variant,
        alignment_variant,
        parse_mode,
        keyfact_source: if args.extract_keyfacts {
            KeyfactSource::ExtractFromReference
        } else {
            KeyfactSource::Provided
        },
        reference_field: args.reference_field.clone(),
        include_raw: !args.no_raw,
        keyfact_cache_path: args.keyfact_cache.clone(),
        seed: args.seed,
    };

    let run = run_evaluation(&instances, &cfg, &gateway).map_err(stringify)?;
    write_results(&args.out, &run.rows).map_err(stringify)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&run.summary).map_err(stringify)?
    );
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), String> {
    let mut levels: BTreeSet<Level> = BTreeSet::new();
    for part in args.levels.split(',') {
        if part.trim().is_empty() {
            continue;
        }
        levels.insert(part.parse::<Level>()?);
    }
    if levels.is_empty() {
        return Err("no levels requested".into());
    }
    let format: ReportFormat = args.format.parse()?;

    let pred = load_results(&args.pred).map_err(stringify)?;
    let gold = load_gold(&args.gold).map_err(stringify)?;
    let opts = BenchmarkOptions {
        levels,
        permutations: args.permutations,
        seed: args.seed,
        include_failures: args.include_failures,
    };
    let mut report = compute_benchmark(&pred, &gold, &opts).map_err(stringify)?;

    if !args.stability_runs.is_empty() {
        let mut runs = vec![score_table(&pred)];
        for path in &args.stability_runs {
            let rows = load_results(path).map_err(stringify)?;
            runs.push(score_table(&rows));
        }
        let stability = stability_report(&runs).map_err(stringify)?;
        report.stability = Some(stability);
    }

    let rendered = render(&report, format);
    match &args.out {
        Some(path) => fs::write(path, rendered).map_err(stringify)?,
        None => println!("{rendered}"),
    }
    Ok(())
}

fn score_table(rows: &[crate::pipeline::ResultsRow]) -> Vec<(String, crate::model::ScoreTriple)> {
    rows.iter()
        .map(|r| (r.instance_id.clone(), r.score_triple()))
        .collect()
}

fn backend_echo(gateway: &Gateway) -> serde_json::Value {
    let config = gateway.config();
    serde_json::json!({
        "backend_kind": match config.kind {
            BackendKind::OpenAiCompatibleHttp => "openai_compatible_http",
            BackendKind::MockReplay => "mock_replay",
        },
        "model": config.model_name,
        "temperature": config.temperature,
        "parallelism": config.parallelism,
    })
}

fn cmd_extract_keyfacts(args: ExtractArgs) -> Result<(), String> {
    let instances = load_instances(&args.input).map_err(stringify)?;
    let gateway = Gateway::new(args.backend.to_config()?).map_err(stringify)?;
    let run = run_keyfact_extraction(&instances, &args.reference_field, &gateway);
    write_keyfacts(&args.out, &run.lists).map_err(stringify)?;
    let template_key = "keyfact_extraction.default.txt";
    let summary = serde_json::json!({
        "config": {
            "backend": backend_echo(&gateway),
            "reference_field": args.reference_field,
            "template": {template_key: crate::prompt::template_version(template_key)},
        },
        "rows_written": run.lists.len(),
        "errors": run.errors,
        "success_ratio": crate::parser::success_ratio(&run.outcomes).ok(),
    });
    println!("{}", serde_json::to_string_pretty(&summary).map_err(stringify)?);
    Ok(())
}

fn cmd_summarize(args: SummarizeArgs) -> Result<(), String> {
    let content = fs::read_to_string(&args.input).map_err(stringify)?;
    let mut documents = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(line)
            .map_err(|e| format!("bad document row at line {}: {e}", idx + 1))?;
        if doc.doc_id.trim().is_empty() || doc.text.trim().is_empty() {
            return Err(format!("empty doc_id or text at line {}", idx + 1));
        }
        documents.push(doc);
    }
    if documents.is_empty() {
        return Err("no documents in input".into());
    }
    let gateway = Gateway::new(args.backend.to_config()?).map_err(stringify)?;
    let run = run_summarize(&documents, &gateway);
    write_summaries(&args.out, &run.rows).map_err(stringify)?;
    let template_key = "summarize.default.txt";
    let summary = serde_json::json!({
        "config": {
            "backend": backend_echo(&gateway),
            "template": {template_key: crate::prompt::template_version(template_key)},
        },
        "rows_written": run.rows.len(),
        "errors": run.errors,
    });
    println!("{}", serde_json::to_string_pretty(&summary).map_err(stringify)?);
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), String> {
    let format: ReportFormat = args.format.parse()?;
    let content = fs::read_to_string(&args.input).map_err(stringify)?;
    let report: MetaReport =
        serde_json::from_str(&content).map_err(|e| format!("bad report JSON: {e}"))?;
    let rendered = render(&report, format);
    match &args.out {
        Some(path) => fs::write(path, rendered).map_err(stringify)?,
        None => println!("{rendered}"),
    }
    Ok(())
}
