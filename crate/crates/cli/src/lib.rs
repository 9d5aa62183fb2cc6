//! Command-line front end: `generate`, `validate`, `stats`, `evaluate` and
//! `ingest`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 upstream-service error,
//! 4 data error.

pub mod audit;
pub mod commands;
pub mod config;
pub mod error;
pub mod mocks;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hatecheck_forge::dataset::Source;
use hatecheck_forge::registry::FunctionalityId;

pub use commands::{Layout, Selection};
pub use config::ToolConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "hatecheck-forge", version, about = "Generate, validate and evaluate functional test suites for hate speech detectors")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Functionality registry (JSON); the bundled registry by default.
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Comma-separated target groups to restrict to.
    #[arg(long, global = true, value_delimiter = ',')]
    pub groups: Option<Vec<String>>,
    /// Comma-separated functionality ids (F1, F2, ...) to restrict to.
    #[arg(long, global = true, value_delimiter = ',')]
    pub functionalities: Option<Vec<FunctionalityId>>,
    /// Directory of canned completions named `<F>__<group>.txt`.
    #[arg(long, global = true)]
    pub mock_llm: Option<PathBuf>,
    /// `entail`, `contradict`, `hash`, or a recorded NLI fixture file.
    #[arg(long, global = true)]
    pub mock_nli: Option<String>,
    /// `oracle`, `hash` or `constant:X`.
    #[arg(long, global = true)]
    pub mock_detect: Option<String>,
    /// `length` or `constant:X`.
    #[arg(long, global = true)]
    pub mock_ppl: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Request candidates for every selected (functionality, group) cell.
    Generate {
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long)]
        n_per_cell: Option<usize>,
    },
    /// Run each candidate through its functionality's hypothesis tests.
    Validate {
        /// Defaults to `<out>/candidates.jsonl`.
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Counts per group and passing rates per cell.
    Stats {
        /// Defaults to `<out>/dataset.jsonl`.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Diversity, perplexity and detector diagnostics.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Dataset whose size sets the subsample size and whose scores are
        /// the t-test reference.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Convert a published CSV release into a dataset file.
    Ingest {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum)]
        source: IngestSource,
        /// Column-mapping config; the bundled one for `source` by default.
        #[arg(long)]
        adapter: Option<PathBuf>,
        /// Defaults to `<out>/<source>.jsonl`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IngestSource {
    Hatecheck,
    GptHatecheck,
}

impl From<IngestSource> for Source {
    fn from(s: IngestSource) -> Self {
        match s {
            IngestSource::Hatecheck => Source::IngestedHatecheck,
            IngestSource::GptHatecheck => Source::IngestedGptHatecheck,
        }
    }
}

/// Resolves the configuration: defaults, then the config file, then the
/// environment, then flags.
pub fn resolve_config(
    cli: &Cli,
    env: impl Fn(&str) -> Option<String>,
) -> Result<(ToolConfig, Selection), CliError> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => ToolConfig::load(path)?,
        None => ToolConfig::default(),
    };
    cfg.apply_env(env)?;
    if let Some(r) = &g.registry {
        cfg.registry = Some(r.clone());
    }
    if let Some(o) = &g.out {
        cfg.out = o.clone();
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(p) = g.parallelism {
        cfg.parallelism = p;
    }
    match &cli.command {
        Command::Generate {
            temperature,
            n_per_cell,
        } => {
            if let Some(t) = temperature {
                cfg.generation.temperature = *t;
            }
            if let Some(n) = n_per_cell {
                cfg.generation.n_requested = *n;
            }
        }
        Command::Validate {
            threshold: Some(t), ..
        } => cfg.nli_threshold = *t,
        _ => {}
    }
    cfg.validate()?;
    let sel = Selection {
        groups: g.groups.clone(),
        functionalities: g.functionalities.clone(),
        mock_llm: g.mock_llm.clone(),
        mock_nli: g.mock_nli.clone(),
        mock_detect: g.mock_detect.clone(),
        mock_ppl: g.mock_ppl.clone(),
    };
    Ok((cfg, sel))
}

/// Runs one command and returns a short human-readable summary.
pub fn run(cli: &Cli, env: impl Fn(&str) -> Option<String>) -> Result<String, CliError> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let (cfg, sel) = resolve_config(cli, env)?;
    let registry = commands::load_registry(&cfg)?;
    match &cli.command {
        Command::Generate { .. } => {
            let s = commands::generate(&cfg, &registry, &sel)?;
            let _ = writeln!(
                out,
                "cells: {} generated, {} already present; {} candidates",
                s.generated, s.skipped, s.candidates
            );
        }
        Command::Validate { candidates, .. } => {
            let s = commands::validate(&cfg, &registry, &sel, candidates.as_deref())?;
            let _ = writeln!(
                out,
                "validated {} candidates, kept {}, {} complete cells skipped",
                s.validated, s.kept, s.skipped
            );
        }
        Command::Stats { dataset } => {
            let s = commands::stats(&cfg, &registry, dataset.as_deref())?;
            out.push_str(&s.group_counts_csv());
        }
        Command::Evaluate { dataset, reference } => {
            let r = commands::evaluate(&cfg, &registry, &sel, dataset.as_deref(), reference.as_deref())?;
            for e in &r.self_bleu {
                let _ = writeln!(out, "self-BLEU-{}: {:.4} ({:.4})", e.n, e.summary.mean, e.summary.std);
            }
            if let Some(s) = r.ppl.as_ref().and_then(|p| p.summary) {
                let _ = writeln!(out, "PPL: {:.2} ({:.2})", s.mean, s.std);
            }
            if let Some(f1) = r.macro_f1 {
                let _ = writeln!(out, "macro F1: {f1:.4}");
            }
        }
        Command::Ingest {
            csv,
            source,
            adapter,
            output,
        } => {
            let (path, n, skipped) = commands::ingest(
                &cfg,
                &registry,
                csv,
                (*source).into(),
                adapter.as_deref(),
                output.as_deref(),
            )?;
            let _ = writeln!(out, "ingested {n} cases ({skipped} rows skipped) into {}", path.display());
        }
    }
    Ok(out)
}
