//! The five pipeline commands. Each is resumable or idempotent: generation
//! and validation skip cells/candidates already present in their outputs,
//! the others recompute from their inputs.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use hatecheck_forge::dataset::{
    append_jsonl, check_labels, compute_stats, ingest_csv, read_jsonl, write_jsonl, AdapterConfig,
    Source, TestCase,
};
use hatecheck_forge::eval::{evaluate as run_eval, report_dir, HttpDetector, HttpScorer, Scorers};
use hatecheck_forge::generation::{
    cells, generate_cells, Candidate, CellKey, ChatBackend, Clock, HttpChatBackend, MockChatBackend,
};
use hatecheck_forge::http::RetryPolicy;
use hatecheck_forge::registry::{FunctionalityId, Registry};
use hatecheck_forge::validation::nli::HttpNliClient;
use hatecheck_forge::validation::{validate_text, HypothesisContext, NliClient};
use hatecheck_forge::{DatasetStats, EvalReport};
use log::{error, info, warn};
use rayon::prelude::*;

use crate::audit::AuditRecord;
use crate::config::ToolConfig;
use crate::error::CliError;
use crate::mocks;

/// File layout under the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub candidates: PathBuf,
    pub dataset: PathBuf,
    pub audit: PathBuf,
    pub stats: PathBuf,
    pub report: PathBuf,
}

impl Layout {
    pub fn new(out: &Path) -> Self {
        Self {
            candidates: out.join("candidates.jsonl"),
            dataset: out.join("dataset.jsonl"),
            audit: out.join("audit.jsonl"),
            stats: out.join("stats"),
            report: report_dir(out),
        }
    }
}

/// Settings that only come from flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Selection {
    pub groups: Option<Vec<String>>,
    pub functionalities: Option<Vec<FunctionalityId>>,
    pub mock_llm: Option<PathBuf>,
    pub mock_nli: Option<String>,
    pub mock_detect: Option<String>,
    pub mock_ppl: Option<String>,
}

impl Selection {
    fn check(&self, registry: &Registry) -> Result<(), CliError> {
        for g in self.groups.iter().flatten() {
            if registry.group(g).is_none() {
                let known: Vec<&str> = registry.target_groups().iter().map(|g| g.name.as_str()).collect();
                return Err(CliError::Config(format!(
                    "unknown group {g:?}; known groups: {}",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn cells(&self, registry: &Registry) -> Result<Vec<CellKey>, CliError> {
        self.check(registry)?;
        Ok(cells(registry, self.functionalities.as_deref(), self.groups.as_deref()))
    }
}

pub fn load_registry(cfg: &ToolConfig) -> Result<Registry, CliError> {
    match &cfg.registry {
        Some(path) => Ok(Registry::load(path)?),
        None => Ok(Registry::bundled()),
    }
}

fn service_retry(cfg: &ToolConfig) -> RetryPolicy {
    RetryPolicy {
        max_retries: cfg.service_max_retries,
        ..RetryPolicy::default()
    }
}

fn service_timeout(cfg: &ToolConfig) -> std::time::Duration {
    std::time::Duration::from_secs(cfg.service_timeout_secs)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenerateSummary {
    pub cells: usize,
    pub skipped: usize,
    pub generated: usize,
    pub candidates: usize,
    pub failed: usize,
}

pub fn generate(cfg: &ToolConfig, registry: &Registry, sel: &Selection) -> Result<GenerateSummary, CliError> {
    let layout = Layout::new(&cfg.out);
    let gen = cfg.effective_generation();
    let all = sel.cells(registry)?;
    let done: HashSet<CellKey> = read_jsonl::<Candidate>(&layout.candidates)?
        .iter()
        .map(Candidate::cell)
        .collect();
    let todo: Vec<CellKey> = all.iter().filter(|c| !done.contains(c)).cloned().collect();
    let mut summary = GenerateSummary {
        cells: all.len(),
        skipped: all.len() - todo.len(),
        ..GenerateSummary::default()
    };
    if todo.is_empty() {
        info!("all {} cells already generated", all.len());
        return Ok(summary);
    }
    let (backend, clock): (Box<dyn ChatBackend>, Clock) = match &sel.mock_llm {
        Some(dir) => (Box::new(MockChatBackend::new(dir)), Clock::epoch()),
        None => (Box::new(HttpChatBackend::from_env(&gen)?), Clock::System),
    };
    let mut first_error = None;
    // Chunks keep finished cells on disk if a later one aborts the run.
    for chunk in todo.chunks(gen.parallelism) {
        for (cell, result) in generate_cells(registry, &cfg.prompt, chunk, &gen, backend.as_ref(), clock)? {
            match result {
                Ok(candidates) => {
                    append_jsonl(&layout.candidates, &candidates)?;
                    summary.generated += 1;
                    summary.candidates += candidates.len();
                }
                Err(e) => {
                    error!("{cell}: {e}");
                    summary.failed += 1;
                    first_error.get_or_insert(e);
                }
            }
        }
    }
    info!(
        "generated {} cells ({} candidates), skipped {}, failed {}",
        summary.generated, summary.candidates, summary.skipped, summary.failed
    );
    match first_error {
        Some(e) => Err(e.into()),
        None => Ok(summary),
    }
}

fn nli_client(cfg: &ToolConfig, sel: &Selection) -> Result<Box<dyn NliClient>, CliError> {
    match (&sel.mock_nli, &cfg.endpoints.nli) {
        (Some(mode), _) => mocks::nli(mode),
        (None, Some(url)) => Ok(Box::new(HttpNliClient::new(url, service_timeout(cfg), service_retry(cfg)))),
        (None, None) => Err(CliError::Config(
            "no NLI service: set endpoints.nli (or HATECHECK_FORGE_NLI_URL) or pass --mock-nli".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidateSummary {
    pub validated: usize,
    pub kept: usize,
    pub skipped: usize,
    pub unvalidated: usize,
}

pub fn validate(
    cfg: &ToolConfig,
    registry: &Registry,
    sel: &Selection,
    candidates_path: Option<&Path>,
) -> Result<ValidateSummary, CliError> {
    let layout = Layout::new(&cfg.out);
    let candidates_path = candidates_path.unwrap_or(&layout.candidates);
    let candidates: Vec<Candidate> = read_jsonl(candidates_path)?;
    if candidates.is_empty() {
        return Err(CliError::Data(format!("no candidates in {}", candidates_path.display())));
    }
    let wanted: HashSet<CellKey> = sel.cells(registry)?.into_iter().collect();
    let done: HashSet<String> = read_jsonl::<TestCase>(&layout.dataset)?
        .into_iter()
        .map(|c| c.id)
        .collect();
    let nli = nli_client(cfg, sel)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let mut by_cell: Vec<(CellKey, Vec<&Candidate>)> = Vec::new();
    let mut index: BTreeMap<CellKey, usize> = BTreeMap::new();
    for c in &candidates {
        let key = c.cell();
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            by_cell.push((key, Vec::new()));
            by_cell.len() - 1
        });
        by_cell[slot].1.push(c);
    }

    let mut summary = ValidateSummary::default();
    let mut first_error: Option<CliError> = None;
    for (cell, members) in by_cell {
        if !wanted.contains(&cell) {
            continue;
        }
        let pending: Vec<&Candidate> = members.into_iter().filter(|c| !done.contains(&c.id)).collect();
        if pending.is_empty() {
            summary.skipped += 1;
            continue;
        }
        let f = registry
            .functionality(cell.functionality)
            .ok_or_else(|| CliError::Data(format!("{cell}: functionality not in registry")))?;
        let group = match &cell.group {
            Some(name) => Some(
                registry
                    .group(name)
                    .ok_or_else(|| CliError::Data(format!("{cell}: group not in registry")))?,
            ),
            None => None,
        };
        let ctx = HypothesisContext::new(group, registry.target_groups());
        let verdicts: Vec<_> = pool.install(|| {
            pending
                .par_iter()
                .map(|c| validate_text(&c.text, &f.validation_plan, &ctx, nli.as_ref(), cfg.nli_threshold))
                .collect()
        });
        let mut cases = Vec::new();
        for (cand, verdict) in pending.iter().zip(verdicts) {
            match verdict {
                Ok(v) => cases.push(TestCase::from_verdict(cand, f, v)),
                Err(e) => {
                    warn!("{}: left unvalidated: {e}", cand.id);
                    summary.unvalidated += 1;
                    first_error.get_or_insert(e.into());
                }
            }
        }
        let audit: Vec<AuditRecord> = cases.iter().map(AuditRecord::for_case).collect();
        append_jsonl(&layout.dataset, &cases)?;
        append_jsonl(&layout.audit, &audit)?;
        summary.validated += cases.len();
        summary.kept += cases.iter().filter(|c| c.kept).count();
    }
    info!(
        "validated {} candidates, kept {}, skipped {} complete cells, {} unvalidated",
        summary.validated, summary.kept, summary.skipped, summary.unvalidated
    );
    match first_error {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

fn load_dataset(path: &Path, registry: &Registry) -> Result<Vec<TestCase>, CliError> {
    let cases: Vec<TestCase> = read_jsonl(path)?;
    if cases.is_empty() {
        return Err(CliError::Data(format!("no test cases in {}", path.display())));
    }
    check_labels(&cases, registry)?;
    Ok(cases)
}

pub fn stats(cfg: &ToolConfig, registry: &Registry, dataset: Option<&Path>) -> Result<DatasetStats, CliError> {
    let layout = Layout::new(&cfg.out);
    let path = dataset.unwrap_or(&layout.dataset);
    let cases = load_dataset(path, registry)?;
    let s: DatasetStats = compute_stats(&cases, Some(registry));
    let io = |e: std::io::Error| CliError::Data(format!("{}: {e}", layout.stats.display()));
    std::fs::create_dir_all(&layout.stats).map_err(io)?;
    std::fs::write(layout.stats.join("group_counts.csv"), s.group_counts_csv()).map_err(io)?;
    std::fs::write(layout.stats.join("passing_rates.csv"), s.passing_rates_csv()).map_err(io)?;
    Ok(s)
}

pub fn evaluate(
    cfg: &ToolConfig,
    registry: &Registry,
    sel: &Selection,
    dataset: Option<&Path>,
    reference: Option<&Path>,
) -> Result<EvalReport, CliError> {
    let layout = Layout::new(&cfg.out);
    let kept = |cases: Vec<TestCase>| -> Vec<TestCase> { cases.into_iter().filter(|c| c.kept).collect() };
    let cases = kept(load_dataset(dataset.unwrap_or(&layout.dataset), registry)?);
    let reference = reference.map(|p| load_dataset(p, registry)).transpose()?.map(kept);

    let mut everything = cases.clone();
    everything.extend(reference.iter().flatten().cloned());
    let detector = match (&sel.mock_detect, &cfg.endpoints.detect) {
        (Some(mode), _) => Some(mocks::detector(mode, &everything)?),
        (None, Some(url)) => Some(Box::new(HttpDetector::new(url, service_timeout(cfg), service_retry(cfg)))
            as Box<dyn hatecheck_forge::eval::DetectorClient>),
        (None, None) => {
            info!("no detector configured; skipping detector diagnostics");
            None
        }
    };
    let scorer = match (&sel.mock_ppl, &cfg.endpoints.ppl) {
        (Some(mode), _) => Some(mocks::scorer(mode)?),
        (None, Some(url)) => Some(Box::new(HttpScorer::new(url, service_timeout(cfg), service_retry(cfg)))
            as Box<dyn hatecheck_forge::eval::ScoringClient>),
        (None, None) => {
            info!("no perplexity scorer configured; skipping perplexity");
            None
        }
    };
    let scorers = Scorers {
        detector: detector.as_deref(),
        scorer: scorer.as_deref(),
    };
    let report: EvalReport = run_eval(&cases, reference.as_deref(), scorers, &cfg.eval_options())?;
    if report.detector_failures > 0 {
        warn!("detector failed on {} cases (excluded)", report.detector_failures);
    }
    if let Some(p) = &report.ppl {
        if p.coverage < p.attempted {
            warn!("perplexity available for {} of {} texts", p.coverage, p.attempted);
        }
    }
    report.write_to(&layout.report)?;
    Ok(report)
}

/// Where `ingest` writes when no output path is given.
pub fn ingest_output(out: &Path, source: Source) -> PathBuf {
    out.join(format!("{}.jsonl", source.as_str()))
}

pub fn ingest(
    cfg: &ToolConfig,
    registry: &Registry,
    csv: &Path,
    source: Source,
    adapter: Option<&Path>,
    output: Option<&Path>,
) -> Result<(PathBuf, usize, usize), CliError> {
    let adapter = match adapter {
        Some(p) => AdapterConfig::load(p)?,
        None => AdapterConfig::for_source(source)
            .ok_or_else(|| CliError::Config("no default adapter for generated data".into()))?,
    };
    if adapter.source != source {
        warn!("adapter declares source {}, ingesting as {}", adapter.source.as_str(), source.as_str());
    }
    let mut report = ingest_csv(csv, &adapter, registry)?;
    for c in &mut report.cases {
        c.source = source;
    }
    let path = output.map_or_else(|| ingest_output(&cfg.out, source), Path::to_path_buf);
    write_jsonl(&path, &report.cases)?;
    Ok((path, report.cases.len(), report.skipped))
}
