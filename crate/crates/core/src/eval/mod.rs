//! Diversity, naturalness and detector diagnostics for a dataset.

mod bleu;
mod classification;
mod clients;
mod perplexity;
mod plot;
mod report;
mod subsample;
mod summary;
mod tokenize;

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::TestCase;
use crate::http::ClientError;
use crate::scalar::Scalar;
use crate::Real;

pub use bleu::{self_bleu, Smoothing};
pub use classification::{
    functionality_accuracy, mean_prediction_by_label, predict, score_cases, AccuracyRow,
    ConfusionMatrix, DetectorRun, MeanPrediction, DECISION_THRESHOLD,
};
pub use clients::{
    ConstantDetector, ConstantScorer, DetectResponse, DetectorClient, HashDetector, HttpDetector,
    HttpScorer, LengthScorer, PplResponse, ScoringClient, TableDetector, TableScorer, TextRequest,
};
pub use perplexity::{aggregate_perplexity, PerplexityReport};
pub use plot::{accuracy_chart, write_png};
pub use report::{BleuEntry, EvalReport};
pub use subsample::{subsampled_metric, SubsampleReport, DEFAULT_SUBSAMPLES};
pub use summary::{
    ln_gamma, mean_std, one_sample_t_test, regularized_incomplete_beta, student_t_cdf,
    student_t_two_sided, MeanStd, TTestResult,
};
pub use tokenize::tokenize;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least {needed} items, got {got}")]
    TooFewItems { needed: usize, got: usize },
    #[error("BLEU order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("corpus of {available} items cannot supply subsamples of {requested}")]
    InsufficientCorpus { available: usize, requested: usize },
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("score {0} out of range")]
    InvalidScore(Real),
    #[error("no score recorded for text {0:?}")]
    MissingScore(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("invalid evaluation setup: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write image {0}")]
    Image(String),
}

pub(crate) fn par_map<T, R, M>(parallelism: usize, items: &[T], f: M) -> Result<Vec<R>, EvalError>
where
    T: Sync,
    R: Send,
    M: Fn(&T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub bleu_orders: Vec<usize>,
    pub smoothing: Smoothing,
    pub subsamples: usize,
    pub seed: u64,
    /// Subsample size when no reference dataset is given; defaults to the
    /// whole dataset.
    pub subsample_size: Option<usize>,
    pub parallelism: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            bleu_orders: vec![2, 3, 4],
            smoothing: Smoothing::None,
            subsamples: DEFAULT_SUBSAMPLES,
            seed: 0,
            subsample_size: None,
            parallelism: 4,
        }
    }
}

/// Services used by [`evaluate`]; each is optional.
#[derive(Clone, Copy, Default)]
pub struct Scorers<'a> {
    pub detector: Option<&'a dyn DetectorClient>,
    pub scorer: Option<&'a dyn ScoringClient>,
}

/// Full report for `cases`. With a `reference` dataset, self-BLEU is
/// computed on subsamples the size of the reference and t-tested against
/// the reference's own self-BLEU.
pub fn evaluate<F: Scalar>(
    cases: &[TestCase],
    reference: Option<&[TestCase]>,
    scorers: Scorers<'_>,
    opts: &EvalOptions,
) -> Result<EvalReport<F>, EvalError> {
    let texts: Vec<&str> = cases.iter().map(|c| c.text.as_str()).collect();
    let ref_texts: Option<Vec<&str>> = reference.map(|r| r.iter().map(|c| c.text.as_str()).collect());
    let size = match (&ref_texts, opts.subsample_size) {
        (Some(r), _) => r.len(),
        (None, Some(s)) => s,
        (None, None) => texts.len(),
    };

    let mut self_bleu_entries = Vec::new();
    if texts.len() < 2 || size < 2 {
        log::warn!("self-BLEU skipped: dataset has {} items, subsample size {size}", texts.len());
    } else {
        for &n in &opts.bleu_orders {
            let metric = |s: &[&str]| self_bleu::<F, _>(s, n, opts.smoothing);
            let values = if size == texts.len() {
                // Every subsample is the whole corpus.
                vec![metric(&texts)?; opts.subsamples.max(1)]
            } else {
                subsampled_metric(&texts, size, opts.subsamples, opts.seed, metric)?.values
            };
            let reference = match &ref_texts {
                Some(r) if r.len() >= 2 => Some(self_bleu::<F, _>(r, n, opts.smoothing)?),
                _ => None,
            };
            let t_test = match reference {
                Some(mu) if values.len() >= 2 => Some(one_sample_t_test(&values, mu)?),
                _ => None,
            };
            self_bleu_entries.push(BleuEntry {
                n,
                summary: mean_std(&values)?,
                values,
                reference,
                t_test,
            });
        }
    }

    let (ppl, reference_ppl) = match scorers.scorer {
        Some(s) => (
            Some(aggregate_perplexity(&texts, s, opts.parallelism)?),
            match &ref_texts {
                Some(r) => Some(aggregate_perplexity(r, s, opts.parallelism)?),
                None => None,
            },
        ),
        None => (None, None),
    };

    let mut report = EvalReport {
        dataset_size: cases.len(),
        reference_dataset_size: reference.map(<[TestCase]>::len),
        smoothing: opts.smoothing,
        subsample_seed: opts.seed,
        subsamples: opts.subsamples,
        subsample_size: size,
        self_bleu: self_bleu_entries,
        ppl,
        reference_ppl,
        per_functionality_accuracy: Vec::new(),
        per_cell_accuracy: Vec::new(),
        confusion: None,
        macro_f1: None,
        mean_prediction: Vec::new(),
        detector_failures: 0,
    };
    if let Some(detector) = scorers.detector {
        let run = score_cases(cases, detector, opts.parallelism)?;
        let confusion = ConfusionMatrix::from_run(cases, &run);
        report.per_functionality_accuracy = functionality_accuracy(cases, &run, false);
        report.per_cell_accuracy = functionality_accuracy(cases, &run, true);
        report.macro_f1 = Some(confusion.macro_f1());
        report.confusion = Some(confusion);
        report.mean_prediction = mean_prediction_by_label(cases, &run);
        report.detector_failures = run.failures;
    }
    Ok(report)
}

/// Where [`EvalReport::write_to`] puts the report for a dataset file.
pub fn report_dir(out: &std::path::Path) -> PathBuf {
    out.join("report")
}
