use serde::{Deserialize, Serialize};

use super::clients::ScoringClient;
use super::summary::{mean_std, MeanStd};
use super::{par_map, EvalError};
use crate::scalar::Scalar;

/// Perplexity summary over the texts the scorer answered for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport<F> {
    pub attempted: usize,
    pub coverage: usize,
    /// `None` when no text could be scored.
    pub summary: Option<MeanStd<F>>,
}

pub fn aggregate_perplexity<F: Scalar, S: AsRef<str> + Sync>(
    texts: &[S],
    scorer: &dyn ScoringClient,
    parallelism: usize,
) -> Result<PerplexityReport<F>, EvalError> {
    let scored = par_map(parallelism, texts, |t| match scorer.perplexity(t.as_ref()) {
        Ok(p) => Some(p),
        Err(e) => {
            log::warn!("perplexity scorer failed: {e}");
            None
        }
    })?;
    let values: Vec<F> = scored.into_iter().flatten().map(F::lit).collect();
    Ok(PerplexityReport {
        attempted: texts.len(),
        coverage: values.len(),
        summary: if values.is_empty() { None } else { Some(mean_std(&values)?) },
    })
}
