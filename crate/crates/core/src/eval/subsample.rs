use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::summary::{mean_std, MeanStd};
use super::EvalError;
use crate::scalar::Scalar;

pub const DEFAULT_SUBSAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleReport<F> {
    pub seed: u64,
    pub reference_size: usize,
    pub values: Vec<F>,
    pub summary: MeanStd<F>,
}

/// Draws `k` subsamples of exactly `reference_size` items (uniformly,
/// without replacement) and evaluates `metric` on each. Items keep their
/// corpus order inside a subsample.
pub fn subsampled_metric<F, T, M>(
    corpus: &[T],
    reference_size: usize,
    k: usize,
    seed: u64,
    mut metric: M,
) -> Result<SubsampleReport<F>, EvalError>
where
    F: Scalar,
    T: Clone,
    M: FnMut(&[T]) -> Result<F, EvalError>,
{
    if k == 0 || reference_size == 0 {
        return Err(EvalError::TooFewItems { needed: 1, got: 0 });
    }
    if corpus.len() < reference_size {
        return Err(EvalError::InsufficientCorpus {
            available: corpus.len(),
            requested: reference_size,
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(k);
    for _ in 0..k {
        let mut idx = sample(&mut rng, corpus.len(), reference_size).into_vec();
        idx.sort_unstable();
        let draw: Vec<T> = idx.into_iter().map(|i| corpus[i].clone()).collect();
        values.push(metric(&draw)?);
    }
    let summary = mean_std(&values)?;
    Ok(SubsampleReport {
        seed,
        reference_size,
        values,
        summary,
    })
}
