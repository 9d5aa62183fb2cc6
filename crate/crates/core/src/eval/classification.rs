//! Detector diagnostics: per-functionality accuracy, confusion matrix,
//! macro F1 and mean raw scores.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::clients::DetectorClient;
use super::{par_map, EvalError};
use crate::dataset::{Source, TestCase};
use crate::registry::{FunctionalityId, Label};
use crate::scalar::Scalar;
use crate::Real;

/// A raw score above this counts as a hateful prediction.
pub const DECISION_THRESHOLD: Real = 0.5;

pub fn predict(score: Real) -> Label {
    if score > DECISION_THRESHOLD {
        Label::Hateful
    } else {
        Label::NonHateful
    }
}

/// Raw scores aligned with the input cases; `None` where the detector
/// failed.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorRun {
    pub scores: Vec<Option<Real>>,
    pub failures: usize,
}

pub fn score_cases(
    cases: &[TestCase],
    detector: &dyn DetectorClient,
    parallelism: usize,
) -> Result<DetectorRun, EvalError> {
    let scores = par_map(parallelism, cases, |c| match detector.score(&c.text) {
        Ok(s) => Some(s),
        Err(e) => {
            log::warn!("detector failed on {}: {e}", c.id);
            None
        }
    })?;
    let failures = scores.iter().filter(|s| s.is_none()).count();
    Ok(DetectorRun { scores, failures })
}

/// 2x2 tally indexed `[gold][predicted]`, 0 = non-hateful, 1 = hateful.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 2]; 2],
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut m = Self::default();
        for (gold, pred) in pairs {
            m.counts[gold.as_u8() as usize][pred.as_u8() as usize] += 1;
        }
        m
    }

    pub fn from_run(cases: &[TestCase], run: &DetectorRun) -> Self {
        Self::from_pairs(
            cases
                .iter()
                .zip(&run.scores)
                .filter_map(|(c, s)| s.map(|s| (c.gold_label, predict(s)))),
        )
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Number of cases whose gold label is `label`.
    pub fn support(&self, label: Label) -> usize {
        self.counts[label.as_u8() as usize].iter().sum()
    }

    pub fn predicted(&self, label: Label) -> usize {
        let l = label.as_u8() as usize;
        self.counts[0][l] + self.counts[1][l]
    }

    pub fn accuracy<F: Scalar>(&self) -> Option<F> {
        let total = self.total();
        (total > 0).then(|| F::from_count(self.counts[0][0] + self.counts[1][1]) / F::from_count(total))
    }

    /// F1 of one class; zero when the class has no support or when
    /// precision and recall are both zero.
    pub fn f1<F: Scalar>(&self, label: Label) -> F {
        let l = label.as_u8() as usize;
        let tp = self.counts[l][l];
        let support = self.support(label);
        let predicted = self.predicted(label);
        if support == 0 || tp == 0 {
            return F::zero();
        }
        let p = F::from_count(tp) / F::from_count(predicted);
        let r = F::from_count(tp) / F::from_count(support);
        F::lit(2.0) * p * r / (p + r)
    }

    pub fn macro_f1<F: Scalar>(&self) -> F {
        (self.f1::<F>(Label::NonHateful) + self.f1::<F>(Label::Hateful)) / F::lit(2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow<F> {
    pub functionality: FunctionalityId,
    /// `None` for the functionality-level row.
    pub group: Option<String>,
    pub gold_label: Label,
    pub correct: usize,
    pub total: usize,
    pub accuracy: Option<F>,
}

/// Accuracy per functionality, or per functionality and group when
/// `by_group` is set. Failed cases are excluded.
pub fn functionality_accuracy<F: Scalar>(
    cases: &[TestCase],
    run: &DetectorRun,
    by_group: bool,
) -> Vec<AccuracyRow<F>> {
    let mut tally: BTreeMap<(FunctionalityId, Option<String>), (Label, usize, usize)> = BTreeMap::new();
    for (case, score) in cases.iter().zip(&run.scores) {
        let Some(score) = score else { continue };
        let group = if by_group { case.target_group.clone() } else { None };
        let e = tally
            .entry((case.functionality_id, group))
            .or_insert((case.gold_label, 0, 0));
        e.1 += usize::from(predict(*score) == case.gold_label);
        e.2 += 1;
    }
    tally
        .into_iter()
        .map(|((functionality, group), (gold_label, correct, total))| AccuracyRow {
            functionality,
            group,
            gold_label,
            correct,
            total,
            accuracy: (total > 0).then(|| F::from_count(correct) / F::from_count(total)),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanPrediction<F> {
    pub source: Source,
    pub gold_label: Label,
    pub mean_score: F,
    pub n: usize,
}

/// Mean raw score per (source, gold label).
pub fn mean_prediction_by_label<F: Scalar>(cases: &[TestCase], run: &DetectorRun) -> Vec<MeanPrediction<F>> {
    let mut sums: BTreeMap<(Source, u8), (F, usize)> = BTreeMap::new();
    for (case, score) in cases.iter().zip(&run.scores) {
        let Some(score) = score else { continue };
        let e = sums
            .entry((case.source, case.gold_label.as_u8()))
            .or_insert((F::zero(), 0));
        e.0 = e.0 + F::lit(*score);
        e.1 += 1;
    }
    sums.into_iter()
        .map(|((source, label), (sum, n))| MeanPrediction {
            source,
            gold_label: Label::from_u8(label).expect("binary label"),
            mean_score: sum / F::from_count(n),
            n,
        })
        .collect()
}
