use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bleu::Smoothing;
use super::classification::{AccuracyRow, ConfusionMatrix, MeanPrediction};
use super::perplexity::PerplexityReport;
use super::plot::{accuracy_chart, write_png};
use super::summary::{MeanStd, TTestResult};
use super::EvalError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuEntry<F> {
    pub n: usize,
    pub summary: MeanStd<F>,
    /// One value per subsample.
    pub values: Vec<F>,
    /// Self-BLEU of the reference dataset, when one was given.
    pub reference: Option<F>,
    /// Subsample values tested against `reference`.
    pub t_test: Option<TTestResult<F>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<F> {
    pub dataset_size: usize,
    pub reference_dataset_size: Option<usize>,
    pub smoothing: Smoothing,
    pub subsample_seed: u64,
    pub subsamples: usize,
    pub subsample_size: usize,
    pub self_bleu: Vec<BleuEntry<F>>,
    pub ppl: Option<PerplexityReport<F>>,
    pub reference_ppl: Option<PerplexityReport<F>>,
    pub per_functionality_accuracy: Vec<AccuracyRow<F>>,
    pub per_cell_accuracy: Vec<AccuracyRow<F>>,
    pub confusion: Option<ConfusionMatrix>,
    pub macro_f1: Option<F>,
    pub mean_prediction: Vec<MeanPrediction<F>>,
    pub detector_failures: usize,
}

fn opt<F: Scalar>(v: Option<F>) -> String {
    v.map_or_else(String::new, |v| format!("{:.6}", v.to_real()))
}

impl<F: Scalar + Serialize> EvalReport<F> {
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn self_bleu_csv(&self) -> String {
        let mut out = String::from("n,mean,std,reference,t,p_two_sided\n");
        for e in &self.self_bleu {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{},{},{}",
                e.n,
                e.summary.mean.to_real(),
                e.summary.std.to_real(),
                opt(e.reference),
                opt(e.t_test.map(|t| t.t)),
                e.t_test.map_or_else(String::new, |t| format!("{:e}", t.p_two_sided.to_real())),
            );
        }
        out
    }

    pub fn accuracy_csv(rows: &[AccuracyRow<F>]) -> String {
        let mut out = String::from("functionality,group,gold_label,correct,total,accuracy\n");
        for r in rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.functionality,
                r.group.as_deref().unwrap_or(""),
                r.gold_label.as_u8(),
                r.correct,
                r.total,
                opt(r.accuracy)
            );
        }
        out
    }

    pub fn confusion_csv(&self) -> Option<String> {
        let m = self.confusion?;
        Some(format!(
            "gold,pred_non_hateful,pred_hateful\nnon_hateful,{},{}\nhateful,{},{}\n",
            m.counts[0][0], m.counts[0][1], m.counts[1][0], m.counts[1][1]
        ))
    }

    pub fn mean_prediction_csv(&self) -> String {
        let mut out = String::from("source,gold_label,mean_score,n\n");
        for m in &self.mean_prediction {
            let _ = writeln!(
                out,
                "{},{},{:.6},{}",
                m.source.as_str(),
                m.gold_label.as_u8(),
                m.mean_score.to_real(),
                m.n
            );
        }
        out
    }

    /// Writes `summary.json`, the CSV tables and the accuracy chart into
    /// `dir`. Returns the written file names.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<String>, EvalError> {
        let io = |source| EvalError::Io {
            path: dir.display().to_string(),
            source,
        };
        fs::create_dir_all(dir).map_err(io)?;
        let mut files: Vec<(&str, String)> = vec![
            ("summary.json", self.summary_json()),
            ("self_bleu.csv", self.self_bleu_csv()),
        ];
        if self.confusion.is_some() {
            files.push(("functionality_accuracy.csv", Self::accuracy_csv(&self.per_functionality_accuracy)));
            files.push(("cell_accuracy.csv", Self::accuracy_csv(&self.per_cell_accuracy)));
            files.push(("confusion.csv", self.confusion_csv().unwrap_or_default()));
            files.push(("mean_prediction.csv", self.mean_prediction_csv()));
        }
        let mut written = Vec::new();
        for (name, body) in files {
            fs::write(dir.join(name), body).map_err(io)?;
            written.push(name.to_string());
        }
        if self.confusion.is_some() {
            let name = "functionality_accuracy.png";
            write_png(&accuracy_chart(&self.per_functionality_accuracy), &dir.join(name))?;
            written.push(name.to_string());
        }
        Ok(written)
    }
}
