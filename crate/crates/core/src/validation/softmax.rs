use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("non-finite logit in {0}")]
pub struct NumericError(pub &'static str);

/// NLI scorer output for one (premise, hypothesis) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntailmentScore<F> {
    pub p_entail: F,
    /// Logits in (entailment, neutral, contradiction) order.
    pub raw_logits: [F; 3],
}

impl<F: Scalar> EntailmentScore<F> {
    pub fn from_logits(raw_logits: [F; 3]) -> Result<Self, NumericError> {
        Ok(Self {
            p_entail: entailment_probability(raw_logits)?,
            raw_logits,
        })
    }
}

/// Two-way softmax over the entailment and contradiction logits.
///
/// The neutral logit is ignored (but must still be finite). Computed as a
/// logistic of the logit difference, which never overflows.
pub fn entailment_probability<F: Scalar>(logits: [F; 3]) -> Result<F, NumericError> {
    let [entail, neutral, contra] = logits;
    if !(entail.is_finite() && neutral.is_finite() && contra.is_finite()) {
        return Err(NumericError("entailment logits"));
    }
    let max = entail.max(contra);
    let e = (entail - max).exp();
    let c = (contra - max).exp();
    Ok(e / (e + c))
}
