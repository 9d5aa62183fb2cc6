//! Self-BLEU: the mean cumulative BLEU of each corpus item scored against
//! all other items as references.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use super::EvalError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Smoothing {
    /// A zero n-gram precision makes the score zero.
    #[default]
    None,
    /// Zero match counts are replaced by `epsilon`.
    Epsilon { epsilon: f64 },
}

impl Smoothing {
    pub fn describe(&self) -> String {
        match self {
            Smoothing::None => "none".to_string(),
            Smoothing::Epsilon { epsilon } => format!("epsilon={epsilon}"),
        }
    }
}

type Gram<'a> = &'a [String];

/// Largest and second-largest count of one n-gram across the corpus, with
/// the owner of the largest.
#[derive(Clone, Copy, Default)]
struct Top2 {
    first: usize,
    owner: usize,
    second: usize,
}

impl Top2 {
    fn push(&mut self, owner: usize, count: usize) {
        if count > self.first {
            self.second = self.first;
            self.first = count;
            self.owner = owner;
        } else if count > self.second {
            self.second = count;
        }
    }

    fn excluding(&self, item: usize) -> usize {
        if self.owner == item {
            self.second
        } else {
            self.first
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<Gram<'_>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Reference length closest to `len`, ties going to the shorter length.
fn closest_ref_len(lengths: &BTreeMap<usize, usize>, len: usize) -> Option<usize> {
    let below = lengths.range(..=len).next_back().map(|(l, _)| *l);
    let above = lengths.range(len..).next().map(|(l, _)| *l);
    match (below, above) {
        (Some(b), Some(a)) => Some(if len - b <= a - len { b } else { a }),
        (b, a) => b.or(a),
    }
}

/// Cumulative BLEU from clipped match counts and hypothesis n-gram totals.
fn combine<F: Scalar>(
    matches: &[usize],
    totals: &[usize],
    hyp_len: usize,
    ref_len: usize,
    smoothing: Smoothing,
) -> F {
    if hyp_len == 0 {
        return F::zero();
    }
    let weight = F::one() / F::from_count(matches.len());
    let mut log_sum = F::zero();
    for (&m, &t) in matches.iter().zip(totals) {
        let p = match (m, smoothing) {
            (0, Smoothing::None) => return F::zero(),
            (0, Smoothing::Epsilon { epsilon }) => F::lit(epsilon) / F::from_count(t.max(1)),
            _ => F::from_count(m) / F::from_count(t),
        };
        log_sum = log_sum + weight * p.ln();
    }
    let bp = if hyp_len > ref_len {
        F::one()
    } else {
        (F::one() - F::from_count(ref_len) / F::from_count(hyp_len)).exp()
    };
    bp * log_sum.exp()
}

/// Self-BLEU of order `n` over `corpus`.
pub fn self_bleu<F: Scalar, S: AsRef<str> + Sync>(
    corpus: &[S],
    n: usize,
    smoothing: Smoothing,
) -> Result<F, EvalError> {
    if corpus.len() < 2 {
        return Err(EvalError::TooFewItems {
            needed: 2,
            got: corpus.len(),
        });
    }
    if n == 0 {
        return Err(EvalError::InvalidOrder(n));
    }
    let tokens: Vec<Vec<String>> = corpus.par_iter().map(|t| tokenize(t.as_ref())).collect();

    let per_item: Vec<Vec<HashMap<Gram<'_>, usize>>> = tokens
        .par_iter()
        .map(|t| (1..=n).map(|k| ngram_counts(t, k)).collect())
        .collect();
    let mut top: Vec<HashMap<Gram<'_>, Top2>> = vec![HashMap::new(); n];
    for (item, orders) in per_item.iter().enumerate() {
        for (k, counts) in orders.iter().enumerate() {
            for (gram, &c) in counts {
                top[k].entry(*gram).or_default().push(item, c);
            }
        }
    }
    let mut lengths: BTreeMap<usize, usize> = BTreeMap::new();
    for t in &tokens {
        *lengths.entry(t.len()).or_insert(0) += 1;
    }

    let scores: Vec<F> = (0..corpus.len())
        .into_par_iter()
        .map(|item| {
            let hyp_len = tokens[item].len();
            let mut others = lengths.clone();
            match others.get_mut(&hyp_len) {
                Some(1) => {
                    others.remove(&hyp_len);
                }
                Some(c) => *c -= 1,
                None => unreachable!("own length is present"),
            }
            let ref_len = closest_ref_len(&others, hyp_len).expect("at least one reference");
            let mut matches = Vec::with_capacity(n);
            let mut totals = Vec::with_capacity(n);
            for (k, counts) in per_item[item].iter().enumerate() {
                let m = counts
                    .iter()
                    .map(|(gram, &c)| c.min(top[k][gram].excluding(item)))
                    .sum();
                matches.push(m);
                totals.push(hyp_len.saturating_sub(k));
            }
            combine(&matches, &totals, hyp_len, ref_len, smoothing)
        })
        .collect();
    let sum = scores.iter().fold(F::zero(), |acc, &s| acc + s);
    Ok(sum / F::from_count(scores.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct implementation: for each hypothesis, clip every n-gram count by
    /// its maximum count in any single other item.
    fn oracle(corpus: &[&str], n: usize, eps: Option<f64>) -> f64 {
        let toks: Vec<Vec<String>> = corpus.iter().map(|t| tokenize(t)).collect();
        let grams = |t: &[String], k: usize| -> Vec<Vec<String>> {
            if t.len() < k {
                vec![]
            } else {
                t.windows(k).map(|w| w.to_vec()).collect()
            }
        };
        let mut total = 0.0;
        for i in 0..toks.len() {
            let hyp = &toks[i];
            let c = hyp.len();
            let mut best_r = usize::MAX;
            for (j, r) in toks.iter().enumerate() {
                if j == i {
                    continue;
                }
                let (d, bd) = (r.len().abs_diff(c), best_r.abs_diff(c));
                if best_r == usize::MAX || d < bd || (d == bd && r.len() < best_r) {
                    best_r = r.len();
                }
            }
            let mut log_p = 0.0;
            let mut zero = false;
            for k in 1..=n {
                let hg = grams(hyp, k);
                let mut seen: Vec<Vec<String>> = vec![];
                let mut m = 0;
                for g in &hg {
                    if seen.contains(g) {
                        continue;
                    }
                    seen.push(g.clone());
                    let own = hg.iter().filter(|x| *x == g).count();
                    let mut max_ref = 0;
                    for (j, r) in toks.iter().enumerate() {
                        if j != i {
                            max_ref = max_ref.max(grams(r, k).iter().filter(|x| *x == g).count());
                        }
                    }
                    m += own.min(max_ref);
                }
                let p = if m == 0 {
                    match eps {
                        None => {
                            zero = true;
                            break;
                        }
                        Some(e) => e / (hg.len().max(1) as f64),
                    }
                } else {
                    m as f64 / hg.len() as f64
                };
                log_p += p.ln() / n as f64;
            }
            if zero || c == 0 {
                continue;
            }
            let bp = if c > best_r { 1.0 } else { (1.0 - best_r as f64 / c as f64).exp() };
            total += bp * log_p.exp();
        }
        total / toks.len() as f64
    }

    const TOY: [&str; 3] = [
        "the cat sat on the mat",
        "the cat is on the mat today",
        "a dog sat on the cat",
    ];

    #[test]
    fn oracle_agrees_on_toy_corpus() {
        // Independently computed reference values for n = 1..=4.
        let frozen = [0.793_650_793_650_793_6, 0.708_165_675_900_262_9, 0.538_626_149_924_159, 0.0];
        for (n, want) in (1..=4).zip(frozen) {
            let o = oracle(&TOY, n, None);
            assert!((o - want).abs() < 1e-12, "n={n}: {o}");
        }
        for n in 1..=4 {
            let fast: f64 = self_bleu(&TOY, n, Smoothing::None).unwrap();
            assert!((fast - oracle(&TOY, n, None)).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn identical_pair_is_one() {
        let v: f64 = self_bleu(&["they are all the same", "they are all the same"], 2, Smoothing::None).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_pair_is_zero() {
        let v: f64 = self_bleu(&["red green", "blue yellow"], 2, Smoothing::None).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn too_small() {
        assert!(matches!(
            self_bleu::<f64, _>(&["one"], 2, Smoothing::None),
            Err(EvalError::TooFewItems { needed: 2, got: 1 })
        ));
        assert!(matches!(
            self_bleu::<f64, _>(&["a", "b"], 0, Smoothing::None),
            Err(EvalError::InvalidOrder(0))
        ));
    }

    #[test]
    fn epsilon_smoothing_matches_oracle() {
        let corpus = ["red green", "blue yellow", "green blue red"];
        let s = Smoothing::Epsilon { epsilon: 0.1 };
        let fast: f64 = self_bleu(&corpus, 3, s).unwrap();
        let o = oracle(&corpus, 3, Some(0.1));
        assert!(fast > 0.0);
        assert!((fast - o).abs() < 1e-9);
    }

    #[test]
    fn closest_length_prefers_shorter_on_tie() {
        let lengths: BTreeMap<usize, usize> = [(4, 1), (8, 1)].into_iter().collect();
        assert_eq!(closest_ref_len(&lengths, 6), Some(4));
        assert_eq!(closest_ref_len(&lengths, 7), Some(8));
        assert_eq!(closest_ref_len(&lengths, 20), Some(8));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fast_matches_oracle(
            corpus in prop::collection::vec("(a|b|c|d)( (a|b|c|d)){0,7}", 2..7),
            n in 1usize..5,
        ) {
            let refs: Vec<&str> = corpus.iter().map(String::as_str).collect();
            let fast: f64 = self_bleu(&refs, n, Smoothing::None).unwrap();
            prop_assert!((fast - oracle(&refs, n, None)).abs() < 1e-9);
        }

        #[test]
        fn identical_corpus_is_one(s in "[a-z]{1,5}( [a-z]{1,5}){3,8}", size in 2usize..6) {
            let corpus = vec![s; size];
            let v: f64 = self_bleu(&corpus, 4, Smoothing::None).unwrap();
            prop_assert!((v - 1.0).abs() < 1e-12);
        }

        #[test]
        fn permutation_invariant(
            corpus in prop::collection::vec("(x|y|z)( (x|y|z)){1,6}", 2..6),
            rot in 0usize..6,
        ) {
            let mut rotated = corpus.clone();
            rotated.rotate_left(rot % corpus.len());
            let a: f64 = self_bleu(&corpus, 2, Smoothing::None).unwrap();
            let b: f64 = self_bleu(&rotated, 2, Smoothing::None).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        }
    }
}
