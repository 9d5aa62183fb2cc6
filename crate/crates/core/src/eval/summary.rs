//! Mean/std summaries and the one-sample t-test.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd<F> {
    pub mean: F,
    /// Sample standard deviation; zero for a single value.
    pub std: F,
    pub n: usize,
}

pub fn mean_std<F: Scalar>(values: &[F]) -> Result<MeanStd<F>, EvalError> {
    if values.is_empty() {
        return Err(EvalError::TooFewItems { needed: 1, got: 0 });
    }
    // Welford's update; exact for constant input.
    let mut mean = F::zero();
    let mut m2 = F::zero();
    for (i, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean = mean + delta / F::from_count(i + 1);
        m2 = m2 + delta * (v - mean);
    }
    let std = if values.len() == 1 {
        F::zero()
    } else {
        (m2 / F::from_count(values.len() - 1)).sqrt()
    };
    Ok(MeanStd {
        mean,
        std,
        n: values.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult<F> {
    pub t: F,
    pub p_two_sided: F,
    pub df: usize,
    /// Set when the samples have zero variance; `t` is then infinite (or
    /// zero if the mean equals the hypothesized mean) and `p` is 0 or 1.
    pub degenerate: bool,
}

/// Two-sided one-sample t-test of `samples` against `mu0`.
pub fn one_sample_t_test<F: Scalar>(samples: &[F], mu0: F) -> Result<TTestResult<F>, EvalError> {
    if samples.len() < 2 {
        return Err(EvalError::TooFewItems {
            needed: 2,
            got: samples.len(),
        });
    }
    let s = mean_std(samples)?;
    let df = samples.len() - 1;
    let diff = s.mean - mu0;
    if s.std == F::zero() {
        let (t, p) = if diff == F::zero() {
            (F::zero(), F::one())
        } else {
            (diff.signum() * F::infinity(), F::zero())
        };
        return Ok(TTestResult {
            t,
            p_two_sided: p,
            df,
            degenerate: true,
        });
    }
    let t = diff / (s.std / F::from_count(samples.len()).sqrt());
    Ok(TTestResult {
        t,
        p_two_sided: student_t_two_sided(t, F::from_count(df))?,
        df,
        degenerate: false,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided<F: Scalar>(t: F, df: F) -> Result<F, EvalError> {
    if !(df > F::zero()) || t.is_nan() {
        return Err(EvalError::Numeric("t-distribution needs df > 0 and finite t".into()));
    }
    if t.is_infinite() {
        return Ok(F::zero());
    }
    let half = F::lit(0.5);
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df * half, half)
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn student_t_cdf<F: Scalar>(t: F, df: F) -> Result<F, EvalError> {
    let tail = student_t_two_sided(t, df)? * F::lit(0.5);
    Ok(if t > F::zero() { F::one() - tail } else { tail })
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos approximation).
pub fn ln_gamma<F: Scalar>(x: F) -> F {
    if x < F::lit(0.5) {
        // Reflection.
        let pi = F::lit(std::f64::consts::PI);
        return (pi / (pi * x).sin()).ln() - ln_gamma(F::one() - x);
    }
    let x = x - F::one();
    let mut a = F::lit(LANCZOS[0]);
    let t = x + F::lit(LANCZOS_G + 0.5);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a = a + F::lit(c) / (x + F::from_count(i));
    }
    F::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + F::lit(0.5)) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta<F: Scalar>(x: F, a: F, b: F) -> Result<F, EvalError> {
    if !(a > F::zero() && b > F::zero()) || !(x >= F::zero() && x <= F::one()) {
        return Err(EvalError::Numeric("incomplete beta needs a, b > 0 and 0 <= x <= 1".into()));
    }
    if x == F::zero() || x == F::one() {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (F::one() - x).ln();
    let front = ln_front.exp();
    if x < (a + F::one()) / (a + b + F::lit(2.0)) {
        Ok(front * beta_continued_fraction(x, a, b)? / a)
    } else {
        Ok(F::one() - front * beta_continued_fraction(F::one() - x, b, a)? / b)
    }
}

/// Modified Lentz evaluation of the continued fraction for `I_x(a, b)`.
fn beta_continued_fraction<F: Scalar>(x: F, a: F, b: F) -> Result<F, EvalError> {
    const MAX_ITER: usize = 500;
    let eps = F::epsilon();
    let tiny = F::min_positive_value() / eps;
    let one = F::one();
    let two = F::lit(2.0);
    let clamp = |v: F| if v.abs() < tiny { tiny } else { v };

    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = (one - qab * x / qap).recip();
    d = clamp(d.recip()).recip();
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = F::from_count(m);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = clamp(one + aa * d).recip();
        c = clamp(one + aa / c);
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = clamp(one + aa * d).recip();
        c = clamp(one + aa / c);
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() <= eps * F::lit(4.0) {
            return Ok(h);
        }
    }
    Err(EvalError::Numeric("incomplete beta continued fraction did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};
    use statrs::function::beta::beta_reg;
    use statrs::function::gamma::ln_gamma as statrs_ln_gamma;

    #[test]
    fn mean_and_sample_std() {
        let s = mean_std(&[10.0, 20.0, 30.0]).unwrap();
        assert_eq!((s.mean, s.std, s.n), (20.0, 10.0, 3));
        assert_eq!(mean_std(&[7.0]).unwrap().std, 0.0);
        assert!(mean_std::<f64>(&[]).is_err());
    }

    #[test]
    fn t_test_null_difference() {
        let r = one_sample_t_test(&[1.0f64, 2.0, 3.0], 2.0).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p_two_sided - 1.0).abs() < 1e-12);
        assert_eq!(r.df, 2);
        assert!(!r.degenerate);
    }

    #[test]
    fn t_test_against_closed_form() {
        // With df = 2 the two-sided p-value is 1 - t / sqrt(t^2 + 2).
        let t = 2.0 * 3f64.sqrt();
        let closed = 1.0 - t / (t * t + 2.0).sqrt();
        assert!((closed - 0.074_180_2).abs() < 1e-6);
        let r = one_sample_t_test(&[2.0f64, 4.0, 6.0], 0.0).unwrap();
        assert!((r.t - 3.4641).abs() < 1e-4);
        assert!((r.p_two_sided - closed).abs() < 1e-12);
    }

    #[test]
    fn t_test_errors_and_degenerate() {
        assert!(matches!(
            one_sample_t_test(&[1.0f64], 0.0),
            Err(EvalError::TooFewItems { needed: 2, got: 1 })
        ));
        let r = one_sample_t_test(&[3.0f64, 3.0, 3.0], 1.0).unwrap();
        assert!(r.degenerate && r.t.is_infinite() && r.p_two_sided == 0.0);
        let r = one_sample_t_test(&[3.0, 3.0], 3.0).unwrap();
        assert!(r.degenerate && r.t == 0.0 && r.p_two_sided == 1.0);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0f64).abs() < 1e-14);
        assert!((ln_gamma(0.5f64) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0f64) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let r = one_sample_t_test(&[2.0f32, 4.0, 6.0], 0.0).unwrap();
        assert!((r.p_two_sided - 0.074_18).abs() < 1e-4);
    }

    #[test]
    fn tiny_p_values() {
        let p = student_t_two_sided(40.0f64, 9.0).unwrap();
        let reference = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, 9.0).unwrap().cdf(40.0));
        assert!(p > 0.0 && p < 1e-10);
        // Relative check: the statrs complement loses digits here.
        assert!((p - reference).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cdf_matches_statrs(t in -30.0f64..30.0, df in 1u32..200) {
            let ours = student_t_cdf(t, df as f64).unwrap();
            let theirs = StudentsT::new(0.0, 1.0, df as f64).unwrap().cdf(t);
            prop_assert!((ours - theirs).abs() < 1e-10, "t={} df={} {} vs {}", t, df, ours, theirs);
        }

        #[test]
        fn incomplete_beta_matches_statrs(x in 0.0f64..=1.0, a in 0.05f64..50.0, b in 0.05f64..50.0) {
            let ours = regularized_incomplete_beta(x, a, b).unwrap();
            let theirs = beta_reg(a, b, x);
            prop_assert!((ours - theirs).abs() < 1e-10);
        }

        #[test]
        fn ln_gamma_matches_statrs(x in 0.01f64..150.0) {
            let ours = ln_gamma(x);
            let theirs = statrs_ln_gamma(x);
            prop_assert!((ours - theirs).abs() <= 1e-12 * theirs.abs().max(1.0));
        }

        #[test]
        fn cdf_is_symmetric(t in 0.0f64..20.0, df in 1u32..60) {
            let a = student_t_cdf(t, df as f64).unwrap();
            let b = student_t_cdf(-t, df as f64).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }
    }
}
