//! One-way ANOVA with an F-distribution tail from the regularized incomplete beta.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const BETA_CF_MAX_ITER: usize = 200;
const BETA_CF_EPS: f64 = 1e-10;
const TINY: f64 = 1e-300;

/// Lanczos approximation (g = 7, 9 terms) of ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
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
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for I_x(a, b), modified Lentz.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence {
        what: "incomplete beta continued fraction",
        iterations: BETA_CF_MAX_ITER,
    })
}

/// I_x(a, b) for a, b > 0 and x in [0, 1].
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta shape parameters must be positive, got ({a}, {b})"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("x = {x} outside [0, 1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_continued_fraction(x, a, b)? / a)
    } else {
        Ok(1.0 - front * beta_continued_fraction(1.0 - x, b, a)? / b)
    }
}

/// P(F > f) for an F(df1, df2) variable.
pub fn f_survival(f: f64, df1: f64, df2: f64) -> Result<f64> {
    if f.is_nan() {
        return Err(Error::InvalidParameter("F statistic is NaN".into()));
    }
    if f <= 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    regularized_incomplete_beta(df2 / (df2 + df1 * f), df2 / 2.0, df1 / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub p: f64,
    pub df_between: usize,
    pub df_within: usize,
}

/// One-way ANOVA over at least two groups of at least two observations.
///
/// Zero within-group variance gives `F = +inf, p = 0` when the group means
/// differ and `F = 0, p = 1` when they do not.
pub fn anova_oneway<G: AsRef<[f64]>>(groups: &[G]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(Error::InvalidParameter("ANOVA needs at least two groups".into()));
    }
    if let Some(i) = groups.iter().position(|g| g.as_ref().len() < 2) {
        return Err(Error::InvalidParameter(format!(
            "group {i} has fewer than two observations"
        )));
    }
    let n: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    let grand = groups.iter().flat_map(|g| g.as_ref()).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let g = g.as_ref();
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (mean - grand).powi(2);
        ss_within += g.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    }
    let df_between = groups.len() - 1;
    let df_within = n - groups.len();
    let (f, p) = if ss_within == 0.0 {
        if ss_between > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (0.0, 1.0)
        }
    } else {
        let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
        (f, f_survival(f, df_between as f64, df_within as f64)?)
    };
    Ok(AnovaResult {
        f,
        p,
        df_between,
        df_within,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// P(F > f) by composite Simpson on the density after mapping
    /// x = f + t / (1 - t), t in [0, 1).
    fn f_tail_quadrature(f: f64, d1: f64, d2: f64) -> f64 {
        let ln_b = ln_gamma(d1 / 2.0) + ln_gamma(d2 / 2.0) - ln_gamma((d1 + d2) / 2.0);
        let density = |x: f64| {
            let ln = 0.5 * d1 * (d1 / d2).ln() + (0.5 * d1 - 1.0) * x.ln()
                - 0.5 * (d1 + d2) * (1.0 + d1 * x / d2).ln()
                - ln_b;
            ln.exp()
        };
        let g = |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let x = f + t / (1.0 - t);
            density(x) / ((1.0 - t) * (1.0 - t))
        };
        let n = 200_000;
        let h = 1.0 / n as f64;
        let mut s = g(0.0) + g(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn ln_gamma_at_integers() {
        // ln(4!) and ln(Γ(1/2)) = ln(sqrt(pi)).
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x; I_x(2, 1) = x^2; I_x(1, 3) = 1 - (1 - x)^3.
        for &x in &[0.1, 0.37, 0.8] {
            assert!((regularized_incomplete_beta(x, 1.0, 1.0).unwrap() - x).abs() < 1e-10);
            assert!((regularized_incomplete_beta(x, 2.0, 1.0).unwrap() - x * x).abs() < 1e-10);
            let want = 1.0 - (1.0 - x).powi(3);
            assert!((regularized_incomplete_beta(x, 1.0, 3.0).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn identical_groups() {
        let r = anova_oneway(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(r.f, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn shifted_groups() {
        // SSB = 3*(2-3.5)^2 + 3*(5-3.5)^2 = 13.5, df1 = 1; SSW = 4, df2 = 4.
        let r = anova_oneway(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        assert!((r.f - 13.5).abs() < 1e-9);
        assert_eq!((r.df_between, r.df_within), (1, 4));
        let oracle = f_tail_quadrature(13.5, 1.0, 4.0);
        assert!((r.p - oracle).abs() < 1e-9, "p {} vs quadrature {}", r.p, oracle);
        assert!((r.p - 0.0213).abs() < 5e-5);
    }

    #[test]
    fn survival_matches_quadrature_elsewhere() {
        for &(f, d1, d2) in &[(2.5, 3.0, 12.0), (0.7, 2.0, 9.0), (6.0, 4.0, 20.0)] {
            let got = f_survival(f, d1, d2).unwrap();
            let want = f_tail_quadrature(f, d1, d2);
            assert!((got - want).abs() < 1e-8, "F({d1},{d2}) at {f}: {got} vs {want}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(anova_oneway(&[[1.0, 2.0]]).is_err());
        assert!(anova_oneway(&[vec![1.0], vec![2.0, 3.0]]).is_err());
        let r = anova_oneway(&[[1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert!(r.f.is_infinite());
        assert_eq!(r.p, 0.0);
    }

    proptest! {
        #[test]
        fn p_decreases_with_f(f1 in 0.01f64..50.0, f2 in 0.01f64..50.0, d1 in 1u32..8, d2 in 2u32..40) {
            let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
            let p_lo = f_survival(lo, d1 as f64, d2 as f64).unwrap();
            let p_hi = f_survival(hi, d1 as f64, d2 as f64).unwrap();
            prop_assert!(p_hi <= p_lo + 1e-12);
        }
    }
}
