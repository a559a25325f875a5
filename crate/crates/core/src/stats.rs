//! Welch's unequal-variance t-test with a self-contained Student-t tail.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("each sample needs at least 2 observations (got {0} and {1})")]
    SampleTooSmall(usize, usize),
    #[error("non-finite observation")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
    /// Both samples had zero variance; `p` is 1 for equal means, else 0.
    pub degenerate: bool,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::SampleTooSmall(a.len(), b.len()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (ma, sa) = mean_var(a);
    let (mb, sb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let va = sa / na;
    let vb = sb / nb;
    let se2 = va + vb;

    if se2 == 0.0 {
        let diff = ma - mb;
        let (t, p) = if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(diff), 0.0)
        };
        return Ok(WelchResult {
            t,
            df: na + nb - 2.0,
            p_two_sided: p,
            degenerate: true,
        });
    }

    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(WelchResult {
        t,
        df,
        p_two_sided: student_t_two_sided(t, df),
        degenerate: false,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() || !(df > 0.0) {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Table-style rendering: values below 1e-4 collapse to "≤ 10^-4".
pub fn format_p_value(p: f64) -> String {
    if p < 1e-4 {
        "≤ 10^-4".to_string()
    } else {
        format!("{p:.4}")
    }
}

/// Natural log of the gamma function (Lanczos, g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
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
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `I_x(a, b)` by the continued-fraction expansion with modified Lentz
/// iteration, using the symmetry `I_x(a,b) = 1 - I_{1-x}(b,a)` for fast
/// convergence.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
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
    for m in 1..=10_000 {
        let m = f64::from(m);
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
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_values() {
        let r = welch_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((r.t + 1.224_744_871).abs() < 1e-6);
        assert!((r.df - 4.0).abs() < 1e-12);
        assert!((r.p_two_sided - 0.2878).abs() < 1e-3);
    }

    #[test]
    fn identical_samples() {
        let r = welch_t_test(&[1.0, 5.0, 2.0], &[1.0, 5.0, 2.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p_two_sided - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_samples() {
        let same = welch_t_test(&[2.0; 4], &[2.0; 5]).unwrap();
        assert!(same.degenerate);
        assert_eq!(same.p_two_sided, 1.0);
        let diff = welch_t_test(&[2.0; 4], &[3.0; 5]).unwrap();
        assert!(diff.degenerate);
        assert_eq!(diff.p_two_sided, 0.0);
        assert_eq!(diff.t, f64::NEG_INFINITY);
    }

    #[test]
    fn too_small() {
        assert_eq!(
            welch_t_test(&[1.0], &[1.0, 2.0]).unwrap_err(),
            StatsError::SampleTooSmall(1, 2)
        );
    }

    #[test]
    fn gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn cauchy_tail() {
        // df = 1 is the Cauchy distribution: P(|T| > 1) = 1/2.
        assert!((student_t_two_sided(1.0, 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn p_formatting() {
        assert_eq!(format_p_value(5e-5), "≤ 10^-4");
        assert_eq!(format_p_value(0.28786), "0.2879");
    }
}
