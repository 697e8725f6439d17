//! One-tailed pooled-variance two-sample t-test and the Student t
//! distribution functions behind it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

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

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x) Γ(1-x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
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
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
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

/// Upper tail `P(T > t)` of Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return 0.0;
    }
    if t == f64::NEG_INFINITY {
        return 1.0;
    }
    let tail = 0.5 * regularized_incomplete_beta(df / (df + t * t), 0.5 * df, 0.5);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// The `t` with `P(T > t) = alpha`, by bracketing and bisection.
pub fn student_t_upper_quantile(alpha: f64, df: f64) -> f64 {
    if alpha > 0.5 {
        return -student_t_upper_quantile(1.0 - alpha, df);
    }
    if alpha == 0.5 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while student_t_sf(hi, df) > alpha {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if student_t_sf(mid, df) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Mean, sample standard deviation (n − 1 denominator) and size of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl SampleStats {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        SampleStats { mean, sd, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    /// `None` when the pooled variance is zero.
    pub t_estimated: Option<f64>,
    pub df: usize,
    pub alpha: f64,
    pub t_critical: f64,
    pub p_value: Option<f64>,
    pub reject_null: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

/// Tests `H0: μ1 = μ2` against `H1: μ1 > μ2` with pooled variance.
pub fn pooled_t_test(first: SampleStats, second: SampleStats, alpha: f64) -> Result<TTestResult> {
    for s in [&first, &second] {
        if s.n < 2 {
            return Err(Error::Config(format!(
                "the t-test needs at least two values per sample, got {}",
                s.n
            )));
        }
        if !(s.sd >= 0.0 && s.sd.is_finite() && s.mean.is_finite()) {
            return Err(Error::Config("sample means must be finite and sds non-negative".into()));
        }
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let (n1, n2) = (first.n as f64, second.n as f64);
    let df = first.n + second.n - 2;
    let pooled_var = (first.sd * first.sd * (n1 - 1.0) + second.sd * second.sd * (n2 - 1.0)) / df as f64;
    let se = (pooled_var * (1.0 / n1 + 1.0 / n2)).sqrt();
    let t_critical = student_t_upper_quantile(alpha, df as f64);
    let diff = first.mean - second.mean;
    if se == 0.0 {
        let (p, note) = if diff == 0.0 {
            (None, "zero pooled variance and equal means: t is undefined")
        } else if diff > 0.0 {
            (Some(0.0), "zero pooled variance: t is +infinite")
        } else {
            (Some(1.0), "zero pooled variance: t is -infinite")
        };
        return Ok(TTestResult {
            t_estimated: None,
            df,
            alpha,
            t_critical,
            p_value: p,
            reject_null: diff > 0.0,
            note: Some(note.into()),
        });
    }
    let t = diff / se;
    Ok(TTestResult {
        t_estimated: Some(t),
        df,
        alpha,
        t_critical,
        p_value: Some(student_t_sf(t, df as f64)),
        reject_null: t > t_critical,
        note: None,
    })
}
