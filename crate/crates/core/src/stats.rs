//! Least-squares fits with a t-test on the leading coefficient.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("x has {x} points but y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("y has zero variance")]
    ZeroVariance,
    #[error("x does not have enough distinct values for this model")]
    DegenerateDesign,
    #[error("non-finite input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Linear,
    Quadratic,
}

impl FitModel {
    pub fn degree(self) -> usize {
        match self {
            Self::Linear => 1,
            Self::Quadratic => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// Leading coefficient: the slope for a line, the `x^2` term for a parabola.
    pub slope: f64,
    pub intercept: f64,
    /// All coefficients in ascending powers of x.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    /// Two-sided p-value of the leading coefficient's t-statistic.
    pub p_value: f64,
    pub n: usize,
}

pub fn fit_quality_relation(x: &[f64], y: &[f64], model: FitModel) -> Result<FitResult, FitError> {
    if x.len() != y.len() {
        return Err(FitError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    let n = x.len();
    let params = model.degree() + 1;
    if n < params + 1 {
        return Err(FitError::TooFewPoints {
            need: params + 1,
            got: n,
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(FitError::ZeroVariance);
    }

    // Center and scale x so the Vandermonde columns stay well conditioned,
    // then map the coefficients back.
    let x_mean = x.iter().sum::<f64>() / n as f64;
    let x_scale = x.iter().fold(0.0f64, |m, v| m.max((v - x_mean).abs()));
    if x_scale == 0.0 {
        return Err(FitError::DegenerateDesign);
    }
    let u: Vec<f64> = x.iter().map(|v| (v - x_mean) / x_scale).collect();
    let design = DMatrix::from_fn(n, params, |i, j| u[i].powi(j as i32));
    let rhs = DVector::from_column_slice(y);

    let qr = design.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.diagonal().iter().any(|v| v.abs() <= 1e-12 * diag_max) {
        return Err(FitError::DegenerateDesign);
    }
    let qty = qr.q().transpose() * &rhs;
    let beta_u = r
        .solve_upper_triangular(&qty)
        .ok_or(FitError::DegenerateDesign)?;

    let fitted = &design * &beta_u;
    let ss_res: f64 = rhs.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let df = (n - params) as f64;

    // Var(beta_u) = s^2 (R^T R)^-1; only the leading diagonal entry is needed.
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or(FitError::DegenerateDesign)?;
    let lead = params - 1;
    let lead_var_factor: f64 = (0..params).map(|k| r_inv[(lead, k)].powi(2)).sum();
    let se_u = (ss_res / df * lead_var_factor).sqrt();
    let t_stat = beta_u[lead] / se_u;
    let p_value = if se_u == 0.0 {
        if beta_u[lead] == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        student_t_two_sided_p(t_stat, df)
    };

    let coefficients = unscale_polynomial(beta_u.as_slice(), x_mean, x_scale);
    Ok(FitResult {
        model,
        slope: coefficients[lead],
        intercept: coefficients[0],
        coefficients,
        r_squared: (1.0 - ss_res / ss_tot).clamp(0.0, 1.0),
        p_value: p_value.clamp(0.0, 1.0),
        n,
    })
}

/// Converts coefficients of `p(u)`, `u = (x - shift) / scale`, to powers of x.
fn unscale_polynomial(beta_u: &[f64], shift: f64, scale: f64) -> Vec<f64> {
    let deg = beta_u.len() - 1;
    let mut out = vec![0.0; deg + 1];
    for (j, &b) in beta_u.iter().enumerate() {
        // b * ((x - shift) / scale)^j expanded binomially
        let coef = b / scale.powi(j as i32);
        for (k, o) in out.iter_mut().enumerate().take(j + 1) {
            *o += coef * binomial(j, k) * (-shift).powi((j - k) as i32);
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITERS: usize = 100_000;
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
    for m in 1..=MAX_ITERS {
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
        let step = d * c;
        h *= step;
        if (step - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    if t.is_nan() {
        return f64::NAN;
    }
    incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

/// CDF of Student's t distribution.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_sided_p(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}
