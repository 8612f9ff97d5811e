//! Exponential integral E₁ and the Euler–Mascheroni constant.
//!
//! E₁(x) = ∫ₓ^∞ e^{-v}/v dv. The power series (with its −log x − γ leading
//! part) is used on (0, 1], the Lentz continued fraction above 1.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_SWITCH: f64 = 1.0;
const EPS: f64 = 1e-17;
const MAX_TERMS: usize = 500;

/// E₁(x) for x > 0. Returns 0 when the result underflows.
pub fn e1(x: f64) -> Result<f64> {
    check_arg(x)?;
    if x <= SERIES_SWITCH {
        Ok(series(x))
    } else {
        let (h, _) = continued_fraction(x);
        Ok(h * (-x).exp())
    }
}

/// log E₁(x) for x > 0, without underflow for large x.
pub fn log_e1(x: f64) -> Result<f64> {
    check_arg(x)?;
    if x <= SERIES_SWITCH {
        Ok(series(x).ln())
    } else {
        let (h, _) = continued_fraction(x);
        Ok(h.ln() - x)
    }
}

/// e^x E₁(x), the scaled exponential integral. Finite for every x > 0.
pub fn e1_scaled(x: f64) -> Result<f64> {
    check_arg(x)?;
    if x <= SERIES_SWITCH {
        Ok(series(x) * x.exp())
    } else {
        Ok(continued_fraction(x).0)
    }
}

fn check_arg(x: f64) -> Result<()> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::invalid(format!("E1 requires x > 0, got {x}")));
    }
    Ok(())
}

fn series(x: f64) -> f64 {
    // E1(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k k!)
    let mut sum = 0.0;
    let mut fact_term = 1.0; // (-x)^k / k!
    for k in 1..MAX_TERMS {
        fact_term *= -x / k as f64;
        let term = fact_term / k as f64;
        sum += term;
        if term.abs() < EPS * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Modified Lentz evaluation of e^x E₁(x). Returns (value, iterations).
fn continued_fraction(x: f64) -> (f64, usize) {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return (h, i);
        }
    }
    (h, MAX_TERMS)
}
