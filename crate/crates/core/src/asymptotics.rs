//! Closed-form small-ρ approximations of the exercise boundary on the five
//! time scales `t ~ ω/λ (ω < K)`, `t ≈ K/λ`, `t ~ ω/λ (ω > K)`, `t = O(1)`
//! and `t ~ v/ρ`, plus the perpetual limit.
//!
//! Beyond the first two scales the boundary is exponentially small in 1/ρ,
//! so those evaluators work in log space and hand back a [`LogValue`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ie_solver::FLambdaCurve;
use crate::model::{ModelParams, TimePoint};
use crate::specfun::EULER_GAMMA;

/// Smallest value handed out in plain (non-log) form.
pub const PLAIN_FLOOR: f64 = 1e-300;

/// A positive quantity stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogValue {
    pub ln: f64,
}

impl LogValue {
    pub fn from_ln(ln: f64) -> Self {
        Self { ln }
    }

    pub fn from_value(v: f64) -> Self {
        Self { ln: v.ln() }
    }

    /// The plain value, or `None` if it is at or below [`PLAIN_FLOOR`].
    pub fn plain(&self) -> Option<f64> {
        let v = self.ln.exp();
        (v > PLAIN_FLOOR).then_some(v)
    }

    /// The plain value, flushing to zero below [`PLAIN_FLOOR`].
    pub fn value(&self) -> f64 {
        self.plain().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeId {
    I,
    II,
    III,
    IV,
    V,
    Perpetual,
}

impl fmt::Display for RegimeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegimeId::I => "I",
            RegimeId::II => "II",
            RegimeId::III => "III",
            RegimeId::IV => "IV",
            RegimeId::V => "V",
            RegimeId::Perpetual => "Perpetual",
        };
        f.write_str(s)
    }
}

/// The three coefficient functions of the `ω < K` expansion
/// `α ≈ α₀ + (log λ/λ) α₁ + α₂/λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeICoefficients {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl RegimeICoefficients {
    pub fn at(omega: f64, strike: f64) -> Result<Self> {
        if !(omega > 0.0 && omega < strike) {
            return Err(Error::invalid(format!("regime I needs 0 < omega < K, got omega = {omega}")));
        }
        let root = (strike * omega).sqrt();
        let alpha0 = (omega.sqrt() - strike.sqrt()).powi(2);
        let alpha1 = 0.5 * (omega - root);
        let alpha2 = 0.5 * (root - omega)
            * (4.0 * std::f64::consts::PI * strike * strike * omega / (strike - root)).ln();
        Ok(Self { alpha0, alpha1, alpha2 })
    }
}

pub fn alpha_regime_i(omega: f64, lambda: f64, strike: f64) -> Result<f64> {
    if !(lambda > 1.0) {
        return Err(Error::invalid(format!("regime I needs lambda > 1, got {lambda}")));
    }
    let c = RegimeICoefficients::at(omega, strike)?;
    Ok(c.alpha0 + lambda.ln() / lambda * c.alpha1 + c.alpha2 / lambda)
}

/// `α = 𝓕(Λ)/λ²` with 𝓕 from a solved curve (tails outside its range).
pub fn alpha_regime_ii(big_lambda: f64, lambda: f64, f: &FLambdaCurve) -> Result<LogValue> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("regime II needs lambda > 0"));
    }
    let ln_f = f.ln_eval(big_lambda)?;
    Ok(LogValue::from_ln(ln_f - 2.0 * lambda.ln()))
}

/// `𝓕(Λ)` as `Λ → −∞`.
pub fn f_tail_neg(big_lambda: f64, strike: f64) -> Result<f64> {
    if !(big_lambda < 0.0) {
        return Err(Error::invalid(format!("negative tail needs Lambda < 0, got {big_lambda}")));
    }
    let l = big_lambda;
    Ok(l * l / (4.0 * strike) + 0.25 * l * (-l).ln()
        - 0.25 * l * (8.0 * std::f64::consts::PI * strike.powi(3)).ln())
}

/// `𝓕(Λ)` as `Λ → +∞`.
pub fn f_tail_pos(big_lambda: f64, strike: f64) -> Result<f64> {
    Ok(ln_f_tail_pos(big_lambda, strike)?.exp())
}

/// `log 𝓕(Λ) = log Λ − γ − e^{Λ/K}/K` as `Λ → +∞`.
pub fn ln_f_tail_pos(big_lambda: f64, strike: f64) -> Result<f64> {
    if !(big_lambda > 0.0) {
        return Err(Error::invalid(format!("positive tail needs Lambda > 0, got {big_lambda}")));
    }
    Ok(big_lambda.ln() - EULER_GAMMA - (big_lambda / strike).exp() / strike)
}

/// `ω > K`: `α ≈ ((ω−K)/λ) e^{−γ} exp(−ρ^{K/ω−1}/K)`.
pub fn alpha_regime_iii(omega: f64, p: &ModelParams) -> Result<LogValue> {
    p.require_small_rho()?;
    let k = p.strike;
    if !(omega > k) {
        return Err(Error::invalid(format!("regime III needs omega > K, got {omega}")));
    }
    // ρ^{K/ω − 1} = exp(λ (1 − K/ω))
    let power = (p.lambda * (1.0 - k / omega)).exp();
    Ok(LogValue::from_ln(((omega - k) / p.lambda).ln() - EULER_GAMMA - power / k))
}

/// The WKB exponent `f(t) = e^{−K/t}/K` of the `t = O(1)` regime.
pub fn wkb_f(t: f64, strike: f64) -> f64 {
    (-strike / t).exp() / strike
}

/// The WKB prefactor `g(t) = t e^{−γ} exp(−e^{−K/t}/2)`.
pub fn wkb_g(t: f64, strike: f64) -> f64 {
    t * (-EULER_GAMMA).exp() * (-0.5 * (-strike / t).exp()).exp()
}

/// `t = O(1)`: `α ≈ t e^{−γ} exp[−(1/2 + 1/(ρK)) e^{−K/t}]`.
pub fn alpha_regime_iv(t: f64, p: &ModelParams) -> Result<LogValue> {
    p.require_small_rho()?;
    if !(t > 0.0) {
        return Err(Error::invalid(format!("regime IV needs t > 0, got {t}")));
    }
    let k = p.strike;
    Ok(LogValue::from_ln(
        t.ln() - EULER_GAMMA - (0.5 + 1.0 / (p.rho * k)) * (-k / t).exp(),
    ))
}

/// `A(v) = e^{−γ} exp(1/(e^v − 1)) (1 − e^{−v})`, returned as log A(v).
pub fn ln_a_factor(v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::invalid(format!("A(v) needs v > 0, got {v}")));
    }
    Ok(-EULER_GAMMA + 1.0 / v.exp_m1() + (-(-v).exp_m1()).ln())
}

/// `t = v/ρ`: `α ≈ (1/ρ) exp(−1/(ρK)) A(v)`.
pub fn alpha_regime_v(v: f64, p: &ModelParams) -> Result<LogValue> {
    p.require_small_rho()?;
    let ln_a = ln_a_factor(v)?;
    Ok(LogValue::from_ln(-p.rho.ln() - 1.0 / (p.rho * p.strike) + ln_a))
}

/// `α(∞) ≈ (1/ρ) e^{−γ} exp(−1/(ρK))`.
pub fn alpha_perpetual_asym(p: &ModelParams) -> Result<LogValue> {
    p.require_small_rho()?;
    Ok(LogValue::from_ln(-p.rho.ln() - EULER_GAMMA - 1.0 / (p.rho * p.strike)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeEstimate {
    pub alpha: LogValue,
    pub regime: RegimeId,
    /// Regime II was selected but no 𝓕 curve was supplied, so a tail
    /// formula stood in for it.
    pub tail_fallback: bool,
}

/// Picks the regime whose scaling fits `t` and evaluates it.
///
/// Switch points: regime V once `ρt ≥ 0.1`; regime II inside the window
/// `|λ²t − λK| ≤ √λ`; otherwise regime I below it, regime III above it up to
/// `t = λ^{−1/2}`, and regime IV beyond.
pub fn alpha_composite(t: f64, p: &ModelParams, f: Option<&FLambdaCurve>) -> Result<CompositeEstimate> {
    p.require_small_rho()?;
    if !(t > 0.0) {
        return Err(Error::invalid(format!("composite boundary needs t > 0, got {t}")));
    }
    let regime = select_regime(t, p);
    let tp = TimePoint::from_t(t, p);
    let k = p.strike;
    let mut tail_fallback = false;
    let alpha = match regime {
        RegimeId::I => LogValue::from_value(alpha_regime_i(tp.omega, p.lambda, k)?),
        RegimeId::II => match f {
            Some(curve) => alpha_regime_ii(tp.big_lambda, p.lambda, curve)?,
            None => {
                tail_fallback = true;
                let ln_f = if tp.big_lambda < 0.0 {
                    f_tail_neg(tp.big_lambda, k)?.ln()
                } else if tp.big_lambda > 0.0 {
                    ln_f_tail_pos(tp.big_lambda, k)?
                } else {
                    f64::NEG_INFINITY
                };
                LogValue::from_ln(ln_f - 2.0 * p.lambda.ln())
            }
        },
        RegimeId::III => alpha_regime_iii(tp.omega, p)?,
        RegimeId::IV => alpha_regime_iv(t, p)?,
        RegimeId::V => alpha_regime_v(tp.v, p)?,
        RegimeId::Perpetual => alpha_perpetual_asym(p)?,
    };
    Ok(CompositeEstimate {
        alpha,
        regime,
        tail_fallback,
    })
}

pub fn select_regime(t: f64, p: &ModelParams) -> RegimeId {
    let tp = TimePoint::from_t(t, p);
    if tp.v >= 0.1 {
        RegimeId::V
    } else if tp.big_lambda.abs() <= p.lambda.sqrt() {
        RegimeId::II
    } else if tp.omega < p.strike {
        RegimeId::I
    } else if t <= 1.0 / p.lambda.sqrt() {
        RegimeId::III
    } else {
        RegimeId::IV
    }
}

/// `log α_IV(v/ρ) − log α_V(v)`: regimes IV and V evaluated at the same
/// instant `t = v/ρ`. Small in the overlap `ρ ≪ v ≪ 1`.
pub fn matching_iv_v(v: f64, p: &ModelParams) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::invalid(format!("matching needs v > 0, got {v}")));
    }
    Ok(alpha_regime_iv(v / p.rho, p)?.ln - alpha_regime_v(v, p)?.ln)
}

/// Relative difference between regime I at `ω = K + Λ/λ` and the negative
/// 𝓕 tail `𝓕(Λ)/λ²`, with `Λ = −√λ`.
pub fn matching_i_ii(lambda: f64, strike: f64) -> Result<f64> {
    let big_lambda = -lambda.sqrt();
    let inner = alpha_regime_i(strike + big_lambda / lambda, lambda, strike)?;
    let outer = f_tail_neg(big_lambda, strike)? / (lambda * lambda);
    Ok((inner - outer).abs() / outer.abs())
}

/// `log α_III(λt) − log α_IV(t)`.
pub fn matching_iii_iv(t: f64, p: &ModelParams) -> Result<f64> {
    Ok(alpha_regime_iii(p.lambda * t, p)?.ln - alpha_regime_iv(t, p)?.ln)
}
