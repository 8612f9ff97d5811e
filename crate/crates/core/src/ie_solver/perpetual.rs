//! Perpetual boundary: root of `Kρ E₁(x) eˣ = 1`, `x = ρ α(∞)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::specfun::{e1, e1_scaled, log_e1, EULER_GAMMA};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerpetualRoot {
    pub alpha_inf: f64,
    /// `x = ρ α(∞)`.
    pub x: f64,
    /// `Kρ E₁(x) − e^{−x}` at the root.
    pub residual: f64,
}

fn g(x: f64, ln_k_rho: f64) -> Result<f64> {
    Ok(ln_k_rho + log_e1(x)? + x)
}

pub fn perpetual_root(params: &ModelParams) -> Result<PerpetualRoot> {
    let (k, rho) = (params.strike, params.rho);
    if !(k > 0.0 && rho > 0.0) {
        return Err(Error::RhoOutOfRange { rho });
    }
    let ln_k_rho = (k * rho).ln();
    let x_asym = (-EULER_GAMMA - 1.0 / (rho * k)).exp();
    if !(x_asym > 0.0) {
        return Err(Error::RhoOutOfRange { rho });
    }
    let (mut lo, mut hi) = (0.1 * x_asym, 10.0 * x_asym);
    // g decreases from +∞ at 0⁺ to −∞.
    let mut widen = 0;
    while g(lo, ln_k_rho)? <= 0.0 || g(hi, ln_k_rho)? >= 0.0 {
        widen += 1;
        if widen > 200 || !(lo > 0.0) || !hi.is_finite() {
            return Err(Error::Bracket(format!("perpetual root not bracketed for rho = {rho}")));
        }
        if g(lo, ln_k_rho)? <= 0.0 {
            lo *= 0.1;
        }
        if g(hi, ln_k_rho)? >= 0.0 {
            hi *= 10.0;
        }
    }
    // Bisection in log x to a narrow bracket, then Newton.
    for _ in 0..200 {
        if hi / lo < 1.0 + 1e-6 {
            break;
        }
        let mid = (lo * hi).sqrt();
        if g(mid, ln_k_rho)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = (lo * hi).sqrt();
    for _ in 0..20 {
        // g'(x) = 1 − 1/(x eˣE₁(x))
        let d = 1.0 - 1.0 / (x * e1_scaled(x)?);
        let next = x - g(x, ln_k_rho)? / d;
        let next = if next > 0.0 { next } else { 0.5 * x };
        let done = (next - x).abs() <= 1e-16 * x;
        x = next;
        if done {
            break;
        }
    }
    Ok(PerpetualRoot {
        alpha_inf: x / rho,
        x,
        residual: k * rho * e1(x)? - (-x).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rho_reference() {
        let p = ModelParams::from_rho(1.0, 0.1).unwrap();
        let r = perpetual_root(&p).unwrap();
        assert!((r.alpha_inf - 2.549_737e-4).abs() < 1e-10, "{}", r.alpha_inf);
        assert!(r.residual.abs() <= 1e-12);
    }

    #[test]
    fn moderate_rho() {
        let p = ModelParams::from_rho(1.0, 0.5).unwrap();
        let r = perpetual_root(&p).unwrap();
        assert!((r.alpha_inf - 0.2037).abs() < 1e-3, "{}", r.alpha_inf);
    }

    #[test]
    fn large_rho_still_brackets() {
        let p = ModelParams::from_rho(1.0, 50.0).unwrap();
        let r = perpetual_root(&p).unwrap();
        assert!(r.residual.abs() <= 1e-12 && r.alpha_inf < 1.0);
    }
}
