//! Pricing from a boundary curve.
//!
//! Above the boundary the excess value `P̃(V, t) = P − (K − S)`, `V = S − α(t)`,
//! has the Laplace transform
//!
//! ```text
//! Q(θ, t) = (Kρ/θ²) ∫_θ^∞ exp(α(t) θ − u α(t + τ(u))) / (u + ρ) du,
//! ```
//!
//! the boundary kernel with its time origin moved to `t`. The transform is
//! only available for real θ, so it is inverted with a real-axis rule.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ie_solver::kernel::{kernel_options, Kernel};
use crate::ie_solver::perpetual_root;
use crate::model::{BoundaryCurve, ModelParams};
use crate::registry::Registry;
use crate::specfun::e1_scaled;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformPoint {
    pub theta: f64,
    pub t: f64,
    pub q: f64,
    /// The kernel ran past the last curve node.
    pub extended: bool,
}

/// Largest accepted relative quadrature error estimate for one transform
/// sample. The kernel asks for 1e-12; the estimate can overshoot that by
/// orders of magnitude at large θ, where the integrand is a narrow spike.
const TRANSFORM_REL_TOL: f64 = 1e-8;

pub fn q_transform(theta: f64, t: f64, curve: &BoundaryCurve, params: &ModelParams) -> Result<TransformPoint> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("transform needs t >= 0, got {t}")));
    }
    let (k, rho) = (params.strike, params.rho);
    let kernel = Kernel::new(curve, rho, theta, t, curve.value_at(t))?;
    let opts = kernel_options();
    let v = kernel.integrate(opts);
    let tol = opts.abs_tol.max(TRANSFORM_REL_TOL * v.quad.value.abs());
    if v.quad.error > tol || !v.quad.value.is_finite() {
        return Err(Error::Quadrature {
            estimate: v.quad.error,
            tolerance: tol,
        });
    }
    let q = k * rho / (theta * theta) * v.quad.value;
    Ok(TransformPoint {
        theta,
        t,
        q,
        extended: v.extended,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inversion {
    pub value: f64,
    /// Spread between neighbouring orders of the rule.
    pub error: f64,
}

/// Inverse Laplace transform from samples on the positive real axis.
pub trait LaplaceInverter: Send + Sync {
    fn name(&self) -> &'static str;

    /// `f(v)` given `F(s) = ∫₀^∞ e^{−s v} f(v) dv` through `transform`.
    fn invert(&self, transform: &mut dyn FnMut(f64) -> Result<f64>, v: f64) -> Result<Inversion>;
}

/// Gaver–Stehfest with the order chosen per point: orders `n_min..=n_max`
/// (even) are formed from one set of transform samples and the one that
/// changes least from the order below is kept, with that change as the
/// error gauge. Higher orders converge faster until rounding in the
/// transform, amplified by weights of size ~10^(n/2), takes over.
#[derive(Debug, Clone, Copy)]
pub struct GaverStehfest {
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for GaverStehfest {
    fn default() -> Self {
        Self { n_min: 12, n_max: 16 }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Stehfest weights `V_k`, `k = 1..=n`.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    let h = n / 2;
    (1..=n)
        .map(|k| {
            let mut s = 0.0;
            for j in (k + 1) / 2..=k.min(h) {
                s += (j as f64).powi(h as i32) * factorial(2 * j)
                    / (factorial(h - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k));
            }
            if (k + h) % 2 == 1 {
                -s
            } else {
                s
            }
        })
        .collect()
}

/// Compensated (Neumaier) sum.
fn neumaier(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

impl LaplaceInverter for GaverStehfest {
    fn name(&self) -> &'static str {
        "stehfest"
    }

    fn invert(&self, transform: &mut dyn FnMut(f64) -> Result<f64>, v: f64) -> Result<Inversion> {
        let (lo, hi) = (self.n_min, self.n_max);
        if lo < 4 || lo % 2 == 1 || hi % 2 == 1 || hi < lo || hi > 18 {
            return Err(Error::invalid(format!("Stehfest orders must be even within [4, 18], got {lo}..{hi}")));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("inversion point must be positive, got {v}")));
        }
        let step = std::f64::consts::LN_2 / v;
        let samples = (1..=hi)
            .map(|k| transform(k as f64 * step))
            .collect::<Result<Vec<_>>>()?;
        let order = |n: usize| {
            let w = stehfest_weights(n);
            step * neumaier(w.iter().zip(&samples).map(|(a, b)| a * b))
        };
        let mut prev = order(lo - 2);
        let mut best = Inversion {
            value: f64::NAN,
            error: f64::INFINITY,
        };
        for n in (lo..=hi).step_by(2) {
            let cur = order(n);
            let spread = (cur - prev).abs();
            if spread < best.error || best.value.is_nan() {
                best = Inversion {
                    value: cur,
                    error: spread,
                };
            }
            prev = cur;
        }
        Ok(best)
    }
}

/// Registered inverters: "stehfest" (orders 12..16) and "stehfest-14"
/// (order 14 only, gauged against order 12).
pub fn inverters() -> Registry<dyn LaplaceInverter> {
    let mut r: Registry<dyn LaplaceInverter> = Registry::new("Laplace inverter");
    r.register("stehfest", Box::new(GaverStehfest::default()));
    r.register("stehfest-14", Box::new(FixedStehfest(14)));
    r
}

/// Single-order Gaver–Stehfest.
#[derive(Debug, Clone, Copy)]
pub struct FixedStehfest(pub usize);

impl LaplaceInverter for FixedStehfest {
    fn name(&self) -> &'static str {
        "stehfest-fixed"
    }

    fn invert(&self, transform: &mut dyn FnMut(f64) -> Result<f64>, v: f64) -> Result<Inversion> {
        GaverStehfest {
            n_min: self.0,
            n_max: self.0,
        }
        .invert(transform, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Exercise,
    Hold,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Region::Exercise => "exercise",
            Region::Hold => "hold",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceEstimate {
    pub value: f64,
    pub error: f64,
    pub region: Region,
    /// Some transform sample needed the curve beyond its last node.
    pub extended: bool,
}

/// Relative inversion spread above which a price is reported as failed.
pub const INVERSION_TOL: f64 = 1e-2;

/// The curve a price is computed on: the perpetual level is attached as
/// tail when the curve carries none.
pub fn pricing_curve(curve: &BoundaryCurve, params: &ModelParams) -> Result<BoundaryCurve> {
    if curve.tail_value().is_some() {
        return Ok(curve.clone());
    }
    let tail = perpetual_root(params)?.alpha_inf.min(curve.extension_value());
    Ok(curve.clone().with_tail(Some(tail)))
}

/// Price at `(S, t)` with the default inverter. The curve is used as given;
/// see [`pricing_curve`].
pub fn price(s: f64, t: f64, curve: &BoundaryCurve, params: &ModelParams) -> Result<PriceEstimate> {
    price_with(s, t, curve, params, &GaverStehfest::default())
}

pub fn price_with(
    s: f64,
    t: f64,
    curve: &BoundaryCurve,
    params: &ModelParams,
    inverter: &dyn LaplaceInverter,
) -> Result<PriceEstimate> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::invalid(format!("S must be finite and non-negative, got {s}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t must be finite and non-negative, got {t}")));
    }
    let k = params.strike;
    let alpha = if t == 0.0 { k } else { curve.value_at(t) };
    if s <= alpha {
        return Ok(PriceEstimate {
            value: k - s,
            error: 0.0,
            region: Region::Exercise,
            extended: false,
        });
    }
    if t == 0.0 {
        return Ok(PriceEstimate {
            value: 0.0,
            error: 0.0,
            region: Region::Hold,
            extended: false,
        });
    }
    let mut extended = false;
    let mut transform = |theta: f64| {
        let p = q_transform(theta, t, curve, params)?;
        extended |= p.extended;
        Ok(p.q)
    };
    let inv = inverter.invert(&mut transform, s - alpha)?;
    let value = k - s + inv.value;
    if !(inv.error <= INVERSION_TOL * k) {
        return Err(Error::NoConvergence {
            solver: "laplace inversion",
            detail: format!("S = {s}, t = {t}: estimate {value:.6e}, spread {:.3e}", inv.error),
        });
    }
    Ok(PriceEstimate {
        value,
        error: inv.error,
        region: Region::Hold,
        extended,
    })
}

/// Perpetual put `K e^{ρα} [e^{−ρS} − ρS E₁(ρS)]` above `α = α(∞)`, `K − S`
/// below.
pub fn perpetual_price(s: f64, params: &ModelParams) -> Result<f64> {
    let alpha = perpetual_root(params)?.alpha_inf;
    perpetual_price_at(s, alpha, params)
}

fn perpetual_price_at(s: f64, alpha: f64, params: &ModelParams) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::invalid(format!("S must be non-negative, got {s}")));
    }
    let k = params.strike;
    if s <= alpha {
        return Ok(k - s);
    }
    if s.is_infinite() {
        return Ok(0.0);
    }
    let x = params.rho * s;
    Ok(k * (params.rho * alpha - x).exp() * (1.0 - x * e1_scaled(x)?))
}

/// `dP∞/dS = −Kρ e^{ρα} E₁(ρS)` above α(∞), −1 below.
pub fn perpetual_slope(s: f64, params: &ModelParams) -> Result<f64> {
    let alpha = perpetual_root(params)?.alpha_inf;
    if s < alpha {
        return Ok(-1.0);
    }
    let x = params.rho * s;
    Ok(-params.strike * params.rho * (params.rho * alpha - x).exp() * e1_scaled(x)?)
}
