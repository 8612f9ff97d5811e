//! The exercise-boundary kernel
//!
//! ```text
//! J(θ; t) = ∫_θ^∞ exp(a θ − u α(t + τ(u))) / (u + ρ) du,
//! τ(u)    = ρ⁻¹ [log(1 + ρ/θ) − log(1 + ρ/u)],
//! ```
//!
//! integrated in `x = log u` with breakpoints wherever `t + τ(u)` crosses a
//! curve node. `τ` runs over `[0, H(θ))`, `H(θ) = ρ⁻¹ log(1 + ρ/θ)`; when
//! `t + H` passes the last node the curve is constant there and the rest of
//! the integral is an exponential integral.

use crate::error::{Error, Result};
use crate::model::BoundaryCurve;
use crate::quadrature::{integrate_panels, QuadOptions, QuadResult};
use crate::specfun::log_e1;

/// Exponent beyond which the integrand is treated as zero.
const CUTOFF: f64 = 750.0;
/// Exponent cap; keeps wild trial curves finite.
const EXP_CAP: f64 = 700.0;

/// Time elapsed at integration variable `z = u/ρ` for transform variable
/// `θ`: `τ = ρ⁻¹ [log1p(ρ/θ) − log1p(1/z)]`.
pub fn tau(theta: f64, z: f64, rho: f64) -> f64 {
    ((rho / theta).ln_1p() - (1.0 / z).ln_1p()) / rho
}

/// Time horizon `H(θ) = ρ⁻¹ log1p(ρ/θ)` reached as `u → ∞`.
pub fn horizon(theta: f64, rho: f64) -> f64 {
    (rho / theta).ln_1p() / rho
}

/// Inverse of [`horizon`].
pub fn theta_for_horizon(h: f64, rho: f64) -> f64 {
    rho / (rho * h).exp_m1()
}

/// Integrand sample in the working variable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample {
    /// Integrand including the change-of-variable factor.
    pub value: f64,
    pub u: f64,
    pub alpha: f64,
    pub time: f64,
}

#[derive(Debug, Clone, Copy)]
struct Tail {
    u: f64,
    alpha: f64,
    /// Whether the constant comes from the last node (rather than a fixed tail).
    from_last_node: bool,
}

pub(crate) struct Kernel<'a> {
    curve: &'a BoundaryCurve,
    rho: f64,
    theta: f64,
    t0: f64,
    a0: f64,
    x0: f64,
    /// End of the first panel, which uses a squared substitution.
    x1: f64,
    points: Vec<f64>,
    tail: Option<Tail>,
}

/// Result of one kernel integral.
#[derive(Debug, Clone)]
pub(crate) struct KernelValue {
    pub quad: QuadResult,
    pub extended: bool,
    pub segments: Vec<(f64, f64)>,
}

impl<'a> Kernel<'a> {
    pub fn new(curve: &'a BoundaryCurve, rho: f64, theta: f64, t0: f64, a0: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid(format!("kernel needs theta > 0, got {theta}")));
        }
        let x0 = theta.ln();
        let h = horizon(theta, rho);
        let end = curve.horizon();
        let mut points = vec![x0];
        let node_x = |tk: f64| {
            let d = rho * (tk - t0);
            x0 + rho.ln() + d - (rho - theta * d.exp_m1()).ln()
        };
        for &tk in curve.nodes() {
            if tk > t0 && tk < t0 + h {
                let x = node_x(tk);
                if x > *points.last().unwrap() && x.is_finite() {
                    points.push(x);
                }
            }
        }
        let tail = if t0 + h > end {
            let ut = if end > t0 { node_x(end).exp() } else { theta };
            if ut.ln() > *points.last().unwrap() {
                points.push(ut.ln());
            }
            Some(Tail {
                u: ut,
                alpha: curve.extension_value(),
                from_last_node: curve.tail_value().is_none(),
            })
        } else {
            let last = *points.last().unwrap();
            let t_last = t0 + tau(theta, last.exp() / rho, rho);
            let alpha_min = curve.value_at(t0 + h).min(curve.value_at(t_last));
            let u_end = ((a0 * theta + CUTOFF) / alpha_min).max(4.0 * last.exp());
            points.push(u_end.ln());
            None
        };
        let x1 = if points.len() > 1 { points[1] } else { x0 };
        Ok(Self {
            curve,
            rho,
            theta,
            t0,
            a0,
            x0,
            x1,
            points,
            tail,
        })
    }

    /// Maps the working variable to `x = log u`, returning `(x, dx/dy)`.
    /// On the first panel `x = x0 + (y − x0)²/(x1 − x0)`, which removes the
    /// square-root behaviour of the curve at `τ = 0`.
    fn map(&self, y: f64) -> (f64, f64) {
        if y < self.x1 {
            let w = self.x1 - self.x0;
            let d = y - self.x0;
            (self.x0 + d * d / w, 2.0 * d / w)
        } else {
            (y, 1.0)
        }
    }

    pub fn sample(&self, y: f64) -> Sample {
        let (x, dx) = self.map(y);
        let u = x.exp();
        let rho = self.rho;
        // τ = ρ⁻¹ log1p(ρ (u − θ) / (θ (u + ρ))), cancellation-free near u = θ
        let tau = (rho * (x - self.x0).exp_m1() / (u + rho)).ln_1p() / rho;
        let time = self.t0 + tau;
        let alpha = self.curve.value_at(time);
        let e = (self.a0 * self.theta - u * alpha).min(EXP_CAP);
        Sample {
            value: e.exp() * u / (u + rho) * dx,
            u,
            alpha,
            time,
        }
    }

    fn tail_integral(&self) -> f64 {
        match self.tail {
            None => 0.0,
            Some(t) => {
                let arg = (t.u + self.rho) * t.alpha;
                match log_e1(arg) {
                    Ok(l) => (self.a0 * self.theta + self.rho * t.alpha + l).min(EXP_CAP).exp(),
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// `∂(tail)/∂ log α_last` when the tail constant is the last node value.
    pub fn tail_gradient(&self) -> Option<(usize, f64)> {
        let t = self.tail?;
        if !t.from_last_node {
            return None;
        }
        let value = self.tail_integral();
        let edge = (self.a0 * self.theta - t.u * t.alpha).min(EXP_CAP).exp();
        Some((self.curve.nodes().len() - 1, self.rho * t.alpha * value - edge))
    }

    pub fn integrate(&self, opts: QuadOptions) -> KernelValue {
        let mut segments = Vec::new();
        let mut quad = integrate_panels(&mut |y| self.sample(y).value, &self.points, opts, &mut segments);
        quad.value += self.tail_integral();
        KernelValue {
            quad,
            extended: self.tail.is_some(),
            segments,
        }
    }
}

pub(crate) fn kernel_options() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-300,
        max_intervals: 2000,
    }
}
