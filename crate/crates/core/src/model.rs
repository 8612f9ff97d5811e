//! Model parameters, the scaled time variables, and the boundary-curve type
//! shared by every solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;

/// Scalar configuration of the problem.
///
/// Time is measured in the rescaled unit `t = σ²(T_F − T_0)/2`, and the
/// only rate parameter the free-boundary problem sees is `ρ = 2r/σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub strike: f64,
    pub rate: Option<f64>,
    pub sigma: Option<f64>,
    pub rho: f64,
    pub lambda: f64,
}

impl ModelParams {
    /// Builds parameters directly from `ρ`.
    pub fn from_rho(strike: f64, rho: f64) -> Result<Self> {
        if !(strike > 0.0) || !strike.is_finite() {
            return Err(Error::invalid(format!("strike must be positive, got {strike}")));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::invalid(format!("rho must be positive, got {rho}")));
        }
        Ok(Self {
            strike,
            rate: None,
            sigma: None,
            rho,
            lambda: -rho.ln(),
        })
    }

    /// ρ ≥ 1 is accepted by the exact solvers but lies outside the regime of
    /// the small-ρ expansions.
    pub fn large_rho(&self) -> bool {
        self.rho >= 1.0
    }

    pub fn require_small_rho(&self) -> Result<()> {
        if self.large_rho() {
            Err(Error::RhoOutOfRange { rho: self.rho })
        } else {
            Ok(())
        }
    }
}

/// `ρ = 2r/σ²`, `λ = −log ρ`.
pub fn make_params(strike: f64, rate: f64, sigma: f64) -> Result<ModelParams> {
    if !(rate > 0.0) {
        return Err(Error::invalid(format!("rate must be positive, got {rate}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let mut p = ModelParams::from_rho(strike, 2.0 * rate / (sigma * sigma))?;
    p.rate = Some(rate);
    p.sigma = Some(sigma);
    if p.large_rho() {
        log::warn!("rho = {} >= 1: asymptotic evaluators will refuse these parameters", p.rho);
    }
    Ok(p)
}

/// Converts a calendar interval to the rescaled time `σ²(T_F − T_0)/2`.
pub fn scale_time(t0: f64, tf: f64, sigma: f64) -> Result<f64> {
    if !(tf >= t0) {
        return Err(Error::invalid(format!("expiry {tf} precedes valuation time {t0}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    Ok(0.5 * sigma * sigma * (tf - t0))
}

/// One instant seen through the four time scales of the asymptotic regimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePoint {
    pub t: f64,
    /// `λ t`
    pub omega: f64,
    /// `λ² t − λ K`
    pub big_lambda: f64,
    /// `ρ t`
    pub v: f64,
}

impl TimePoint {
    pub fn from_t(t: f64, p: &ModelParams) -> Self {
        Self {
            t,
            omega: p.lambda * t,
            big_lambda: p.lambda * p.lambda * t - p.lambda * p.strike,
            v: p.rho * t,
        }
    }

    pub fn from_omega(omega: f64, p: &ModelParams) -> Self {
        Self::from_t(omega / p.lambda, p)
    }

    pub fn from_big_lambda(big_lambda: f64, p: &ModelParams) -> Self {
        Self::from_t((big_lambda + p.lambda * p.strike) / (p.lambda * p.lambda), p)
    }

    pub fn from_v(v: f64, p: &ModelParams) -> Self {
        Self::from_t(v / p.rho, p)
    }
}

/// Coordinate in which a [`BoundaryCurve`] is interpolated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Abscissa {
    /// Plain time.
    Linear,
    /// `√t`; the boundary leaves the strike like a square root, which this
    /// coordinate straightens out.
    #[default]
    Sqrt,
    /// `√(t log(1 + B/t))`. Near expiry `K − α ≈ √(2t log(B/t))` with
    /// `B ≈ K/(4πρ²)`, so in this coordinate the boundary starts out linear.
    SqrtLog(f64),
}

impl Abscissa {
    /// Log-corrected square-root coordinate suited to `params`.
    pub fn near_expiry(params: &ModelParams) -> Self {
        Abscissa::SqrtLog(params.strike / (4.0 * std::f64::consts::PI * params.rho * params.rho))
    }

    #[inline]
    pub fn map(self, t: f64) -> f64 {
        match self {
            Abscissa::Linear => t,
            Abscissa::Sqrt => t.sqrt(),
            Abscissa::SqrtLog(b) => {
                if t <= 0.0 {
                    0.0
                } else {
                    (t * (b / t).ln_1p()).sqrt()
                }
            }
        }
    }

    /// `d map / dt` for `t > 0`.
    fn rate(self, t: f64) -> f64 {
        match self {
            Abscissa::Linear => 1.0,
            Abscissa::Sqrt => 0.5 / t.sqrt(),
            Abscissa::SqrtLog(b) => ((b / t).ln_1p() - b / (t + b)) / (2.0 * self.map(t)),
        }
    }
}

/// Sampled early-exercise boundary `t ↦ α(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    nodes: Vec<f64>,
    values: Vec<f64>,
    tail_value: Option<f64>,
    abscissa: Abscissa,
    interp: MonotoneCubic,
}

impl BoundaryCurve {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, tail_value: Option<f64>, abscissa: Abscissa) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("boundary curve needs at least one node"));
        }
        if nodes.len() != values.len() {
            return Err(Error::invalid("boundary nodes and values differ in length"));
        }
        if nodes[0] != 0.0 {
            return Err(Error::invalid("boundary curve must start at t = 0"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("boundary values must be finite and positive"));
        }
        if let Some(tail) = tail_value {
            if !(tail.is_finite() && tail > 0.0) {
                return Err(Error::invalid("tail value must be finite and positive"));
            }
        }
        let x: Vec<f64> = nodes.iter().map(|&t| abscissa.map(t)).collect();
        // interpolate log α: values can span many orders of magnitude
        let interp = MonotoneCubic::new(x, values.iter().map(|v| v.ln()).collect())?;
        Ok(Self {
            nodes,
            values,
            tail_value,
            abscissa,
            interp,
        })
    }

    /// A curve that is constant in time.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![value], None, Abscissa::Linear)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_value(&self) -> Option<f64> {
        self.tail_value
    }

    pub fn abscissa(&self) -> Abscissa {
        self.abscissa
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn with_tail(mut self, tail: Option<f64>) -> Self {
        self.tail_value = tail;
        self
    }

    /// Value used for every `t` past the last node.
    pub fn extension_value(&self) -> f64 {
        self.tail_value.unwrap_or(*self.values.last().unwrap())
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    /// Unchecked evaluation for `t ≥ 0`.
    #[inline]
    pub fn value_at(&self, t: f64) -> f64 {
        if t > self.horizon() {
            return self.extension_value();
        }
        self.interp.eval(self.abscissa.map(t.max(0.0))).exp()
    }

    /// Sensitivity of `log value_at(t)` to each `log` node value, appended
    /// to `out`.
    pub fn log_weights(&self, t: f64, out: &mut Vec<(usize, f64)>) {
        if t > self.horizon() {
            if self.tail_value.is_none() {
                out.push((self.nodes.len() - 1, 1.0));
            }
            return;
        }
        self.interp.weights(self.abscissa.map(t.max(0.0)), out);
    }

    /// Slope dα/dt; zero beyond the last node.
    pub fn slope_at(&self, t: f64) -> f64 {
        if t >= self.horizon() || self.nodes.len() < 2 {
            return 0.0;
        }
        let t = t.max(1e-300);
        let x = self.abscissa.map(t);
        self.interp.eval(x).exp() * self.interp.derivative(x) * self.abscissa.rate(t)
    }
}

/// Boundary value at `t`: node values exactly, shape-preserving cubic in
/// between (in log α), the tail value (or last value) beyond the last node.
pub fn curve_eval(curve: &BoundaryCurve, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("curve queried at negative time {t}")));
    }
    // stored values are returned as stored, not through exp(log α)
    if let Ok(i) = curve.nodes.binary_search_by(|n| n.total_cmp(&t)) {
        return Ok(curve.values[i]);
    }
    Ok(curve.value_at(t))
}
