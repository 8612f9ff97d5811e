//! The inner function 𝓕(Λ) of the `t ≈ K/λ` scale, defined by
//!
//! ```text
//! ∫_0^∞ η⁻¹ exp(−𝓕(Λ − η)/η) dη = e^{Λ/K}/K.
//! ```
//!
//! Unknowns are `log 𝓕` at the nodes. Row `Λ` mostly sees 𝓕 near `2Λ`
//! when `Λ < 0`, so the grid is carried below the requested range.
//! Between nodes the curve interpolates `q = log 𝓕 + e^{Λ/K}/K`, which
//! strips the double-exponential decay and leaves a slowly varying function.

use nalgebra::DMatrix;
use serde::Serialize;

use super::lm::{levenberg_marquardt, LeastSquares, LmOptions};
use super::{SolveReport, SolveStatus};
use crate::asymptotics::{f_tail_neg, ln_f_tail_pos};
use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::quadrature::{for_each_node, integrate_panels, QuadOptions};
use crate::specfun::{e1, EULER_GAMMA};

const CUTOFF: f64 = 750.0;
/// Smallest grid solved from scratch.
const COARSE_MIN: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FLambdaCurve {
    nodes: Vec<f64>,
    values: Vec<f64>,
    valid_range: (f64, f64),
    strike: f64,
    #[serde(skip)]
    q_interp: MonotoneCubic,
}

impl FLambdaCurve {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, strike: f64) -> Result<Self> {
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("F values must be positive and finite"));
        }
        let ln: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        Self::from_ln(nodes, ln, strike)
    }

    fn from_ln(nodes: Vec<f64>, ln_values: Vec<f64>, strike: f64) -> Result<Self> {
        if !(strike > 0.0) {
            return Err(Error::invalid("strike must be positive"));
        }
        if nodes.len() < 2 {
            return Err(Error::invalid("F curve needs at least two nodes"));
        }
        let values = ln_values.iter().map(|v| v.exp()).collect();
        let valid_range = (nodes[0], *nodes.last().unwrap());
        let q = nodes.iter().zip(&ln_values).map(|(&l, &y)| y + strip(l, strike)).collect();
        let q_interp = MonotoneCubic::unfiltered(nodes.clone(), q)?;
        Ok(Self {
            nodes,
            values,
            valid_range,
            strike,
            q_interp,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid_range(&self) -> (f64, f64) {
        self.valid_range
    }

    pub fn strike(&self) -> f64 {
        self.strike
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0])
    }

    /// `log 𝓕(Λ)`; the asymptotic tails outside the grid.
    pub fn ln_eval(&self, big_lambda: f64) -> Result<f64> {
        let (lo, hi) = self.valid_range;
        if (lo..=hi).contains(&big_lambda) {
            return Ok(self.q_interp.eval(big_lambda) - strip(big_lambda, self.strike));
        }
        if big_lambda < 0.0 {
            Ok(f_tail_neg(big_lambda, self.strike)?.ln())
        } else if big_lambda > 0.0 {
            ln_f_tail_pos(big_lambda, self.strike)
        } else {
            Ok(self.q_interp.eval(big_lambda) - strip(big_lambda, self.strike))
        }
    }

    pub fn eval(&self, big_lambda: f64) -> Result<f64> {
        Ok(self.ln_eval(big_lambda)?.exp())
    }

    fn ln_slope(&self, big_lambda: f64) -> f64 {
        self.q_interp.derivative(big_lambda) - strip(big_lambda, self.strike) / self.strike
    }

    fn in_grid(&self, big_lambda: f64) -> bool {
        big_lambda >= self.valid_range.0 && big_lambda <= self.valid_range.1
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FSolverConfig {
    /// Tolerance on the relative residual.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_step: f64,
}

impl Default for FSolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iterations: 60,
            max_step: 0.5,
        }
    }
}

/// `e^{Λ/K}/K`, the leading decay of `−log 𝓕` as `Λ → ∞`.
fn strip(big_lambda: f64, strike: f64) -> f64 {
    (big_lambda / strike).exp() / strike
}

/// `E₁(eˡ)` without forming `eˡ` when it would underflow.
fn e1_of_ln(l: f64) -> Result<f64> {
    if l < -40.0 {
        Ok(-EULER_GAMMA - l)
    } else {
        e1(l.exp())
    }
}

/// One row: `∫_0^∞ η⁻¹ exp(−𝓕(Λ−η)/η) dη`, split at `η = a` with the
/// `η → 0` behaviour `c E₁(𝓕(Λ)/a)` taken out analytically.
struct Row<'a> {
    f: &'a FLambdaCurve,
    big_lambda: f64,
    a: f64,
    ln_f0: f64,
    f0: f64,
    /// `c = exp(𝓕'(Λ))`; any constant is exact, this one makes the
    /// remainder bounded.
    c: f64,
    near: Vec<f64>,
    far: Vec<f64>,
}

impl<'a> Row<'a> {
    fn new(f: &'a FLambdaCurve, big_lambda: f64) -> Result<Self> {
        let a = f.strike;
        let ln_f0 = f.ln_eval(big_lambda)?;
        let f0 = ln_f0.exp();
        let c = (f0 * f.ln_slope(big_lambda)).exp();
        let mut near = vec![0.0];
        let mut far = vec![a.ln()];
        for &nk in f.nodes.iter().rev() {
            let eta = big_lambda - nk;
            if eta > 0.0 && eta < a {
                near.push(eta);
            } else if eta > a {
                far.push(eta.ln());
            }
        }
        near.push(a);
        // extend until the integrand is negligible
        let mut eta = (2.0 * a).max(f64::exp(*far.last().unwrap()) * 1.5);
        loop {
            let g = f.ln_eval(big_lambda - eta)?.exp() / eta;
            if g > CUTOFF || eta > 1e12 {
                break;
            }
            eta *= 2.0;
        }
        far.push(eta.ln());
        Ok(Self {
            f,
            big_lambda,
            a,
            ln_f0,
            f0,
            c,
            near,
            far,
        })
    }

    /// `(value, ln 𝓕(Λ−η))` of `exp(−𝓕(Λ−η)/η)`.
    fn core(&self, eta: f64) -> (f64, f64) {
        let ln_f = self.f.ln_eval(self.big_lambda - eta).unwrap_or(f64::INFINITY);
        ((-ln_f.exp() / eta).exp(), ln_f)
    }

    /// Remainder integrand on `(0, a]`.
    fn near_value(&self, eta: f64) -> f64 {
        if eta <= 0.0 {
            return 0.0;
        }
        let (v, _) = self.core(eta);
        (v - self.c * (-self.f0 / eta).exp()) / eta
    }

    fn far_value(&self, x: f64) -> f64 {
        self.core(x.exp()).0
    }

    fn integrate(&self, opts: QuadOptions, near_segs: &mut Vec<(f64, f64)>, far_segs: &mut Vec<(f64, f64)>) -> Result<(f64, f64, usize)> {
        let head = self.c * e1_of_ln(self.ln_f0 - self.a.ln())?;
        let n = integrate_panels(&mut |e| self.near_value(e), &self.near, opts, near_segs);
        let fr = integrate_panels(&mut |x| self.far_value(x), &self.far, opts, far_segs);
        Ok((head + n.value + fr.value, n.error + fr.error, n.evaluations + fr.evaluations))
    }
}

fn row_options(scale: f64) -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-11,
        abs_tol: 1e-11 * scale,
        max_intervals: 2000,
    }
}

struct FProblem {
    strike: f64,
    nodes: Vec<f64>,
    rows: Vec<f64>,
    evaluations: usize,
}

impl FProblem {
    fn curve(&self, y: &[f64]) -> Result<FLambdaCurve> {
        FLambdaCurve::from_ln(self.nodes.clone(), y.to_vec(), self.strike)
    }

    fn target(&self, big_lambda: f64) -> f64 {
        (big_lambda / self.strike).exp() / self.strike
    }
}

impl LeastSquares for FProblem {
    fn residuals(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        let curve = self.curve(y)?;
        let mut out = Vec::with_capacity(self.rows.len());
        for &l in &self.rows {
            let row = Row::new(&curve, l)?;
            let target = self.target(l);
            let (g, err, evals) = row.integrate(row_options(target), &mut Vec::new(), &mut Vec::new())?;
            self.evaluations += evals;
            if !(err <= 1e-9 * target) {
                return Err(Error::Quadrature {
                    estimate: err,
                    tolerance: 1e-9 * target,
                });
            }
            out.push(g / target - 1.0);
        }
        Ok(out)
    }

    fn jacobian(&mut self, y: &[f64]) -> Result<DMatrix<f64>> {
        let curve = self.curve(y)?;
        let mut jac = DMatrix::zeros(self.rows.len(), y.len());
        let mut w = Vec::new();
        for (i, &l) in self.rows.iter().enumerate() {
            let row = Row::new(&curve, l)?;
            let target = self.target(l);
            let (mut near, mut far) = (Vec::new(), Vec::new());
            let (_, _, evals) = row.integrate(row_options(target), &mut near, &mut far)?;
            self.evaluations += evals;
            let scale = 1.0 / target;
            let mut add = |jac: &mut DMatrix<f64>, at: f64, coef: f64| {
                if !curve.in_grid(at) || coef == 0.0 {
                    return;
                }
                w.clear();
                curve.q_interp.weights(at, &mut w);
                for &(k, c) in &w {
                    jac[(i, k)] += coef * c * scale;
                }
            };
            // head: c E₁(𝓕₀/a), with c frozen
            add(&mut jac, l, -row.c * (-row.f0 / row.a).exp());
            for &(a, b) in &near {
                for_each_node(a, b, |eta, qw| {
                    if eta <= 0.0 {
                        return;
                    }
                    let (v, ln_f) = row.core(eta);
                    add(&mut jac, l - eta, -qw * v * ln_f.exp() / (eta * eta));
                    let r0 = row.f0 / eta;
                    add(&mut jac, l, qw * row.c * (-r0).exp() * r0 / eta);
                });
            }
            for &(a, b) in &far {
                for_each_node(a, b, |x, qw| {
                    let eta = x.exp();
                    let (v, ln_f) = row.core(eta);
                    add(&mut jac, l - eta, -qw * v * ln_f.exp() / eta);
                });
            }
        }
        Ok(jac)
    }
}

/// Uniform points from `a` (inclusive) towards `b` (exclusive), spacing ≤ `h`.
fn fill(a: f64, b: f64, h: f64, out: &mut Vec<f64>) {
    if b <= a {
        return;
    }
    let m = ((b - a) / h).ceil() as usize;
    out.extend((0..m).map(|i| a + (b - a) * i as f64 / m as f64));
}

/// Solver nodes and collocation rows for a requested range of `n` points.
/// The grid is four times finer on `Λ > −2K`, where `log 𝓕` bends hardest,
/// and half as fine on the extension below the range, which only the
/// lowest rows see.
fn grid(strike: f64, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / (n - 1) as f64;
    let ext_lo = (2.0 * lo).min(lo - 8.0 * strike);
    let bend = (-2.0 * strike).clamp(lo, hi);
    let mut nodes = Vec::new();
    fill(ext_lo, lo, 2.0 * h, &mut nodes);
    fill(lo, bend, h, &mut nodes);
    fill(bend, hi, 0.25 * h, &mut nodes);
    nodes.push(hi);
    let inside: Vec<f64> = nodes.iter().copied().filter(|&l| l >= lo).collect();
    let mut rows = Vec::with_capacity(2 * inside.len());
    for w in inside.windows(2) {
        rows.push(w[0]);
        rows.push(0.5 * (w[0] + w[1]));
    }
    rows.push(hi);
    (nodes, rows)
}

fn initial_ln_f(big_lambda: f64, strike: f64) -> Result<f64> {
    let (l_neg, l_pos) = (-2.0 * strike, strike);
    if big_lambda <= l_neg {
        Ok(f_tail_neg(big_lambda, strike)?.ln())
    } else if big_lambda >= l_pos {
        ln_f_tail_pos(big_lambda, strike)
    } else {
        let a = f_tail_neg(l_neg, strike)?.ln();
        let b = ln_f_tail_pos(l_pos, strike)?;
        Ok(a + (b - a) * (big_lambda - l_neg) / (l_pos - l_neg))
    }
}

pub fn solve_f(strike: f64, range: (f64, f64), n: usize) -> Result<(FLambdaCurve, SolveReport)> {
    solve_f_with(strike, range, n, &FSolverConfig::default())
}

pub fn solve_f_with(strike: f64, range: (f64, f64), n: usize, config: &FSolverConfig) -> Result<(FLambdaCurve, SolveReport)> {
    let (lo, hi) = range;
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(Error::invalid("strike must be positive"));
    }
    if !(lo < hi && lo >= -60.0 * strike && hi <= 6.0 * strike) {
        return Err(Error::invalid(format!("Lambda range must lie in [-60K, 6K] with lo < hi, got [{lo}, {hi}]")));
    }
    if n < 16 {
        return Err(Error::invalid(format!("need at least 16 nodes, got {n}")));
    }
    let (nodes, rows) = grid(strike, lo, hi, n);
    // fine grids start from the solution on a grid half as dense
    let start = if n >= 2 * COARSE_MIN {
        let (coarse, _) = solve_f_with(strike, range, (n + 1) / 2, config)?;
        nodes.iter().map(|&l| coarse.ln_eval(l)).collect::<Result<Vec<_>>>()?
    } else {
        nodes.iter().map(|&l| initial_ln_f(l, strike)).collect::<Result<Vec<_>>>()?
    };
    let mut problem = FProblem {
        strike,
        nodes,
        rows,
        evaluations: 0,
    };
    let opts = LmOptions {
        tol: config.tol,
        max_iterations: config.max_iterations,
        max_step: config.max_step,
    };
    let out = levenberg_marquardt(&mut problem, start, opts)?;
    let curve = problem.curve(&out.params)?;
    let residual_norm = out.residuals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let status = if !out.converged {
        SolveStatus::Failed
    } else if !curve.is_strictly_decreasing() {
        SolveStatus::Suspect
    } else {
        SolveStatus::Converged
    };
    let report = SolveReport {
        iterations: out.iterations,
        residual_norm,
        tolerance: config.tol,
        quadrature_evaluations: problem.evaluations,
        collocation_points: problem.rows.len(),
        nodes: problem.nodes.len(),
        horizon_extended: true,
        status,
    };
    Ok((curve, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobian_matches_finite_differences() {
        let strike = 1.0;
        let nodes: Vec<f64> = (0..12).map(|i| -10.0 + i as f64).collect();
        let mut prob = FProblem {
            strike,
            rows: vec![-4.5, -1.0, 0.3, 1.0],
            nodes: nodes.clone(),
            evaluations: 0,
        };
        let y: Vec<f64> = nodes.iter().map(|&l| initial_ln_f(l, strike).unwrap()).collect();
        let jac = prob.jacobian(&y).unwrap();
        let r0 = prob.residuals(&y).unwrap();
        for k in 0..y.len() {
            let mut yp = y.clone();
            yp[k] += 1e-6;
            let r1 = prob.residuals(&yp).unwrap();
            for i in 0..r0.len() {
                let fd = (r1[i] - r0[i]) / 1e-6;
                assert!((fd - jac[(i, k)]).abs() < 1e-4 * (1.0 + fd.abs()), "({i},{k}) fd {fd} an {}", jac[(i, k)]);
            }
        }
    }

    #[test]
    fn tails_used_outside_grid() {
        let c = FLambdaCurve::new(vec![-1.0, 0.0, 1.0], vec![1.0, 0.5, 0.1], 1.0).unwrap();
        assert!((c.eval(-30.0).unwrap() - f_tail_neg(-30.0, 1.0).unwrap()).abs() < 1e-9);
        assert!((c.ln_eval(3.0).unwrap() - ln_f_tail_pos(3.0, 1.0).unwrap()).abs() < 1e-12);
    }
}
