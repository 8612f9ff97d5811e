//! Collocation solve of the boundary integral equation.

use nalgebra::DMatrix;

use super::kernel::{horizon, kernel_options, theta_for_horizon, Kernel};
use super::lm::{levenberg_marquardt, LeastSquares, LmOptions};
use super::perpetual::perpetual_root;
use super::{SolveReport, SolveStatus};
use crate::asymptotics::alpha_composite;
use crate::error::{Error, Result};
use crate::model::{Abscissa, BoundaryCurve, ModelParams};

/// Smallest grid solved from scratch.
const COARSE_MIN: usize = 32;

/// Below this ρ the composite asymptotics seed the solve.
const COMPOSITE_START_RHO: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
pub struct BoundarySolverConfig {
    /// Residual tolerance relative to `e^{−Kθ}`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Collocation rows per unknown node.
    pub oversample: f64,
    /// Cap on a step, in log α.
    pub max_step: f64,
    /// Nodes sit at `t_max (j/(n−1))^p`.
    pub cluster_power: f64,
    /// Index of the earliest node the collocation rows are aimed at.
    pub probe_node: usize,
}

impl Default for BoundarySolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 60,
            oversample: 2.0,
            max_step: 0.5,
            cluster_power: 2.0,
            probe_node: 2,
        }
    }
}

/// `R(θ) = Kρ ∫_{θ/ρ}^∞ e^{−ρzα(τ)}/(z+1) dz − e^{−Kθ}`.
pub fn ie_residual(theta: f64, curve: &BoundaryCurve, params: &ModelParams) -> Result<f64> {
    Ok(ie_relative_residual(theta, curve, params)? * (-params.strike * theta).exp())
}

/// `R(θ) e^{Kθ}`, the residual on the scale the solver works to.
pub fn ie_relative_residual(theta: f64, curve: &BoundaryCurve, params: &ModelParams) -> Result<f64> {
    Ok(residual_eval(theta, curve, params)?.0)
}

/// Relative residual plus whether the horizon extension was used.
pub(crate) fn residual_eval(theta: f64, curve: &BoundaryCurve, params: &ModelParams) -> Result<(f64, bool, usize)> {
    let (k, rho) = (params.strike, params.rho);
    let kernel = Kernel::new(curve, rho, theta, 0.0, k)?;
    let v = kernel.integrate(kernel_options());
    let tol = 1e-10 * v.quad.value.abs().max(1.0 / (k * rho));
    if v.quad.error > tol || !v.quad.value.is_finite() {
        return Err(Error::Quadrature {
            estimate: v.quad.error,
            tolerance: tol,
        });
    }
    Ok((k * rho * v.quad.value - 1.0, v.extended, v.quad.evaluations))
}

/// Nodes `t_j = t_max (j/(n−1))^power`.
pub fn clustered_nodes(t_max: f64, n: usize, power: f64) -> Vec<f64> {
    (0..n)
        .map(|j| t_max * (j as f64 / (n - 1) as f64).powf(power))
        .collect()
}

/// Collocation θ values, log-spaced between `θ(t_max)` and the θ whose
/// horizon resolves the first few nodes.
pub fn collocation_thetas(params: &ModelParams, nodes: &[f64], rows: usize, probe_node: usize) -> Vec<f64> {
    let rho = params.rho;
    let t_max = *nodes.last().unwrap();
    // a row of horizon p is most sensitive near t ≈ 3p²/K
    let probe = nodes[probe_node.clamp(1, nodes.len() - 1)];
    let p_lo = (params.strike * probe / 3.0).sqrt().clamp(nodes[1], 0.25 * t_max);
    let lo = theta_for_horizon(t_max, rho).ln();
    let hi = theta_for_horizon(p_lo, rho).ln();
    (0..rows)
        .map(|i| (lo + (hi - lo) * i as f64 / (rows - 1) as f64).exp())
        .collect()
}

struct Collocation<'a> {
    params: &'a ModelParams,
    nodes: Vec<f64>,
    thetas: Vec<f64>,
    evaluations: usize,
}

impl Collocation<'_> {
    fn curve(&self, z: &[f64]) -> Result<BoundaryCurve> {
        let mut values = Vec::with_capacity(self.nodes.len());
        values.push(self.params.strike);
        values.extend(z.iter().map(|v| v.exp()));
        BoundaryCurve::new(self.nodes.clone(), values, None, Abscissa::near_expiry(self.params))
    }
}

impl LeastSquares for Collocation<'_> {
    fn residuals(&mut self, z: &[f64]) -> Result<Vec<f64>> {
        let curve = self.curve(z)?;
        let mut out = Vec::with_capacity(self.thetas.len());
        for &th in &self.thetas {
            let (r, _, evals) = residual_eval(th, &curve, self.params)?;
            self.evaluations += evals;
            out.push(r);
        }
        Ok(out)
    }

    fn jacobian(&mut self, z: &[f64]) -> Result<DMatrix<f64>> {
        let curve = self.curve(z)?;
        let (k, rho) = (self.params.strike, self.params.rho);
        let mut jac = DMatrix::zeros(self.thetas.len(), z.len());
        let mut w = Vec::new();
        for (i, &th) in self.thetas.iter().enumerate() {
            let kernel = Kernel::new(&curve, rho, th, 0.0, k)?;
            let v = kernel.integrate(kernel_options());
            self.evaluations += v.quad.evaluations;
            for &(a, b) in &v.segments {
                crate::quadrature::for_each_node(a, b, |y, qw| {
                    let s = kernel.sample(y);
                    w.clear();
                    curve.log_weights(s.time, &mut w);
                    let base = -k * rho * qw * s.value * s.u * s.alpha;
                    for &(j, c) in &w {
                        if j > 0 {
                            jac[(i, j - 1)] += base * c;
                        }
                    }
                });
            }
            if let Some((j, d)) = kernel.tail_gradient() {
                if j > 0 {
                    jac[(i, j - 1)] += k * rho * d;
                }
            }
        }
        Ok(jac)
    }
}

/// Starting curve: the composite asymptotics once ρ is small enough for
/// them to mean something, `K e^{−t/K}` otherwise; kept between the
/// perpetual level and K and made monotone.
fn initial_values(params: &ModelParams, nodes: &[f64]) -> Result<Vec<f64>> {
    let k = params.strike;
    let floor = perpetual_root(params)?.alpha_inf;
    let mut out = Vec::with_capacity(nodes.len());
    let mut prev = k;
    for &t in nodes {
        let guess = if t == 0.0 {
            k
        } else if params.rho < COMPOSITE_START_RHO {
            alpha_composite(t, params, None)
                .ok()
                .and_then(|c| c.alpha.plain())
                .unwrap_or(floor)
        } else {
            k * (-t / k).exp()
        };
        let v = guess.clamp(floor, k).min(prev);
        out.push(v);
        prev = v;
    }
    Ok(out)
}

pub fn solve_boundary(params: &ModelParams, t_max: f64, n: usize) -> Result<(BoundaryCurve, SolveReport)> {
    solve_boundary_with(params, t_max, n, &BoundarySolverConfig::default())
}

pub fn solve_boundary_with(
    params: &ModelParams,
    t_max: f64,
    n: usize,
    config: &BoundarySolverConfig,
) -> Result<(BoundaryCurve, SolveReport)> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::invalid(format!("t_max must be positive, got {t_max}")));
    }
    if n < 8 {
        return Err(Error::invalid(format!("need at least 8 nodes, got {n}")));
    }
    if !(params.rho > 0.0) {
        return Err(Error::RhoOutOfRange { rho: params.rho });
    }
    let nodes = clustered_nodes(t_max, n, config.cluster_power);
    let rows = ((n - 1) as f64 * config.oversample).ceil() as usize;
    let thetas = collocation_thetas(params, &nodes, rows.max(n - 1), config.probe_node);
    // fine grids start from the solution on a grid half as dense
    let init = if n >= 2 * COARSE_MIN {
        let (coarse, _) = solve_boundary_with(params, t_max, (n + 1) / 2, config)?;
        nodes.iter().map(|&t| coarse.value_at(t).min(params.strike)).collect()
    } else {
        initial_values(params, &nodes)?
    };
    let start: Vec<f64> = init[1..].iter().map(|v| v.ln()).collect();
    let mut problem = Collocation {
        params,
        nodes,
        thetas,
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
    } else if !curve.is_non_increasing() {
        SolveStatus::Suspect
    } else {
        SolveStatus::Converged
    };
    let extended = problem
        .thetas
        .iter()
        .any(|&th| horizon(th, params.rho) > t_max * (1.0 + 1e-12));
    let report = SolveReport {
        iterations: out.iterations,
        residual_norm,
        tolerance: config.tol,
        quadrature_evaluations: problem.evaluations,
        collocation_points: problem.thetas.len(),
        nodes: n,
        horizon_extended: extended,
        status,
    };
    Ok((curve, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perpetual_constant_satisfies_limit() {
        let p = ModelParams::from_rho(1.0, 0.5).unwrap();
        let a = perpetual_root(&p).unwrap().alpha_inf;
        let c = BoundaryCurve::constant(a).unwrap();
        let r = ie_relative_residual(1e-6, &c, &p).unwrap();
        assert!(r.abs() < 1e-4, "{r}");
    }

    #[test]
    fn strike_curve_gives_negative_residual() {
        let p = ModelParams::from_rho(1.0, 0.5).unwrap();
        let c = BoundaryCurve::constant(1.0).unwrap();
        assert!(ie_residual(1.0, &c, &p).unwrap() < 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = ModelParams::from_rho(1.0, 0.5).unwrap();
        let nodes = clustered_nodes(1.0, 10, 2.0);
        let thetas = collocation_thetas(&p, &nodes, 18, 2);
        let mut prob = Collocation {
            params: &p,
            nodes: nodes.clone(),
            thetas,
            evaluations: 0,
        };
        let z: Vec<f64> = nodes[1..].iter().map(|t| (0.2 + 0.8 * (-2.0 * t.sqrt()).exp()).ln()).collect();
        let jac = prob.jacobian(&z).unwrap();
        let r0 = prob.residuals(&z).unwrap();
        for j in 0..z.len() {
            let mut zp = z.clone();
            zp[j] += 1e-6;
            let r1 = prob.residuals(&zp).unwrap();
            for i in 0..r0.len() {
                let fd = (r1[i] - r0[i]) / 1e-6;
                assert!((fd - jac[(i, j)]).abs() < 1e-4 * (1.0 + fd.abs()), "({i},{j}) fd {fd} an {}", jac[(i, j)]);
            }
        }
    }
}
