//! Integral-equation solvers: the boundary α(t), the inner function 𝓕(Λ)
//! and the perpetual level α(∞).

mod boundary;
mod flambda;
pub(crate) mod kernel;
mod lm;
mod perpetual;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use boundary::{
    clustered_nodes, collocation_thetas, ie_relative_residual, ie_residual, solve_boundary, solve_boundary_with,
    BoundarySolverConfig,
};
pub use flambda::{solve_f, solve_f_with, FLambdaCurve, FSolverConfig};
pub use kernel::{horizon, theta_for_horizon};
pub use perpetual::{perpetual_root, PerpetualRoot};

use crate::error::{Error, Result};

/// `τ(θ, z)`, the time reached at integration variable `z ≥ θ/ρ`.
pub fn tau(theta: f64, z: f64, rho: f64) -> Result<f64> {
    if !(theta > 0.0 && rho > 0.0) {
        return Err(Error::invalid("tau needs theta > 0 and rho > 0"));
    }
    if !(z >= theta / rho) {
        return Err(Error::invalid(format!("tau needs z >= theta/rho, got z = {z}")));
    }
    Ok(kernel::tau(theta, z, rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Converged,
    Failed,
    /// Converged, but the result breaks monotonicity.
    Suspect,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::Failed => "failed",
            SolveStatus::Suspect => "suspect",
        })
    }
}

/// Diagnostics of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Max residual over the collocation points.
    pub residual_norm: f64,
    pub tolerance: f64,
    pub quadrature_evaluations: usize,
    pub collocation_points: usize,
    pub nodes: usize,
    pub horizon_extended: bool,
    pub status: SolveStatus,
}
