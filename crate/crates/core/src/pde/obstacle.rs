//! Discrete linear complementarity `x ≥ g, A x ≥ b, (x − g)ᵀ(A x − b) = 0`
//! for tridiagonal `A`.

use crate::error::{Error, Result};

/// Row `i` reads `lower[i] x[i−1] + diag[i] x[i] + upper[i] x[i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            out[i] = v;
        }
    }
}

pub trait ObstacleSolver: Send + Sync {
    fn name(&self) -> &'static str;

    /// Solves in place (`x` holds the starting guess); returns the number of
    /// sweeps used.
    fn solve(&self, a: &Tridiag, rhs: &[f64], obstacle: &[f64], x: &mut [f64]) -> Result<usize>;
}

/// Direct solve for problems whose contact set is an interval `[0, k]`
/// (the put): eliminate from the top, then substitute upward projecting
/// onto the obstacle.
#[derive(Debug, Clone, Copy, Default)]
pub struct BrennanSchwartz;

impl ObstacleSolver for BrennanSchwartz {
    fn name(&self) -> &'static str {
        "brennan-schwartz"
    }

    fn solve(&self, a: &Tridiag, rhs: &[f64], obstacle: &[f64], x: &mut [f64]) -> Result<usize> {
        let n = a.len();
        let mut d = a.diag.clone();
        let mut r = rhs.to_vec();
        for i in (0..n - 1).rev() {
            let f = a.upper[i] / d[i + 1];
            d[i] -= f * a.lower[i + 1];
            r[i] -= f * r[i + 1];
        }
        for i in 0..n {
            let mut v = r[i];
            if i > 0 {
                v -= a.lower[i] * x[i - 1];
            }
            x[i] = (v / d[i]).max(obstacle[i]);
        }
        Ok(1)
    }
}

/// Projected successive over-relaxation.
#[derive(Debug, Clone, Copy)]
pub struct Psor {
    pub omega: f64,
    pub tol: f64,
    pub max_sweeps: usize,
    /// Start from the Brennan–Schwartz solution instead of the given guess.
    pub warm_start: bool,
}

impl Default for Psor {
    fn default() -> Self {
        Self {
            omega: 1.3,
            tol: 1e-10,
            max_sweeps: 100_000,
            warm_start: true,
        }
    }
}

impl ObstacleSolver for Psor {
    fn name(&self) -> &'static str {
        if self.warm_start {
            "psor"
        } else {
            "psor-cold"
        }
    }

    fn solve(&self, a: &Tridiag, rhs: &[f64], obstacle: &[f64], x: &mut [f64]) -> Result<usize> {
        if self.warm_start {
            BrennanSchwartz.solve(a, rhs, obstacle, x)?;
        }
        let n = a.len();
        for sweep in 1..=self.max_sweeps {
            let mut change: f64 = 0.0;
            for i in 0..n {
                let mut v = rhs[i];
                if i > 0 {
                    v -= a.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v -= a.upper[i] * x[i + 1];
                }
                let gs = v / a.diag[i];
                let next = (x[i] + self.omega * (gs - x[i])).max(obstacle[i]);
                change = change.max((next - x[i]).abs());
                x[i] = next;
            }
            if change <= self.tol {
                return Ok(sweep);
            }
        }
        Err(Error::NoConvergence {
            solver: "psor",
            detail: format!("no convergence in {} sweeps", self.max_sweeps),
        })
    }
}
