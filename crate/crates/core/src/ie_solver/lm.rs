//! Levenberg–Marquardt for small dense nonlinear least-squares problems.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

pub(crate) trait LeastSquares {
    fn residuals(&mut self, p: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&mut self, p: &[f64]) -> Result<DMatrix<f64>>;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmOptions {
    /// Converged once every residual is within this bound.
    pub tol: f64,
    pub max_iterations: usize,
    /// Largest allowed change of any parameter in one step.
    pub max_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn sumsq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn max_abs(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn levenberg_marquardt<P: LeastSquares>(problem: &mut P, start: Vec<f64>, opts: LmOptions) -> Result<LmOutcome> {
    let mut p = start;
    let mut r = problem.residuals(&p)?;
    let mut cost = sumsq(&r);
    let mut mu = -1.0;
    let mut iterations = 0;
    let mut stale = 0;
    while iterations < opts.max_iterations && max_abs(&r) > opts.tol {
        iterations += 1;
        let j = problem.jacobian(&p)?;
        let a = j.transpose() * &j;
        let g = j.transpose() * DVector::from_column_slice(&r);
        let dmax = a.diagonal().iter().fold(0.0f64, |m, v| m.max(*v));
        if mu < 0.0 {
            mu = 1e-6 * dmax;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut m = a.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += mu * a[(i, i)].max(1e-12 * dmax);
            }
            let Some(chol) = m.cholesky() else {
                mu *= 4.0;
                continue;
            };
            let mut step = chol.solve(&(-&g));
            let big = step.amax();
            if big > opts.max_step {
                step *= opts.max_step / big;
            }
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            match problem.residuals(&trial) {
                Ok(rt) if rt.iter().all(|v| v.is_finite()) && sumsq(&rt) < cost => {
                    let new_cost = sumsq(&rt);
                    stale = if new_cost > cost * (1.0 - 1e-4) { stale + 1 } else { 0 };
                    p = trial;
                    r = rt;
                    cost = new_cost;
                    mu = (mu / 3.0).max(1e-15 * dmax);
                    accepted = true;
                    break;
                }
                _ => mu *= 4.0,
            }
        }
        if !accepted || stale >= 4 {
            break;
        }
    }
    let converged = max_abs(&r) <= opts.tol;
    log::debug!("LM stopped after {iterations} iterations, max residual {:.3e}", max_abs(&r));
    Ok(LmOutcome {
        params: p,
        residuals: r,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl LeastSquares for Rosenbrock {
        fn residuals(&mut self, p: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]])
        }
        fn jacobian(&mut self, p: &[f64]) -> Result<DMatrix<f64>> {
            Ok(DMatrix::from_row_slice(2, 2, &[-20.0 * p[0], 10.0, -1.0, 0.0]))
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let opts = LmOptions {
            tol: 1e-12,
            max_iterations: 200,
            max_step: 1.0,
        };
        let out = levenberg_marquardt(&mut Rosenbrock, vec![-1.2, 1.0], opts).unwrap();
        assert!(out.converged);
        assert!((out.params[0] - 1.0).abs() < 1e-10);
    }
}
