//! Finite-difference oracle for the free-boundary problem
//!
//! ```text
//! P_t = S P_SS + ρ S P_S − ρ P,   P ≥ K − S,   P(S, 0) = (K − S)⁺,
//! ```
//!
//! posed as a linear complementarity problem on `[0, S_max]` with
//! `P(S_max, t) = 0`.

pub mod obstacle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Abscissa, BoundaryCurve, ModelParams};
use crate::registry::Registry;
use obstacle::{BrennanSchwartz, ObstacleSolver, Psor, Tridiag};

/// Gap below which a node counts as exercised, relative to K.
pub const CONTACT_EPS: f64 = 1e-7;

/// Registered obstacle solvers: "brennan-schwartz", "psor" (started from
/// the direct solution) and "psor-cold" (started from the previous step).
pub fn obstacle_solvers() -> Registry<dyn ObstacleSolver> {
    let mut r: Registry<dyn ObstacleSolver> = Registry::new("obstacle solver");
    let cold = Psor {
        warm_start: false,
        ..Psor::default()
    };
    for s in [
        Box::new(BrennanSchwartz) as Box<dyn ObstacleSolver>,
        Box::new(Psor::default()),
        Box::new(cold),
    ] {
        r.register(s.name(), s);
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeGridSpec {
    pub s_max: f64,
    /// Space nodes, including both ends.
    pub m: usize,
    pub dt: f64,
    /// Width of the sinh clustering around K, relative to K.
    pub cluster: f64,
    /// Leading steps taken as two implicit half-steps each.
    pub rannacher_steps: usize,
    /// Registered obstacle solver name.
    pub solver: String,
}

impl PdeGridSpec {
    pub fn new(s_max: f64, m: usize, dt: f64) -> Self {
        Self {
            s_max,
            m,
            dt,
            cluster: 0.5,
            rannacher_steps: 2,
            solver: "psor".to_string(),
        }
    }

    /// `S_max = 8K`, `dt = 10⁻³` (or finer for short horizons).
    pub fn standard(params: &ModelParams, t_max: f64, m: usize) -> Self {
        Self::new(8.0 * params.strike, m, (t_max / 200.0).min(1e-3))
    }

    pub fn validate(&self, strike: f64) -> Result<()> {
        if !(self.s_max >= 4.0 * strike) {
            return Err(Error::invalid(format!("S_max must be at least 4K, got {}", self.s_max)));
        }
        if self.m < 100 {
            return Err(Error::invalid(format!("need at least 100 space nodes, got {}", self.m)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.cluster > 0.0) {
            return Err(Error::invalid("cluster width must be positive"));
        }
        Ok(())
    }
}

/// Space grid `0 = S_0 < … < S_{m−1} = S_max`, sinh-clustered at K, with K
/// itself a node.
pub fn space_grid(strike: f64, spec: &PdeGridSpec) -> Vec<f64> {
    let m = spec.m;
    let c = spec.cluster * strike;
    let a_lo = (-strike / c).asinh();
    let a_hi = ((spec.s_max - strike) / c).asinh();
    let ik = ((-a_lo / (a_hi - a_lo)) * (m - 1) as f64).round().clamp(1.0, (m - 2) as f64) as usize;
    let mut s: Vec<f64> = (0..m)
        .map(|i| {
            let xi = if i <= ik {
                a_lo * (1.0 - i as f64 / ik as f64)
            } else {
                a_hi * (i - ik) as f64 / (m - 1 - ik) as f64
            };
            strike + c * xi.sinh()
        })
        .collect();
    s[0] = 0.0;
    s[ik] = strike;
    s[m - 1] = spec.s_max;
    s
}

/// `L P = S P_SS + ρ S P_S − ρ P` on the grid: row 0 is `−ρ P`, the last
/// row is left empty (Dirichlet).
fn operator(s: &[f64], rho: f64) -> Tridiag {
    let m = s.len();
    let mut l = Tridiag {
        lower: vec![0.0; m],
        diag: vec![0.0; m],
        upper: vec![0.0; m],
    };
    l.diag[0] = -rho;
    for i in 1..m - 1 {
        let (hm, hp) = (s[i] - s[i - 1], s[i + 1] - s[i]);
        let sum = hm + hp;
        let diff = s[i];
        let drift = rho * s[i];
        let mut a = 2.0 * diff / (hm * sum);
        let mut c = 2.0 * diff / (hp * sum);
        if rho * hp > 2.0 {
            // cell Péclet number above 2: upwind the drift
            c += drift / hp;
            l.diag[i] = -(a + c) + drift / hp - rho;
        } else {
            a -= drift * hp / (hm * sum);
            c += drift * hm / (hp * sum);
            l.diag[i] = -(a + c) - rho;
        }
        l.lower[i] = a;
        l.upper[i] = c;
    }
    l
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSurface {
    strike: f64,
    times: Vec<f64>,
    s: Vec<f64>,
    values: Vec<Vec<f64>>,
    sweeps: usize,
}

impl PriceSurface {
    pub fn strike(&self) -> f64 {
        self.strike
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s
    }

    pub fn slice(&self, step: usize) -> &[f64] {
        &self.values[step]
    }

    /// Total obstacle-solver sweeps over the run.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn payoff(&self, i: usize) -> f64 {
        (self.strike - self.s[i]).max(0.0)
    }

    /// Whether node `i` of slice `step` sits on the obstacle.
    pub fn exercised(&self, step: usize, i: usize) -> bool {
        self.s[i] < self.strike && self.values[step][i] - (self.strike - self.s[i]) <= CONTACT_EPS * self.strike
    }

    /// Price at `(S, t)` by linear interpolation in both directions.
    pub fn price_at(&self, s: f64, t: f64) -> Result<f64> {
        let t_end = *self.times.last().unwrap();
        if !(t >= 0.0 && t <= t_end * (1.0 + 1e-12)) {
            return Err(Error::invalid(format!("t = {t} outside the solved range [0, {t_end}]")));
        }
        if !(s >= 0.0) {
            return Err(Error::invalid(format!("S must be non-negative, got {s}")));
        }
        let s_max = *self.s.last().unwrap();
        let in_s = |v: &[f64]| {
            if s >= s_max {
                return 0.0;
            }
            let i = self.s.partition_point(|&x| x <= s) - 1;
            let w = (s - self.s[i]) / (self.s[i + 1] - self.s[i]);
            v[i] * (1.0 - w) + v[i + 1] * w
        };
        let k = self.times.partition_point(|&x| x <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        Ok(in_s(&self.values[k - 1]) * (1.0 - w) + in_s(&self.values[k]) * w)
    }
}

pub fn solve_pde(params: &ModelParams, t_max: f64, grid: &PdeGridSpec) -> Result<PriceSurface> {
    grid.validate(params.strike)?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::invalid(format!("t_max must be positive, got {t_max}")));
    }
    let registry = obstacle_solvers();
    let solver = registry.get(&grid.solver)?;
    let k = params.strike;
    let s = space_grid(k, grid);
    let m = s.len();
    let l = operator(&s, params.rho);
    let steps = (t_max / grid.dt).ceil() as usize;
    let dt = t_max / steps as f64;
    let g: Vec<f64> = s.iter().map(|&x| (k - x).max(0.0)).collect();

    // (I − θ h L) P⁺ = (I + (1−θ) h L) P
    let system = |theta: f64, h: f64| {
        let mut a = Tridiag {
            lower: l.lower.iter().map(|v| -theta * h * v).collect(),
            diag: l.diag.iter().map(|v| 1.0 - theta * h * v).collect(),
            upper: l.upper.iter().map(|v| -theta * h * v).collect(),
        };
        a.lower[m - 1] = 0.0;
        a.diag[m - 1] = 1.0;
        a
    };
    let explicit = |theta: f64, h: f64, p: &[f64], out: &mut [f64]| {
        l.apply(p, out);
        for i in 0..m {
            out[i] = p[i] + (1.0 - theta) * h * out[i];
        }
        out[m - 1] = 0.0;
    };
    let euler_half = system(1.0, 0.5 * dt);
    let crank = system(0.5, dt);

    let mut values = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    values.push(g.clone());
    times.push(0.0);
    let mut p = g.clone();
    let mut rhs = vec![0.0; m];
    let mut sweeps = 0;
    for n in 1..=steps {
        let stages: &[(f64, f64, &Tridiag)] = if n <= grid.rannacher_steps {
            &[(1.0, 0.5 * dt, &euler_half), (1.0, 0.5 * dt, &euler_half)]
        } else {
            &[(0.5, dt, &crank)]
        };
        for &(theta, h, a) in stages {
            explicit(theta, h, &p, &mut rhs);
            sweeps += solver.solve(a, &rhs, &g, &mut p).map_err(|e| Error::NoConvergence {
                solver: "pde",
                detail: format!("step {n}: {e}"),
            })?;
        }
        values.push(p.clone());
        times.push(n as f64 * dt);
    }
    Ok(PriceSurface {
        strike: k,
        times,
        s,
        values,
        sweeps,
    })
}

/// Boundary location in slice `step`: the edge of the contact set grown
/// from `S = 0`, refined to where the gap `P − (K − S)` crosses the contact
/// tolerance, interpolating linearly in `√gap` (the gap opens quadratically
/// under smooth pasting). The crossing moves continuously as nodes enter or
/// leave the contact set.
pub fn boundary_at(surface: &PriceSurface, step: usize) -> Result<f64> {
    let k = surface.strike;
    let s = &surface.s;
    let p = &surface.values[step];
    if step == 0 {
        return Ok(k);
    }
    if !surface.exercised(step, 0) {
        return Err(Error::EmptyExerciseRegion { step });
    }
    let mut i = 0;
    while i + 1 < s.len() && surface.exercised(step, i + 1) {
        i += 1;
    }
    if i + 1 >= s.len() {
        return Ok(s[i]);
    }
    let level = (CONTACT_EPS * k).sqrt();
    let gap = |j: usize| (p[j] - (k - s[j])).max(0.0).sqrt();
    let (g0, g1) = (gap(i), gap(i + 1));
    let w = ((level - g0) / (g1 - g0)).clamp(0.0, 1.0);
    Ok(s[i] + w * (s[i + 1] - s[i]))
}

/// Boundary over all slices, `α(0) = K` pinned.
pub fn extract_boundary(surface: &PriceSurface) -> Result<BoundaryCurve> {
    let values = (0..surface.times.len())
        .map(|n| boundary_at(surface, n))
        .collect::<Result<Vec<_>>>()?;
    BoundaryCurve::new(surface.times.clone(), values, None, Abscissa::Sqrt)
}

/// One-sided difference `P_S` just above the boundary in slice `step`.
pub fn smooth_pasting_slope(surface: &PriceSurface, step: usize) -> Result<f64> {
    let alpha = boundary_at(surface, step)?;
    let s = &surface.s;
    let j = s.partition_point(|&x| x <= alpha);
    if j + 1 >= s.len() {
        return Err(Error::invalid("boundary at the edge of the grid"));
    }
    let p = &surface.values[step];
    Ok((p[j + 1] - p[j]) / (s[j + 1] - s[j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(m: usize, t_max: f64) -> (ModelParams, PriceSurface) {
        let p = ModelParams::from_rho(1.0, 0.5).unwrap();
        let grid = PdeGridSpec::new(8.0, m, 2e-3);
        (p, solve_pde(&p, t_max, &grid).unwrap())
    }

    #[test]
    fn grid_contains_strike_and_ends() {
        let g = space_grid(1.0, &PdeGridSpec::new(6.0, 101, 1e-3));
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 6.0);
        assert!(g.contains(&1.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn initial_slice_is_payoff_and_obstacle_holds() {
        let (_, surf) = run(300, 0.2);
        for (i, v) in surf.slice(0).iter().enumerate() {
            assert_eq!(*v, surf.payoff(i));
        }
        for n in 0..surf.times().len() {
            for (i, v) in surf.slice(n).iter().enumerate() {
                assert!(*v - surf.payoff(i) >= -1e-10);
            }
            assert_eq!(surf.slice(n)[0], 1.0);
        }
    }

    #[test]
    fn deep_in_the_money_is_exercised() {
        let (_, surf) = run(400, 1.0);
        let last = surf.times().len() - 1;
        let p = surf.price_at(0.01, 1.0).unwrap();
        assert!((p - 0.99).abs() < 1e-8, "{p}");
        assert!(surf.exercised(last, 1));
    }

    #[test]
    fn boundary_shape() {
        let (_, surf) = run(400, 0.5);
        let curve = extract_boundary(&surf).unwrap();
        assert!((boundary_at(&surf, 1).unwrap() - 1.0).abs() < 0.2);
        assert!(curve.value_at(0.5) < curve.value_at(0.1));
        let slope = smooth_pasting_slope(&surf, surf.times().len() - 1).unwrap();
        assert!((slope + 1.0).abs() < 0.05, "{slope}");
    }

    #[test]
    fn rejects_bad_grid() {
        let p = ModelParams::from_rho(1.0, 0.5).unwrap();
        assert!(solve_pde(&p, 1.0, &PdeGridSpec::new(3.0, 200, 1e-3)).is_err());
        assert!(solve_pde(&p, 1.0, &PdeGridSpec::new(8.0, 50, 1e-3)).is_err());
    }
}
