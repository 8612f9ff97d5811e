mod common;

use std::sync::OnceLock;

use fbcev::ie_solver::*;
use fbcev::model::{curve_eval, BoundaryCurve, ModelParams};
use fbcev::specfun::EULER_GAMMA;

fn params(rho: f64) -> ModelParams {
    ModelParams::from_rho(1.0, rho).unwrap()
}

/// The ρ = 0.5, t_max = 2, n = 64 solve, shared by several tests.
fn reference() -> &'static (BoundaryCurve, SolveReport) {
    static CELL: OnceLock<(BoundaryCurve, SolveReport)> = OnceLock::new();
    CELL.get_or_init(|| solve_boundary(&params(0.5), 2.0, 64).unwrap())
}

#[test]
fn tau_examples() {
    assert_eq!(tau(1.0, 2.0, 0.5).unwrap(), 0.0);
    assert!((tau(1.0, 4.0, 0.5).unwrap() - 2.0 * (1.5f64 * 0.8).ln()).abs() < 1e-14);
    let far = tau(0.3, 1e12, 0.5).unwrap();
    assert!((far - horizon(0.3, 0.5)).abs() < 1e-11);
    assert!(tau(1.0, 1.9, 0.5).is_err());
    assert!(tau(0.0, 1.0, 0.5).is_err());
}

#[test]
fn tau_small_rho_over_theta() {
    // ρ/θ = 1e-12: a naive log of the product would lose every digit
    let (theta, rho) = (1.0, 1e-12);
    let z = 2.0 * theta / rho;
    // series: τ = 1/(2θ) − 3ρ/(8θ²) + O(ρ²)
    let got = tau(theta, z, rho).unwrap();
    assert!((got - (0.5 - 0.375 * rho)).abs() < 1e-14);
}

#[test]
fn horizon_inverse() {
    for h in [0.01, 0.5, 2.0, 40.0] {
        let th = theta_for_horizon(h, 0.3);
        assert!(common::rel(horizon(th, 0.3), h) < 1e-12);
    }
}

#[test]
fn perpetual_root_matches_bisection_oracle() {
    for rho in [0.5, 0.2, 0.1, 0.05] {
        let got = perpetual_root(&params(rho)).unwrap();
        let want = common::perpetual_alpha(1.0, rho);
        assert!(common::rel(got.alpha_inf, want) < 1e-9, "rho = {rho}: {} vs {want}", got.alpha_inf);
        assert!(got.residual.abs() <= 1e-12);
    }
    let a = perpetual_root(&params(0.1)).unwrap().alpha_inf;
    assert!(common::rel(a, 2.54974e-4) < 1e-5);
}

#[test]
fn perpetual_root_increases_with_rho() {
    let rhos = [0.02, 0.05, 0.1, 0.3, 0.7, 1.5, 4.0];
    let roots: Vec<f64> = rhos.iter().map(|&r| perpetual_root(&params(r)).unwrap().alpha_inf).collect();
    for w in roots.windows(2) {
        assert!(w[0] < w[1]);
    }
    let k2 = ModelParams::from_rho(2.0, 0.1).unwrap();
    assert!(perpetual_root(&k2).unwrap().alpha_inf > roots[2]);
}

#[test]
fn constant_curve_reduces_to_perpetual_equation() {
    let p = params(0.5);
    let a = perpetual_root(&p).unwrap().alpha_inf;
    let c = BoundaryCurve::constant(a).unwrap();
    let theta = 1e-6;
    // with α constant the integral is Kρ e^{Kθ} e^{ρα} E₁(α(θ + ρ)), up to the e^{Kθ} of the definition
    let exact = p.rho * (a * p.rho).exp() * common::e1(a * (theta + p.rho)) - (-theta).exp();
    let got = ie_residual(theta, &c, &p).unwrap();
    assert!((got - exact).abs() < 1e-9, "{got} vs {exact}");
    assert!(got.abs() < 1e-4);
}

#[test]
fn strike_curve_residual_is_negative() {
    for rho in [0.2, 0.5, 1.0] {
        let c = BoundaryCurve::constant(1.0).unwrap();
        assert!(ie_residual(1.0, &c, &params(rho)).unwrap() < 0.0);
    }
}

#[test]
fn converged_boundary_shape() {
    let (curve, report) = reference();
    assert_eq!(report.status, SolveStatus::Converged);
    assert!(report.residual_norm <= report.tolerance);
    assert_eq!(curve.nodes().len(), 64);
    assert_eq!(curve_eval(curve, 0.0).unwrap(), 1.0);
    assert!(curve.is_non_increasing());
    // α(0⁺) from the first two interior nodes, linear in the curve's own coordinate
    let (n, v) = (curve.nodes(), curve.values());
    let (x1, x2) = (curve.abscissa().map(n[1]), curve.abscissa().map(n[2]));
    let a0 = v[1] - x1 * (v[2] - v[1]) / (x2 - x1);
    assert!((a0 - 1.0).abs() < 0.01, "{a0}");
    let a_inf = perpetual_root(&params(0.5)).unwrap().alpha_inf;
    assert!(*v.last().unwrap() > a_inf);
}

#[test]
fn held_out_residuals() {
    let (curve, report) = reference();
    let p = params(0.5);
    let lo = 0.1f64.max(theta_for_horizon(2.0, p.rho));
    for theta in common::log_space(lo * 1.013, 10.0 / 1.07, 10) {
        let r = ie_relative_residual(theta, curve, &p).unwrap();
        assert!(r.abs() <= 10.0 * report.tolerance, "theta = {theta}: {r}");
        assert!(r.abs() <= 1e-6);
    }
}

#[test]
fn doubling_nodes_changes_little() {
    let (coarse, _) = reference();
    let (fine, report) = solve_boundary(&params(0.5), 2.0, 128).unwrap();
    assert_eq!(report.status, SolveStatus::Converged);
    let mut worst: f64 = 0.0;
    for k in 0..=400 {
        let t = 2.0 * k as f64 / 400.0;
        let (a, b) = (coarse.value_at(t), fine.value_at(t));
        worst = worst.max((a - b).abs() / b);
    }
    assert!(worst <= 1e-3, "{worst}");
}

#[test]
fn small_rho_boundary_converges() {
    let (curve, report) = solve_boundary(&params(0.1), 1.0, 64).unwrap();
    assert_eq!(report.status, SolveStatus::Converged);
    assert!(curve.is_non_increasing());
}

#[test]
fn rejects_bad_requests() {
    let p = params(0.5);
    assert!(solve_boundary(&p, 0.0, 64).is_err());
    assert!(solve_boundary(&p, 1.0, 4).is_err());
    assert!(solve_f(1.0, (-10.0, 2.0), 8).is_err());
}

#[test]
fn f_curve_is_positive_and_decreasing() {
    let (f, report) = solve_f(1.0, (-12.0, 2.0), 40).unwrap();
    assert_eq!(report.status, SolveStatus::Converged);
    assert!(f.values().iter().all(|&v| v > 0.0));
    assert!(f.is_strictly_decreasing());
    // the negative tail is approached from the inside
    let inner = f.eval(-12.0).unwrap();
    let tail = fbcev::asymptotics::f_tail_neg(-12.0, 1.0).unwrap();
    assert!(common::rel(inner, tail) < 0.05);
    assert!(f.eval(2.0).unwrap() < 2.0 * (-EULER_GAMMA).exp());
}
