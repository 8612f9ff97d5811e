//! Reference computations used only by the tests. Nothing here calls into the
//! library's own quadrature or special functions.

#![allow(dead_code)]

pub const GAMMA: f64 = 0.577_215_664_901_532_9;

fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Sum of Simpson integrals over consecutive panels.
pub fn simpson_panels<F: Fn(f64) -> f64>(f: F, cuts: &[f64], tol: f64) -> f64 {
    cuts.windows(2).map(|w| simpson(&f, w[0], w[1], tol)).sum()
}

/// E₁(x) = ∫_x^∞ e^{−v}/v dv, written as ∫_{ln x}^∞ exp(−e^w) dw.
pub fn e1(x: f64) -> f64 {
    let lo = x.ln();
    let hi = (x + 48.0).ln();
    // rough size so the tolerance is relative
    let scale = if x < 1.0 { -lo + 1.0 } else { (-x).exp() / x };
    let f = |w: f64| (-w.exp()).exp();
    let mut cuts = vec![lo];
    let mut w = lo.ceil();
    while w < hi {
        if w > lo {
            cuts.push(w);
        }
        w += 0.5;
    }
    cuts.push(hi);
    simpson_panels(f, &cuts, 1e-15 * scale)
}

/// Root of Kρ E₁(x) eˣ = 1 by plain bisection on the log form.
pub fn perpetual_alpha(strike: f64, rho: f64) -> f64 {
    let g = |x: f64| (strike * rho).ln() + e1(x).ln() + x;
    let (mut lo, mut hi) = (1e-300_f64, 50.0_f64);
    for _ in 0..2000 {
        let mid = (lo * hi).sqrt();
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    (lo * hi).sqrt() / rho
}

pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Composite Simpson with `n` (even) subintervals; for integrands carrying
/// noise that an adaptive rule would chase.
pub fn simpson_fixed<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}
