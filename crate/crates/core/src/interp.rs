//! Shape-preserving piecewise-cubic Hermite interpolation.
//!
//! Node slopes come from the derivative of the local quartic (five-point)
//! interpolant, so the scheme is fourth-order where the data are smooth; a
//! Hyman filter then clips each slope into the Fritsch–Carlson monotonicity
//! region, so monotone data yield a monotone interpolant with no overshoot.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    // d[i] = Σ coef * y[j], valid while the filter branch stays fixed
    dcoef: Vec<Vec<(usize, f64)>>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::build(x, y, true)
    }

    /// Same construction without the monotonicity filter: fourth-order
    /// everywhere, but free to overshoot.
    pub fn unfiltered(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::build(x, y, false)
    }

    fn build(x: Vec<f64>, y: Vec<f64>, filter: bool) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::invalid("interpolant needs matching non-empty abscissae and ordinates"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("interpolation abscissae must be strictly increasing"));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("interpolation data must be finite"));
        }
        let (d, dcoef) = slopes(&x, &y, filter);
        Ok(Self { x, y, d, dcoef })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Evaluates inside `[x0, xn]`; outside, the end values are held constant.
    pub fn eval(&self, xq: f64) -> f64 {
        let n = self.x.len();
        if n == 1 || xq <= self.x[0] {
            return self.y[0];
        }
        if xq >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= xq) - 1;
        self.eval_in(i, xq)
    }

    /// Evaluates on interval `i` (caller guarantees `x[i] <= xq <= x[i+1]`).
    pub(crate) fn eval_in(&self, i: usize, xq: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let s = (xq - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    /// Sensitivities of `eval(xq)` to the ordinates, as (node, ∂value/∂y)
    /// pairs appended to `out`. Exact away from filter switching points.
    pub fn weights(&self, xq: f64, out: &mut Vec<(usize, f64)>) {
        let n = self.x.len();
        if n == 1 || xq <= self.x[0] {
            out.push((0, 1.0));
            return;
        }
        if xq >= self.x[n - 1] {
            out.push((n - 1, 1.0));
            return;
        }
        let i = self.x.partition_point(|&v| v <= xq) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (xq - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        out.push((i, 2.0 * s3 - 3.0 * s2 + 1.0));
        out.push((i + 1, -2.0 * s3 + 3.0 * s2));
        let h10 = (s3 - 2.0 * s2 + s) * h;
        let h11 = (s3 - s2) * h;
        out.extend(self.dcoef[i].iter().map(|&(j, c)| (j, c * h10)));
        out.extend(self.dcoef[i + 1].iter().map(|&(j, c)| (j, c * h11)));
    }

    pub fn derivative(&self, xq: f64) -> f64 {
        let n = self.x.len();
        if n == 1 || xq < self.x[0] || xq > self.x[n - 1] {
            return 0.0;
        }
        let i = (self.x.partition_point(|&v| v <= xq) - 1).min(n - 2);
        let h = self.x[i + 1] - self.x[i];
        let s = (xq - self.x[i]) / h;
        let dy = self.y[i + 1] - self.y[i];
        (6.0 * s * s - 6.0 * s) * dy / h
            + (3.0 * s * s - 4.0 * s + 1.0) * self.d[i]
            + (3.0 * s * s - 2.0 * s) * self.d[i + 1]
    }
}

type Coefs = Vec<(usize, f64)>;

fn slopes(x: &[f64], y: &[f64], filter: bool) -> (Vec<f64>, Vec<Coefs>) {
    let n = x.len();
    if n == 1 {
        return (vec![0.0], vec![Vec::new()]);
    }
    let secant: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let width = 5.min(n);
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(width / 2).min(n - width);
            let w = lagrange_derivative_weights(&x[lo..lo + width], x[i]);
            let raw: f64 = w.iter().zip(&y[lo..lo + width]).map(|(a, b)| a * b).sum();
            let lagrange = w.iter().enumerate().map(|(k, &c)| (lo + k, c)).collect();
            if filter {
                hyman_filter(raw, i, &secant, x, lagrange)
            } else {
                (raw, lagrange)
            }
        })
        .unzip()
}

/// Weights `w` with Σ w_j y_j the derivative at `xq` of the polynomial
/// interpolating the stencil.
fn lagrange_derivative_weights(xs: &[f64], xq: f64) -> Vec<f64> {
    let m = xs.len();
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let mut denom = 1.0;
        for k in 0..m {
            if k != j {
                denom *= xs[j] - xs[k];
            }
        }
        // d/dx prod_{k != j}(x - x_k) = sum_l prod_{k != j, l}(x - x_k)
        let mut deriv = 0.0;
        for l in 0..m {
            if l == j {
                continue;
            }
            let mut p = 1.0;
            for k in 0..m {
                if k != j && k != l {
                    p *= xq - xs[k];
                }
            }
            deriv += p;
        }
        out.push(deriv / denom);
    }
    out
}

fn hyman_filter(raw: f64, i: usize, secant: &[f64], x: &[f64], lagrange: Coefs) -> (f64, Coefs) {
    let n = secant.len() + 1;
    let (l, r) = match i {
        0 => (0, 0),
        _ if i == n - 1 => (n - 2, n - 2),
        _ => (i - 1, i),
    };
    let (left, right) = (secant[l], secant[r]);
    if left * right <= 0.0 || raw * left <= 0.0 {
        return (0.0, Vec::new());
    }
    let m = if left.abs() <= right.abs() { l } else { r };
    let cap = 3.0 * secant[m].abs();
    if raw.abs() <= cap {
        return (raw, lagrange);
    }
    let c = 3.0 / (x[m + 1] - x[m]);
    (3.0 * secant[m], vec![(m, -c), (m + 1, c)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_nodes() {
        let x = vec![0.0, 0.5, 1.3, 2.0, 3.1];
        let y = vec![4.0, 3.0, 2.5, 0.5, 0.4];
        let c = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(c.eval(*xi), *yi);
        }
    }

    #[test]
    fn fourth_order_on_smooth_data() {
        let err = |n: usize| {
            let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            let y: Vec<f64> = x.iter().map(|v| (-2.0 * v).exp()).collect();
            let c = MonotoneCubic::new(x, y).unwrap();
            (0..1000)
                .map(|k| {
                    let q = k as f64 / 999.0;
                    (c.eval(q) - (-2.0 * q).exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(21) / err(41);
        assert!(ratio > 12.0, "convergence ratio {ratio}");
    }

    #[test]
    fn weights_match_finite_differences() {
        let x = vec![0.0, 0.3, 0.7, 1.2, 2.0, 2.4, 3.5];
        let y = vec![5.0, 4.2, 3.9, 3.0, 1.0, 0.9, 0.2];
        let c = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
        for &q in &[0.1, 0.65, 1.5, 2.2, 3.0] {
            let mut w = Vec::new();
            c.weights(q, &mut w);
            for j in 0..y.len() {
                let mut yp = y.clone();
                yp[j] += 1e-7;
                let fd = (MonotoneCubic::new(x.clone(), yp).unwrap().eval(q) - c.eval(q)) / 1e-7;
                let an: f64 = w.iter().filter(|p| p.0 == j).map(|p| p.1).sum();
                assert!((fd - an).abs() < 1e-5, "q={q} j={j} fd={fd} an={an}");
            }
        }
    }

    #[test]
    fn rejects_bad_abscissae() {
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(MonotoneCubic::new(vec![], vec![]).is_err());
    }

    proptest! {
        #[test]
        fn decreasing_data_give_decreasing_interpolant(
            steps in proptest::collection::vec((0.01f64..2.0, 0.0f64..1.0), 2..20)
        ) {
            let mut x = vec![0.0];
            let mut y = vec![5.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() - dy);
            }
            let c = MonotoneCubic::new(x.clone(), y).unwrap();
            let end = *x.last().unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..=400 {
                let v = c.eval(end * k as f64 / 400.0);
                prop_assert!(v <= prev + 1e-12);
                prev = v;
            }
        }
    }
}
