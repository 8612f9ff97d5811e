//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            max_intervals: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl QuadResult {
    pub(crate) fn zero() -> Self {
        Self {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`. Non-convergence within `max_intervals`
/// subdivisions is an error carrying the achieved estimate.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    let r = integrate_best_effort(&mut f, a, b, opts);
    let tol = opts.abs_tol.max(opts.rel_tol * r.value.abs());
    if r.error > tol || !r.value.is_finite() {
        return Err(Error::Quadrature {
            estimate: r.error,
            tolerance: tol,
        });
    }
    Ok(r)
}

/// As [`integrate`], but always returns the best estimate with its error.
pub fn integrate_best_effort<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, opts: QuadOptions) -> QuadResult {
    integrate_with_segments(f, a, b, opts, &mut Vec::new())
}

/// Adaptive integration that also reports the final subdivision, so a
/// companion integrand (a gradient, say) can be integrated on the same rule
/// with [`for_each_node`].
pub fn integrate_with_segments<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    opts: QuadOptions,
    out: &mut Vec<(f64, f64)>,
) -> QuadResult {
    integrate_panels(f, &[a, b], opts, out)
}

/// Adaptive integration over consecutive panels `points[i]..points[i+1]`,
/// refining whichever segment has the largest error across all panels.
/// `max_intervals` counts refinements beyond the initial panels.
pub fn integrate_panels<F: FnMut(f64) -> f64>(
    f: &mut F,
    points: &[f64],
    opts: QuadOptions,
    out: &mut Vec<(f64, f64)>,
) -> QuadResult {
    let mut segments: Vec<Segment> = points
        .windows(2)
        .filter(|w| w[1] != w[0])
        .map(|w| gk15(f, w[0], w[1]))
        .collect();
    if segments.is_empty() {
        return QuadResult::zero();
    }
    let mut evaluations = 15 * segments.len();
    let limit = opts.max_intervals + segments.len();
    loop {
        let (value, error) = segments
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        let tol = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= tol || segments.len() >= limit || !value.is_finite() {
            out.extend(segments.iter().map(|s| (s.a, s.b)));
            return QuadResult {
                value,
                error,
                evaluations,
            };
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, be), (i, s)| {
                if s.error > be {
                    (i, s.error)
                } else {
                    (bi, be)
                }
            });
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Interval exhausted at machine resolution; keep it as is.
            segments.push(Segment { error: 0.0, ..s });
            continue;
        }
        segments.push(gk15(f, s.a, mid));
        segments.push(gk15(f, mid, s.b));
        evaluations += 30;
    }
}

/// Visits every Kronrod node of `[a, b]` with its weight (interval length
/// already folded in).
pub fn for_each_node<F: FnMut(f64, f64)>(a: f64, b: f64, mut visit: F) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    visit(center, WGK[7] * half);
    for j in 0..7 {
        let dx = half * XGK[j];
        visit(center - dx, WGK[j] * half);
        visit(center + dx, WGK[j] * half);
    }
}
