//! Boundary computations selectable by name: "ie", "pde", "asymptotic".

use serde_json::{json, Value};

use crate::asymptotics::{alpha_composite, select_regime, RegimeId};
use crate::error::Result;
use crate::ie_solver::{clustered_nodes, solve_boundary, solve_f, FLambdaCurve, SolveStatus};
use crate::io::{rows_of_curve, BoundaryRow};
use crate::model::{BoundaryCurve, ModelParams, TimePoint};
use crate::pde::{extract_boundary, smooth_pasting_slope, solve_pde, PdeGridSpec};
use crate::registry::Registry;

/// Space nodes of the PDE oracle when none are configured.
pub const PDE_NODES: usize = 2000;

#[derive(Debug, Clone)]
pub struct BoundaryRequest {
    pub t_max: f64,
    pub nodes: usize,
    /// PDE grid; [`PdeGridSpec::standard`] with [`PDE_NODES`] when absent.
    pub pde: Option<PdeGridSpec>,
}

#[derive(Debug, Clone)]
pub struct BoundaryOutput {
    pub rows: Vec<BoundaryRow>,
    /// Interpolable curve, when the values are representable as doubles.
    pub curve: Option<BoundaryCurve>,
    pub report: Value,
    pub converged: bool,
}

pub trait BoundaryMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn compute(&self, params: &ModelParams, request: &BoundaryRequest) -> Result<BoundaryOutput>;
}

pub struct IeMethod;

impl BoundaryMethod for IeMethod {
    fn name(&self) -> &'static str {
        "ie"
    }

    fn compute(&self, params: &ModelParams, request: &BoundaryRequest) -> Result<BoundaryOutput> {
        let (curve, report) = solve_boundary(params, request.t_max, request.nodes)?;
        Ok(BoundaryOutput {
            rows: rows_of_curve(&curve),
            converged: report.status == SolveStatus::Converged,
            report: serde_json::to_value(&report).unwrap_or(Value::Null),
            curve: Some(curve),
        })
    }
}

/// Finite-difference oracle, boundary sampled at the node times the IE
/// solver would use.
pub struct PdeMethod;

impl BoundaryMethod for PdeMethod {
    fn name(&self) -> &'static str {
        "pde"
    }

    fn compute(&self, params: &ModelParams, request: &BoundaryRequest) -> Result<BoundaryOutput> {
        let grid = request
            .pde
            .clone()
            .unwrap_or_else(|| PdeGridSpec::standard(params, request.t_max, PDE_NODES));
        let surface = solve_pde(params, request.t_max, &grid)?;
        let full = extract_boundary(&surface)?;
        let rows: Vec<BoundaryRow> = clustered_nodes(request.t_max, request.nodes, 2.0)
            .into_iter()
            .map(|t| BoundaryRow {
                t,
                ln_alpha: full.value_at(t).ln(),
                regime: None,
            })
            .collect();
        let last = surface.times().len() - 1;
        let report = json!({
            "s_max": grid.s_max,
            "space_nodes": grid.m,
            "time_steps": last,
            "solver": grid.solver,
            "solver_sweeps": surface.sweeps(),
            "smooth_pasting_slope": smooth_pasting_slope(&surface, last)?,
        });
        Ok(BoundaryOutput {
            rows,
            curve: Some(full),
            report,
            converged: true,
        })
    }
}

/// Composite of the regime formulas. 𝓕 is solved over the regime II window
/// when some node falls inside it.
pub struct AsymptoticMethod;

impl BoundaryMethod for AsymptoticMethod {
    fn name(&self) -> &'static str {
        "asymptotic"
    }

    fn compute(&self, params: &ModelParams, request: &BoundaryRequest) -> Result<BoundaryOutput> {
        params.require_small_rho()?;
        let times = clustered_nodes(request.t_max, request.nodes, 2.0);
        let needs_f = times[1..].iter().any(|&t| select_regime(t, params) == RegimeId::II);
        let (f_curve, f_status): (Option<FLambdaCurve>, Value) = if needs_f {
            let k = params.strike;
            let half = params.lambda.sqrt() + 0.5 * k;
            match solve_f(k, ((-half).max(-60.0 * k), half.min(6.0 * k)), 64) {
                Ok((c, r)) => (Some(c), json!(r.status)),
                Err(e) => (None, json!(e.to_string())),
            }
        } else {
            (None, Value::Null)
        };
        let mut fallback = 0;
        let mut rows = Vec::with_capacity(times.len());
        for &t in &times {
            if t == 0.0 {
                rows.push(BoundaryRow {
                    t,
                    ln_alpha: params.strike.ln(),
                    regime: Some(RegimeId::I),
                });
                continue;
            }
            let e = alpha_composite(t, params, f_curve.as_ref())?;
            fallback += e.tail_fallback as usize;
            rows.push(BoundaryRow {
                t,
                ln_alpha: e.alpha.ln,
                regime: Some(e.regime),
            });
        }
        let tp = TimePoint::from_t(request.t_max, params);
        let report = json!({
            "lambda": params.lambda,
            "f_solve": f_status,
            "tail_fallback_nodes": fallback,
            "v_at_t_max": tp.v,
        });
        Ok(BoundaryOutput {
            rows,
            curve: None,
            report,
            converged: true,
        })
    }
}

pub fn boundary_methods() -> Registry<dyn BoundaryMethod> {
    let mut r: Registry<dyn BoundaryMethod> = Registry::new("boundary method");
    for m in [
        Box::new(IeMethod) as Box<dyn BoundaryMethod>,
        Box::new(PdeMethod),
        Box::new(AsymptoticMethod),
    ] {
        r.register(m.name(), m);
    }
    r
}
