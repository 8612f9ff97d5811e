use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use fbcev::asymptotics::{alpha_perpetual_asym, f_tail_neg, f_tail_pos, matching_i_ii, matching_iv_v};
use fbcev::ie_solver::{horizon, perpetual_root, solve_f, SolveStatus};
use fbcev::io::{
    curve_from_rows, fmt_num, read_boundary_rows, round_num, write_boundary_csv, write_flambda_csv, write_json,
    write_price_csv, write_table_csv, CurveDocument, FLambdaRow, PerpetualDocument, PriceRow,
};
use fbcev::methods::{boundary_methods, BoundaryOutput, BoundaryRequest};
use fbcev::model::Abscissa;
use fbcev::pricer::{self, perpetual_price, pricing_curve, Region};
use fbcev::{make_params, BoundaryCurve, Error, ModelParams};

use crate::args::{BoundaryArgs, CompareArgs, FlambdaArgs, Format, ModelArgs, PerpetualArgs, PriceArgs};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags or inputs (exit 2).
    Usage(String),
    /// A solver failed; any output has already been written (exit 3).
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("i/o: {e}"))
    }
}

type CmdResult = Result<(), Failure>;

fn params(m: &ModelArgs) -> Result<ModelParams, Failure> {
    let p = match (m.rho, m.rate, m.sigma) {
        (Some(rho), None, None) => ModelParams::from_rho(m.strike, rho)?,
        (None, Some(r), Some(s)) => make_params(m.strike, r, s)?,
        _ => return Err(Failure::Usage("give either --rho or both --rate and --sigma".into())),
    };
    Ok(p)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            Failure::Usage(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn check_grid(t_max: f64, nodes: usize) -> CmdResult {
    if !(t_max > 0.0 && t_max.is_finite()) || nodes < 2 {
        return Err(Failure::Usage(format!(
            "empty time grid: need --t-max > 0 and --nodes >= 2 (got {t_max}, {nodes})"
        )));
    }
    Ok(())
}

pub fn boundary(a: &BoundaryArgs) -> CmdResult {
    let p = params(&a.model)?;
    check_grid(a.t_max, a.nodes)?;
    let methods = boundary_methods();
    let method = methods.get(a.method.name())?;
    let request = BoundaryRequest {
        t_max: a.t_max,
        nodes: a.nodes,
        pde: None,
    };
    let out = method.compute(&p, &request)?;
    let mut w = sink(a.output.out.as_deref())?;
    match a.output.format {
        Format::Csv => write_boundary_csv(&mut w, &out.rows, method.name())?,
        Format::Json => write_json(&mut w, &CurveDocument::new(method.name(), &out.rows, out.report.clone()))?,
    }
    w.flush()?;
    if !out.converged {
        return Err(Failure::Numerical(format!(
            "{} boundary did not reach tolerance: {}",
            method.name(),
            out.report
        )));
    }
    Ok(())
}

pub fn flambda(a: &FlambdaArgs) -> CmdResult {
    if a.nodes < 2 {
        return Err(Failure::Usage("need at least 2 output nodes".into()));
    }
    let (lo, hi) = (a.lambda_min, a.lambda_max);
    let (curve, report) = solve_f(a.strike, (lo, hi), a.nodes)?;
    let rows: Vec<FLambdaRow> = (0..a.nodes)
        .map(|i| {
            let l = if i + 1 == a.nodes {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (a.nodes - 1) as f64
            };
            Ok(FLambdaRow {
                big_lambda: l,
                f: curve.eval(l)?,
                tail_neg: f_tail_neg(l, a.strike).unwrap_or(f64::NAN),
                tail_pos: f_tail_pos(l, a.strike).unwrap_or(f64::NAN),
            })
        })
        .collect::<Result<_, Error>>()?;
    let mut w = sink(a.output.out.as_deref())?;
    match a.output.format {
        Format::Csv => write_flambda_csv(&mut w, &rows)?,
        Format::Json => {
            let finite = |x: f64| x.is_finite().then(|| round_num(x));
            let doc = json!({
                "strike": a.strike,
                "rows": rows.iter().map(|r| json!({
                    "Lambda": round_num(r.big_lambda),
                    "F": round_num(r.f),
                    "tail_neg": finite(r.tail_neg),
                    "tail_pos": finite(r.tail_pos),
                })).collect::<Vec<_>>(),
                "report": report,
            });
            write_json(&mut w, &doc)?
        }
    }
    w.flush()?;
    if report.status != SolveStatus::Converged {
        return Err(Failure::Numerical(format!(
            "F solve {}: residual {} > {}",
            report.status,
            fmt_num(report.residual_norm),
            fmt_num(report.tolerance)
        )));
    }
    Ok(())
}

/// Boundary for pricing: read from file, or solved far enough out that the
/// transform samples needed at the largest `S` stay on the solved curve.
fn pricing_boundary(a: &PriceArgs, p: &ModelParams, s: &[f64], t: &[f64]) -> Result<(BoundaryCurve, Option<String>), Failure> {
    if let Some(path) = &a.boundary_file {
        let file = File::open(path).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", path.display())))?;
        let curve = curve_from_rows(&read_boundary_rows(file)?, Abscissa::near_expiry(p))?;
        return Ok((curve, None));
    }
    let t_hi = t.iter().copied().fold(0.0, f64::max);
    let s_hi = s.iter().copied().fold(0.0, f64::max);
    let alpha_inf = perpetual_root(p)?.alpha_inf;
    let mut t_solve = a.t_max.max(t_hi);
    if s_hi > alpha_inf {
        // the smallest transform variable used is ln 2 / V
        t_solve = t_solve.max(t_hi + horizon(std::f64::consts::LN_2 / (s_hi - alpha_inf), p.rho));
    }
    check_grid(t_solve, a.nodes)?;
    let out: BoundaryOutput = boundary_methods().get("ie")?.compute(
        p,
        &BoundaryRequest {
            t_max: t_solve,
            nodes: a.nodes,
            pde: None,
        },
    )?;
    let warning = (!out.converged).then(|| format!("boundary solve did not reach tolerance: {}", out.report));
    Ok((out.curve.expect("ie method returns a curve"), warning))
}

pub fn price(a: &PriceArgs) -> CmdResult {
    let p = params(&a.model)?;
    let k = p.strike;
    let s: Vec<f64> = if a.s.is_empty() {
        (1..=30).map(|i| 0.1 * i as f64 * k).collect()
    } else {
        a.s.clone()
    };
    if s.iter().chain(&a.t).any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Failure::Usage("--s and --t values must be finite and non-negative".into()));
    }
    let (curve, mut failure) = pricing_boundary(a, &p, &s, &a.t)?;
    let curve = pricing_curve(&curve, &p)?;
    let mut rows = Vec::with_capacity(s.len() * a.t.len());
    for &t in &a.t {
        for &si in &s {
            let (value, region) = match pricer::price(si, t, &curve, &p) {
                Ok(e) => (e.value, e.region),
                Err(e) if e.is_usage() => return Err(e.into()),
                Err(e) => {
                    failure.get_or_insert_with(|| e.to_string());
                    (f64::NAN, Region::Hold)
                }
            };
            rows.push(PriceRow { s: si, t, p: value, region });
        }
    }
    let mut w = sink(a.output.out.as_deref())?;
    match a.output.format {
        Format::Csv => write_price_csv(&mut w, &rows)?,
        Format::Json => {
            let doc: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "S": round_num(r.s),
                        "t": round_num(r.t),
                        "P": r.p.is_finite().then(|| round_num(r.p)),
                        "region": r.region,
                    })
                })
                .collect();
            write_json(&mut w, &doc)?
        }
    }
    w.flush()?;
    match failure {
        Some(msg) => Err(Failure::Numerical(msg)),
        None => Ok(()),
    }
}

pub fn perpetual(a: &PerpetualArgs) -> CmdResult {
    let p = params(&a.model)?;
    let exact = perpetual_root(&p)?.alpha_inf;
    let asym = if p.large_rho() {
        None
    } else {
        alpha_perpetual_asym(&p)?.plain()
    };
    let doc = PerpetualDocument {
        alpha_inf_exact: exact,
        alpha_inf_asym: asym,
        ratio: asym.map(|v| exact / v),
        price_at_strike: perpetual_price(p.strike, &p)?,
    }
    .rounded();
    let mut w = sink(a.out.as_deref())?;
    match a.format {
        Format::Json => write_json(&mut w, &doc)?,
        Format::Csv => {
            let opt = |x: Option<f64>| x.unwrap_or(f64::NAN);
            write_table_csv(
                &mut w,
                &["alpha_inf_exact", "alpha_inf_asym", "ratio", "price_at_strike"],
                &[vec![doc.alpha_inf_exact, opt(doc.alpha_inf_asym), opt(doc.ratio), doc.price_at_strike]],
            )?
        }
    }
    w.flush()?;
    Ok(())
}

/// Window of the IE/PDE comparison.
const WINDOW: (f64, f64) = (0.1, 1.0);

pub fn compare(a: &CompareArgs) -> CmdResult {
    let p = params(&a.model)?;
    check_grid(a.t_max, a.nodes)?;
    let methods = boundary_methods();
    let request = BoundaryRequest {
        t_max: a.t_max,
        nodes: a.nodes,
        pde: None,
    };
    let ie = methods.get("ie")?.compute(&p, &request)?;
    let ie_curve = ie.curve.as_ref().expect("ie method returns a curve");
    let pde = methods.get("pde")?.compute(&p, &request);
    let asym = if p.large_rho() {
        None
    } else {
        Some(methods.get("asymptotic")?.compute(&p, &request)?)
    };

    let mut table = Vec::with_capacity(ie.rows.len());
    for (i, row) in ie.rows.iter().enumerate() {
        let a_ie = row.alpha();
        let a_pde = pde.as_ref().map(|o| o.rows[i].alpha()).unwrap_or(f64::NAN);
        let ln_asym = asym.as_ref().map(|o| o.rows[i].ln_alpha).unwrap_or(f64::NAN);
        table.push(vec![
            row.t,
            a_ie,
            a_pde,
            ln_asym.exp(),
            (a_pde - a_ie).abs() / a_ie,
            ln_asym - row.ln_alpha,
        ]);
    }

    let ie_vs_pde = match &pde {
        Ok(o) => {
            let pde_curve = o.curve.as_ref().expect("pde method returns a curve");
            let hi = WINDOW.1.min(a.t_max);
            let sup = (0..=90)
                .map(|k| WINDOW.0 + (hi - WINDOW.0) * k as f64 / 90.0)
                .filter(|t| *t <= a.t_max)
                .map(|t| (pde_curve.value_at(t) / ie_curve.value_at(t) - 1.0).abs())
                .fold(f64::NAN, f64::max);
            json!({ "window": [WINDOW.0, hi], "sup_rel_diff": sup.is_finite().then(|| round_num(sup)) })
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    let matching_iv_v: Value = if p.large_rho() {
        Value::Null
    } else {
        [0.05, 0.1, 0.2]
            .iter()
            .map(|&v| {
                let r = matching_iv_v(v, &p)?;
                Ok(json!({ "v": v, "log_ratio": round_num(r), "band": v, "within_band": r.abs() <= v }))
            })
            .collect::<Result<Vec<_>, Error>>()?
            .into()
    };
    let i_ii = [8.0, 10.0, 12.0]
        .iter()
        .map(|&l| Ok((l, matching_i_ii(l, p.strike)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    let summary = json!({
        "strike": p.strike,
        "rho": round_num(p.rho),
        "lambda": round_num(p.lambda),
        "ie_status": ie.report["status"],
        "ie_vs_pde": ie_vs_pde,
        "matching_iv_v": matching_iv_v,
        "matching_i_ii": {
            "points": i_ii.iter().map(|(l, d)| json!({ "lambda": l, "rel_diff": round_num(*d) })).collect::<Vec<_>>(),
            "monotone": i_ii.windows(2).all(|w| w[1].1 < w[0].1),
        },
    });

    match a.output.format {
        Format::Json => {
            let mut w = sink(a.output.out.as_deref())?;
            write_json(&mut w, &summary)?;
            w.flush()?;
        }
        Format::Csv => {
            let mut w = sink(a.output.out.as_deref())?;
            write_table_csv(
                &mut w,
                &["t", "alpha_ie", "alpha_pde", "alpha_asym", "rel_ie_pde", "log_ratio_asym_ie"],
                &table,
            )?;
            w.flush()?;
            if let Some(out) = &a.output.out {
                let mut w = sink(Some(&out.with_extension("json")))?;
                write_json(&mut w, &summary)?;
                w.flush()?;
            }
        }
    }
    if !ie.converged {
        return Err(Failure::Numerical(format!("ie boundary did not reach tolerance: {}", ie.report)));
    }
    Ok(())
}
