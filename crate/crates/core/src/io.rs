//! File formats. Numbers are written in scientific notation with 12
//! significant digits (`-1.23456789012e-05`), lines end in `\n`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::asymptotics::RegimeId;
use crate::error::{Error, Result};
use crate::model::{Abscissa, BoundaryCurve};
use crate::pde::PriceSurface;
use crate::pricer::Region;

/// `x` with 12 significant digits and a signed, at least two-digit exponent.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{x:.11e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// `x` rounded to what [`fmt_num`] prints.
pub fn round_num(x: f64) -> f64 {
    fmt_num(x).parse().unwrap_or(x)
}

fn parse_num(field: &str, line: u64) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: not a number: '{field}'")))
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// One boundary sample. `ln_alpha` is authoritative: asymptotic values can
/// lie far below the smallest double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRow {
    pub t: f64,
    pub ln_alpha: f64,
    pub regime: Option<RegimeId>,
}

impl BoundaryRow {
    pub fn alpha(&self) -> f64 {
        self.ln_alpha.exp()
    }
}

/// Header `t,alpha,log_alpha,method`, plus `regime` when any row has one.
pub fn write_boundary_csv<W: Write>(w: W, rows: &[BoundaryRow], method: &str) -> Result<()> {
    let with_regime = rows.iter().any(|r| r.regime.is_some());
    let mut out = writer(w);
    let mut header = vec!["t", "alpha", "log_alpha", "method"];
    if with_regime {
        header.push("regime");
    }
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![fmt_num(r.t), fmt_num(r.alpha()), fmt_num(r.ln_alpha), method.to_string()];
        if with_regime {
            rec.push(r.regime.map(|g| g.to_string()).unwrap_or_default());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a boundary CSV (`t`, `alpha`, optional `log_alpha`) back into rows.
pub fn read_boundary_rows<R: Read>(r: R) -> Result<Vec<BoundaryRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(it), Some(ia)) = (col("t"), col("alpha")) else {
        return Err(Error::Parse("boundary CSV needs 't' and 'alpha' columns".into()));
    };
    let il = col("log_alpha");
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k as u64 + 2;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Parse(format!("line {line}: missing field")));
        let t = parse_num(field(it)?, line)?;
        let alpha = parse_num(field(ia)?, line)?;
        let ln_alpha = match il {
            Some(i) => parse_num(field(i)?, line)?,
            None => alpha.ln(),
        };
        rows.push(BoundaryRow {
            t,
            ln_alpha,
            regime: None,
        });
    }
    Ok(rows)
}

/// Curve from rows read back from CSV, interpolated in `abscissa` (the
/// file does not record it).
pub fn curve_from_rows(rows: &[BoundaryRow], abscissa: Abscissa) -> Result<BoundaryCurve> {
    if rows.is_empty() {
        return Err(Error::Parse("boundary file has no rows".into()));
    }
    let nodes = rows.iter().map(|r| r.t).collect();
    let values: Vec<f64> = rows.iter().map(|r| r.alpha()).collect();
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Parse("boundary values must be positive doubles".into()));
    }
    BoundaryCurve::new(nodes, values, None, abscissa)
}

pub fn rows_of_curve(curve: &BoundaryCurve) -> Vec<BoundaryRow> {
    curve
        .nodes()
        .iter()
        .zip(curve.values())
        .map(|(&t, &a)| BoundaryRow {
            t,
            ln_alpha: a.ln(),
            regime: None,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FLambdaRow {
    pub big_lambda: f64,
    pub f: f64,
    /// NaN where the tail is not defined (wrong sign of Λ).
    pub tail_neg: f64,
    pub tail_pos: f64,
}

pub fn write_flambda_csv<W: Write>(w: W, rows: &[FLambdaRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["Lambda", "F", "tail_neg", "tail_pos"])?;
    for r in rows {
        out.write_record([fmt_num(r.big_lambda), fmt_num(r.f), fmt_num(r.tail_neg), fmt_num(r.tail_pos)])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceRow {
    pub s: f64,
    pub t: f64,
    pub p: f64,
    pub region: Region,
}

pub fn write_price_csv<W: Write>(w: W, rows: &[PriceRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["S", "t", "P", "region"])?;
    for r in rows {
        out.write_record([fmt_num(r.s), fmt_num(r.t), fmt_num(r.p), r.region.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Long format `t,S,P,exercised`, every `stride`-th time slice (the last
/// slice is always included).
pub fn write_surface_csv<W: Write>(w: W, surface: &PriceSurface, stride: usize) -> Result<()> {
    let stride = stride.max(1);
    let mut out = writer(w);
    out.write_record(["t", "S", "P", "exercised"])?;
    let last = surface.times().len() - 1;
    for n in (0..=last).filter(|n| n % stride == 0 || *n == last) {
        let t = fmt_num(surface.times()[n]);
        for (i, (&s, &p)) in surface.s_grid().iter().zip(surface.slice(n)).enumerate() {
            let flag = if surface.exercised(n, i) { "1" } else { "0" };
            out.write_record([t.as_str(), &fmt_num(s), &fmt_num(p), flag])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Generic CSV table with every value printed by [`fmt_num`].
pub fn write_table_csv<W: Write>(w: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(header)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::invalid("table row width differs from header"));
        }
        out.write_record(r.iter().map(|v| fmt_num(*v)))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveNode {
    pub t: f64,
    pub alpha: f64,
    pub log_alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub regime: Option<RegimeId>,
}

/// JSON form of a boundary: nodes plus whatever report the method produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveDocument {
    pub method: String,
    pub nodes: Vec<CurveNode>,
    pub report: serde_json::Value,
}

impl CurveDocument {
    pub fn new(method: &str, rows: &[BoundaryRow], report: serde_json::Value) -> Self {
        Self {
            method: method.to_string(),
            nodes: rows
                .iter()
                .map(|r| CurveNode {
                    t: round_num(r.t),
                    alpha: round_num(r.alpha()),
                    log_alpha: round_num(r.ln_alpha),
                    regime: r.regime,
                })
                .collect(),
            report,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerpetualDocument {
    pub alpha_inf_exact: f64,
    /// Absent when the asymptotic formula does not apply (ρ ≥ 1).
    pub alpha_inf_asym: Option<f64>,
    pub ratio: Option<f64>,
    pub price_at_strike: f64,
}

impl PerpetualDocument {
    pub fn rounded(self) -> Self {
        Self {
            alpha_inf_exact: round_num(self.alpha_inf_exact),
            alpha_inf_asym: self.alpha_inf_asym.map(round_num),
            ratio: self.ratio.map(round_num),
            price_at_strike: round_num(self.price_at_strike),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}
