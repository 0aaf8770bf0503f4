//! CSV formats for field snapshots, diagnostics series and refinement reports.
//!
//! Reals are written with 17 significant digits so every value survives a
//! write/read cycle bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{BoundFlags, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::experiments::{RefinementReport, RefinementRow};
use crate::fields::GridField;

pub const DIAGNOSTICS_HEADER: &str = "n,t,entropy_f,entropy_g,dissipation,linf_rho_plus,linf_rho_minus,\
deviation_plus,deviation_minus,theta_min_plus_L,lambda_max,velocity_l2,velocity_h1_semi,fp_iters,bounds_ok";

pub const REFINEMENT_HEADER: &str =
    "level,N,N_T,err_linf_plus,err_l2_plus,err_linf_minus,err_l2_minus,order_linf,order_l2";

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldHeader {
    pub n: usize,
    pub t: f64,
    pub name: String,
}

pub fn format_field(field: &GridField, t: f64, name: &str) -> String {
    let n = field.n();
    let mut out = format!("# N={n} t={} name={name}\n", real(t));
    for i in 0..n {
        let line: Vec<String> = (0..n).map(|j| real(field.get(i, j))).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_field(path: &Path, field: &GridField, t: f64, name: &str) -> Result<()> {
    fs::write(path, format_field(field, t, name))?;
    Ok(())
}

pub fn parse_field(text: &str, path: &Path) -> Result<(FieldHeader, GridField)> {
    let bad = |msg: String| Error::Format { what: "field snapshot", path: path.to_path_buf(), msg };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let head = head.strip_prefix('#').ok_or_else(|| bad("missing '#' header".into()))?;
    let (mut n, mut t, mut name) = (None, None, None);
    for tok in head.split_whitespace() {
        match tok.split_once('=') {
            Some(("N", v)) => n = Some(v.parse::<usize>().map_err(|e| bad(format!("N: {e}")))?),
            Some(("t", v)) => t = Some(v.parse::<f64>().map_err(|e| bad(format!("t: {e}")))?),
            Some(("name", v)) => name = Some(v.to_string()),
            _ => return Err(bad(format!("unexpected header token '{tok}'"))),
        }
    }
    let header = FieldHeader {
        n: n.ok_or_else(|| bad("header lacks N".into()))?,
        t: t.ok_or_else(|| bad("header lacks t".into()))?,
        name: name.ok_or_else(|| bad("header lacks name".into()))?,
    };
    let mut values = Vec::with_capacity(header.n * header.n);
    let mut rows = 0;
    for (k, line) in lines.enumerate() {
        let before = values.len();
        for tok in line.split(',') {
            let v = tok.trim().parse::<f64>().map_err(|e| bad(format!("row {k}: {e}")))?;
            values.push(v);
        }
        if values.len() - before != header.n {
            return Err(bad(format!("row {k} has {} values, expected {}", values.len() - before, header.n)));
        }
        rows += 1;
    }
    if rows != header.n {
        return Err(bad(format!("{rows} rows, expected {}", header.n)));
    }
    let field = GridField::from_vec(header.n, values)?;
    Ok((header, field))
}

pub fn read_field(path: &Path) -> Result<(FieldHeader, GridField)> {
    parse_field(&fs::read_to_string(path)?, path)
}

pub fn diagnostics_row(r: &DiagnosticsRecord) -> String {
    let mut s = format!("{},", r.n);
    for v in [
        r.t,
        r.entropy_f,
        r.entropy_g,
        r.dissipation,
        r.linf_rho_plus,
        r.linf_rho_minus,
        r.deviation_plus,
        r.deviation_minus,
        r.theta_min_plus_l,
        r.lambda_max,
        r.velocity_l2,
        r.velocity_h1_semi,
    ] {
        let _ = write!(s, "{},", real(v));
    }
    let _ = write!(s, "{},{}", r.fp_iters, r.bounds.all());
    s
}

/// A diagnostics row read back from disk. Only the aggregate bound flag is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub record: DiagnosticsRecord,
    pub bounds_ok: bool,
}

pub fn format_diagnostics<'a>(records: impl IntoIterator<Item = &'a DiagnosticsRecord>) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&diagnostics_row(r));
        out.push('\n');
    }
    out
}

pub fn write_diagnostics<'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a DiagnosticsRecord>,
) -> Result<()> {
    fs::write(path, format_diagnostics(records))?;
    Ok(())
}

pub fn parse_diagnostics(text: &str, path: &Path) -> Result<Vec<DiagnosticsRow>> {
    let bad = |msg: String| Error::Format { what: "diagnostics", path: path.to_path_buf(), msg };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == DIAGNOSTICS_HEADER => {}
        _ => return Err(bad("missing or unexpected header".into())),
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 15 {
            return Err(bad(format!("row {k} has {} columns", cols.len())));
        }
        let f = |c: usize| cols[c].parse::<f64>().map_err(|e| bad(format!("row {k} col {c}: {e}")));
        let u = |c: usize| cols[c].parse::<usize>().map_err(|e| bad(format!("row {k} col {c}: {e}")));
        let bounds_ok = cols[14].parse::<bool>().map_err(|e| bad(format!("row {k}: {e}")))?;
        let record = DiagnosticsRecord {
            n: u(0)?,
            t: f(1)?,
            entropy_f: f(2)?,
            entropy_g: f(3)?,
            dissipation: f(4)?,
            linf_rho_plus: f(5)?,
            linf_rho_minus: f(6)?,
            deviation_plus: f(7)?,
            deviation_minus: f(8)?,
            theta_min_plus_l: f(9)?,
            lambda_max: f(10)?,
            velocity_l2: f(11)?,
            velocity_h1_semi: f(12)?,
            fp_iters: u(13)?,
            bounds: BoundFlags::ALL_OK,
        };
        rows.push(DiagnosticsRow { record, bounds_ok });
    }
    Ok(rows)
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRow>> {
    parse_diagnostics(&fs::read_to_string(path)?, path)
}

fn opt(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn format_refinement(report: &RefinementReport) -> String {
    let mut out = String::from(REFINEMENT_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.level,
            r.n,
            r.steps,
            opt(r.err_linf_plus),
            opt(r.err_l2_plus),
            opt(r.err_linf_minus),
            opt(r.err_l2_minus),
            opt(r.order_linf),
            opt(r.order_l2)
        );
    }
    out
}

pub fn write_refinement(path: &Path, report: &RefinementReport) -> Result<()> {
    fs::write(path, format_refinement(report))?;
    Ok(())
}

pub fn parse_refinement(text: &str, path: &Path) -> Result<RefinementReport> {
    let bad = |msg: String| Error::Format { what: "refinement report", path: path.to_path_buf(), msg };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == REFINEMENT_HEADER => {}
        _ => return Err(bad("missing or unexpected header".into())),
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 9 {
            return Err(bad(format!("row {k} has {} columns", cols.len())));
        }
        let u = |c: usize| cols[c].parse::<usize>().map_err(|e| bad(format!("row {k} col {c}: {e}")));
        let o = |c: usize| -> Result<Option<f64>> {
            if cols[c].is_empty() {
                Ok(None)
            } else {
                cols[c].parse::<f64>().map(Some).map_err(|e| bad(format!("row {k} col {c}: {e}")))
            }
        };
        rows.push(RefinementRow {
            level: u(0)?,
            n: u(1)?,
            steps: u(2)?,
            err_linf_plus: o(3)?,
            err_l2_plus: o(4)?,
            err_linf_minus: o(5)?,
            err_l2_minus: o(6)?,
            order_linf: o(7)?,
            order_l2: o(8)?,
        });
    }
    Ok(RefinementReport { rows })
}

pub fn read_refinement(path: &Path) -> Result<RefinementReport> {
    parse_refinement(&fs::read_to_string(path)?, path)
}
