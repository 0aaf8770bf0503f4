use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dislocation_core::diagnostics::{
    cumulative_entropy_constant, BoundFlags, DiagnosticsRecord, CUMULATIVE_ENTROPY_SLACK, DEVIATION_SLACK,
    DISSIPATION_SLACK, LINF_SLACK, STEP_ENTROPY_SLACK, VELOCITY_SLACK,
};
use dislocation_core::experiments::nearest_step;
use dislocation_core::fields::{deviation_from_x1_mean, linf, theta_x1};
use dislocation_core::io::{self, DiagnosticsRow, DIAGNOSTICS_HEADER};
use dislocation_core::scheme::{Sink, StepView, POSITIVITY_SLACK};
use dislocation_core::{refinement_study, run, GridField, Preset, RefinementReport, SimParams};

use crate::config::{parse_config, FieldKind, RunConfig};
use crate::error::CliError;

pub const CONFIG_FILE: &str = "run.cfg";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const REFINEMENT_FILE: &str = "refinement.csv";

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    parse_config(&text)
}

pub fn snapshot_file_name(kind: FieldKind, step: usize) -> String {
    format!("{}_n{step}.csv", kind.name())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub steps: usize,
    pub final_time: f64,
    pub snapshots: Vec<PathBuf>,
    /// First failing bound and the step it failed at, for practical-mode runs.
    pub first_violation: Option<(&'static str, usize)>,
    pub strict_cfl_ok: Option<bool>,
}

struct DiagnosticsWriter {
    out: BufWriter<File>,
}

impl Sink for DiagnosticsWriter {
    fn accept(&mut self, view: &StepView<'_>) -> Result<(), String> {
        writeln!(self.out, "{}", io::diagnostics_row(view.record)).map_err(|e| format!("diagnostics.csv: {e}"))
    }
}

struct SnapshotWriter<'a> {
    dir: &'a Path,
    steps: BTreeSet<usize>,
    fields: &'a [FieldKind],
    written: Vec<PathBuf>,
    first_violation: Option<(&'static str, usize)>,
}

impl Sink for SnapshotWriter<'_> {
    fn accept(&mut self, view: &StepView<'_>) -> Result<(), String> {
        let step = view.state.step();
        if self.first_violation.is_none() {
            self.first_violation = view.record.bounds.first_failure().map(|b| (b, step));
        }
        if !self.steps.contains(&step) {
            return Ok(());
        }
        for &kind in self.fields {
            let field = match kind {
                FieldKind::RhoPlus => view.state.rho_plus().clone(),
                FieldKind::RhoMinus => view.state.rho_minus().clone(),
                FieldKind::ThetaPlus => view.state.theta_plus_x1().clone(),
                FieldKind::ThetaMinus => view.state.theta_minus_x1().clone(),
                FieldKind::Velocity => view.lambda_plus.clone(),
            };
            let path = self.dir.join(snapshot_file_name(kind, step));
            io::write_field(&path, &field, view.state.time(), kind.name())
                .map_err(|e| format!("{}: {e}", path.display()))?;
            self.written.push(path);
        }
        Ok(())
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

/// Runs a configuration, streaming diagnostics and snapshots into its output directory.
pub fn cmd_run(config: &RunConfig) -> Result<RunSummary, CliError> {
    let dir = config.output_dir.as_path();
    create_dir(dir)?;
    let cfg_path = dir.join(CONFIG_FILE);
    fs::write(&cfg_path, config.to_text()).map_err(|e| CliError::io(format!("writing {}", cfg_path.display()), e))?;

    let diag_path = dir.join(DIAGNOSTICS_FILE);
    let file = File::create(&diag_path).map_err(|e| CliError::io(format!("creating {}", diag_path.display()), e))?;
    let mut diag = DiagnosticsWriter { out: BufWriter::new(file) };
    writeln!(diag.out, "{DIAGNOSTICS_HEADER}").map_err(|e| CliError::io("writing diagnostics header", e))?;

    let params = &config.params;
    let mut snaps = SnapshotWriter {
        dir,
        steps: config.snapshot_times.iter().map(|&t| nearest_step(t, params)).collect(),
        fields: &config.emit_fields,
        written: Vec::new(),
        first_violation: None,
    };
    let plus = config.init_plus.sample(params.n);
    let minus = config.init_minus.sample(params.n);
    let result = run(params, &plus, &minus, &mut [&mut diag, &mut snaps]);
    diag.out.flush().map_err(|e| CliError::io("flushing diagnostics", e))?;
    let out = result?;

    Ok(RunSummary {
        output_dir: dir.to_path_buf(),
        steps: out.final_state.step(),
        final_time: out.final_state.time(),
        snapshots: snaps.written,
        first_violation: snaps.first_violation,
        strict_cfl_ok: out.cfl.map(|c| c.strict_ok),
    })
}

/// Runs a named preset with its own CFL mode.
pub fn cmd_preset(name: &str, output_dir: PathBuf) -> Result<RunSummary, CliError> {
    cmd_run(&RunConfig::from_preset(name, output_dir)?)
}

/// Refinement study on the configuration's problem; writes `refinement.csv`.
pub fn cmd_refine(config: &RunConfig, levels: usize) -> Result<(RefinementReport, PathBuf), CliError> {
    if levels == 0 {
        return Err(CliError::Validation("--levels must be at least 1".into()));
    }
    let base = Preset {
        name: config.preset.clone().unwrap_or_else(|| "custom".into()),
        params: config.params.clone(),
        init_plus: config.init_plus,
        init_minus: config.init_minus,
        snapshot_times: config.snapshot_times.clone(),
    };
    let report = refinement_study(&base, levels)?;
    create_dir(&config.output_dir)?;
    let path = config.output_dir.join(REFINEMENT_FILE);
    io::write_refinement(&path, &report)?;
    Ok((report, path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSummary {
    pub rows: usize,
    pub snapshots: usize,
}

fn audit_fail(bound: &str, location: impl Into<String>) -> CliError {
    CliError::Audit { bound: bound.to_string(), location: location.into() }
}

/// Re-evaluates every bound from the files a run left behind.
pub fn cmd_audit(dir: &Path) -> Result<AuditSummary, CliError> {
    let config = load_config(&dir.join(CONFIG_FILE))?;
    let params = &config.params;
    let rows = io::read_diagnostics(&dir.join(DIAGNOSTICS_FILE))?;
    audit_rows(params, &rows)?;
    let snapshots = audit_snapshots(dir, params, &rows)?;
    Ok(AuditSummary { rows: rows.len(), snapshots })
}

fn audit_rows(params: &SimParams, rows: &[DiagnosticsRow]) -> Result<(), CliError> {
    let first = rows.first().ok_or_else(|| audit_fail("row sequence", "diagnostics.csv is empty"))?;
    let l = params.l;
    let vb = params.velocity_bound();
    let dt = if params.steps > 0 { params.dt() } else { 0.0 };
    let r0 = &first.record;
    let linf0 = r0.linf_rho_plus.max(r0.linf_rho_minus);
    let mut prev_g = r0.entropy_g;
    let mut cumulative = 0.0;

    for (idx, row) in rows.iter().enumerate() {
        let r = &row.record;
        let at = format!("diagnostics.csv row n={}", r.n);
        if r.n != idx {
            return Err(audit_fail("row sequence", at));
        }
        if !r.is_finite() {
            return Err(audit_fail("non-finite value", at));
        }
        let mut flags = static_flags(r, l);
        if idx > 0 {
            cumulative += dt * r.dissipation;
            flags.linf = r.linf_rho_plus.max(r.linf_rho_minus) <= linf0 + l * vb * r.t + LINF_SLACK;
            flags.entropy_step = r.entropy_g + dt * r.dissipation <= prev_g + STEP_ENTROPY_SLACK;
            flags.entropy_cumulative = r.entropy_f + cumulative
                <= r0.entropy_f + cumulative_entropy_constant(l) + CUMULATIVE_ENTROPY_SLACK;
            flags.velocity = r.lambda_max <= vb + VELOCITY_SLACK;
            prev_g = r.entropy_g;
        }
        if let Some(bound) = flags.first_failure() {
            return Err(audit_fail(bound, at));
        }
        if !row.bounds_ok {
            return Err(audit_fail("recorded bound flag", at));
        }
    }
    if rows.len() != params.steps + 1 {
        return Err(audit_fail("row sequence", format!("{} rows for {} steps", rows.len(), params.steps)));
    }
    Ok(())
}

fn static_flags(r: &DiagnosticsRecord, l: f64) -> BoundFlags {
    BoundFlags {
        positivity: r.theta_min_plus_l >= -POSITIVITY_SLACK,
        deviation: r.deviation_plus.max(r.deviation_minus) <= 2.0 * l + DEVIATION_SLACK,
        dissipation: r.dissipation >= -DISSIPATION_SLACK,
        ..BoundFlags::ALL_OK
    }
}

fn parse_snapshot_name(name: &str) -> Option<(FieldKind, usize)> {
    let stem = name.strip_suffix(".csv")?;
    let (field, step) = stem.rsplit_once("_n")?;
    Some((FieldKind::parse(field)?, step.parse().ok()?))
}

fn audit_snapshots(dir: &Path, params: &SimParams, rows: &[DiagnosticsRow]) -> Result<usize, CliError> {
    let listing = fs::read_dir(dir).map_err(|e| CliError::io(format!("listing {}", dir.display()), e))?;
    let mut files = Vec::new();
    for entry in listing {
        let entry = entry.map_err(|e| CliError::io(format!("listing {}", dir.display()), e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some((kind, step)) = parse_snapshot_name(&name) {
            files.push((name, kind, step));
        }
    }
    files.sort();

    let l = params.l;
    let vb = params.velocity_bound();
    let linf0 = rows.first().map(|r| r.record.linf_rho_plus.max(r.record.linf_rho_minus)).unwrap_or(0.0);
    for (name, kind, step) in &files {
        let (header, field) = io::read_field(&dir.join(name))?;
        let at = name.as_str();
        if header.n != params.n || header.name != kind.name() {
            return Err(audit_fail("snapshot header", at));
        }
        match rows.get(*step) {
            Some(row) if row.record.t == header.t => {}
            _ => return Err(audit_fail("snapshot time", at)),
        }
        if !field.is_finite() {
            return Err(audit_fail("non-finite value", at));
        }
        let failure = match kind {
            FieldKind::RhoPlus | FieldKind::RhoMinus => rho_failure(&field, l, linf0 + l * vb * header.t),
            FieldKind::ThetaPlus | FieldKind::ThetaMinus => {
                (field.min() + l < -POSITIVITY_SLACK).then_some("gradient positivity")
            }
            FieldKind::Velocity => (linf(&field) > vb + VELOCITY_SLACK).then_some("velocity bound"),
        };
        if let Some(bound) = failure {
            return Err(audit_fail(bound, at));
        }
    }
    Ok(files.len())
}

fn rho_failure(rho: &GridField, l: f64, linf_limit: f64) -> Option<&'static str> {
    if theta_x1(rho).min() + l < -POSITIVITY_SLACK {
        Some("gradient positivity")
    } else if deviation_from_x1_mean(rho) > 2.0 * l + DEVIATION_SLACK {
        Some("deviation bound")
    } else if linf(rho) > linf_limit + LINF_SLACK {
        Some("linf bound")
    } else {
        None
    }
}
