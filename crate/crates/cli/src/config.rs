//! Line-oriented `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use dislocation_core::experiments::{preset, InitialProfile};
use dislocation_core::{CflMode, SimParams, StressKind, StressSpec};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FieldKind {
    RhoPlus,
    RhoMinus,
    ThetaPlus,
    ThetaMinus,
    Velocity,
}

impl FieldKind {
    pub const ALL: [FieldKind; 5] =
        [Self::RhoPlus, Self::RhoMinus, Self::ThetaPlus, Self::ThetaMinus, Self::Velocity];

    pub fn name(self) -> &'static str {
        match self {
            Self::RhoPlus => "rho_plus",
            Self::RhoMinus => "rho_minus",
            Self::ThetaPlus => "theta_plus",
            Self::ThetaMinus => "theta_minus",
            Self::Velocity => "velocity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SimParams,
    /// Preset the initial data and stress defaults came from, if any.
    pub preset: Option<String>,
    pub init_plus: InitialProfile,
    pub init_minus: InitialProfile,
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
    pub emit_fields: Vec<FieldKind>,
}

const KEYS: &[&str] = &[
    "M",
    "N",
    "T",
    "N_T",
    "L",
    "preset",
    "stress.kind",
    "stress.a0",
    "stress.a1",
    "fp_tol",
    "fp_max_iter",
    "cfl_mode",
    "smoothing_order",
    "snapshot_times",
    "output_dir",
    "emit_fields",
    "init.plus",
    "init.minus",
];

pub const DEFAULT_OUTPUT_DIR: &str = "sim_out";

struct Entry {
    line: usize,
    value: String,
}

fn parse_err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse { line, msg: msg.into() }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn parse_entries(text: &str) -> Result<BTreeMap<String, Entry>, CliError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected 'key = value', found '{content}'")))?;
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(parse_err(line, format!("unknown key '{key}'")));
        }
        if value.is_empty() {
            return Err(parse_err(line, format!("empty value for '{key}'")));
        }
        if let Some(prev) = map.insert(key.to_string(), Entry { line, value: value.to_string() }) {
            return Err(parse_err(line, format!("duplicate key '{key}' (first on line {})", prev.line)));
        }
    }
    Ok(map)
}

fn get<T: std::str::FromStr>(map: &BTreeMap<String, Entry>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match map.get(key) {
        None => Ok(None),
        Some(e) => e
            .value
            .parse::<T>()
            .map(Some)
            .map_err(|err| parse_err(e.line, format!("{key}: {err}"))),
    }
}

fn required<T: std::str::FromStr>(map: &BTreeMap<String, Entry>, key: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    get(map, key)?.ok_or_else(|| invalid(format!("missing required key '{key}'")))
}

fn list<T>(
    map: &BTreeMap<String, Entry>,
    key: &str,
    item: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<Vec<T>>, CliError> {
    let Some(e) = map.get(key) else { return Ok(None) };
    e.value
        .split(',')
        .map(|s| item(s.trim()).map_err(|m| parse_err(e.line, format!("{key}: {m}"))))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

/// Parses and validates a configuration, filling defaults.
///
/// A `preset` supplies initial data, stress, smoothing order and snapshot times;
/// explicit keys override them. `M`, `N`, `T`, `N_T` and `L` are always required.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let map = parse_entries(text)?;
    let preset_name: Option<String> = get(&map, "preset")?;
    let base = match &preset_name {
        Some(name) => Some(preset(name).map_err(|_| {
            parse_err(map["preset"].line, format!("unknown preset '{name}'"))
        })?),
        None => None,
    };

    let order: usize = required(&map, "M")?;
    let n: usize = required(&map, "N")?;
    let t_final: f64 = required(&map, "T")?;
    let steps: usize = required(&map, "N_T")?;
    let l: f64 = required(&map, "L")?;

    let stress = match get::<String>(&map, "stress.kind")? {
        None => {
            if map.contains_key("stress.a0") || map.contains_key("stress.a1") {
                return Err(invalid("stress.a0/stress.a1 given without stress.kind"));
            }
            base.as_ref().map(|b| b.params.stress).unwrap_or_else(StressSpec::zero)
        }
        Some(kind) => {
            let a0: Option<f64> = get(&map, "stress.a0")?;
            let a1: Option<f64> = get(&map, "stress.a1")?;
            let line = map["stress.kind"].line;
            match kind.as_str() {
                "zero" if a0.is_none() && a1.is_none() => StressSpec::zero(),
                "constant" if a1.is_none() => StressSpec::constant(a0.unwrap_or(0.0)),
                "linear" => StressSpec::linear(a0.unwrap_or(0.0), a1.unwrap_or(0.0)),
                "zero" | "constant" => {
                    return Err(invalid(format!("stress.kind = {kind} does not take every coefficient given")))
                }
                other => return Err(parse_err(line, format!("unknown stress.kind '{other}'"))),
            }
        }
    };

    let mut params = SimParams::new(order, n, t_final, steps, l, stress);
    params.smoothing_order = base.as_ref().and_then(|b| b.params.smoothing_order);
    if let Some(tol) = get(&map, "fp_tol")? {
        params.fp_tol = tol;
    }
    if let Some(it) = get(&map, "fp_max_iter")? {
        params.fp_max_iter = it;
    }
    if let Some(s) = get::<usize>(&map, "smoothing_order")? {
        params.smoothing_order = Some(s);
    }
    params.cfl_mode = match get::<String>(&map, "cfl_mode")?.as_deref() {
        None | Some("strict") => CflMode::Strict,
        Some("practical") => CflMode::Practical,
        Some(other) => return Err(parse_err(map["cfl_mode"].line, format!("unknown cfl_mode '{other}'"))),
    };
    params.validate().map_err(|e| match e {
        dislocation_core::Error::InvalidParams(m) => invalid(m),
        other => invalid(other.to_string()),
    })?;

    let profile = |key: &str, fallback: Option<InitialProfile>| -> Result<InitialProfile, CliError> {
        match map.get(key) {
            Some(e) => e.value.parse().map_err(|m: String| parse_err(e.line, format!("{key}: {m}"))),
            None => fallback.ok_or_else(|| invalid(format!("missing '{key}' (or a preset)"))),
        }
    };
    let init_plus = profile("init.plus", base.as_ref().map(|b| b.init_plus))?;
    let init_minus = profile("init.minus", base.as_ref().map(|b| b.init_minus))?;

    let snapshot_times = match list(&map, "snapshot_times", |s| {
        s.parse::<f64>().map_err(|e| format!("bad time '{s}': {e}"))
    })? {
        Some(v) => v,
        None => match &base {
            Some(b) if b.snapshot_times.iter().all(|&t| t <= t_final) => b.snapshot_times.clone(),
            _ => vec![0.0, t_final],
        },
    };
    if let Some(bad) = snapshot_times.iter().find(|&&t| !(0.0..=t_final).contains(&t)) {
        return Err(invalid(format!("snapshot time {bad} outside [0, {t_final}]")));
    }

    let emit_fields = list(&map, "emit_fields", |s| {
        FieldKind::parse(s).ok_or_else(|| format!("unknown field '{s}'"))
    })?
    .unwrap_or_else(|| vec![FieldKind::ThetaPlus]);

    let output_dir = get::<String>(&map, "output_dir")?.unwrap_or_else(|| DEFAULT_OUTPUT_DIR.to_string());

    Ok(RunConfig {
        params,
        preset: preset_name,
        init_plus,
        init_minus,
        snapshot_times,
        output_dir: PathBuf::from(output_dir),
        emit_fields,
    })
}

impl RunConfig {
    /// Configuration equivalent to a named preset, writing into `output_dir`.
    pub fn from_preset(name: &str, output_dir: PathBuf) -> Result<Self, CliError> {
        let p = preset(name).map_err(|_| invalid(format!("unknown preset '{name}'")))?;
        Ok(Self {
            params: p.params,
            preset: Some(p.name),
            init_plus: p.init_plus,
            init_minus: p.init_minus,
            snapshot_times: p.snapshot_times,
            output_dir,
            emit_fields: vec![FieldKind::ThetaPlus],
        })
    }

    /// Text that [`parse_config`] maps back to this configuration.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "M = {}", p.order);
        let _ = writeln!(s, "N = {}", p.n);
        let _ = writeln!(s, "T = {:?}", p.t_final);
        let _ = writeln!(s, "N_T = {}", p.steps);
        let _ = writeln!(s, "L = {:?}", p.l);
        if let Some(name) = &self.preset {
            let _ = writeln!(s, "preset = {name}");
        }
        let kind = match p.stress.kind {
            StressKind::Zero => "zero",
            StressKind::Constant => "constant",
            StressKind::Linear => "linear",
        };
        let _ = writeln!(s, "stress.kind = {kind}");
        match p.stress.kind {
            StressKind::Zero => {}
            StressKind::Constant => {
                let _ = writeln!(s, "stress.a0 = {:?}", p.stress.a0);
            }
            StressKind::Linear => {
                let _ = writeln!(s, "stress.a0 = {:?}", p.stress.a0);
                let _ = writeln!(s, "stress.a1 = {:?}", p.stress.a1);
            }
        }
        let _ = writeln!(s, "fp_tol = {:?}", p.fp_tol);
        let _ = writeln!(s, "fp_max_iter = {}", p.fp_max_iter);
        let mode = match p.cfl_mode {
            CflMode::Strict => "strict",
            CflMode::Practical => "practical",
        };
        let _ = writeln!(s, "cfl_mode = {mode}");
        if let Some(o) = p.smoothing_order {
            let _ = writeln!(s, "smoothing_order = {o}");
        }
        let _ = writeln!(s, "init.plus = {}", self.init_plus);
        let _ = writeln!(s, "init.minus = {}", self.init_minus);
        let times: Vec<String> = self.snapshot_times.iter().map(|t| format!("{t:?}")).collect();
        let _ = writeln!(s, "snapshot_times = {}", times.join(", "));
        let fields: Vec<&str> = self.emit_fields.iter().map(|f| f.name()).collect();
        let _ = writeln!(s, "emit_fields = {}", fields.join(", "));
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        s
    }
}
