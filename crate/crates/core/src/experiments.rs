//! Named presets and the successive-refinement harness.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{q1_eval, GridField, State};
use crate::scheme::{run, CflMode, SimParams, StressSpec};

/// Periodic distance from `x` to `1/2`.
fn center_distance(x: f64) -> f64 {
    let d = (x - 0.5).abs();
    d.min(1.0 - d)
}

/// `(1/6) exp(−10 (d₁² + d₂²))` with `d_k` the periodic distance to the center.
pub fn gaussian_initial(x1: f64, x2: f64) -> f64 {
    InitialProfile::GAUSSIAN.eval(x1, x2)
}

/// Analytic initial density, evaluated at grid nodes `(i/N, j/N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialProfile {
    Zero,
    Constant(f64),
    /// `amplitude · exp(−sharpness (d₁² + d₂²))`
    Gaussian { amplitude: f64, sharpness: f64 },
    /// `amplitude · cos(2π(k₁x₁ + k₂x₂))`
    Cosine { amplitude: f64, k1: i64, k2: i64 },
}

impl InitialProfile {
    pub const GAUSSIAN: Self = Self::Gaussian { amplitude: 1.0 / 6.0, sharpness: 10.0 };

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant(c) => c,
            Self::Gaussian { amplitude, sharpness } => {
                let (d1, d2) = (center_distance(x1), center_distance(x2));
                amplitude * (-sharpness * (d1 * d1 + d2 * d2)).exp()
            }
            Self::Cosine { amplitude, k1, k2 } => {
                amplitude * (2.0 * std::f64::consts::PI * (k1 as f64 * x1 + k2 as f64 * x2)).cos()
            }
        }
    }

    pub fn sample(&self, n: usize) -> GridField {
        GridField::sample(n, |x1, x2| self.eval(x1, x2))
    }
}

impl fmt::Display for InitialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Zero => write!(f, "zero"),
            Self::Constant(c) => write!(f, "constant:{c:?}"),
            Self::Gaussian { amplitude, sharpness } => write!(f, "gaussian:{amplitude:?}:{sharpness:?}"),
            Self::Cosine { amplitude, k1, k2 } => write!(f, "cosine:{amplitude:?}:{k1}:{k2}"),
        }
    }
}

impl FromStr for InitialProfile {
    type Err = String;

    /// Accepts `zero`, `constant:c`, `gaussian`, `gaussian:amp[:sharpness]` and
    /// `cosine:amp:k1:k2`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.trim().split(':').map(str::trim).collect();
        let real = |t: &str| t.parse::<f64>().map_err(|e| format!("bad number '{t}': {e}"));
        let int = |t: &str| t.parse::<i64>().map_err(|e| format!("bad integer '{t}': {e}"));
        let profile = match parts.as_slice() {
            ["zero"] => Self::Zero,
            ["constant", c] => Self::Constant(real(c)?),
            ["gaussian"] => Self::GAUSSIAN,
            ["gaussian", a] => Self::Gaussian { amplitude: real(a)?, sharpness: 10.0 },
            ["gaussian", a, k] => Self::Gaussian { amplitude: real(a)?, sharpness: real(k)? },
            ["cosine", a, k1, k2] => Self::Cosine { amplitude: real(a)?, k1: int(k1)?, k2: int(k2)? },
            _ => return Err(format!("unrecognized initial profile '{s}'")),
        };
        let finite = match profile {
            Self::Zero => true,
            Self::Constant(c) => c.is_finite(),
            Self::Gaussian { amplitude, sharpness } => amplitude.is_finite() && sharpness.is_finite(),
            Self::Cosine { amplitude, .. } => amplitude.is_finite(),
        };
        if !finite {
            return Err(format!("non-finite parameter in initial profile '{s}'"));
        }
        Ok(profile)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub params: SimParams,
    pub init_plus: InitialProfile,
    pub init_minus: InitialProfile,
    pub snapshot_times: Vec<f64>,
}

pub const PRESET_NAMES: [&str; 4] = ["case1", "case2", "stationary", "pure-transport"];

pub fn preset(name: &str) -> Result<Preset> {
    let build = |params: SimParams, plus, minus, snaps: Vec<f64>| Preset {
        name: name.to_string(),
        params,
        init_plus: plus,
        init_minus: minus,
        snapshot_times: snaps,
    };
    let table = || {
        let mut p = SimParams::new(50, 50, 3.38, 200, 1.0, StressSpec::linear(0.0, 3.0));
        p.cfl_mode = CflMode::Practical;
        p
    };
    let g = InitialProfile::GAUSSIAN;
    match name {
        "case1" => Ok(build(table(), g, g, vec![0.0, 1.98, 3.38])),
        "case2" => {
            let half = InitialProfile::Gaussian { amplitude: 1.0 / 12.0, sharpness: 10.0 };
            Ok(build(table(), g, half, vec![0.0, 1.98, 3.38]))
        }
        "stationary" => {
            let p = SimParams::new(2, 16, 0.05, 100, 1.0, StressSpec::zero());
            let c = InitialProfile::Constant(0.1);
            Ok(build(p, c, c, vec![0.0, 0.05]))
        }
        "pure-transport" => {
            let mut p = SimParams::new(1, 16, 0.25, 100, 1.0, StressSpec::constant(-1.0));
            p.smoothing_order = Some(8);
            Ok(build(p, g, InitialProfile::Zero, vec![0.0, 0.25]))
        }
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

impl Preset {
    pub fn initial_fields(&self) -> (GridField, GridField) {
        (self.init_plus.sample(self.params.n), self.init_minus.sample(self.params.n))
    }
}

/// Step index closest to `t` for a run with time step `dt`.
pub fn nearest_step(t: f64, params: &SimParams) -> usize {
    if params.steps == 0 {
        return 0;
    }
    ((t / params.dt()).round().max(0.0) as usize).min(params.steps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementRow {
    pub level: usize,
    pub n: usize,
    pub steps: usize,
    /// Differences against the previous level; `None` on level 0.
    pub err_linf_plus: Option<f64>,
    pub err_l2_plus: Option<f64>,
    pub err_linf_minus: Option<f64>,
    pub err_l2_minus: Option<f64>,
    /// `log₂` of successive error ratios, max over species.
    pub order_linf: Option<f64>,
    pub order_l2: Option<f64>,
}

impl RefinementRow {
    pub fn err_linf(&self) -> Option<f64> {
        Some(self.err_linf_plus?.max(self.err_linf_minus?))
    }

    pub fn err_l2(&self) -> Option<f64> {
        Some(self.err_l2_plus?.max(self.err_l2_minus?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    pub rows: Vec<RefinementRow>,
}

impl RefinementReport {
    /// Successive L∞ errors (max over species), one per level after the first.
    pub fn successive_linf(&self) -> Vec<f64> {
        self.rows.iter().filter_map(RefinementRow::err_linf).collect()
    }

    pub fn is_monotone_decreasing(&self) -> bool {
        self.successive_linf().windows(2).all(|w| w[1] < w[0])
    }
}

/// Minimum error on both sides of a ratio before an order is reported.
pub const ORDER_ERROR_FLOOR: f64 = 1e-13;

fn observed_order(coarse: Option<f64>, fine: Option<f64>) -> Option<f64> {
    match (coarse, fine) {
        (Some(c), Some(f)) if c > ORDER_ERROR_FLOOR && f > ORDER_ERROR_FLOOR => Some((c / f).log2()),
        _ => None,
    }
}

/// Runs `levels` strict-mode refinements of `base` with `N·2^l` cells and `N_T·2^l`
/// steps (fixed `Δt/Δx`), then compares successive final states on the finest grid.
pub fn refinement_study(base: &Preset, levels: usize) -> Result<RefinementReport> {
    if levels < 2 {
        return Err(Error::InvalidParams("refinement needs at least 2 levels".into()));
    }
    let finals: Vec<State> = (0..levels)
        .into_par_iter()
        .map(|lvl| {
            let mut p = base.params.clone();
            p.n = base.params.n << lvl;
            p.steps = base.params.steps << lvl;
            p.cfl_mode = CflMode::Strict;
            let plus = base.init_plus.sample(p.n);
            let minus = base.init_minus.sample(p.n);
            run(&p, &plus, &minus, &mut []).map(|out| out.final_state)
        })
        .collect::<Result<_>>()?;

    let fine_n = finals.last().map(State::grid_size).unwrap_or(0);
    let sampled: Vec<(GridField, GridField)> = finals
        .iter()
        .map(|s| resample(s, fine_n))
        .collect::<Result<_>>()?;

    let mut rows: Vec<RefinementRow> = Vec::with_capacity(levels);
    for (lvl, state) in finals.iter().enumerate() {
        let mut row = RefinementRow {
            level: lvl,
            n: state.grid_size(),
            steps: base.params.steps << lvl,
            err_linf_plus: None,
            err_l2_plus: None,
            err_linf_minus: None,
            err_l2_minus: None,
            order_linf: None,
            order_l2: None,
        };
        if lvl > 0 {
            let (cp, cm) = &sampled[lvl - 1];
            let (fp, fm) = &sampled[lvl];
            let dp = fp.sub(cp)?;
            let dm = fm.sub(cm)?;
            row.err_linf_plus = Some(crate::fields::linf(&dp));
            row.err_l2_plus = Some(crate::fields::l2_scaled(&dp));
            row.err_linf_minus = Some(crate::fields::linf(&dm));
            row.err_l2_minus = Some(crate::fields::l2_scaled(&dm));
        }
        if let Some(prev) = rows.last() {
            row.order_linf = observed_order(prev.err_linf(), row.err_linf());
            row.order_l2 = observed_order(prev.err_l2(), row.err_l2());
        }
        rows.push(row);
    }
    Ok(RefinementReport { rows })
}

/// Q¹ values of a final state at the nodes of an `n × n` grid.
fn resample(state: &State, n: usize) -> Result<(GridField, GridField)> {
    let mut plus = GridField::zeros(n);
    let mut minus = GridField::zeros(n);
    let h = 1.0 / n as f64;
    for i in 0..n {
        for j in 0..n {
            let (p, m) = q1_eval(state, state, state.time(), i as f64 * h, j as f64 * h)?;
            plus.set(i, j, p);
            minus.set(i, j, m);
        }
    }
    Ok((plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_values() {
        assert!((gaussian_initial(0.5, 0.5) - 1.0 / 6.0).abs() < 1e-16);
        assert!((gaussian_initial(0.0, 0.0) - (-5.0f64).exp() / 6.0).abs() < 1e-17);
        assert_eq!(gaussian_initial(0.6, 0.5), gaussian_initial(0.4, 0.5));
    }

    #[test]
    fn presets() {
        let c1 = preset("case1").unwrap();
        assert_eq!((c1.params.order, c1.params.n, c1.params.steps), (50, 50, 200));
        assert_eq!(c1.params.t_final, 3.38);
        assert_eq!(c1.params.stress, StressSpec::linear(0.0, 3.0));
        assert_eq!(c1.params.cfl_mode, CflMode::Practical);
        assert_eq!(c1.init_plus, c1.init_minus);
        let c2 = preset("case2").unwrap();
        let (p, m) = c2.initial_fields();
        assert!(p.scale(0.5).max_abs_diff(&m).unwrap() < 1e-17);
        let st = preset("stationary").unwrap();
        assert_eq!(st.params.stress, StressSpec::zero());
        assert_eq!(st.init_plus, st.init_minus);
        assert!(matches!(preset("case3"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn shared_nodes_agree_across_grids() {
        let g = InitialProfile::GAUSSIAN;
        let (a, b) = (g.sample(16), g.sample(32));
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(a.get(i, j), b.get(2 * i, 2 * j));
            }
        }
    }

    #[test]
    fn profile_text_round_trip() {
        for p in [
            InitialProfile::Zero,
            InitialProfile::Constant(0.1),
            InitialProfile::GAUSSIAN,
            InitialProfile::Cosine { amplitude: -0.05, k1: 1, k2: -2 },
        ] {
            assert_eq!(p.to_string().parse::<InitialProfile>().unwrap(), p);
        }
        assert_eq!("gaussian".parse::<InitialProfile>().unwrap(), InitialProfile::GAUSSIAN);
        assert!("sawtooth".parse::<InitialProfile>().is_err());
        assert!("constant:nan".parse::<InitialProfile>().is_err());
    }

    #[test]
    fn snapshot_index_rounding() {
        let p = preset("case1").unwrap().params;
        assert_eq!(nearest_step(1.98, &p), 117);
        assert_eq!(nearest_step(3.38, &p), 200);
        assert_eq!(nearest_step(0.0, &p), 0);
    }

    #[test]
    fn refinement_needs_two_levels() {
        let st = preset("stationary").unwrap();
        assert!(matches!(refinement_study(&st, 1), Err(Error::InvalidParams(_))));
    }
}
