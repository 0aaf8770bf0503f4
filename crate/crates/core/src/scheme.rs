//! The semi-implicit upwind scheme: parameters and CFL validation, regularized
//! initial data, the nonlocal velocity, the Banach fixed-point solve of one time
//! step, and the marching loop.

use crate::diagnostics::{DiagnosticsRecord, Monitor};
use crate::error::{Error, Result};
use crate::fields::{linf, GridField, State};
use crate::spectral::{
    build_sigma_field, fejer_weight, sigma_spectrum, signed_frequency, Fft2, SigmaField,
    SpectrumField,
};

/// Positivity slack on `θ + L`.
pub const POSITIVITY_SLACK: f64 = 1e-12;
const GROWTH_LIMIT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StressKind {
    Zero,
    Constant,
    Linear,
}

/// External stress `a(t) = a0 + a1·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressSpec {
    pub kind: StressKind,
    pub a0: f64,
    pub a1: f64,
}

impl StressSpec {
    pub fn zero() -> Self {
        Self { kind: StressKind::Zero, a0: 0.0, a1: 0.0 }
    }

    pub fn constant(a0: f64) -> Self {
        Self { kind: StressKind::Constant, a0, a1: 0.0 }
    }

    pub fn linear(a0: f64, a1: f64) -> Self {
        Self { kind: StressKind::Linear, a0, a1 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            StressKind::Zero => 0.0,
            StressKind::Constant => self.a0,
            StressKind::Linear => self.a0 + self.a1 * t,
        }
    }

    /// `‖a‖_∞` over `[0, t_final]`; an affine function peaks at an endpoint.
    pub fn sup_norm(&self, t_final: f64) -> f64 {
        match self.kind {
            StressKind::Zero => 0.0,
            StressKind::Constant => self.a0.abs(),
            StressKind::Linear => self.a0.abs().max((self.a0 + self.a1 * t_final).abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CflMode {
    /// Refuse to run outside the sufficient conditions and assert every bound.
    Strict,
    /// Record violations as diagnostics and keep going.
    Practical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Fejér order `M` of the kernel regularization.
    pub order: usize,
    /// Grid size `N`.
    pub n: usize,
    pub t_final: f64,
    /// Number of time steps `N_T`.
    pub steps: usize,
    /// Total density per cell `L`.
    pub l: f64,
    pub stress: StressSpec,
    /// Base fixed-point tolerance, scaled by `max(1, ‖ρⁿ‖_∞)` at each step.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub cfl_mode: CflMode,
    /// Fejér order used to regularize the initial data; defaults to `order`.
    pub smoothing_order: Option<usize>,
}

impl SimParams {
    pub fn new(order: usize, n: usize, t_final: f64, steps: usize, l: f64, stress: StressSpec) -> Self {
        Self {
            order,
            n,
            t_final,
            steps,
            l,
            stress,
            fp_tol: 1e-12,
            fp_max_iter: 200,
            cfl_mode: CflMode::Strict,
            smoothing_order: None,
        }
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn ratio(&self) -> f64 {
        self.dt() / self.dx()
    }

    pub fn smoothing(&self) -> usize {
        self.smoothing_order.unwrap_or(self.order)
    }

    /// `4M²L + ‖a‖_∞`, the a priori velocity bound.
    pub fn velocity_bound(&self) -> f64 {
        let m2 = (self.order * self.order) as f64;
        4.0 * m2 * self.l + self.stress.sup_norm(self.t_final)
    }

    /// `18M²L·Δt/Δx`, the Lipschitz constant of the fixed-point map.
    pub fn contraction_factor(&self) -> f64 {
        18.0 * (self.order * self.order) as f64 * self.l * self.ratio()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n == 0 {
            return bad("N must be positive".into());
        }
        if self.order == 0 {
            return bad("M must be at least 1".into());
        }
        if self.order > self.n {
            return bad("M must not exceed N".into());
        }
        if let Some(s) = self.smoothing_order {
            if s == 0 || s > self.n {
                return bad("smoothing order must satisfy 1 <= order <= N".into());
            }
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return bad("L must be positive".into());
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad("T must be finite and nonnegative".into());
        }
        if self.steps > 0 && !(self.dt() > 0.0) {
            return bad("time step must be positive".into());
        }
        if !(self.fp_tol > 0.0) {
            return bad("fp_tol must be positive".into());
        }
        if self.fp_max_iter == 0 {
            return bad("fp_max_iter must be positive".into());
        }
        if !self.stress.a0.is_finite() || !self.stress.a1.is_finite() {
            return bad("stress coefficients must be finite".into());
        }
        Ok(())
    }
}

/// The evaluated step-size conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflReport {
    pub strict_ok: bool,
    pub ratio: f64,
    pub dt: f64,
    /// `1 / (4(4M²L + ‖a‖_∞))`
    pub ratio_bound_velocity: f64,
    /// `1 / (18M²L)`
    pub ratio_bound_contraction: f64,
    /// `1 / (2L(4M²L + ‖a‖_∞))`
    pub dt_bound: f64,
}

impl CflReport {
    pub fn evaluate(params: &SimParams) -> Result<Self> {
        params.validate()?;
        if params.steps == 0 || !(params.dt() > 0.0) {
            return Err(Error::InvalidParams("time step must be positive".into()));
        }
        let vb = params.velocity_bound();
        let m2 = (params.order * params.order) as f64;
        let ratio_bound_velocity = 1.0 / (4.0 * vb);
        let ratio_bound_contraction = 1.0 / (18.0 * m2 * params.l);
        let dt_bound = 1.0 / (2.0 * params.l * vb);
        let ratio = params.ratio();
        let dt = params.dt();
        let strict_ok =
            ratio < ratio_bound_velocity.min(ratio_bound_contraction) && dt < dt_bound;
        Ok(Self { strict_ok, ratio, dt, ratio_bound_velocity, ratio_bound_contraction, dt_bound })
    }
}

/// Evaluates both step-size conditions; in strict mode a violation is an error.
pub fn cfl_check(params: &SimParams) -> Result<CflReport> {
    let report = CflReport::evaluate(params)?;
    if params.cfl_mode == CflMode::Strict && !report.strict_ok {
        return Err(Error::CflViolation(format!(
            "dt/dx = {:.6e} (limits {:.6e}, {:.6e}), dt = {:.6e} (limit {:.6e})",
            report.ratio,
            report.ratio_bound_velocity,
            report.ratio_bound_contraction,
            report.dt,
            report.dt_bound
        )));
    }
    Ok(report)
}

/// Multiplies the DFT of `rho0` by the product Fejér weight at signed frequencies.
pub fn smooth_initial(rho0: &GridField, order: usize) -> GridField {
    let n = rho0.n();
    let fft = Fft2::new(n);
    let c = fft.forward(rho0).expect("plan matches field size");
    let weighted = c.map_indexed(|m1, m2, z| {
        let w = fejer_weight(signed_frequency(m1, n), order) * fejer_weight(signed_frequency(m2, n), order);
        z * w
    });
    fft.inverse(&weighted).expect("plan matches spectrum size")
}

/// Convolution with the sampled kernel, with the transform planned once.
#[derive(Debug, Clone)]
pub struct VelocityOperator {
    fft: Fft2,
    sigma_hat: SpectrumField,
}

impl VelocityOperator {
    pub fn new(sigma: &SigmaField) -> Result<Self> {
        let n = sigma.values().n();
        let fft = Fft2::new(n);
        let sigma_hat = fft.forward(sigma.values())?;
        Ok(Self { fft, sigma_hat })
    }

    pub fn n(&self) -> usize {
        self.fft.n()
    }

    /// `Σ (Δx)² σ[ℓ,r] v[i-ℓ, j-r]`.
    pub fn convolve(&self, v: &GridField) -> Result<GridField> {
        let c = self.fft.forward(v)?.product(&self.sigma_hat)?;
        self.fft.inverse(&c)
    }

    /// `(λ⁺, λ⁻)` with `λ⁺ = -(a + σ̄ ∗ ρ_diff)` and `λ⁻ = -λ⁺`.
    pub fn velocity(&self, rho_diff: &GridField, a_val: f64) -> Result<(GridField, GridField)> {
        let conv = self.convolve(rho_diff)?;
        let plus = conv.map(|c| -(a_val + c));
        let minus = plus.map(|v| -v);
        Ok((plus, minus))
    }
}

pub fn velocity(rho_diff: &GridField, a_val: f64, sigma: &SigmaField) -> Result<(GridField, GridField)> {
    rho_diff.check_same(sigma.values())?;
    VelocityOperator::new(sigma)?.velocity(rho_diff, a_val)
}

#[inline]
fn pos(x: f64) -> f64 {
    0.5 * (x + x.abs())
}

#[inline]
fn neg(x: f64) -> f64 {
    0.5 * (x.abs() - x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Index of the computed state.
    pub n: usize,
    /// Applications of the fixed-point map.
    pub fp_iters: usize,
    /// Max-norm difference of the last two iterates.
    pub fp_residual: f64,
    /// Max-norm difference between the first iterate and the initial guess.
    pub initial_residual: f64,
    /// `‖v − F(v)‖_∞` at the accepted iterate.
    pub scheme_residual: f64,
    /// Tolerance the iteration was run against.
    pub tolerance: f64,
    pub lambda_max: f64,
    /// Theoretical contraction constant `18M²L·Δt/Δx`.
    pub contraction_q: f64,
}

/// The frozen explicit part of one step.
struct Frozen<'a> {
    state: &'a State,
    dt: f64,
    a: f64,
    up_plus: Vec<f64>,
    down_plus: Vec<f64>,
    up_minus: Vec<f64>,
    down_minus: Vec<f64>,
}

impl<'a> Frozen<'a> {
    fn new(state: &'a State, l: f64, dt: f64, a: f64) -> Self {
        let updown = |th: &GridField| {
            let up: Vec<f64> = th.values().iter().map(|v| v + l).collect();
            let down = GridField::from_fn(th.n(), |i, j| th.at(i as isize - 1, j as isize) + l)
                .into_values();
            (up, down)
        };
        let (up_plus, down_plus) = updown(state.theta_plus_x1());
        let (up_minus, down_minus) = updown(state.theta_minus_x1());
        Self { state, dt, a, up_plus, down_plus, up_minus, down_minus }
    }

    /// Applies `F^±` given the convolution `σ̄ ∗ v`.
    fn apply(&self, conv: &GridField) -> (Vec<f64>, Vec<f64>) {
        let rp = self.state.rho_plus().values();
        let rm = self.state.rho_minus().values();
        let mut plus = Vec::with_capacity(rp.len());
        let mut minus = Vec::with_capacity(rp.len());
        for (k, &c) in conv.values().iter().enumerate() {
            let lp = -(self.a + c);
            let lm = -lp;
            plus.push(rp[k] + self.dt * (pos(lp) * self.up_plus[k] - neg(lp) * self.down_plus[k]));
            minus.push(rm[k] + self.dt * (pos(lm) * self.up_minus[k] - neg(lm) * self.down_minus[k]));
        }
        (plus, minus)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn diff_field(n: usize, p: &[f64], m: &[f64]) -> GridField {
    GridField::from_vec(n, p.iter().zip(m).map(|(a, b)| a - b).collect()).expect("sizes agree")
}

/// Kernel, transform plans and parameters for repeated stepping.
#[derive(Debug, Clone)]
pub struct Scheme {
    params: SimParams,
    sigma: SigmaField,
    op: VelocityOperator,
    sigma_dft: SpectrumField,
}

impl Scheme {
    pub fn new(params: SimParams) -> Result<Self> {
        params.validate()?;
        let sigma = build_sigma_field(params.order, params.n)?;
        Self::with_sigma(params, sigma)
    }

    pub fn with_sigma(params: SimParams, sigma: SigmaField) -> Result<Self> {
        params.validate()?;
        if sigma.values().n() != params.n || sigma.order() != params.order {
            return Err(Error::InvalidParams("kernel field does not match parameters".into()));
        }
        let op = VelocityOperator::new(&sigma)?;
        let sigma_dft = sigma_spectrum(&sigma)?;
        Ok(Self { params, sigma, op, sigma_dft })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn sigma(&self) -> &SigmaField {
        &self.sigma
    }

    pub fn sigma_dft(&self) -> &SpectrumField {
        &self.sigma_dft
    }

    pub fn operator(&self) -> &VelocityOperator {
        &self.op
    }

    /// `λ⁺` evaluated on `state` with the stress at the state's own time.
    pub fn lambda_plus(&self, state: &State) -> Result<GridField> {
        Ok(self.op.velocity(&state.rho_diff(), self.params.stress.eval(state.time()))?.0)
    }

    /// Advances `state` by one step, starting the iteration from `ρⁿ`.
    pub fn step(&self, state: &State) -> Result<(State, StepReport)> {
        self.step_from(state, state.rho_plus(), state.rho_minus())
    }

    /// Advances `state` by one step from an explicit initial guess.
    pub fn step_from(
        &self,
        state: &State,
        guess_plus: &GridField,
        guess_minus: &GridField,
    ) -> Result<(State, StepReport)> {
        let t_next = (state.step() + 1) as f64 * self.params.dt();
        self.step_at(state, guess_plus, guess_minus, t_next)
    }

    /// One step landing at `t_next`, with the stress evaluated there.
    pub fn step_at(
        &self,
        state: &State,
        guess_plus: &GridField,
        guess_minus: &GridField,
        t_next: f64,
    ) -> Result<(State, StepReport)> {
        let p = &self.params;
        state.rho_plus().check_same(guess_plus)?;
        state.rho_plus().check_same(guess_minus)?;
        if state.grid_size() != p.n {
            return Err(Error::SizeMismatch { left: p.n, right: state.grid_size() });
        }
        let next_n = state.step() + 1;
        let frozen = Frozen::new(state, p.l, p.dt(), p.stress.eval(t_next));
        let scale = linf(state.rho_plus()).max(linf(state.rho_minus())).max(1.0);
        let tol = p.fp_tol * scale;
        let n = p.n;

        let mut vp = guess_plus.values().to_vec();
        let mut vm = guess_minus.values().to_vec();
        let mut iters = 0;
        let mut last = f64::INFINITY;
        let mut initial_residual = 0.0;
        let mut growth = 0;
        loop {
            iters += 1;
            let conv = self.op.convolve(&diff_field(n, &vp, &vm))?;
            let (np, nm) = frozen.apply(&conv);
            let diff = max_diff(&np, &vp).max(max_diff(&nm, &vm));
            if !diff.is_finite() {
                return Err(Error::NonFinite { step: next_n });
            }
            if iters == 1 {
                initial_residual = diff;
            }
            vp = np;
            vm = nm;
            if diff <= tol {
                last = diff;
                break;
            }
            growth = if diff > last { growth + 1 } else { 0 };
            last = diff;
            if growth >= GROWTH_LIMIT || iters >= p.fp_max_iter {
                return Err(Error::FixedPointDiverged { step: next_n, iters, residual: diff });
            }
        }

        let conv = self.op.convolve(&diff_field(n, &vp, &vm))?;
        let (fp, fm) = frozen.apply(&conv);
        let scheme_residual = max_diff(&fp, &vp).max(max_diff(&fm, &vm));
        let lambda_max = conv.values().iter().map(|c| (frozen.a + c).abs()).fold(0.0, f64::max);

        let next = State::new(next_n, t_next, GridField::from_vec(n, vp)?, GridField::from_vec(n, vm)?)?;
        if !next.rho_plus().is_finite() || !next.rho_minus().is_finite() {
            return Err(Error::NonFinite { step: next_n });
        }
        let min = next.theta_min_plus(p.l);
        if p.cfl_mode == CflMode::Strict && min < -POSITIVITY_SLACK {
            return Err(Error::PositivityLost { step: next_n, min });
        }
        let report = StepReport {
            n: next_n,
            fp_iters: iters,
            fp_residual: last,
            initial_residual,
            scheme_residual,
            tolerance: tol,
            lambda_max,
            contraction_q: p.contraction_factor(),
        };
        Ok((next, report))
    }
}

/// One step of the scheme with `λ` evaluated at `a(t_next)`.
pub fn fixed_point_step(
    state: &State,
    params: &SimParams,
    sigma: &SigmaField,
    t_next: f64,
) -> Result<(State, StepReport)> {
    let scheme = Scheme::with_sigma(params.clone(), sigma.clone())?;
    scheme.step_at(state, state.rho_plus(), state.rho_minus(), t_next)
}

/// What a sink sees after every accepted state (including the initial one).
pub struct StepView<'a> {
    pub state: &'a State,
    pub record: &'a DiagnosticsRecord,
    pub report: Option<&'a StepReport>,
    pub lambda_plus: &'a GridField,
}

/// Output hook called on the loop thread.
pub trait Sink {
    fn accept(&mut self, view: &StepView<'_>) -> std::result::Result<(), String>;
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub initial_state: State,
    pub final_state: State,
    pub initial: DiagnosticsRecord,
    pub records: Vec<DiagnosticsRecord>,
    pub reports: Vec<StepReport>,
    pub cfl: Option<CflReport>,
}

impl RunOutput {
    pub fn all_bounds_ok(&self) -> bool {
        self.initial.bounds.all() && self.records.iter().all(|r| r.bounds.all())
    }
}

/// Regularizes both initial fields, then marches `N_T` steps.
pub fn run(
    params: &SimParams,
    initial_plus: &GridField,
    initial_minus: &GridField,
    sinks: &mut [&mut dyn Sink],
) -> Result<RunOutput> {
    params.validate()?;
    initial_plus.check_same(initial_minus)?;
    if initial_plus.n() != params.n {
        return Err(Error::SizeMismatch { left: params.n, right: initial_plus.n() });
    }
    let cfl = if params.steps > 0 { Some(cfl_check(params)?) } else { None };
    let strict = params.cfl_mode == CflMode::Strict;

    let scheme = Scheme::new(params.clone())?;
    let smoothing = params.smoothing();
    let state0 = State::new(
        0,
        0.0,
        smooth_initial(initial_plus, smoothing),
        smooth_initial(initial_minus, smoothing),
    )?;
    if strict && state0.theta_min_plus(params.l) < -POSITIVITY_SLACK {
        return Err(Error::PositivityLost { step: 0, min: state0.theta_min_plus(params.l) });
    }

    let lambda0 = scheme.lambda_plus(&state0)?;
    let mut monitor = Monitor::new(params, scheme.sigma_dft().clone(), &state0, &lambda0);
    let initial = monitor.initial_record().clone();
    emit(sinks, &StepView { state: &state0, record: &initial, report: None, lambda_plus: &lambda0 })?;

    let mut records = Vec::with_capacity(params.steps);
    let mut reports = Vec::with_capacity(params.steps);
    let mut state = state0.clone();
    for _ in 0..params.steps {
        let (next, report) = scheme.step(&state)?;
        let lambda = scheme.lambda_plus(&next)?;
        let record = monitor.observe(&next, &lambda, report.fp_iters);
        if !record.is_finite() {
            return Err(Error::NonFinite { step: next.step() });
        }
        if strict {
            if let Some(bound) = record.bounds.first_failure() {
                return Err(Error::BoundViolated { bound, step: next.step() });
            }
        }
        emit(sinks, &StepView { state: &next, record: &record, report: Some(&report), lambda_plus: &lambda })?;
        records.push(record);
        reports.push(report);
        state = next;
    }

    Ok(RunOutput { initial_state: state0, final_state: state, initial, records, reports, cfl })
}

fn emit(sinks: &mut [&mut dyn Sink], view: &StepView<'_>) -> Result<()> {
    for sink in sinks.iter_mut() {
        sink.accept(view).map_err(Error::Sink)?;
    }
    Ok(())
}
