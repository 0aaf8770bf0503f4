//! Gradient entropies, the spectral dissipation, velocity norms and the per-step
//! bound monitor.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::fields::{deviation_from_x1_mean, l2_scaled, linf, GridField, State};
use crate::scheme::{SimParams, POSITIVITY_SLACK};
use crate::spectral::{build_sigma_field, dft2, signed_frequency, SpectrumField};

pub const LINF_SLACK: f64 = 1e-8;
pub const DEVIATION_SLACK: f64 = 1e-10;
pub const STEP_ENTROPY_SLACK: f64 = 1e-8;
pub const CUMULATIVE_ENTROPY_SLACK: f64 = 1e-6;
pub const VELOCITY_SLACK: f64 = 1e-10;
pub const DISSIPATION_SLACK: f64 = 1e-12;
const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyKind {
    /// `f(x) = x ln(x + e)`
    F,
    /// `g(x) = x ln x`, `g(0) = 0`
    G,
}

pub fn entropy_f_density(x: f64) -> f64 {
    let x = x.max(0.0);
    x * (x + E).ln()
}

pub fn entropy_g_density(x: f64) -> f64 {
    let x = x.max(0.0);
    if x < LOG_FLOOR {
        0.0
    } else {
        x * x.ln()
    }
}

/// `2(f(e) + L ln 2)`, the additive constant of the cumulative entropy bound.
pub fn cumulative_entropy_constant(l: f64) -> f64 {
    2.0 * (entropy_f_density(E) + l * 2f64.ln())
}

fn entropy_sum(state: &State, l: f64, kind: EntropyKind) -> f64 {
    let phi = match kind {
        EntropyKind::F => entropy_f_density,
        EntropyKind::G => entropy_g_density,
    };
    let dx2 = {
        let dx = state.rho_plus().dx();
        dx * dx
    };
    [state.theta_plus_x1(), state.theta_minus_x1()]
        .iter()
        .map(|th| th.values().iter().map(|&v| phi(v + l)).sum::<f64>() * dx2)
        .sum()
}

/// `Σ_± Σ (Δx)² φ(θ^±_{x₁} + L)`.
pub fn entropy(state: &State, l: f64, kind: EntropyKind) -> Result<f64> {
    let min = state.theta_min_plus(l);
    if min < -POSITIVITY_SLACK {
        return Err(Error::NegativeArgument { value: min });
    }
    Ok(entropy_sum(state, l, kind))
}

/// `D = Σ_m c_m(σ̄) |c_m(θ⁺_{x₁} − θ⁻_{x₁})|²`.
pub fn dissipation(state: &State, sigma_dft: &SpectrumField) -> f64 {
    let diff = state.theta_plus_x1().sub(state.theta_minus_x1()).expect("species share a grid");
    let c = dft2(&diff);
    sigma_dft.iter().map(|(m1, m2, s)| s.re * c.get(m1, m2).norm_sqr()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityNorms {
    pub l2: f64,
    pub h1_semi: f64,
}

/// Spectral L² norm and H¹ seminorm of `σ̄ ∗ ρ_diff`.
pub fn velocity_h1_diagnostics(rho_diff: &GridField, sigma_dft: &SpectrumField) -> VelocityNorms {
    let n = rho_diff.n();
    let c = dft2(rho_diff);
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for (m1, m2, s) in sigma_dft.iter() {
        let a = (s * c.get(m1, m2)).norm_sqr();
        let k1 = signed_frequency(m1, n) as f64;
        let k2 = signed_frequency(m2, n) as f64;
        l2 += a;
        h1 += 4.0 * PI * PI * (k1 * k1 + k2 * k2) * a;
    }
    VelocityNorms { l2: l2.sqrt(), h1_semi: h1.sqrt() }
}

/// `τ^± = (ρ^{n+1} − ρⁿ) / Δt`.
pub fn discrete_time_derivative(prev: &State, next: &State, dt: f64) -> Result<(GridField, GridField)> {
    let tp = next.rho_plus().sub(prev.rho_plus())?.scale(1.0 / dt);
    let tm = next.rho_minus().sub(prev.rho_minus())?.scale(1.0 / dt);
    Ok((tp, tm))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeCheck {
    pub order: usize,
    pub max_slope: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Finite-difference slopes of `σ_M` on a `4M` grid against `(2π/3)M(M−1)(M+1)`.
pub fn sigma_slope_check(order: usize) -> Result<SlopeCheck> {
    let n = 4 * order;
    let sigma = build_sigma_field(order, n)?;
    let v = sigma.values();
    let inv_dx = n as f64;
    let mut max_slope = 0.0_f64;
    for i in 0..n as isize {
        for j in 0..n as isize {
            let s1 = (v.at(i + 1, j) - v.at(i, j)).abs() * inv_dx;
            let s2 = (v.at(i, j + 1) - v.at(i, j)).abs() * inv_dx;
            max_slope = max_slope.max(s1).max(s2);
        }
    }
    let m = order as f64;
    let bound = 2.0 * PI / 3.0 * m * (m - 1.0) * (m + 1.0);
    let passed = max_slope <= bound + 1e-6 * m * m * m;
    Ok(SlopeCheck { order, max_slope, bound, passed })
}

pub fn sigma_derivative_bound_check(order: usize) -> bool {
    sigma_slope_check(order).map(|c| c.passed).unwrap_or(false)
}

/// Pass/fail of each monitored bound for one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundFlags {
    pub linf: bool,
    pub deviation: bool,
    pub positivity: bool,
    pub entropy_step: bool,
    pub entropy_cumulative: bool,
    pub velocity: bool,
    pub dissipation: bool,
}

impl BoundFlags {
    pub const ALL_OK: Self = Self {
        linf: true,
        deviation: true,
        positivity: true,
        entropy_step: true,
        entropy_cumulative: true,
        velocity: true,
        dissipation: true,
    };

    pub fn all(&self) -> bool {
        self.first_failure().is_none()
    }

    /// Name of the first failing bound, in a fixed order.
    pub fn first_failure(&self) -> Option<&'static str> {
        [
            (self.positivity, "gradient positivity"),
            (self.deviation, "deviation bound"),
            (self.linf, "linf bound"),
            (self.velocity, "velocity bound"),
            (self.dissipation, "dissipation sign"),
            (self.entropy_step, "one-step entropy"),
            (self.entropy_cumulative, "cumulative entropy"),
        ]
        .into_iter()
        .find(|(ok, _)| !ok)
        .map(|(_, name)| name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub n: usize,
    pub t: f64,
    pub entropy_f: f64,
    pub entropy_g: f64,
    pub dissipation: f64,
    pub linf_rho_plus: f64,
    pub linf_rho_minus: f64,
    pub deviation_plus: f64,
    pub deviation_minus: f64,
    pub theta_min_plus_l: f64,
    pub lambda_max: f64,
    pub velocity_l2: f64,
    pub velocity_h1_semi: f64,
    pub fp_iters: usize,
    pub bounds: BoundFlags,
}

impl DiagnosticsRecord {
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.entropy_f,
            self.entropy_g,
            self.dissipation,
            self.linf_rho_plus,
            self.linf_rho_minus,
            self.deviation_plus,
            self.deviation_minus,
            self.theta_min_plus_l,
            self.lambda_max,
            self.velocity_l2,
            self.velocity_h1_semi,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Tracks the running quantities needed by the step-wise bounds.
#[derive(Debug, Clone)]
pub struct Monitor {
    l: f64,
    dt: f64,
    linf_rate: f64,
    velocity_bound: f64,
    linf0: f64,
    entropy_f0: f64,
    prev_entropy_g: f64,
    cumulative_dissipation: f64,
    sigma_dft: SpectrumField,
    initial: DiagnosticsRecord,
}

impl Monitor {
    pub fn new(params: &SimParams, sigma_dft: SpectrumField, state0: &State, lambda0: &GridField) -> Self {
        let l = params.l;
        let vb = params.velocity_bound();
        let mut initial = measure(state0, l, &sigma_dft, lambda0, 0);
        initial.bounds = BoundFlags {
            positivity: initial.theta_min_plus_l >= -POSITIVITY_SLACK,
            deviation: initial.deviation_plus.max(initial.deviation_minus) <= 2.0 * l + DEVIATION_SLACK,
            dissipation: initial.dissipation >= -DISSIPATION_SLACK,
            ..BoundFlags::ALL_OK
        };
        Self {
            l,
            dt: if params.steps > 0 { params.dt() } else { 0.0 },
            linf_rate: l * vb,
            velocity_bound: vb,
            linf0: initial.linf_rho_plus.max(initial.linf_rho_minus),
            entropy_f0: initial.entropy_f,
            prev_entropy_g: initial.entropy_g,
            cumulative_dissipation: 0.0,
            sigma_dft,
            initial,
        }
    }

    pub fn initial_record(&self) -> &DiagnosticsRecord {
        &self.initial
    }

    /// Measures `state` and evaluates every bound against the history so far.
    pub fn observe(&mut self, state: &State, lambda_plus: &GridField, fp_iters: usize) -> DiagnosticsRecord {
        let mut rec = measure(state, self.l, &self.sigma_dft, lambda_plus, fp_iters);
        self.cumulative_dissipation += self.dt * rec.dissipation;
        rec.bounds = BoundFlags {
            linf: rec.linf_rho_plus.max(rec.linf_rho_minus)
                <= self.linf0 + self.linf_rate * rec.t + LINF_SLACK,
            deviation: rec.deviation_plus.max(rec.deviation_minus) <= 2.0 * self.l + DEVIATION_SLACK,
            positivity: rec.theta_min_plus_l >= -POSITIVITY_SLACK,
            entropy_step: rec.entropy_g + self.dt * rec.dissipation
                <= self.prev_entropy_g + STEP_ENTROPY_SLACK,
            entropy_cumulative: rec.entropy_f + self.cumulative_dissipation
                <= self.entropy_f0 + cumulative_entropy_constant(self.l) + CUMULATIVE_ENTROPY_SLACK,
            velocity: rec.lambda_max <= self.velocity_bound + VELOCITY_SLACK,
            dissipation: rec.dissipation >= -DISSIPATION_SLACK,
        };
        self.prev_entropy_g = rec.entropy_g;
        rec
    }

    pub fn cumulative_dissipation(&self) -> f64 {
        self.cumulative_dissipation
    }
}

fn measure(
    state: &State,
    l: f64,
    sigma_dft: &SpectrumField,
    lambda_plus: &GridField,
    fp_iters: usize,
) -> DiagnosticsRecord {
    let vel = velocity_h1_diagnostics(&state.rho_diff(), sigma_dft);
    DiagnosticsRecord {
        n: state.step(),
        t: state.time(),
        entropy_f: entropy_sum(state, l, EntropyKind::F),
        entropy_g: entropy_sum(state, l, EntropyKind::G),
        dissipation: dissipation(state, sigma_dft),
        linf_rho_plus: linf(state.rho_plus()),
        linf_rho_minus: linf(state.rho_minus()),
        deviation_plus: deviation_from_x1_mean(state.rho_plus()),
        deviation_minus: deviation_from_x1_mean(state.rho_minus()),
        theta_min_plus_l: state.theta_min_plus(l),
        lambda_max: linf(lambda_plus),
        velocity_l2: vel.l2,
        velocity_h1_semi: vel.h1_semi,
        fp_iters,
        bounds: BoundFlags::ALL_OK,
    }
}

/// `l2_scaled` of the field itself, for comparing against [`VelocityNorms::l2`].
pub fn field_l2(v: &GridField) -> f64 {
    l2_scaled(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::sigma_dft_coeffs;

    fn flat_state(n: usize) -> State {
        State::new(0, 0.0, GridField::zeros(n), GridField::zeros(n)).unwrap()
    }

    #[test]
    fn flat_state_entropies() {
        let s = flat_state(6);
        let f = entropy(&s, 1.0, EntropyKind::F).unwrap();
        assert!((f - 2.0 * (1.0 + E).ln()).abs() < 1e-14);
        assert!((f - 2.626_523_4).abs() < 1e-6);
        assert_eq!(entropy(&s, 1.0, EntropyKind::G).unwrap(), 0.0);
    }

    #[test]
    fn entropy_rejects_negative_arguments() {
        let p = GridField::from_fn(4, |i, _| -(i as f64) * 2.0);
        let s = State::new(0, 0.0, p, GridField::zeros(4)).unwrap();
        assert!(matches!(entropy(&s, 1.0, EntropyKind::G), Err(Error::NegativeArgument { .. })));
    }

    #[test]
    fn densities_at_zero() {
        assert_eq!(entropy_g_density(0.0), 0.0);
        assert_eq!(entropy_f_density(0.0), 0.0);
        assert_eq!(entropy_g_density(-1e-13), 0.0);
    }

    #[test]
    fn dissipation_vanishes_for_equal_species_and_order_one() {
        let rho = GridField::sample(8, |x, y| 0.03 * (2.0 * PI * (x + 2.0 * y)).cos());
        let s = State::new(0, 0.0, rho.clone(), rho.clone()).unwrap();
        assert!(dissipation(&s, &sigma_dft_coeffs(3, 8).unwrap()).abs() < 1e-15);
        let s = State::new(0, 0.0, rho, GridField::zeros(8)).unwrap();
        assert_eq!(dissipation(&s, &sigma_dft_coeffs(1, 8).unwrap()), 0.0);
    }

    #[test]
    fn velocity_norms_vanish_on_x2_profiles() {
        let h = GridField::from_fn(8, |_, j| (j as f64).cos());
        let v = velocity_h1_diagnostics(&h, &sigma_dft_coeffs(4, 8).unwrap());
        assert!(v.l2 < 1e-14 && v.h1_semi < 1e-13);
        let z = velocity_h1_diagnostics(&GridField::zeros(8), &sigma_dft_coeffs(4, 8).unwrap());
        assert_eq!((z.l2, z.h1_semi), (0.0, 0.0));
    }

    #[test]
    fn time_derivative_of_identical_states() {
        let s = flat_state(4);
        let (a, b) = discrete_time_derivative(&s, &s, 0.1).unwrap();
        assert_eq!(linf(&a) + linf(&b), 0.0);
    }

    #[test]
    fn slope_bounds_small_orders() {
        let c1 = sigma_slope_check(1).unwrap();
        assert_eq!((c1.bound, c1.max_slope), (0.0, 0.0));
        assert!(c1.passed);
        let c2 = sigma_slope_check(2).unwrap();
        assert!((c2.bound - 4.0 * PI).abs() < 1e-12);
        assert!(c2.passed && c2.max_slope > 0.0);
        let c5 = sigma_slope_check(5).unwrap();
        assert!((c5.bound - 80.0 * PI).abs() < 1e-10);
        assert!(c5.passed);
    }

    #[test]
    fn failure_order_names() {
        let mut f = BoundFlags::ALL_OK;
        assert!(f.all());
        f.entropy_step = false;
        f.positivity = false;
        assert_eq!(f.first_failure(), Some("gradient positivity"));
    }
}
