use dislocation_core::diagnostics::{discrete_time_derivative, DiagnosticsRecord};
use dislocation_core::experiments::{preset, refinement_study, InitialProfile, Preset};
use dislocation_core::fields::linf;
use dislocation_core::scheme::{cfl_check, fixed_point_step, Sink, StepView};
use dislocation_core::spectral::build_sigma_field;
use dislocation_core::{run, CflMode, Error, GridField, SimParams, State, StressSpec};

fn reduced_case1(n: usize, steps: usize) -> Preset {
    let mut p = preset("case1").unwrap();
    p.params = SimParams::new(4, n, 0.05, steps, 1.0, StressSpec::linear(0.0, 3.0));
    p
}

#[test]
fn reduced_case1_refinement_contracts() {
    let base = reduced_case1(16, 300);
    assert!(cfl_check(&base.params).unwrap().strict_ok);
    let report = refinement_study(&base, 3).unwrap();
    let errs = report.successive_linf();
    assert_eq!(errs.len(), 2);
    assert!(errs[1] < errs[0], "{errs:?}");
    assert!(report.rows[2].order_linf.is_some());
}

#[test]
fn stationary_refinement_is_exact() {
    let report = refinement_study(&preset("stationary").unwrap(), 3).unwrap();
    assert_eq!(report.rows.iter().map(|r| r.n).collect::<Vec<_>>(), [16, 32, 64]);
    assert_eq!(report.rows.iter().map(|r| r.steps).collect::<Vec<_>>(), [100, 200, 400]);
    for r in &report.rows[1..] {
        assert!(r.err_linf().unwrap() <= 1e-12 && r.err_l2().unwrap() <= 1e-12);
        assert!(r.order_linf.is_none());
    }
}

#[test]
fn zero_steps_returns_smoothed_initial_state() {
    let mut p = preset("pure-transport").unwrap();
    p.params.steps = 0;
    let (a, b) = p.initial_fields();
    let out = run(&p.params, &a, &b, &mut []).unwrap();
    assert!(out.records.is_empty() && out.cfl.is_none());
    assert_eq!(out.final_state.step(), 0);
    let smoothed = dislocation_core::scheme::smooth_initial(&a, 8);
    assert_eq!(out.final_state.rho_plus(), &smoothed);
}

#[test]
fn equal_species_without_stress_stay_put() {
    let mut p = SimParams::new(3, 16, 0.02, 200, 1.0, StressSpec::zero());
    p.smoothing_order = Some(16);
    let g = InitialProfile::GAUSSIAN.sample(16);
    let out = run(&p, &g, &g, &mut []).unwrap();
    assert_eq!(out.final_state.rho_plus(), out.initial_state.rho_plus());
    assert_eq!(out.final_state.rho_minus(), out.initial_state.rho_minus());
    assert!(out.reports.iter().all(|r| r.fp_iters == 1));
    let (tp, tm) = discrete_time_derivative(&out.initial_state, &out.final_state, p.dt()).unwrap();
    assert_eq!(linf(&tp) + linf(&tm), 0.0);
}

#[test]
fn strict_mode_rejects_table_parameters() {
    let mut p = preset("case1").unwrap();
    p.params.cfl_mode = CflMode::Strict;
    let (a, b) = p.initial_fields();
    assert!(matches!(run(&p.params, &a, &b, &mut []), Err(Error::CflViolation(_))));
}

#[test]
fn strict_mode_rejects_inadmissible_initial_data() {
    let mut p = SimParams::new(1, 8, 0.01, 2, 0.1, StressSpec::zero());
    p.smoothing_order = Some(8);
    let steep = InitialProfile::Cosine { amplitude: 1.0, k1: 1, k2: 0 }.sample(8);
    let r = run(&p, &steep, &GridField::zeros(8), &mut []);
    assert!(matches!(r, Err(Error::PositivityLost { step: 0, .. })));
}

#[test]
fn mismatched_grid_rejected() {
    let p = SimParams::new(1, 8, 0.01, 2, 1.0, StressSpec::zero());
    let r = run(&p, &GridField::zeros(4), &GridField::zeros(4), &mut []);
    assert!(matches!(r, Err(Error::SizeMismatch { .. })));
}

struct Collect(Vec<DiagnosticsRecord>);

impl Sink for Collect {
    fn accept(&mut self, view: &StepView<'_>) -> Result<(), String> {
        self.0.push(view.record.clone());
        Ok(())
    }
}

struct FailAt(usize);

impl Sink for FailAt {
    fn accept(&mut self, view: &StepView<'_>) -> Result<(), String> {
        if view.state.step() == self.0 {
            Err("disk full".into())
        } else {
            Ok(())
        }
    }
}

#[test]
fn sinks_see_every_state_and_can_abort() {
    let pre = preset("pure-transport").unwrap();
    let (a, b) = pre.initial_fields();
    let mut c = Collect(Vec::new());
    let out = run(&pre.params, &a, &b, &mut [&mut c]).unwrap();
    assert_eq!(c.0.len(), pre.params.steps + 1);
    assert_eq!(c.0[0], out.initial);
    assert_eq!(&c.0[1..], out.records.as_slice());
    assert!(out.all_bounds_ok());
    let mut f = FailAt(3);
    match run(&pre.params, &a, &b, &mut [&mut f]) {
        Err(Error::Sink(msg)) => assert_eq!(msg, "disk full"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn pure_transport_velocity_is_unit() {
    let pre = preset("pure-transport").unwrap();
    let (a, b) = pre.initial_fields();
    let out = run(&pre.params, &a, &b, &mut []).unwrap();
    assert!(out.reports.iter().all(|r| (r.lambda_max - 1.0).abs() < 1e-15));
}

#[test]
fn one_step_time_derivative_bounded_by_velocity_times_gradient() {
    let p = SimParams::new(2, 16, 0.01, 10, 1.0, StressSpec::constant(0.4));
    let sigma = build_sigma_field(2, 16).unwrap();
    let rho = InitialProfile::Cosine { amplitude: 0.01, k1: 1, k2: 1 }.sample(16);
    let minus = InitialProfile::Cosine { amplitude: -0.01, k1: 1, k2: 0 }.sample(16);
    let s0 = State::new(0, 0.0, rho, minus).unwrap();
    let (s1, _) = fixed_point_step(&s0, &p, &sigma, p.dt()).unwrap();
    let (tp, tm) = discrete_time_derivative(&s0, &s1, p.dt()).unwrap();
    let theta_max = s0
        .theta_plus_x1()
        .values()
        .iter()
        .chain(s0.theta_minus_x1().values())
        .fold(0.0_f64, |m, v| m.max(v + p.l));
    assert!(linf(&tp).max(linf(&tm)) <= p.velocity_bound() * theta_max + 1e-12);
}
