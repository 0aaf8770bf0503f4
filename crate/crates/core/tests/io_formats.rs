use dislocation_core::experiments::{preset, refinement_study};
use dislocation_core::io::{
    format_field, parse_diagnostics, read_diagnostics, read_field, read_refinement, write_diagnostics,
    write_field, write_refinement, DIAGNOSTICS_HEADER,
};
use dislocation_core::{run, Error};
use proptest::prelude::*;
use std::path::Path;

#[test]
fn field_header_layout() {
    let f = dislocation_core::GridField::from_fn(2, |i, j| (i * 2 + j) as f64);
    let text = format_field(&f, 1.98, "theta_plus");
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# N=2 t=1.9800000000000000e0 name=theta_plus");
    assert_eq!(lines.next().unwrap().split(',').count(), 2);
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn malformed_field_rejected() {
    let p = Path::new("x.csv");
    let parse = dislocation_core::io::parse_field;
    assert!(matches!(parse("", p), Err(Error::Format { .. })));
    assert!(matches!(parse("# N=2 t=0 name=a\n1,2\n", p), Err(Error::Format { .. })));
    assert!(matches!(parse("# N=2 t=0 name=a\n1,2\n3\n", p), Err(Error::Format { .. })));
    assert!(matches!(parse("N=1 t=0 name=a\n1\n", p), Err(Error::Format { .. })));
    assert!(parse("# N=1 t=0 name=a\n1\n", p).is_ok());
}

#[test]
fn diagnostics_round_trip() {
    let pre = preset("stationary").unwrap();
    let (a, b) = pre.initial_fields();
    let out = run(&pre.params, &a, &b, &mut []).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("diagnostics.csv");
    let all: Vec<_> = std::iter::once(&out.initial).chain(&out.records).collect();
    write_diagnostics(&path, all.iter().copied()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), DIAGNOSTICS_HEADER);
    let rows = read_diagnostics(&path).unwrap();
    assert_eq!(rows.len(), pre.params.steps + 1);
    for (row, rec) in rows.iter().zip(all) {
        assert!(row.bounds_ok);
        assert_eq!(&row.record, rec);
    }
    assert!(parse_diagnostics("n,t\n", &path).is_err());
}

#[test]
fn refinement_round_trip() {
    let report = refinement_study(&preset("stationary").unwrap(), 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("refinement.csv");
    write_refinement(&path, &report).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("level,N,N_T,err_linf_plus,err_l2_plus,err_linf_minus,err_l2_minus,order_linf,order_l2\n"));
    assert!(text.lines().nth(1).unwrap().ends_with(",,,,,,"));
    assert_eq!(read_refinement(&path).unwrap(), report);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn field_snapshot_round_trip_is_bit_exact(
        n in 1usize..9,
        vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 64),
        t in 0.0..10.0f64,
    ) {
        let f = dislocation_core::GridField::from_vec(n, vals[..n * n].to_vec()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_field(&path, &f, t, "rho_plus").unwrap();
        let (h, g) = read_field(&path).unwrap();
        prop_assert_eq!(h.n, n);
        prop_assert_eq!(h.t.to_bits(), t.to_bits());
        prop_assert_eq!(h.name, "rho_plus");
        for (x, y) in f.values().iter().zip(g.values()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
