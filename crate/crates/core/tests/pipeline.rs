use std::sync::Arc;

use tide_core::assembly::PreconditionerKind;
use tide_core::stepper::simulate;
use tide_core::verify::{estimate_inverse_constant, measure_inverse_constant};
use tide_core::{CellKind, Coefficient, DofMap, FeFamily, Mesh, SolverConfig, State, TideParams};

fn spaces(n: usize, cell: CellKind) -> (DofMap, DofMap) {
    let mesh = Arc::new(Mesh::build_structured(n, cell).unwrap());
    (
        DofMap::new(mesh.clone(), FeFamily::rt_for(cell)).unwrap(),
        DofMap::new(mesh, FeFamily::Dg0).unwrap(),
    )
}

fn initial(v: &DofMap, w: &DofMap) -> State {
    State::from_fields(
        v,
        w,
        |x| [x[1] * (1.0 - x[1]), 0.0],
        |x| (x[0] - 0.5) * (x[1] - 0.25),
    )
    .unwrap()
}

#[test]
fn varying_coriolis_and_depth_conserve_energy() {
    let (v, w) = spaces(6, CellKind::Quad);
    let params = TideParams::new(0.02)
        .with_rossby(0.1)
        .with_drag(0.0)
        .with_coriolis(Coefficient::field(|x| 2.0 * x[1] - 1.0))
        .with_depth(Coefficient::field(|x| 1.0 + 0.5 * x[0]));
    let cfg = SolverConfig::default().with_rtol(1e-13);
    let out = simulate(
        &params,
        &v,
        &w,
        PreconditionerKind::Riesz,
        &cfg,
        &initial(&v, &w),
        40,
    )
    .unwrap();
    assert_eq!(out.trace.len(), 41);
    assert!(
        out.trace.max_relative_drift() < 1e-10,
        "{}",
        out.trace.max_relative_drift()
    );
    assert!((out.state.t - 0.04 * 40.0).abs() < 1e-12);
}

#[test]
fn damped_quad_run_decays_under_every_preconditioner() {
    let (v, w) = spaces(4, CellKind::Quad);
    let params = TideParams::new(0.05).with_rossby(0.1);
    let cfg = SolverConfig::default().with_rtol(1e-12);
    let s0 = initial(&v, &w);
    let mut finals = Vec::new();
    for kind in [
        PreconditionerKind::MassDiag,
        PreconditionerKind::Riesz,
        PreconditionerKind::RieszLite,
        PreconditionerKind::None,
    ] {
        let out = simulate(&params, &v, &w, kind, &cfg, &s0, 10).unwrap();
        assert!(out.trace.is_nonincreasing(), "{kind}");
        finals.push(out.state.to_block());
    }
    for f in &finals[1..] {
        let diff = f
            .iter()
            .zip(&finals[0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
    }
}

#[test]
fn inverse_constant_is_mesh_independent() {
    for cell in [CellKind::Triangle, CellKind::Quad] {
        let dense = measure_inverse_constant(cell, &[8, 16]).unwrap();
        let c8 = dense[0].constant();
        let c16 = dense[1].constant();
        assert!((c16 - c8).abs() < 0.1 * c8, "{c8} {c16}");
        let c32 = estimate_inverse_constant(cell, 32, 400).unwrap().constant();
        assert!((c32 - c16).abs() < 0.1 * c16, "{c16} {c32}");
    }
}
