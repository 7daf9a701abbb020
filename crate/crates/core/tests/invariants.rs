use proptest::prelude::*;

use iim_core::corrections::{stencil_correction_first, stencil_correction_second};
use iim_core::grid::{self, GridSpec, VectorGridFunction};
use iim_core::harness::{error_modulo_constant, ManufacturedCase};
use iim_core::interface::{classify, find_intersections, InterfaceGeometry, Motion, ScalarJump};
use iim_core::random::{random_field, random_vector_field};
use iim_core::solver::{JumpMode, Solver, SolverConfig};
use iim_core::spectral::{self, Symbol};

fn jump(v: [f64; 6]) -> ScalarJump {
    ScalarJump { value: v[0], grad: [v[1], v[2]], hess: [[v[3], v[5]], [v[5], v[4]]] }
}

fn coeffs() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-5.0..5.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stencil_corrections_are_linear_in_the_jump(a in coeffs(), b in coeffs(), s in -3.0..3.0f64, r in 0.3..2.5f64) {
        let spec = GridSpec::periodic_2pi(16).unwrap();
        let geom = InterfaceGeometry::circle([0.1, -0.2], r, Motion::Static, std::f64::consts::PI).unwrap();
        let sides = classify(spec, &geom, 0.0);
        let recs = find_intersections(spec, &geom, &sides, 0.0).unwrap();
        let (ja, jb) = (jump(a), jump(b));
        let jc = ja * s + jb;
        for rec in &recs {
            for f in [stencil_correction_first, stencil_correction_second] {
                let (ca, cb, cc) = (f(&spec, rec, &ja), f(&spec, rec, &jb), f(&spec, rec, &jc));
                for k in 0..2 {
                    prop_assert_eq!(ca[k].0, cc[k].0);
                    let want = s * ca[k].1 + cb[k].1;
                    prop_assert!((cc[k].1 - want).abs() <= 1e-9 * (1.0 + want.abs()));
                }
            }
        }
    }

    #[test]
    fn error_modulo_constant_ignores_shifts(seed in any::<u64>(), c in -1e3..1e3f64) {
        let spec = GridSpec::periodic_2pi(8).unwrap();
        let (a, b) = (random_field(spec, seed), random_field(spec, seed.wrapping_add(1)));
        let (e, m) = error_modulo_constant(&a, &b);
        let (e2, m2) = error_modulo_constant(&a.map(|v| v + c), &b);
        prop_assert!((e - e2).abs() <= 1e-9 * (1.0 + c.abs()));
        prop_assert!((m - m2).abs() <= 1e-9 * (1.0 + c.abs()));
        prop_assert!(m <= e + 1e-12);
    }

    #[test]
    fn resolvent_solves_the_helmholtz_problem(seed in any::<u64>(), lambda in 0.05..4.0f64) {
        let spec = GridSpec::periodic_2pi(16).unwrap();
        let f = random_field(spec, seed);
        let tau = lambda * spec.h();
        let g = spectral::cn_resolvent(&f, tau);
        let back = &g - &(&grid::laplacian_h(&g) * (0.5 * tau));
        prop_assert!((&back - &f).max_abs() <= 1e-10 * f.max_abs());
    }

    #[test]
    fn multipliers_match_stencils(seed in any::<u64>()) {
        let spec = GridSpec::periodic_2pi(12).unwrap();
        let f = random_field(spec, seed);
        for (sym, direct) in [
            (Symbol::laplacian(spec), grid::laplacian_h(&f)),
            (Symbol::wide_laplacian(spec), grid::wide_laplacian(&f)),
            (Symbol::centered_diff(spec, 1), grid::centered_diff(&f, 1)),
            (Symbol::forward_diff(spec, 0), grid::forward_diff(&f, 0)),
        ] {
            let via = spectral::apply_multiplier(&f, &sym);
            prop_assert!((&via - &direct).max_abs() <= 1e-10 * (1.0 + direct.max_abs()));
        }
    }

    #[test]
    fn exact_projection_is_discretely_divergence_free(seed in any::<u64>()) {
        let spec = GridSpec::periodic_2pi(16).unwrap();
        let v = random_vector_field(spec, seed);
        let p0 = spectral::project_p0(&v);
        prop_assert!(grid::divergence_h(&p0).max_abs() <= 1e-10 * v.max_abs());
    }
}

#[test]
fn quiescent_state_stays_at_rest() {
    let case = ManufacturedCase::quiescent();
    let spec = GridSpec::periodic_2pi(16).unwrap();
    let solver =
        Solver::new(case.problem(spec, JumpMode::Analytic, 0.0).unwrap(), SolverConfig { t_final: 0.5, ..SolverConfig::default() })
            .unwrap();
    let end = solver.run(|s| assert_eq!(s.u.max_abs(), 0.0)).unwrap();
    assert_eq!(end.u, VectorGridFunction::zeros(spec));
}

#[test]
fn pressure_right_hand_side_is_mean_free_every_step() {
    for case in [ManufacturedCase::static_circle(), ManufacturedCase::moving_circle()] {
        let spec = GridSpec::periodic_2pi(32).unwrap();
        let cfg = SolverConfig { t_final: 0.3, ..SolverConfig::default() };
        let solver = Solver::new(case.problem(spec, JumpMode::Analytic, 0.0).unwrap(), cfg).unwrap();
        let mut steps = 0;
        solver
            .run(|s| {
                steps += 1;
                assert!(s.diagnostics.residual_mean <= 1e-13, "step {}: {:e}", s.step, s.diagnostics.residual_mean);
            })
            .unwrap();
        assert_eq!(steps, solver.steps());
    }
}

#[test]
fn velocity_defect_is_rejected_for_both_circle_cases() {
    for case in [ManufacturedCase::static_circle(), ManufacturedCase::moving_circle()] {
        let err = case.with_velocity_defect(1e-6).validate().unwrap_err();
        assert!(matches!(err, iim_core::Error::ConstructionInvalid { .. }), "{err}");
    }
}
