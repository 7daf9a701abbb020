//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails that is not listed in `KNOWN_FAILURES`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use iim_core::corrections::{stencil_correction_first, stencil_correction_second};
use iim_core::grid::{self, GridFunction, GridSpec, VectorGridFunction};
use iim_core::harness::{consistency_study, convergence_study, fitted_order, ManufacturedCase, StudyOptions};
use iim_core::interface::{classify, find_intersections, InterfaceGeometry, Motion, ScalarJump, Shape, Side};
use iim_core::random::{random_field, random_vector_field};
use iim_core::spectral;
use iim_core::Error;
use nalgebra::DMatrix;

// criterion 1
const IDENTITY_TOL: f64 = 1e-10;
const IDENTITY_FIELDS: u64 = 20;
const IDENTITY_GRIDS: [usize; 2] = [16, 64];
// criterion 2
const NORM_GRIDS: [usize; 4] = [16, 32, 64, 128];
const NORM_LAMBDA: f64 = 0.5;
const A_SPREAD_MAX: f64 = 0.05;
const D_INV_SPREAD_MAX: f64 = 0.05;
const DD_INV_LOG_RESIDUAL_MAX: f64 = 0.10;
const S_POWER_BOUND: f64 = 3.0;
const D_S_POWER_R_BOUND: f64 = 2.0;
const ORACLE_GRID: usize = 16;
const ORACLE_REL_TOL: f64 = 0.01;
// criterion 3
const STENCIL_GRIDS: [usize; 4] = [32, 64, 128, 256];
const FIRST_DIFF_ORDER_MIN: f64 = 1.9;
const SECOND_DIFF_ORDER_MIN: f64 = 0.9;
// fixed sub-cell shifts of the interface, the same on every grid
const SHIFT_STEPS: usize = 4;
const SHIFT_SPACING: f64 = 0.025;
// criterion 4
const TG_T: f64 = 0.5;
const TG_RATE_MIN: f64 = 1.9;
// criteria 5, 6
const FLOW_GRIDS: [usize; 2] = [64, 128];
const FLOW_T: f64 = 0.25;
const VELOCITY_RATE_MIN: f64 = 1.8;
const PRESSURE_RATE_MIN: f64 = 1.7;
const ABLATED_RATE_MAX: f64 = 1.5;
// criterion 7
const MEAN_RATE_MIN: f64 = 1.9;
const RESIDUAL_MEAN_MAX: f64 = 1e-13;
// criterion 8
const FLUX_MAX: f64 = 1e-8;

const KNOWN_FAILURES: &[&str] = &["6b"];

struct Outcome {
    id: &'static str,
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn report(o: &Outcome) {
    let tag = if o.passed { "PASS" } else { "FAIL" };
    let known = if !o.passed && KNOWN_FAILURES.contains(&o.id) { " (known)" } else { "" };
    println!("{tag}{known} [{}] {}: {} ({:.1}s)", o.id, o.name, o.detail, o.elapsed.as_secs_f64());
}

fn rel_diff(a: &VectorGridFunction, b: &VectorGridFunction) -> f64 {
    (a - b).max_abs() / b.max_abs().max(f64::MIN_POSITIVE)
}

fn apply_a_vec(v: &VectorGridFunction) -> VectorGridFunction {
    v.map_comps(|c| spectral::apply_a(c).expect("gradient components are mean-zero"))
}

fn operator_identities() -> Vec<Outcome> {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for &n in &IDENTITY_GRIDS {
        let spec = GridSpec::periodic_2pi(n).unwrap();
        for seed in 0..IDENTITY_FIELDS {
            let v = random_vector_field(spec, seed);
            let p0 = spectral::project_p0(&v);
            let pt = spectral::project_tilde_p(&v);
            let a_q = apply_a_vec(&(&v - &p0));
            worst = worst.max(rel_diff(&pt, &(&p0 + &a_q)));
            worst = worst.max(rel_diff(&spectral::project_p0(&p0), &p0));
            let p0_pt = spectral::project_p0(&pt);
            worst = worst.max(rel_diff(&p0_pt, &p0));
            worst = worst.max(rel_diff(&(&pt - &p0_pt), &a_q));
            let f = random_field(spec, 1000 + seed);
            let dd = grid::divergence_h(&grid::gradient_h(&f));
            let wide = grid::wide_laplacian(&f);
            worst = worst.max((&dd - &wide).max_abs() / wide.max_abs());
        }
    }
    vec![Outcome {
        id: "1",
        name: "operator identities",
        passed: worst <= IDENTITY_TOL,
        detail: format!("worst relative deviation {worst:.2e} <= {IDENTITY_TOL:e}"),
        elapsed: start.elapsed(),
        budget: Duration::from_secs(5),
    }]
}

/// Dense oracle: `K = Delta_h + 11^T / M^2` is invertible and
/// `Delta_h^+ = K^{-1} - 11^T / M^2`; the max norm is the largest absolute
/// row sum.
fn dense_inverse_laplacian_norm(n: usize) -> f64 {
    let spec = GridSpec::periodic_2pi(n).unwrap();
    let len = spec.len();
    let ih2 = 1.0 / (spec.h() * spec.h());
    let avg = 1.0 / len as f64;
    let mut k = DMatrix::from_element(len, len, avg);
    for node in spec.nodes() {
        let r = spec.index_of(node);
        k[(r, r)] -= 4.0 * ih2;
        for axis in 0..2 {
            for off in [-1, 1] {
                k[(r, spec.index_of(spec.neighbor(node, axis, off)))] += ih2;
            }
        }
    }
    let inv = k.lu().try_inverse().expect("K is nonsingular");
    (0..len).map(|r| (0..len).map(|c| (inv[(r, c)] - avg).abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn operator_norms() -> Vec<Outcome> {
    let start = Instant::now();
    let powers: Vec<u32> = (1..=256).collect();
    let rep = iim_core::harness::operator_norm_study(&NORM_GRIDS, &powers, NORM_LAMBDA).unwrap();
    let a_spread = rep.spread("A");
    let d_spread = rep.spread("d_inverse_laplacian");
    let fit = rep.log_fit("dd_inverse_laplacian");
    let s_max = rep.max("s_power");
    let ds_max = rep.max("d_s_power_r");
    let fast = rep.values("inverse_laplacian").iter().find(|r| r.0 == ORACLE_GRID).unwrap().2;
    let dense = dense_inverse_laplacian_norm(ORACLE_GRID);
    let oracle_rel = (fast - dense).abs() / dense;
    let elapsed = start.elapsed();
    let lemma = rep.values("A_lemma_bound");
    let below = rep.values("A").iter().zip(&lemma).all(|(a, b)| a.2 <= b.2);
    println!("info [2] lattice-sum bound on A: spread {:.4}, dominates the exact norm on every grid: {below}", rep.spread("A_lemma_bound"));
    let budget = Duration::from_secs(60);
    let mk = |id, name, passed, detail| Outcome { id, name, passed, detail, elapsed, budget };
    vec![
        mk("2a", "max norm of A h-uniform", a_spread <= A_SPREAD_MAX, format!("spread {a_spread:.4} <= {A_SPREAD_MAX}")),
        mk("2b", "D inverse Laplacian h-uniform", d_spread <= D_INV_SPREAD_MAX, format!("spread {d_spread:.2e} <= {D_INV_SPREAD_MAX}")),
        mk(
            "2c",
            "D^2 inverse Laplacian grows like |log h|",
            fit.max_relative_residual <= DD_INV_LOG_RESIDUAL_MAX && fit.c2 > 0.0,
            format!("fit {:.3} + {:.3}|log h|, residual {:.2e} <= {DD_INV_LOG_RESIDUAL_MAX}", fit.c1, fit.c2, fit.max_relative_residual),
        ),
        mk("2d", "powers of the step operator bounded", s_max <= S_POWER_BOUND, format!("max {s_max:.4} <= {S_POWER_BOUND}")),
        mk(
            "2e",
            "smoothing of the step operator",
            ds_max <= D_S_POWER_R_BOUND,
            format!("max sqrt(n tau) norm {ds_max:.4} <= {D_S_POWER_R_BOUND}"),
        ),
        mk(
            "2f",
            "dense oracle for the inverse Laplacian norm",
            oracle_rel <= ORACLE_REL_TOL,
            format!("kernel sum {fast:.10} vs dense {dense:.10}, relative {oracle_rel:.1e} <= {ORACLE_REL_TOL}"),
        ),
    ]
}

/// Value, gradient and Hessian of a closed-form function.
type Eval = fn([f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]);

fn inside_fn(x: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let (s0, c0, s1, c1) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
    let (sp, cp) = ((x[0] + x[1]).sin(), (x[0] + x[1]).cos());
    let v = c0 * s1 + 0.5 * sp;
    let g = [-s0 * s1 + 0.5 * cp, c0 * c1 + 0.5 * cp];
    let hxy = -s0 * c1 - 0.5 * sp;
    let hd = -c0 * s1 - 0.5 * sp;
    (v, g, [[hd, hxy], [hxy, hd]])
}

fn outside_fn(x: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let (s, c) = ((2.0 * x[0] - x[1]).sin(), (2.0 * x[0] - x[1]).cos());
    let v = s + 0.3 * x[1].cos();
    let g = [2.0 * c, -c - 0.3 * x[1].sin()];
    (v, g, [[-4.0 * s, 2.0 * s], [2.0 * s, -s - 0.3 * x[1].cos()]])
}

/// Max errors at irregular nodes of the corrected first and second
/// differences of a piecewise function across `geom`.
fn stencil_errors(geom: &InterfaceGeometry, n: usize) -> (f64, f64) {
    let spec = GridSpec::periodic_2pi(n).unwrap();
    let sides = classify(spec, geom, 0.0);
    let records = find_intersections(spec, geom, &sides, 0.0).unwrap();
    let eval = |node: [usize; 2]| -> Eval {
        match sides.side(node) {
            Side::Inside => inside_fn,
            Side::Outside => outside_fn,
        }
    };
    let f = GridFunction::from_index_fn(spec, |nd| eval(nd)(spec.node(nd)).0);
    let (mut e1, mut e2) = (0.0_f64, 0.0_f64);
    for axis in 0..2 {
        let mut d1 = grid::centered_diff(&f, axis);
        let mut d2 = grid::second_diff(&f, axis);
        let mut irregular = vec![false; spec.len()];
        for rec in records.iter().filter(|r| r.axis == axis) {
            let (vo, go, ho) = outside_fn(rec.x_star);
            let (vi, gi, hi) = inside_fn(rec.x_star);
            let jump = ScalarJump {
                value: vo - vi,
                grad: [go[0] - gi[0], go[1] - gi[1]],
                hess: [[ho[0][0] - hi[0][0], ho[0][1] - hi[0][1]], [ho[1][0] - hi[1][0], ho[1][1] - hi[1][1]]],
            };
            for (node, c) in stencil_correction_first(&spec, rec, &jump) {
                d1[node] += c;
                irregular[spec.index_of(node)] = true;
            }
            for (node, c) in stencil_correction_second(&spec, rec, &jump) {
                d2[node] += c;
            }
        }
        for node in spec.nodes().filter(|nd| irregular[spec.index_of(*nd)]) {
            let (_, g, hs) = eval(node)(spec.node(node));
            e1 = e1.max((d1[node] - g[axis]).abs());
            e2 = e2.max((d2[node] - hs[axis][axis]).abs());
        }
    }
    (e1, e2)
}

fn ellipse(shift: [f64; 2]) -> InterfaceGeometry {
    let shape = Shape::Ellipse { center: [0.2 + shift[0], -0.1 + shift[1]], semi_axes: [1.2, 0.7], angle: 0.4 };
    InterfaceGeometry::new(shape, Motion::Static, PI).unwrap()
}

/// Worst case over the shifted interfaces, so that coarse grids see as many
/// crossing positions within a cell as fine ones.
fn shifted_stencil_errors(n: usize) -> (f64, f64) {
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..SHIFT_STEPS * SHIFT_STEPS)
            .map(|k| {
                let shift = [(k % SHIFT_STEPS) as f64 * SHIFT_SPACING, (k / SHIFT_STEPS) as f64 * SHIFT_SPACING];
                scope.spawn(move || stencil_errors(&ellipse(shift), n))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).fold((0.0_f64, 0.0_f64), |a, e| (a.0.max(e.0), a.1.max(e.1)))
    })
}

fn stencil_consistency() -> Vec<Outcome> {
    let start = Instant::now();
    let h: Vec<f64> = STENCIL_GRIDS.iter().map(|&n| PI / n as f64).collect();
    let errs: Vec<(f64, f64)> = STENCIL_GRIDS.iter().map(|&n| shifted_stencil_errors(n)).collect();
    let o1 = fitted_order(&h, &errs.iter().map(|e| e.0).collect::<Vec<_>>());
    let o2 = fitted_order(&h, &errs.iter().map(|e| e.1).collect::<Vec<_>>());
    let elapsed = start.elapsed();

    let single: Vec<(f64, f64)> = STENCIL_GRIDS.iter().map(|&n| stencil_errors(&ellipse([0.0, 0.0]), n)).collect();
    println!(
        "info [3] unshifted ellipse alone: fitted orders {:.2} (first), {:.2} (second)",
        fitted_order(&h, &single.iter().map(|e| e.0).collect::<Vec<_>>()),
        fitted_order(&h, &single.iter().map(|e| e.1).collect::<Vec<_>>())
    );
    let m2 = consistency_study(&ManufacturedCase::static_circle(), &STENCIL_GRIDS, 0.0).unwrap();
    let info: Vec<String> = ["first_difference", "laplacian", "pressure_laplacian", "advection", "divergence"]
        .iter()
        .map(|op| {
            let (r, i) = m2.orders(op);
            format!("{op} {r:.2}/{i:.2}")
        })
        .collect();
    println!("info [3] static circle fitted orders regular/irregular: {}", info.join(", "));

    let budget = Duration::from_secs(30);
    vec![
        Outcome {
            id: "3a",
            name: "corrected first differences at irregular nodes",
            passed: o1 >= FIRST_DIFF_ORDER_MIN,
            detail: format!("fitted order {o1:.3} >= {FIRST_DIFF_ORDER_MIN} (errors {:.2e} .. {:.2e})", errs[0].0, errs[3].0),
            elapsed,
            budget,
        },
        Outcome {
            id: "3b",
            name: "corrected second differences at irregular nodes",
            passed: o2 >= SECOND_DIFF_ORDER_MIN,
            detail: format!("fitted order {o2:.3} >= {SECOND_DIFF_ORDER_MIN} (errors {:.2e} .. {:.2e})", errs[0].1, errs[3].1),
            elapsed,
            budget,
        },
    ]
}

fn taylor_green() -> Vec<Outcome> {
    let start = Instant::now();
    let opts = StudyOptions { t_final: TG_T, ..StudyOptions::default() };
    let rep = convergence_study(&ManufacturedCase::taylor_green(), &FLOW_GRIDS, &opts).unwrap();
    let r = rep.rates(1)[0];
    vec![Outcome {
        id: "4",
        name: "smooth baseline velocity rate",
        passed: r >= TG_RATE_MIN,
        detail: format!("rate {r:.3} >= {TG_RATE_MIN} (errors {:.3e}, {:.3e})", rep.rows[0].velocity_error, rep.rows[1].velocity_error),
        elapsed: start.elapsed(),
        budget: Duration::from_secs(120),
    }]
}

fn flow_opts(enable_c7: bool) -> StudyOptions {
    StudyOptions { t_final: FLOW_T, enable_c7, ..StudyOptions::default() }
}

/// Criteria 5 and 7 share the static-circle runs.
fn static_interface() -> Vec<Outcome> {
    let start = Instant::now();
    let rep = convergence_study(&ManufacturedCase::static_circle(), &FLOW_GRIDS, &flow_opts(true)).unwrap();
    let [rv, rp, rm] = rep.rates(1);
    let residual = rep.rows.iter().map(|r| r.residual_mean).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let (e0, e1) = (&rep.rows[0], &rep.rows[1]);
    vec![
        Outcome {
            id: "5a",
            name: "static interface velocity rate",
            passed: rv >= VELOCITY_RATE_MIN,
            detail: format!("rate {rv:.3} >= {VELOCITY_RATE_MIN} (errors {:.3e}, {:.3e})", e0.velocity_error, e1.velocity_error),
            elapsed,
            budget: Duration::from_secs(600),
        },
        Outcome {
            id: "5b",
            name: "static interface pressure rate modulo constants",
            passed: rp >= PRESSURE_RATE_MIN,
            detail: format!("rate {rp:.3} >= {PRESSURE_RATE_MIN} (errors {:.3e}, {:.3e})", e0.pressure_error, e1.pressure_error),
            elapsed,
            budget: Duration::from_secs(600),
        },
        Outcome {
            id: "7a",
            name: "removed mean decays",
            passed: rm >= MEAN_RATE_MIN,
            detail: format!("rate {rm:.3} >= {MEAN_RATE_MIN} (|m| {:.3e}, {:.3e})", e0.mean_removed, e1.mean_removed),
            elapsed,
            budget: Duration::from_secs(600),
        },
        Outcome {
            id: "7b",
            name: "pressure right-hand side mean after subtraction",
            passed: residual <= RESIDUAL_MEAN_MAX,
            detail: format!("max over steps {residual:.2e} <= {RESIDUAL_MEAN_MAX:e}"),
            elapsed,
            budget: Duration::from_secs(600),
        },
    ]
}

fn moving_interface() -> Vec<Outcome> {
    let start = Instant::now();
    let case = ManufacturedCase::moving_circle();
    let full = convergence_study(&case, &FLOW_GRIDS, &flow_opts(true)).unwrap();
    let ablated = convergence_study(&case, &FLOW_GRIDS, &flow_opts(false)).unwrap();
    let [rv, rp, _] = full.rates(1);
    let ra = ablated.rates(1)[0];
    let residual = full.rows.iter().map(|r| r.residual_mean).fold(0.0, f64::max);

    let wide = [32, 64, 128, 256];
    let long = convergence_study(&case, &wide, &flow_opts(false)).unwrap();
    let h: Vec<f64> = long.rows.iter().map(|r| r.h).collect();
    let e: Vec<f64> = long.rows.iter().map(|r| r.velocity_error).collect();
    println!(
        "info [6] without the side-shift corrections: errors {}; fitted order over N = 32..256 is {:.3}",
        e.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "),
        fitted_order(&h, &e)
    );

    let elapsed = start.elapsed();
    let budget = Duration::from_secs(900);
    let (f0, f1) = (&full.rows[0], &full.rows[1]);
    vec![
        Outcome {
            id: "6a",
            name: "moving interface velocity and pressure rates",
            passed: rv >= VELOCITY_RATE_MIN && rp >= PRESSURE_RATE_MIN && residual <= RESIDUAL_MEAN_MAX,
            detail: format!(
                "velocity {rv:.3} >= {VELOCITY_RATE_MIN} (errors {:.3e}, {:.3e}), pressure {rp:.3} >= {PRESSURE_RATE_MIN}, residual mean {residual:.1e}",
                f0.velocity_error, f1.velocity_error
            ),
            elapsed,
            budget,
        },
        Outcome {
            id: "6b",
            name: "dropping the side-shift corrections degrades the velocity rate",
            passed: ra < ABLATED_RATE_MAX,
            detail: format!(
                "rate {ra:.3} < {ABLATED_RATE_MAX} (errors {:.3e}, {:.3e}; {:.1}x and {:.1}x the corrected errors)",
                ablated.rows[0].velocity_error,
                ablated.rows[1].velocity_error,
                ablated.rows[0].velocity_error / f0.velocity_error,
                ablated.rows[1].velocity_error / f1.velocity_error
            ),
            elapsed,
            budget,
        },
    ]
}

fn pressure_flux(case: &ManufacturedCase) -> f64 {
    let Some(g) = case.geometry() else { return 0.0 };
    [0.0, 0.2, 0.5]
        .iter()
        .map(|&t| {
            g.integrate_arclength(t, 256, |p| {
                let j = case.jumps_at(p.x, t);
                j.pressure.grad[0] * p.normal[0] + j.pressure.grad[1] * p.normal[1]
            })
            .abs()
        })
        .fold(0.0, f64::max)
}

fn compatibility() -> Vec<Outcome> {
    let start = Instant::now();
    let cases = [
        ManufacturedCase::taylor_green(),
        ManufacturedCase::static_circle(),
        ManufacturedCase::moving_circle(),
        ManufacturedCase::quiescent(),
    ];
    let flux = cases.iter().map(pressure_flux).fold(0.0, f64::max);
    let valid = cases.iter().all(|c| c.validate().is_ok());
    let corrupted = ManufacturedCase::static_circle().with_velocity_defect(1e-3).validate();
    let rejected = matches!(corrupted, Err(Error::ConstructionInvalid { .. }));
    let elapsed = start.elapsed();
    vec![
        Outcome {
            id: "8a",
            name: "net normal pressure-derivative jump",
            passed: flux <= FLUX_MAX && valid,
            detail: format!("max over cases {flux:.2e} <= {FLUX_MAX:e}, all cases validate: {valid}"),
            elapsed,
            budget: Duration::from_secs(60),
        },
        Outcome {
            id: "8b",
            name: "corrupted case rejected",
            passed: rejected,
            detail: format!("{corrupted:?}"),
            elapsed,
            budget: Duration::from_secs(60),
        },
    ]
}

fn main() -> ExitCode {
    let suites: [fn() -> Vec<Outcome>; 7] =
        [operator_identities, operator_norms, stencil_consistency, taylor_green, static_interface, moving_interface, compatibility];
    let mut unexpected = Vec::new();
    for suite in suites {
        for o in suite() {
            report(&o);
            if o.elapsed > o.budget {
                println!("FAIL [{}] runtime {:.1}s exceeds {:.0}s", o.id, o.elapsed.as_secs_f64(), o.budget.as_secs_f64());
                unexpected.push(o.id);
            }
            if !o.passed && !KNOWN_FAILURES.contains(&o.id) {
                unexpected.push(o.id);
            }
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all criteria met except documented known failures {KNOWN_FAILURES:?}");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        ExitCode::FAILURE
    }
}
