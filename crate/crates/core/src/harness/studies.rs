use std::io::Write;
use std::thread;

use crate::corrections::{build_c2, build_c3, build_c4, build_c5, build_c6, CorrectionField};
use crate::error::{Error, Result};
use crate::grid::{self, GridFunction, GridSpec};
use crate::interface::{InterfaceLevel, NoVelocity};
use crate::solver::{JumpMode, Solver, SolverConfig};
use crate::spectral::{self, Symbol};

use super::cases::ManufacturedCase;

/// `log2(coarse / fine)`; NaN when either error is zero.
pub fn rate(coarse: f64, fine: f64) -> f64 {
    if coarse > 0.0 && fine > 0.0 {
        (coarse / fine).log2()
    } else {
        f64::NAN
    }
}

/// Least-squares slope of `log e` against `log(1/h)`.
pub fn fitted_order(h: &[f64], e: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h.iter().zip(e).filter(|(_, &e)| e > 0.0).map(|(&h, &e)| (-h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}

fn fmt_opt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.4}")
    }
}

fn check_grids(grids: &[usize]) -> Result<()> {
    if grids.is_empty() {
        return Err(Error::Config("grid list is empty".into()));
    }
    if grids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("grid list {grids:?} must be strictly ascending")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub lambda: f64,
    pub t_final: f64,
    pub jump_mode: JumpMode,
    pub enable_c1: bool,
    pub enable_c7: bool,
    /// Number of evenly spaced times at which pressure is compared.
    pub pressure_samples: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self { lambda: 0.5, t_final: 0.25, jump_mode: JumpMode::Analytic, enable_c1: true, enable_c7: true, pressure_samples: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    pub h: f64,
    pub tau: f64,
    pub steps: usize,
    /// Max over nodes and steps.
    pub velocity_error: f64,
    /// Max over sample times, after removing the mean difference.
    pub pressure_error: f64,
    /// As `pressure_error` with the midrange shift.
    pub pressure_error_midrange: f64,
    /// Max over steps of the removed pressure right-hand-side mean.
    pub mean_removed: f64,
    /// Max over steps of the relative residual mean.
    pub residual_mean: f64,
    pub divergence: f64,
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub case: String,
    pub options: StudyOptions,
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    /// Rates between rows `k - 1` and `k` for velocity, pressure and the
    /// removed mean.
    pub fn rates(&self, k: usize) -> [f64; 3] {
        let (a, b) = (&self.rows[k - 1], &self.rows[k]);
        [
            rate(a.velocity_error, b.velocity_error),
            rate(a.pressure_error, b.pressure_error),
            rate(a.mean_removed.abs(), b.mean_removed.abs()),
        ]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "case,n,h,tau,steps,velocity_error,pressure_error,pressure_error_midrange,mean_removed,residual_mean,divergence,velocity_rate,pressure_rate,mean_rate"
        )?;
        for (k, r) in self.rows.iter().enumerate() {
            let rates = if k == 0 { [f64::NAN; 3] } else { self.rates(k) };
            writeln!(
                w,
                "{},{},{:.6e},{:.6e},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.3e},{:.6e},{},{},{}",
                self.case,
                r.n,
                r.h,
                r.tau,
                r.steps,
                r.velocity_error,
                r.pressure_error,
                r.pressure_error_midrange,
                r.mean_removed,
                r.residual_mean,
                r.divergence,
                fmt_opt(rates[0]),
                fmt_opt(rates[1]),
                fmt_opt(rates[2])
            )?;
        }
        Ok(())
    }
}

/// Max norm of `a - b` after the best additive shift: mean shift and
/// midrange shift.
pub fn error_modulo_constant(a: &GridFunction, b: &GridFunction) -> (f64, f64) {
    let d = a - b;
    let m = grid::mean(&d);
    let mean_err = d.values().iter().fold(0.0_f64, |acc, v| acc.max((v - m).abs()));
    let (lo, hi) = d.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    (mean_err, 0.5 * (hi - lo))
}

fn velocity_error(case: &ManufacturedCase, spec: GridSpec, u: &crate::grid::VectorGridFunction, t: f64) -> f64 {
    let exact = case.velocity_grid(spec, t);
    (u - &exact).max_abs()
}

/// One solve with errors tracked against the exact solution.
pub fn measure_run(case: &ManufacturedCase, n: usize, opts: &StudyOptions) -> Result<ErrorRow> {
    let spec = GridSpec::periodic_2pi(n)?;
    let problem = case.problem(spec, opts.jump_mode, 0.0)?;
    let config = SolverConfig {
        lambda: opts.lambda,
        t_final: opts.t_final,
        jump_mode: opts.jump_mode,
        enable_c1: opts.enable_c1,
        enable_c7: opts.enable_c7,
        ..SolverConfig::default()
    };
    let solver = Solver::new(problem, config)?;
    let steps = solver.steps();
    let samples = opts.pressure_samples.max(1);
    let pressure_steps: Vec<usize> = (1..=samples).map(|k| ((k * steps) as f64 / samples as f64).round() as usize).collect();
    let mut row = ErrorRow {
        n,
        h: spec.h(),
        tau: solver.tau(),
        steps,
        velocity_error: 0.0,
        pressure_error: 0.0,
        pressure_error_midrange: 0.0,
        mean_removed: 0.0,
        residual_mean: 0.0,
        divergence: 0.0,
    };
    let mut failure = None;
    solver.run(|s| {
        if failure.is_some() {
            return;
        }
        row.velocity_error = row.velocity_error.max(velocity_error(case, spec, &s.u, s.t));
        row.mean_removed = row.mean_removed.max(s.diagnostics.mean_removed.abs());
        row.residual_mean = row.residual_mean.max(s.diagnostics.residual_mean);
        row.divergence = row.divergence.max(s.diagnostics.divergence);
        if pressure_steps.contains(&s.step) {
            match solver.recover_pressure_at(&s.u, s.t) {
                Ok(p) => {
                    let (e, e_mid) = error_modulo_constant(&p.p, &case.pressure_grid(spec, s.t));
                    row.pressure_error = row.pressure_error.max(e);
                    row.pressure_error_midrange = row.pressure_error_midrange.max(e_mid);
                }
                Err(e) => failure = Some(e),
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(row),
    }
}

/// Runs the case on each grid in parallel.
pub fn convergence_study(case: &ManufacturedCase, grids: &[usize], opts: &StudyOptions) -> Result<ErrorReport> {
    check_grids(grids)?;
    case.validate()?;
    let rows = thread::scope(|scope| {
        let handles: Vec<_> = grids.iter().map(|&n| scope.spawn(move || measure_run(case, n, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("study thread panicked")).collect::<Result<Vec<_>>>()
    })?;
    Ok(ErrorReport { case: case.name().to_string(), options: opts.clone(), rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRow {
    pub operator: &'static str,
    pub n: usize,
    pub h: f64,
    pub regular_error: f64,
    pub irregular_error: f64,
    pub irregular_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub case: String,
    pub rows: Vec<ConsistencyRow>,
}

pub const CONSISTENCY_OPERATORS: [&str; 5] = ["first_difference", "laplacian", "pressure_laplacian", "advection", "divergence"];

impl ConsistencyReport {
    /// Fitted orders (regular, irregular) for one operator.
    pub fn orders(&self, operator: &str) -> (f64, f64) {
        let rows: Vec<&ConsistencyRow> = self.rows.iter().filter(|r| r.operator == operator).collect();
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let reg: Vec<f64> = rows.iter().map(|r| r.regular_error).collect();
        let irr: Vec<f64> = rows.iter().map(|r| r.irregular_error).collect();
        (fitted_order(&h, &reg), fitted_order(&h, &irr))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "case,operator,n,h,regular_error,irregular_error,irregular_nodes,regular_order,irregular_order")?;
        for r in &self.rows {
            let (ro, io) = self.orders(r.operator);
            writeln!(
                w,
                "{},{},{},{:.6e},{:.6e},{:.6e},{},{},{}",
                self.case,
                r.operator,
                r.n,
                r.h,
                r.regular_error,
                r.irregular_error,
                r.irregular_nodes,
                fmt_opt(ro),
                fmt_opt(io)
            )?;
        }
        Ok(())
    }
}

/// Corrected operators applied to the exact solution at time `t`, with the
/// residual split into nodes whose stencils cross the interface and the rest.
pub fn consistency_study(case: &ManufacturedCase, grids: &[usize], t: f64) -> Result<ConsistencyReport> {
    check_grids(grids)?;
    case.validate()?;
    let mut rows = Vec::new();
    for &n in grids {
        rows.extend(consistency_rows(case, n, t)?);
    }
    Ok(ConsistencyReport { case: case.name().to_string(), rows })
}

fn consistency_rows(case: &ManufacturedCase, n: usize, t: f64) -> Result<Vec<ConsistencyRow>> {
    let spec = GridSpec::periodic_2pi(n)?;
    let level = match case.geometry() {
        Some(g) => InterfaceLevel::build(spec, g, case, &NoVelocity, t)?,
        None => InterfaceLevel::empty(spec, t),
    };
    // per axis for the one-dimensional differences, union for the rest
    let mut along = [vec![false; spec.len()], vec![false; spec.len()]];
    for r in &level.intersections {
        along[r.axis][spec.index_of(r.base)] = true;
        along[r.axis][spec.index_of(r.upper(&spec))] = true;
    }
    let irregular: Vec<bool> = along[0].iter().zip(&along[1]).map(|(a, b)| a | b).collect();
    let jets: Vec<_> = spec.nodes().map(|nd| case.side_jets(spec.node(nd), t, level.sides.side(nd), 3)).collect();
    let field =
        |f: &dyn Fn(&super::cases::SideJets) -> f64| GridFunction::from_values(spec, jets.iter().map(f).collect()).expect("sizes match");
    let v = [field(&|j| j.v[0].value()), field(&|j| j.v[1].value())];
    let q = field(&|j| j.q.value());
    let u = crate::grid::VectorGridFunction::new(v[0].clone(), v[1].clone())?;

    let split_by = |residual: &GridFunction, mask: &[bool]| {
        let (mut reg, mut irr) = (0.0_f64, 0.0_f64);
        for (k, r) in residual.values().iter().enumerate() {
            if mask[k] {
                irr = irr.max(r.abs());
            } else {
                reg = reg.max(r.abs());
            }
        }
        (reg, irr)
    };
    let split = |residual: &GridFunction| split_by(residual, &irregular);
    let corrected = |mut f: GridFunction, c: &CorrectionField, sign: f64| {
        c.scaled(sign).add_to(&mut f);
        f
    };
    let mut results: Vec<(&'static str, f64, f64)> = Vec::new();
    let mut push = |name: &'static str, parts: Vec<(f64, f64)>| {
        let reg = parts.iter().map(|p| p.0).fold(0.0, f64::max);
        let irr = parts.iter().map(|p| p.1).fold(0.0, f64::max);
        results.push((name, reg, irr));
    };

    let c6 = build_c6(&level);
    push(
        "first_difference",
        (0..2)
            .map(|a| {
                let d = corrected(grid::centered_diff(&q, a), &c6[a], 1.0);
                split_by(&(&d - &field(&|j| j.q.grad()[a])), &along[a])
            })
            .collect(),
    );

    let c3 = build_c3(&level);
    push(
        "laplacian",
        (0..2)
            .map(|i| {
                let d = corrected(grid::laplacian_h(&v[i]), &c3[i], 1.0);
                split(&(&d - &field(&|j| j.v[i].laplacian().value())))
            })
            .collect(),
    );

    let c5 = build_c5(&level);
    let d = corrected(grid::laplacian_h(&q), &c5, -1.0);
    push("pressure_laplacian", vec![split(&(&d - &field(&|j| j.q.laplacian().value())))]);

    let c2 = build_c2(&level, &u);
    let adv = crate::solver::advection(&u);
    push(
        "advection",
        (0..2)
            .map(|i| {
                let d = corrected(adv.comp(i).clone(), &c2[i], 1.0);
                split(&(&d - &field(&|j| j.advection()[i].value())))
            })
            .collect(),
    );

    let c4 = build_c4(&level);
    let explicit = |i: usize| field(&|j| j.advection()[i].value() - j.body_force()[i].value());
    let fx = crate::grid::VectorGridFunction::new(explicit(0), explicit(1))?;
    let d = corrected(grid::divergence_h(&fx), &c4, 1.0);
    let exact_div = field(&|j| {
        let (a, g) = (j.advection(), j.body_force());
        a[0].d(0).value() + a[1].d(1).value() - g[0].d(0).value() - g[1].d(1).value()
    });
    push("divergence", vec![split(&(&d - &exact_div))]);

    let count = irregular.iter().filter(|&&b| b).count();
    Ok(results
        .into_iter()
        .map(|(operator, regular_error, irregular_error)| ConsistencyRow {
            operator,
            n,
            h: spec.h(),
            regular_error,
            irregular_error,
            irregular_nodes: count,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormRow {
    pub operator: &'static str,
    pub n: usize,
    /// Power of the time-stepping operator, when applicable.
    pub power: Option<u32>,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct NormReport {
    pub rows: Vec<NormRow>,
    pub lambda: f64,
}

/// Operators whose norm grows like `|log h|`.
pub const LOG_GROWTH: [&str; 3] = ["dd_inverse_laplacian", "p_tilde", "p_0"];

/// Fit of `c1 + c2 |log h|` with its worst relative residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    pub c1: f64,
    pub c2: f64,
    pub max_relative_residual: f64,
}

pub fn fit_log(h: &[f64], v: &[f64]) -> LogFit {
    let xs: Vec<f64> = h.iter().map(|h| h.ln().abs()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, v.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(v).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let c2 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c1 = my - c2 * mx;
    let max_relative_residual = xs.iter().zip(v).map(|(x, y)| ((c1 + c2 * x - y) / y).abs()).fold(0.0, f64::max);
    LogFit { c1, c2, max_relative_residual }
}

impl NormReport {
    pub fn values(&self, operator: &str) -> Vec<(usize, Option<u32>, f64)> {
        self.rows.iter().filter(|r| r.operator == operator).map(|r| (r.n, r.power, r.value)).collect()
    }

    /// Largest relative deviation from the mean over grids.
    pub fn spread(&self, operator: &str) -> f64 {
        let v: Vec<f64> = self.values(operator).iter().map(|x| x.2).collect();
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        (hi - lo) / lo
    }

    pub fn max(&self, operator: &str) -> f64 {
        self.values(operator).iter().map(|x| x.2).fold(0.0, f64::max)
    }

    pub fn log_fit(&self, operator: &str) -> LogFit {
        let vals = self.values(operator);
        let h: Vec<f64> = vals.iter().map(|v| std::f64::consts::PI / v.0 as f64).collect();
        let y: Vec<f64> = vals.iter().map(|v| v.2).collect();
        fit_log(&h, &y)
    }

    /// Bound implied by the sweep: `c1 + c2 |log h|` for the operators with
    /// logarithmic growth, the largest value over the sweep otherwise.
    pub fn fitted_bound(&self, operator: &str, n: usize) -> f64 {
        if LOG_GROWTH.contains(&operator) {
            let f = self.log_fit(operator);
            f.c1 + f.c2 * (std::f64::consts::PI / n as f64).ln().abs()
        } else {
            self.max(operator)
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "operator,N,h,n,value,fitted_bound")?;
        for r in &self.rows {
            let p = r.power.map(|p| p.to_string()).unwrap_or_default();
            let h = std::f64::consts::PI / r.n as f64;
            writeln!(w, "{},{},{:.6e},{},{:.8e},{:.8e}", r.operator, r.n, h, p, r.value, self.fitted_bound(r.operator, r.n))?;
        }
        Ok(())
    }
}

/// Exact max norms of the discrete operators. Time-stepping operators use
/// `tau = lambda h`; `D S^n R` is reported scaled by `sqrt(n tau)`.
pub fn operator_norm_study(grids: &[usize], powers: &[u32], lambda: f64) -> Result<NormReport> {
    check_grids(grids)?;
    let rows = thread::scope(|scope| {
        let handles: Vec<_> = grids.iter().map(|&n| scope.spawn(move || norm_rows(n, powers, lambda))).collect();
        handles.into_iter().map(|h| h.join().expect("norm thread panicked")).collect::<Result<Vec<_>>>()
    })?;
    Ok(NormReport { rows: rows.into_iter().flatten().collect(), lambda })
}

fn norm_rows(n: usize, powers: &[u32], lambda: f64) -> Result<Vec<NormRow>> {
    let spec = GridSpec::periodic_2pi(n)?;
    let tau = lambda * spec.h();
    let inv = Symbol::inverse_laplacian(spec);
    let d = Symbol::forward_diff(spec, 0);
    let row = |operator, value| NormRow { operator, n, power: None, value };
    let mut rows = vec![
        row("A", spectral::maxnorm_of_multiplier(&Symbol::operator_a(spec))),
        row("A_lemma_bound", spectral::lemma_a1_bound(&Symbol::operator_a(spec), 2)?),
        row("inverse_laplacian", spectral::maxnorm_of_multiplier(&inv)),
        row("d_inverse_laplacian", spectral::maxnorm_of_multiplier(&d.mul(&inv))),
        row("dd_inverse_laplacian", spectral::maxnorm_of_multiplier(&d.mul(&d).mul(&inv))),
        row("p_tilde", spectral::maxnorm_of_matrix_multiplier(&spectral::projection_blocks(spec, false))),
        row("p_0", spectral::maxnorm_of_matrix_multiplier(&spectral::projection_blocks(spec, true))),
    ];
    let s = Symbol::cn_step(spec, tau);
    let r = Symbol::cn_resolvent(spec, tau);
    let dr = d.mul(&r);
    for &p in powers {
        let sp = s.powi(p as i32);
        rows.push(NormRow { operator: "s_power", n, power: Some(p), value: spectral::maxnorm_of_multiplier(&sp) });
        let scaled = spectral::maxnorm_of_multiplier(&sp.mul(&dr)) * (p as f64 * tau).sqrt();
        rows.push(NormRow { operator: "d_s_power_r", n, power: Some(p), value: scaled });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_and_fits() {
        assert!((rate(4.0, 1.0) - 2.0).abs() < 1e-15);
        assert!(rate(0.0, 1.0).is_nan());
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|h| 3.0 * h * h).collect();
        assert!((fitted_order(&h, &e) - 2.0).abs() < 1e-12);
        let v: Vec<f64> = h.iter().map(|h: &f64| 1.0 + 0.5 * h.ln().abs()).collect();
        let f = fit_log(&h, &v);
        assert!((f.c2 - 0.5).abs() < 1e-12 && f.max_relative_residual < 1e-12);
    }

    #[test]
    fn error_modulo_constant_is_shift_invariant() {
        let spec = GridSpec::periodic_2pi(8).unwrap();
        let a = crate::random::random_field(spec, 1);
        let b = crate::random::random_field(spec, 2);
        let (e1, m1) = error_modulo_constant(&a, &b);
        let (e2, m2) = error_modulo_constant(&a, &b.map(|v| v + 7.5));
        assert!((e1 - e2).abs() < 1e-12 && (m1 - m2).abs() < 1e-12);
        assert!(m1 <= e1 + 1e-15);
    }

    #[test]
    fn zero_case_has_zero_error() {
        let case = ManufacturedCase::quiescent();
        let opts = StudyOptions { t_final: 0.1, ..StudyOptions::default() };
        let rep = convergence_study(&case, &[16, 32], &opts).unwrap();
        assert!(rep.rows.iter().all(|r| r.velocity_error == 0.0 && r.pressure_error == 0.0));
    }

    #[test]
    fn rejects_unsorted_grids() {
        let case = ManufacturedCase::taylor_green();
        assert!(matches!(convergence_study(&case, &[32, 16], &StudyOptions::default()), Err(Error::Config(_))));
    }
}
