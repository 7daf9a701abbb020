//! Crank-Nicolson / extrapolated-advection projection scheme with interface
//! corrections.

use std::cell::RefCell;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corrections::{
    add_vector_to, build_c1, build_c2, build_c3, build_c4, build_c5, build_c6, build_c7, build_level_shift, stencil_correction_first,
    vector_correction, CorrectionBundle, NodeCrossing, VectorCorrection,
};
use crate::error::{Error, Result};
use crate::grid::{self, GridFunction, GridSpec, VectorGridFunction, DIM};
use crate::interface::{
    crossing_events, crossing_time, foot_point, BodyForce, InterfaceGeometry, InterfaceLevel, JumpProvider, OneSidedVelocity, Side,
    SideField,
};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpMode {
    /// Jumps evaluated from closed-form one-sided fields.
    Analytic,
    /// Jumps reconstructed from the force density and the computed velocity.
    Derived,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// `tau / h`.
    pub lambda: f64,
    pub t_final: f64,
    pub jump_mode: JumpMode,
    /// Time-derivative correction for nodes that change side.
    pub enable_c1: bool,
    /// Side-shift corrections for nodes that change side.
    pub enable_c7: bool,
    /// Velocity snapshots are written at the steps nearest these times.
    pub snapshot_times: Vec<f64>,
    pub snapshot_dir: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            t_final: 1.0,
            jump_mode: JumpMode::Analytic,
            enable_c1: true,
            enable_c7: true,
            snapshot_times: Vec::new(),
            snapshot_dir: None,
        }
    }
}

/// Everything that defines one flow problem on one grid.
#[derive(Clone)]
pub struct Problem {
    pub spec: GridSpec,
    pub geometry: Option<Arc<InterfaceGeometry>>,
    pub jumps: Arc<dyn JumpProvider>,
    pub body: Option<Arc<dyn BodyForce>>,
    pub initial_velocity: VectorGridFunction,
    pub t0: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepDiagnostics {
    /// Mean removed from the pressure right-hand side.
    pub mean_removed: f64,
    /// Mean left after removal, relative to the right-hand side max norm.
    pub residual_mean: f64,
    /// Max norm of the corrected discrete divergence of the new velocity.
    pub divergence: f64,
    /// Nodes that changed side during the step.
    pub crossings: usize,
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub step: usize,
    pub t: f64,
    pub u: VectorGridFunction,
    /// Velocity one step back; absent before the first step.
    pub u_prev: Option<VectorGridFunction>,
    /// Pressure from the last step, at the half step.
    pub pressure: Option<GridFunction>,
    pub diagnostics: StepDiagnostics,
}

/// Inside limit of a grid velocity by a local quadratic least-squares fit.
pub struct GridVelocity<'a> {
    pub u: &'a VectorGridFunction,
    pub sides: &'a SideField,
}

impl OneSidedVelocity for GridVelocity<'_> {
    fn inside_state(&self, x: [f64; 2]) -> Result<([f64; 2], [[f64; 2]; 2])> {
        let spec = *self.u.spec();
        let h = spec.h();
        let m = spec.m() as i64;
        let period = 2.0 * spec.half_period();
        let wrap_d = |d: f64| d - period * (d / period).round();
        let c = [0, 1].map(|a| ((x[a] / h).round() as i64 + spec.n() as i64).rem_euclid(m));
        let mut ata = [[0.0; 6]; 6];
        let mut atb = [[0.0; 6]; 2];
        let mut count = 0;
        for di in -3..=3i64 {
            for dj in -3..=3i64 {
                let node = [(c[0] + di).rem_euclid(m) as usize, (c[1] + dj).rem_euclid(m) as usize];
                if self.sides.side(node) != Side::Inside {
                    continue;
                }
                let p = spec.node(node);
                let (dx, dy) = (wrap_d(p[0] - x[0]) / h, wrap_d(p[1] - x[1]) / h);
                let basis = [1.0, dx, dy, dx * dx, dx * dy, dy * dy];
                let v = self.u.at(node);
                for r in 0..6 {
                    for s in 0..6 {
                        ata[r][s] += basis[r] * basis[s];
                    }
                    for k in 0..2 {
                        atb[k][r] += basis[r] * v[k];
                    }
                }
                count += 1;
            }
        }
        if count < 8 {
            return Err(Error::MissingJumps(format!("too few inside nodes near {x:?} for a one-sided fit")));
        }
        let mut value = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for k in 0..2 {
            let coef = solve_dense(ata, atb[k]).ok_or_else(|| Error::MissingJumps(format!("singular one-sided fit near {x:?}")))?;
            value[k] = coef[0];
            grad[k] = [coef[1] / h, coef[2] / h];
        }
        Ok((value, grad))
    }
}

/// Gaussian elimination with partial pivoting.
fn solve_dense<const K: usize>(mut a: [[f64; K]; K], mut b: [f64; K]) -> Option<[f64; K]> {
    for col in 0..K {
        let piv = (col..K).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..K {
            let f = a[row][col] / a[col][col];
            for k in col..K {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; K];
    for row in (0..K).rev() {
        let s: f64 = (row + 1..K).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// `u . grad_h u`, componentwise.
pub fn advection(u: &VectorGridFunction) -> VectorGridFunction {
    let spec = *u.spec();
    let mut out = VectorGridFunction::zeros(spec);
    for i in 0..DIM {
        for a in 0..DIM {
            let d = grid::centered_diff(u.comp(i), a);
            let ua = u.comp(a).values();
            let o = out.comp_mut(i).values_mut();
            for (k, dv) in d.values().iter().enumerate() {
                o[k] += ua[k] * dv;
            }
        }
    }
    out
}

fn spec_len(f: &GridFunction) -> f64 {
    f.spec().len() as f64
}

/// Result of one pressure solve.
#[derive(Debug, Clone)]
pub struct PressureSolution {
    pub p: GridFunction,
    /// `grad_h p + C6`.
    pub gradient: VectorGridFunction,
    pub mean_removed: f64,
    pub residual_mean: f64,
}

pub struct Solver {
    problem: Problem,
    config: SolverConfig,
    tau: f64,
    steps: usize,
    cache: RefCell<Vec<(u64, Arc<InterfaceLevel>)>>,
    initial_norm: f64,
}

impl Solver {
    pub fn new(problem: Problem, config: SolverConfig) -> Result<Self> {
        if !(config.lambda > 0.0 && config.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {}", config.lambda)));
        }
        if !(config.t_final >= problem.t0) {
            return Err(Error::Config(format!("final time {} precedes start {}", config.t_final, problem.t0)));
        }
        problem.initial_velocity.spec().check_same(&problem.spec)?;
        let h = problem.spec.h();
        let span = config.t_final - problem.t0;
        // tau / h stays exactly lambda; the run stops at the last step not past T
        let tau = config.lambda * h;
        let steps = (span / tau + 1e-9).floor() as usize;
        let initial_norm = problem.initial_velocity.max_abs();
        Ok(Self { problem, config, tau, steps, cache: RefCell::new(Vec::new()), initial_norm })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn spec(&self) -> GridSpec {
        self.problem.spec
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn initial_state(&self) -> SolverState {
        SolverState {
            step: 0,
            t: self.problem.t0,
            u: self.problem.initial_velocity.clone(),
            u_prev: None,
            pressure: None,
            diagnostics: StepDiagnostics::default(),
        }
    }

    /// Sides, intersections and jumps at time `t`, with `u` the velocity
    /// used by derived jumps.
    pub fn level(&self, t: f64, u: &VectorGridFunction) -> Result<Arc<InterfaceLevel>> {
        let spec = self.problem.spec;
        let Some(geometry) = &self.problem.geometry else {
            return Ok(Arc::new(InterfaceLevel::empty(spec, t)));
        };
        let provider = &*self.problem.jumps;
        let cacheable = !provider.needs_velocity();
        if cacheable {
            if let Some((_, l)) = self.cache.borrow().iter().find(|(k, _)| *k == t.to_bits()) {
                return Ok(l.clone());
            }
        }
        let sides = crate::interface::classify(spec, geometry, t);
        let sampler = GridVelocity { u, sides: &sides };
        let level = Arc::new(InterfaceLevel::build(spec, geometry, provider, &sampler, t)?);
        if cacheable {
            let mut c = self.cache.borrow_mut();
            if c.len() >= 6 {
                c.remove(0);
            }
            c.push((t.to_bits(), level.clone()));
        }
        Ok(level)
    }

    fn body_force(&self, sides: &SideField, t: f64) -> Option<VectorGridFunction> {
        let body = self.problem.body.as_ref()?;
        let spec = self.problem.spec;
        Some(VectorGridFunction::from_index_fn(spec, |n| body.eval(spec.node(n), t, sides.side(n))))
    }

    /// `u . grad_h u + C2` at one level.
    fn explicit_level(&self, u: &VectorGridFunction, level: &InterfaceLevel) -> (VectorGridFunction, VectorCorrection) {
        let mut n = advection(u);
        let c2 = build_c2(level, u);
        add_vector_to(&c2, &mut n);
        (n, c2)
    }

    /// Nodes on different sides in `from` and `to`, with jumps at their
    /// crossing time in `(ta, tb]`.
    fn node_crossings(&self, from: &InterfaceLevel, to: &InterfaceLevel, u: &VectorGridFunction) -> Result<Vec<NodeCrossing>> {
        let Some(geometry) = &self.problem.geometry else {
            return Ok(Vec::new());
        };
        let spec = self.problem.spec;
        let (ta, tb) = (from.t, to.t);
        let mut out = Vec::new();
        for node in spec.nodes() {
            let (sa, sb) = (from.sides.side(node), to.sides.side(node));
            if sa == sb {
                continue;
            }
            let x = spec.node(node);
            let tc = crossing_time(geometry, x, sa, ta, tb).unwrap_or(tb);
            out.push(self.crossing_at(geometry, node, tc, (tc - ta) / (tb - ta), sb, u, to)?);
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn crossing_at(
        &self,
        geometry: &InterfaceGeometry,
        node: [usize; 2],
        tc: f64,
        fraction: f64,
        to_side: Side,
        u: &VectorGridFunction,
        level: &InterfaceLevel,
    ) -> Result<NodeCrossing> {
        let x = self.problem.spec.node(node);
        let point = foot_point(geometry, x, tc);
        let sampler = GridVelocity { u, sides: &level.sides };
        let jumps = self.problem.jumps.jumps(&point, &sampler)?;
        Ok(NodeCrossing { node, fraction, to: to_side, jumps })
    }

    /// Solves `Delta_h p = -(div_h F + C4) + C5 - m` and forms `grad_h p + C6`.
    pub fn pressure_solve(&self, f: &VectorGridFunction, level: &InterfaceLevel) -> Result<PressureSolution> {
        let c4 = build_c4(level);
        let c5 = build_c5(level);
        let mut rhs = -&grid::divergence_h(f);
        let mut corr = c5.clone();
        corr.axpy(-1.0, &c4);
        corr.add_to(&mut rhs);
        let m = corr.sum() / spec_len(&rhs);
        let rhs = rhs.map(|v| v - m);
        let norm = rhs.max_abs();
        let residual_mean = if norm > 0.0 { grid::mean(&rhs).abs() / norm } else { 0.0 };
        let p = spectral::solve_laplacian_h(&rhs)?;
        let mut gradient = grid::gradient_h(&p);
        add_vector_to(&build_c6(level), &mut gradient);
        Ok(PressureSolution { p, gradient, mean_removed: m, residual_mean })
    }

    /// Pressure consistent with velocity `u` at time `t`.
    pub fn recover_pressure_at(&self, u: &VectorGridFunction, t: f64) -> Result<PressureSolution> {
        let level = self.level(t, u)?;
        let (mut f, _) = self.explicit_level(u, &level);
        if let Some(g) = self.body_force(&level.sides, t) {
            f = &f - &g;
        }
        self.pressure_solve(&f, &level)
    }

    pub fn initial_pressure(&self) -> Result<PressureSolution> {
        self.recover_pressure_at(&self.problem.initial_velocity, self.problem.t0)
    }

    /// Advances one step; the first step uses only the current level.
    pub fn step(&self, state: &SolverState) -> Result<SolverState> {
        self.advance(state, None).map(|(s, _)| s).map_err(|e| Error::AtStep { step: state.step + 1, source: Box::new(e) })
    }

    /// As [`Solver::step`], also returning the corrections used.
    pub fn step_with_corrections(&self, state: &SolverState) -> Result<(SolverState, CorrectionBundle)> {
        let mut bundle = CorrectionBundle::empty(self.spec(), state.t, state.t + self.tau);
        let s = self.advance(state, Some(&mut bundle)).map_err(|e| Error::AtStep { step: state.step + 1, source: Box::new(e) })?;
        Ok((s.0, bundle))
    }

    fn advance(&self, state: &SolverState, mut bundle: Option<&mut CorrectionBundle>) -> Result<(SolverState, ())> {
        let spec = self.spec();
        let tau = self.tau;
        let (tn, tnp1) = (state.t, state.t + tau);
        let u_n = &state.u;
        let level_n = self.level(tn, u_n)?;

        // explicit term, extrapolated to the half step after the first step
        let (tp, u_p, u_next, levels) = match &state.u_prev {
            None => (tn, u_n.clone(), u_n.clone(), vec![(1.0, u_n, level_n.clone())]),
            Some(u_prev) => {
                let level_prev = self.level(tn - tau, u_prev)?;
                let u_p = &(u_n * 1.5) - &(u_prev * 0.5);
                let u_next = &(u_n * 2.0) - u_prev;
                (tn + 0.5 * tau, u_p, u_next, vec![(1.5, u_n, level_n.clone()), (-0.5, u_prev, level_prev)])
            }
        };
        let level_p = if tp == tn { level_n.clone() } else { self.level(tp, &u_p)? };
        let level_np1 = self.level(tnp1, &u_next)?;

        let mut f = VectorGridFunction::zeros(spec);
        let mut c2 = vector_correction(spec);
        let mut shift = vector_correction(spec);
        for (w, u_k, level_k) in &levels {
            let (n_k, c2_k) = self.explicit_level(u_k, level_k);
            f = &f + &(&n_k * *w);
            for i in 0..DIM {
                c2[i].axpy(*w, &c2_k[i]);
            }
            if level_k.t != tp && self.config.enable_c7 {
                let crossings = self.node_crossings(level_k, &level_p, u_k)?;
                let s = build_level_shift(spec, &crossings, *w);
                for i in 0..DIM {
                    shift[i].axpy(1.0, &s[i]);
                }
            }
        }
        add_vector_to(&shift, &mut f);
        if let Some(g) = self.body_force(&level_p.sides, tp) {
            f = &f - &g;
        }

        let pressure = self.pressure_solve(&f, &level_p)?;

        let c3_n = build_c3(&level_n);
        let c3_np1 = build_c3(&level_np1);

        let (mut c1, mut c7, mut crossings) = (vector_correction(spec), vector_correction(spec), 0);
        if let Some(geometry) = self.problem.geometry.as_deref().filter(|g| !g.is_static()) {
            let events = crossing_events(spec, geometry, &level_n.sides, &level_np1.sides, tn, tnp1)?;
            crossings = events.len();
            let old: Vec<NodeCrossing> = events
                .iter()
                .map(|e| self.crossing_at(geometry, e.node, e.time, e.fraction, e.to, u_n, &level_n))
                .collect::<Result<_>>()?;
            if self.config.enable_c1 {
                c1 = build_c1(spec, &old);
            }
            if self.config.enable_c7 {
                let from_p = if tp == tn { old.clone() } else { self.node_crossings(&level_p, &level_np1, &u_p)? };
                c7 = build_c7(spec, &from_p, &old);
            }
        }

        let mut u_new = VectorGridFunction::zeros(spec);
        for i in 0..DIM {
            let mut rhs = grid::laplacian_h(u_n.comp(i));
            c3_n[i].add_to(&mut rhs);
            rhs = &rhs * 0.5;
            c3_np1[i].scaled(0.5).add_to(&mut rhs);
            rhs -= f.comp(i);
            rhs -= pressure.gradient.comp(i);
            c1[i].add_to(&mut rhs);
            c7[i].add_to(&mut rhs);
            let mut rhs = &rhs * tau;
            rhs += u_n.comp(i);
            *u_new.comp_mut(i) = spectral::cn_resolvent(&rhs, tau);
        }

        let norm = u_new.max_abs();
        if !u_new.is_finite() || norm > 1e6 * (1.0 + self.initial_norm) {
            return Err(Error::Diverged { step: state.step + 1, norm });
        }

        let mut div = grid::divergence_h(&u_new);
        for (rec, j) in level_np1.records() {
            for (node, v) in stencil_correction_first(&spec, rec, &j.velocity[rec.axis]) {
                div[node] += v;
            }
        }

        if let Some(b) = bundle.as_deref_mut() {
            b.c1 = c1;
            b.c2 = c2;
            b.c3 = [0, 1].map(|i| {
                let mut c = c3_n[i].scaled(0.5);
                c.axpy(0.5, &c3_np1[i]);
                c
            });
            b.c4 = build_c4(&level_p);
            b.c5 = build_c5(&level_p);
            b.c6 = build_c6(&level_p);
            b.c7 = c7;
            b.level_shift = shift;
        }

        Ok((
            SolverState {
                step: state.step + 1,
                t: tnp1,
                u: u_new,
                u_prev: Some(u_n.clone()),
                pressure: Some(pressure.p),
                diagnostics: StepDiagnostics {
                    mean_removed: pressure.mean_removed,
                    residual_mean: pressure.residual_mean,
                    divergence: div.max_abs(),
                    crossings,
                },
            },
            (),
        ))
    }

    /// Runs to the final time, calling `observe` after every step.
    pub fn run(&self, mut observe: impl FnMut(&SolverState)) -> Result<SolverState> {
        let mut state = self.initial_state();
        self.snapshot(&state)?;
        for _ in 0..self.steps {
            state = self.step(&state)?;
            observe(&state);
            self.snapshot(&state)?;
        }
        Ok(state)
    }

    /// Steps at which snapshots are due.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .config
            .snapshot_times
            .iter()
            .map(|&t| (((t - self.problem.t0) / self.tau).round().max(0.0) as usize).min(self.steps))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn snapshot(&self, state: &SolverState) -> Result<()> {
        let Some(dir) = &self.config.snapshot_dir else {
            return Ok(());
        };
        if !self.snapshot_steps().contains(&state.step) {
            return Ok(());
        }
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("velocity_{:06}.csv", state.step));
        write_velocity_csv(&mut BufWriter::new(File::create(path)?), state)?;
        Ok(())
    }
}

/// Header comment with grid and time, then rows `i0,i1,x,y,u,v`.
pub fn write_velocity_csv<W: Write>(w: &mut W, state: &SolverState) -> std::io::Result<()> {
    let spec = *state.u.spec();
    writeln!(w, "# N={} L={} t={} field=velocity", spec.n(), spec.half_period(), state.t)?;
    writeln!(w, "i0,i1,x,y,u,v")?;
    for n in spec.nodes() {
        let x = spec.node(n);
        let v = state.u.at(n);
        writeln!(w, "{},{},{},{},{:e},{:e}", n[0], n[1], x[0], x[1], v[0], v[1])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::NoJumps;

    fn taylor_green(spec: GridSpec) -> Problem {
        Problem {
            spec,
            geometry: None,
            jumps: Arc::new(NoJumps),
            body: None,
            initial_velocity: VectorGridFunction::from_fn(spec, |x| [-x[0].cos() * x[1].sin(), x[0].sin() * x[1].cos()]),
            t0: 0.0,
        }
    }

    #[test]
    fn dense_solve() {
        let a = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let x = solve_dense(a, [3.0, 5.0, 5.0]).unwrap();
        for (v, e) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn step_count_and_tau() {
        let spec = GridSpec::periodic_2pi(16).unwrap();
        let cfg = SolverConfig { t_final: 0.5, ..Default::default() };
        let s = Solver::new(taylor_green(spec), cfg).unwrap();
        assert_eq!(s.tau(), 0.5 * spec.h());
        assert!(s.tau() * s.steps() as f64 <= 0.5);
        assert!(s.tau() * (s.steps() + 1) as f64 > 0.5);
        let bad = SolverConfig { lambda: -1.0, ..Default::default() };
        assert!(matches!(Solver::new(taylor_green(spec), bad), Err(Error::Config(_))));
    }

    #[test]
    fn taylor_green_decays() {
        let spec = GridSpec::periodic_2pi(32).unwrap();
        let cfg = SolverConfig { t_final: 0.25, ..Default::default() };
        let s = Solver::new(taylor_green(spec), cfg).unwrap();
        let end = s.run(|_| {}).unwrap();
        let e = (-2.0 * end.t).exp();
        let exact = VectorGridFunction::from_fn(spec, |x| [-x[0].cos() * x[1].sin() * e, x[0].sin() * x[1].cos() * e]);
        let err = (&end.u - &exact).max_abs();
        assert!(err < 5e-3, "{err}");
    }
}
