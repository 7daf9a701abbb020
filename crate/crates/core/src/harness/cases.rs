//! Closed-form two-sided flows used to measure the scheme's error.
//!
//! Every case is a Taylor-Green background plus, inside a circle, a
//! divergence-free perturbation `A(t) curl(psi)` with
//! `psi = (r^2 - R^2)^2 (beta0 + beta1 xi)` in coordinates `xi` relative to
//! the circle center. The perturbation and its first derivative vanish on
//! the circle, so velocity is continuous with a jump in normal derivative.
//! The inside pressure gains `A (p0 + 8 R^2 beta1 eta + p3 (r^2 - R^2)^2)`,
//! which makes the normal pressure-derivative jump equal the surface
//! divergence of the tangential force. A per-side body force makes both
//! sides exact solutions.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, VectorGridFunction};
use crate::interface::{
    surface_divergence_ftan, ArclengthSeries, BodyForce, CurvePoint, DerivedJumps, ForceDensity, InterfaceGeometry, JumpProvider, JumpSet,
    Motion, OneSidedVelocity, ScalarJump, Side, SideField,
};
use crate::jet::Jet;
use crate::solver::{JumpMode, Problem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub radius: f64,
    pub center: [f64; 2],
    /// Center velocity.
    pub drift: [f64; 2],
    /// `A(t) = exp(-decay t)`.
    pub decay: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub p0: f64,
    pub p3: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self { radius: 1.0, center: [0.0, 0.0], drift: [0.0, 0.0], decay: 1.0, beta0: 0.5, beta1: 0.25, p0: 0.3, p3: 0.2 }
    }
}

/// Velocity, its time derivative and pressure as jets on one side.
#[derive(Debug, Clone, Copy)]
pub struct SideJets {
    pub v: [Jet; 2],
    pub vt: [Jet; 2],
    pub q: Jet,
}

impl SideJets {
    pub fn advection(&self) -> [Jet; 2] {
        [0, 1].map(|i| self.v[0] * self.v[i].d(0) + self.v[1] * self.v[i].d(1))
    }

    /// `v_t + v . grad v + grad q - Delta v`.
    pub fn body_force(&self) -> [Jet; 2] {
        let n = self.advection();
        [0, 1].map(|i| self.vt[i] + n[i] + self.q.d(i) - self.v[i].laplacian())
    }
}

fn scalar_jump(out: &Jet, inn: &Jet) -> ScalarJump {
    let d = *out - *inn;
    ScalarJump { value: d.value(), grad: d.grad(), hess: d.hessian() }
}

#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    name: String,
    perturbation: Option<Perturbation>,
    geometry: Option<Arc<InterfaceGeometry>>,
    /// Added to the outside velocity; nonzero values break continuity.
    velocity_defect: f64,
    background: bool,
}

impl ManufacturedCase {
    /// Smooth Taylor-Green vortex without an interface.
    pub fn taylor_green() -> Self {
        Self { name: "taylor_green".into(), perturbation: None, geometry: None, velocity_defect: 0.0, background: true }
    }

    /// Decaying perturbation inside a fixed unit circle.
    pub fn static_circle() -> Self {
        Self::with_perturbation("static_circle", Perturbation::default()).expect("default case is valid")
    }

    /// Steady perturbation carried by a translating unit circle.
    pub fn moving_circle() -> Self {
        let p = Perturbation { drift: [0.4, 0.2], decay: 0.0, ..Perturbation::default() };
        Self::with_perturbation("moving_circle", p).expect("default case is valid")
    }

    /// Fluid at rest with a static interface and no force.
    pub fn quiescent() -> Self {
        let p = Perturbation { beta0: 0.0, beta1: 0.0, p0: 0.0, p3: 0.0, ..Perturbation::default() };
        let mut c = Self::with_perturbation("quiescent", p).expect("default case is valid");
        c.background = false;
        c
    }

    pub fn with_perturbation(name: &str, p: Perturbation) -> Result<Self> {
        let motion = if p.drift == [0.0, 0.0] { Motion::Static } else { Motion::Translate { velocity: p.drift } };
        let geometry = InterfaceGeometry::circle(p.center, p.radius, motion, PI)?;
        Ok(Self { name: name.into(), perturbation: Some(p), geometry: Some(Arc::new(geometry)), velocity_defect: 0.0, background: true })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "taylor_green" => Ok(Self::taylor_green()),
            "static_circle" => Ok(Self::static_circle()),
            "moving_circle" => Ok(Self::moving_circle()),
            "quiescent" => Ok(Self::quiescent()),
            other => {
                Err(Error::Config(format!("unknown case `{other}` (expected taylor_green, static_circle, moving_circle or quiescent)")))
            }
        }
    }

    /// Copy whose outside velocity is shifted by `(eps, 0)`.
    pub fn with_velocity_defect(mut self, eps: f64) -> Self {
        self.velocity_defect = eps;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn geometry(&self) -> Option<&Arc<InterfaceGeometry>> {
        self.geometry.as_ref()
    }

    pub fn perturbation(&self) -> Option<&Perturbation> {
        self.perturbation.as_ref()
    }

    /// Jets of order `order` (at most 4) for the fields on `side` at `x`.
    pub fn side_jets(&self, x: [f64; 2], t: f64, side: Side, order: usize) -> SideJets {
        let (out_order, order) = (order, order.max(1));
        let [xj, yj] = Jet::coords(x, order + 1);
        let mut v;
        let mut vt;
        let mut q;
        if self.background {
            let e = (-2.0 * t).exp();
            let (cx, sx, cy, sy) = (xj.cos(), xj.sin(), yj.cos(), yj.sin());
            v = [-(cx * sy) * e, sx * cy * e];
            vt = [v[0] * -2.0, v[1] * -2.0];
            q = ((xj * 2.0).cos() + (yj * 2.0).cos()) * (-0.25 * e * e);
        } else {
            v = [Jet::constant(0.0, order + 1); 2];
            vt = v;
            q = Jet::constant(0.0, order + 1);
        }
        match (side, self.perturbation, &self.geometry) {
            (Side::Inside, Some(p), Some(g)) => {
                let xi = g.nearest_image(x, t);
                let c = g.center(t);
                let [a, b] = Jet::coords([xi[0] - c[0], xi[1] - c[1]], order + 1);
                let amp = (-p.decay * t).exp();
                let r2 = a * a + b * b + (-p.radius * p.radius);
                let psi = r2 * r2 * (a * p.beta1 + p.beta0);
                let w = [-psi.d(1) * amp, psi.d(0) * amp];
                let pi = (b * (8.0 * p.radius * p.radius * p.beta1) + r2 * r2 * p.p3 + p.p0) * amp;
                for i in 0..2 {
                    let transport = w[i].d(0) * p.drift[0] + w[i].d(1) * p.drift[1];
                    vt[i] = vt[i] + w[i] * -p.decay - transport;
                    v[i] = v[i] + w[i];
                }
                q = q + pi;
            }
            (Side::Outside, _, _) => {
                v[0] = v[0] + self.velocity_defect;
            }
            _ => {}
        }
        SideJets { v: v.map(|j| j.truncate(out_order)), vt: vt.map(|j| j.truncate(out_order)), q: q.truncate(out_order.max(1) + 1) }
    }

    /// Side of `x` at time `t`.
    pub fn side_of(&self, x: [f64; 2], t: f64) -> Side {
        match &self.geometry {
            Some(g) => Side::of_distance(g.signed_distance(x, t)),
            None => Side::Outside,
        }
    }

    pub fn velocity(&self, x: [f64; 2], t: f64, side: Side) -> [f64; 2] {
        let j = self.side_jets(x, t, side, 0);
        [j.v[0].value(), j.v[1].value()]
    }

    pub fn pressure(&self, x: [f64; 2], t: f64, side: Side) -> f64 {
        self.side_jets(x, t, side, 0).q.value()
    }

    pub fn sides(&self, spec: GridSpec, t: f64) -> SideField {
        match &self.geometry {
            Some(g) => crate::interface::classify(spec, g, t),
            None => SideField::all_outside(spec),
        }
    }

    pub fn velocity_grid(&self, spec: GridSpec, t: f64) -> VectorGridFunction {
        let sides = self.sides(spec, t);
        VectorGridFunction::from_index_fn(spec, |n| self.velocity(spec.node(n), t, sides.side(n)))
    }

    pub fn pressure_grid(&self, spec: GridSpec, t: f64) -> GridFunction {
        let sides = self.sides(spec, t);
        GridFunction::from_index_fn(spec, |n| self.pressure(spec.node(n), t, sides.side(n)))
    }

    /// Exact jumps at a point on the interface.
    pub fn jumps_at(&self, x: [f64; 2], t: f64) -> JumpSet {
        let o = self.side_jets(x, t, Side::Outside, 4);
        let i = self.side_jets(x, t, Side::Inside, 4);
        let (no, ni) = (o.advection(), i.advection());
        let (go, gi) = (o.body_force(), i.body_force());
        JumpSet {
            velocity: [0, 1].map(|k| scalar_jump(&o.v[k], &i.v[k])),
            pressure: scalar_jump(&o.q, &i.q),
            advection: [0, 1].map(|k| scalar_jump(&no[k], &ni[k])),
            body: [0, 1].map(|k| scalar_jump(&go[k], &gi[k])),
            velocity_t: [0, 1].map(|k| o.vt[k].value() - i.vt[k].value()),
        }
    }

    fn force_at(&self, p: &CurvePoint) -> [f64; 2] {
        let j = self.jumps_at(p.x, p.t);
        let n = p.normal;
        let dn = [0, 1].map(|k| j.velocity[k].grad[0] * n[0] + j.velocity[k].grad[1] * n[1]);
        [j.pressure.value * n[0] - dn[0], j.pressure.value * n[1] - dn[1]]
    }

    /// Checks continuity, tangential force compatibility and incompressibility.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::ConstructionInvalid { case: self.name.clone(), reason });
        let Some(g) = &self.geometry else {
            return Ok(());
        };
        for t in [0.0, 0.37] {
            let mut flux = 0.0;
            let series = ArclengthSeries::new(g, t, 128, |p| {
                let f = self.force_at(p);
                f[0] * p.tangent[0] + f[1] * p.tangent[1]
            });
            for k in 0..64 {
                let th = TAU * k as f64 / 64.0;
                let p = g.point(th, t);
                let j = self.jumps_at(p.x, t);
                let n = p.normal;
                if j.velocity.iter().any(|v| v.value.abs() > 1e-12) {
                    return fail(format!("velocity jumps across the interface at theta={th:.3}, t={t}"));
                }
                let dn = [0, 1].map(|k| j.velocity[k].grad[0] * n[0] + j.velocity[k].grad[1] * n[1]);
                if (dn[0] * n[0] + dn[1] * n[1]).abs() > 1e-12 {
                    return fail(format!("normal derivative jump has a normal part at theta={th:.3}"));
                }
                let dpn = j.pressure.grad[0] * n[0] + j.pressure.grad[1] * n[1];
                if (series.d_ds(th) - dpn).abs() > 1e-8 {
                    return fail(format!("pressure-derivative jump does not match the tangential force at theta={th:.3}"));
                }
                for side in [Side::Inside, Side::Outside] {
                    let s = self.side_jets(p.x, t, side, 2);
                    let div = s.v[0].d(0) + s.v[1].d(1);
                    if div.value().abs() > 1e-12 || div.grad().iter().any(|d| d.abs() > 1e-12) {
                        return fail(format!("velocity is not divergence-free on side {side:?}"));
                    }
                }
                flux += dpn * p.speed * TAU / 64.0;
            }
            if flux.abs() > 1e-10 {
                return fail(format!("net normal pressure-derivative jump {flux:e} is nonzero"));
            }
        }
        Ok(())
    }

    /// Problem on `spec` starting from the exact velocity at `t0`.
    pub fn problem(&self, spec: GridSpec, mode: JumpMode, t0: f64) -> Result<Problem> {
        self.validate()?;
        let me = Arc::new(self.clone());
        let jumps: Arc<dyn JumpProvider> = match (mode, &self.geometry) {
            (JumpMode::Analytic, _) | (_, None) => me.clone(),
            (JumpMode::Derived, Some(g)) => Arc::new(DerivedJumps::new(g.clone(), me.clone(), Some(me.clone()))),
        };
        let body: Option<Arc<dyn BodyForce>> = self.perturbation.map(|_| me.clone() as Arc<dyn BodyForce>);
        Ok(Problem { spec, geometry: self.geometry.clone(), jumps, body, initial_velocity: self.velocity_grid(spec, t0), t0 })
    }
}

impl JumpProvider for ManufacturedCase {
    fn jumps(&self, point: &CurvePoint, _inside: &dyn OneSidedVelocity) -> Result<JumpSet> {
        Ok(self.jumps_at(point.x, point.t))
    }
}

impl BodyForce for ManufacturedCase {
    fn eval(&self, x: [f64; 2], t: f64, side: Side) -> [f64; 2] {
        if self.perturbation.is_none() || (side == Side::Outside && self.velocity_defect == 0.0) {
            return [0.0; 2];
        }
        let g = self.side_jets(x, t, side, 2).body_force();
        [g[0].value(), g[1].value()]
    }

    fn jumps(&self, x: [f64; 2], t: f64) -> [ScalarJump; 2] {
        self.jumps_at(x, t).body
    }
}

impl ForceDensity for ManufacturedCase {
    fn force(&self, theta: f64, t: f64) -> [f64; 2] {
        match &self.geometry {
            Some(g) => self.force_at(&g.point(theta, t)),
            None => [0.0; 2],
        }
    }
}

/// Tangential divergence of the force by spectral differentiation, for
/// comparison with the exact normal pressure-derivative jump.
pub fn tangential_force_check(case: &ManufacturedCase, t: f64, samples: usize) -> Result<f64> {
    let Some(g) = case.geometry() else {
        return Ok(0.0);
    };
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let th = TAU * k as f64 / samples as f64;
        let p = g.point(th, t);
        let d = surface_divergence_ftan(g, case, th, t)?;
        let j = case.jumps_at(p.x, t);
        let dpn = j.pressure.grad[0] * p.normal[0] + j.pressure.grad[1] * p.normal[1];
        worst = worst.max((d - dpn).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn background_solves_the_equations_exactly() {
        let c = ManufacturedCase::taylor_green();
        for x in [[0.3, -1.2], [2.0, 0.7]] {
            let g = c.side_jets(x, 0.4, Side::Outside, 2).body_force();
            assert!(g.iter().all(|j| j.value().abs() < 1e-14));
        }
    }

    #[test]
    fn cases_validate() {
        for c in [ManufacturedCase::static_circle(), ManufacturedCase::moving_circle(), ManufacturedCase::quiescent()] {
            c.validate().unwrap();
        }
        assert!(tangential_force_check(&ManufacturedCase::static_circle(), 0.2, 16).unwrap() < 1e-9);
    }

    #[test]
    fn moving_case_matches_static_case_at_start() {
        let (a, b) = (ManufacturedCase::static_circle(), ManufacturedCase::moving_circle());
        for x in [[0.2, 0.3], [1.5, -0.5]] {
            let s = a.side_of(x, 0.0);
            assert_eq!(a.velocity(x, 0.0, s), b.velocity(x, 0.0, s));
            assert_eq!(a.pressure(x, 0.0, s), b.pressure(x, 0.0, s));
        }
    }

    #[test]
    fn velocity_defect_is_rejected() {
        let c = ManufacturedCase::static_circle().with_velocity_defect(1e-3);
        assert!(matches!(c.validate(), Err(Error::ConstructionInvalid { .. })));
    }

    #[test]
    fn time_derivative_matches_finite_difference() {
        let c = ManufacturedCase::moving_circle();
        let x = [0.3, 0.1];
        let (t, dt) = (0.2, 1e-5);
        let vt = c.side_jets(x, t, Side::Inside, 2).vt;
        for k in 0..2 {
            let fd = (c.velocity(x, t + dt, Side::Inside)[k] - c.velocity(x, t - dt, Side::Inside)[k]) / (2.0 * dt);
            assert!((vt[k].value() - fd).abs() < 1e-8);
        }
    }
}
