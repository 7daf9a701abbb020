use std::collections::HashMap;
use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

use super::classify::Side;
use super::geometry::{ArclengthSeries, CurvePoint, InterfaceGeometry};

/// Jump (outside minus inside) of a scalar and its first two derivatives at
/// one interface point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScalarJump {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl ScalarJump {
    pub const ZERO: ScalarJump = ScalarJump { value: 0.0, grad: [0.0; 2], hess: [[0.0; 2]; 2] };

    /// Second-order Taylor expansion of the jump a distance `d` along `axis`.
    pub fn taylor(&self, axis: usize, d: f64) -> f64 {
        self.value + d * self.grad[axis] + 0.5 * d * d * self.hess[axis][axis]
    }

    pub fn laplacian(&self) -> f64 {
        self.hess[0][0] + self.hess[1][1]
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }
}

impl Add for ScalarJump {
    type Output = ScalarJump;
    fn add(self, o: ScalarJump) -> ScalarJump {
        let mut out = self;
        out.value += o.value;
        for a in 0..2 {
            out.grad[a] += o.grad[a];
            for b in 0..2 {
                out.hess[a][b] += o.hess[a][b];
            }
        }
        out
    }
}

impl Mul<f64> for ScalarJump {
    type Output = ScalarJump;
    fn mul(self, c: f64) -> ScalarJump {
        ScalarJump { value: self.value * c, grad: self.grad.map(|g| g * c), hess: self.hess.map(|r| r.map(|v| v * c)) }
    }
}

impl Sub for ScalarJump {
    type Output = ScalarJump;
    fn sub(self, o: ScalarJump) -> ScalarJump {
        self + o * -1.0
    }
}

/// All jump data the corrections need at one interface point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct JumpSet {
    pub velocity: [ScalarJump; 2],
    pub pressure: ScalarJump,
    /// Jumps of the advection term `u . grad u`.
    pub advection: [ScalarJump; 2],
    /// Jumps of the body force.
    pub body: [ScalarJump; 2],
    /// Jump of the time derivative of velocity.
    pub velocity_t: [f64; 2],
}

impl JumpSet {
    pub const ZERO: JumpSet = JumpSet {
        velocity: [ScalarJump::ZERO; 2],
        pressure: ScalarJump::ZERO,
        advection: [ScalarJump::ZERO; 2],
        body: [ScalarJump::ZERO; 2],
        velocity_t: [0.0; 2],
    };

    /// Jump of the explicit term `u . grad u - g`, component `i`.
    pub fn explicit(&self, i: usize) -> ScalarJump {
        self.advection[i] - self.body[i]
    }

    pub fn scaled(&self, c: f64) -> JumpSet {
        JumpSet {
            velocity: self.velocity.map(|j| j * c),
            pressure: self.pressure * c,
            advection: self.advection.map(|j| j * c),
            body: self.body.map(|j| j * c),
            velocity_t: self.velocity_t.map(|v| v * c),
        }
    }
}

/// Singular force density on the interface, indexed by curve parameter.
pub trait ForceDensity: Send + Sync {
    fn force(&self, theta: f64, t: f64) -> [f64; 2];

    /// Surface divergence of the tangential part, when known in closed form.
    fn tangential_divergence(&self, _theta: f64, _t: f64) -> Option<f64> {
        None
    }

    /// Whether samples are smooth enough for spectral differentiation.
    fn differentiable(&self) -> bool {
        true
    }
}

/// Body force known on each side of the interface.
pub trait BodyForce: Send + Sync {
    fn eval(&self, x: [f64; 2], t: f64, side: Side) -> [f64; 2];

    /// Jumps of both components at a point on the interface.
    fn jumps(&self, _x: [f64; 2], _t: f64) -> [ScalarJump; 2] {
        [ScalarJump::ZERO; 2]
    }
}

/// Inside limit of the velocity and its gradient `G[i][j] = d_j u_i` at a
/// point on the interface.
pub trait OneSidedVelocity {
    fn inside_state(&self, x: [f64; 2]) -> Result<([f64; 2], [[f64; 2]; 2])>;
}

/// Source of jump data at interface points.
pub trait JumpProvider: Send + Sync {
    fn jumps(&self, point: &CurvePoint, inside: &dyn OneSidedVelocity) -> Result<JumpSet>;

    /// Whether the result depends on the `inside` state.
    fn needs_velocity(&self) -> bool {
        false
    }
}

/// Every jump vanishes.
pub struct NoJumps;

impl JumpProvider for NoJumps {
    fn jumps(&self, _point: &CurvePoint, _inside: &dyn OneSidedVelocity) -> Result<JumpSet> {
        Ok(JumpSet::ZERO)
    }
}

/// Placeholder for providers that ignore the velocity.
pub struct NoVelocity;

impl OneSidedVelocity for NoVelocity {
    fn inside_state(&self, _x: [f64; 2]) -> Result<([f64; 2], [[f64; 2]; 2])> {
        Err(Error::MissingJumps("no velocity available for derived jumps".into()))
    }
}

const SERIES_SAMPLES: usize = 128;

/// `d/ds (f_tan . s)` at parameter `theta`.
pub fn surface_divergence_ftan(geometry: &InterfaceGeometry, force: &dyn ForceDensity, theta: f64, t: f64) -> Result<f64> {
    if let Some(v) = force.tangential_divergence(theta, t) {
        return Ok(v);
    }
    if !force.differentiable() {
        return Err(Error::MissingTangentialDerivative);
    }
    let series = ArclengthSeries::new(geometry, t, SERIES_SAMPLES, |p| tangential(force, p));
    Ok(series.d_ds(theta))
}

fn tangential(force: &dyn ForceDensity, p: &CurvePoint) -> f64 {
    let f = force.force(p.theta, p.t);
    f[0] * p.tangent[0] + f[1] * p.tangent[1]
}

struct ForceSeries {
    /// `a = -f_tan`, componentwise.
    a: [ArclengthSeries; 2],
    /// `f . n`, the pressure jump.
    b: ArclengthSeries,
    /// `d/ds (f_tan . s)`, the normal pressure-derivative jump.
    c: ArclengthSeries,
}

/// Jumps reconstructed from the force density, the geometry, the body-force
/// jumps and the one-sided velocity. Second derivatives of the advection jump
/// are not reconstructed.
pub struct DerivedJumps {
    geometry: Arc<InterfaceGeometry>,
    force: Arc<dyn ForceDensity>,
    body: Option<Arc<dyn BodyForce>>,
    cache: Mutex<HashMap<u64, Arc<ForceSeries>>>,
}

impl DerivedJumps {
    pub fn new(geometry: Arc<InterfaceGeometry>, force: Arc<dyn ForceDensity>, body: Option<Arc<dyn BodyForce>>) -> Self {
        Self { geometry, force, body, cache: Mutex::new(HashMap::new()) }
    }

    fn series(&self, t: f64) -> Result<Arc<ForceSeries>> {
        if let Some(s) = self.cache.lock().expect("jump cache poisoned").get(&t.to_bits()) {
            return Ok(s.clone());
        }
        let g = &*self.geometry;
        let force = &*self.force;
        let ftan_s = ArclengthSeries::new(g, t, SERIES_SAMPLES, |p| tangential(force, p));
        let mut c_samples = Vec::with_capacity(SERIES_SAMPLES);
        for k in 0..SERIES_SAMPLES {
            let th = TAU * k as f64 / SERIES_SAMPLES as f64;
            c_samples.push(match force.tangential_divergence(th, t) {
                Some(v) => v,
                None if force.differentiable() => ftan_s.d_ds(th),
                None => return Err(Error::MissingTangentialDerivative),
            });
        }
        let a = [0, 1].map(|i| {
            ArclengthSeries::new(g, t, SERIES_SAMPLES, |p| {
                let ft = tangential(force, p);
                -ft * p.tangent[i]
            })
        });
        let b = ArclengthSeries::new(g, t, SERIES_SAMPLES, |p| {
            let f = force.force(p.theta, p.t);
            f[0] * p.normal[0] + f[1] * p.normal[1]
        });
        let c = ArclengthSeries::new(g, t, SERIES_SAMPLES, |p| {
            let k = (p.theta / TAU * SERIES_SAMPLES as f64).round() as usize % SERIES_SAMPLES;
            c_samples[k]
        });
        let s = Arc::new(ForceSeries { a, b, c });
        let mut cache = self.cache.lock().expect("jump cache poisoned");
        if cache.len() > 16 {
            cache.clear();
        }
        cache.insert(t.to_bits(), s.clone());
        Ok(s)
    }
}

fn outer(a: [f64; 2], b: [f64; 2]) -> [[f64; 2]; 2] {
    [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]]
}

fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Symmetric tensor from normal/tangential components.
fn frame_hessian(nn: f64, ns: f64, ss: f64, n: [f64; 2], s: [f64; 2]) -> [[f64; 2]; 2] {
    let mut h = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            h[a][b] = nn * n[a] * n[b] + ns * (n[a] * s[b] + s[a] * n[b]) + ss * s[a] * s[b];
        }
    }
    h
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl JumpProvider for DerivedJumps {
    fn needs_velocity(&self) -> bool {
        true
    }

    fn jumps(&self, p: &CurvePoint, inside: &dyn OneSidedVelocity) -> Result<JumpSet> {
        let fs = self.series(p.t)?;
        let th = p.theta;
        let (n, s, kappa) = (p.normal, p.tangent, p.curvature);
        let a = [fs.a[0].value(th), fs.a[1].value(th)];
        let da = [fs.a[0].d_ds(th), fs.a[1].d_ds(th)];
        let (db, d2b) = (fs.b.d_ds(th), fs.b.d2_ds2(th));
        let (c, dc) = (fs.c.value(th), fs.c.d_ds(th));
        let (u, g_in) = inside.inside_state(p.x)?;
        let body = self.body.as_ref().map_or([ScalarJump::ZERO; 2], |b| b.jumps(p.x, p.t));

        let dp = [c * n[0] + db * s[0], c * n[1] + db * s[1]];
        let p_ss = d2b + kappa * c;
        let p_ns = dc - kappa * db;
        let div_g = body[0].grad[0] + body[1].grad[1];
        let ga = [dot(g_in[0], a), dot(g_in[1], a)];
        let lap_p = -2.0 * dot(n, ga) + div_g;
        let pressure = ScalarJump { value: fs.b.value(th), grad: dp, hess: frame_hessian(lap_p - p_ss, p_ns, p_ss, n, s) };

        let rel = (u[0] - p.velocity[0]) * n[0] + (u[1] - p.velocity[1]) * n[1];
        let velocity = [0, 1].map(|i| {
            let u_ss = kappa * a[i];
            let u_ns = da[i];
            let u_nn = dp[i] + rel * a[i] - body[i].value - kappa * a[i];
            ScalarJump { value: 0.0, grad: [a[i] * n[0], a[i] * n[1]], hess: frame_hessian(u_nn, u_ns, u_ss, n, s) }
        });

        let an = outer(a, n);
        let g_out = [[g_in[0][0] + an[0][0], g_in[0][1] + an[0][1]], [g_in[1][0] + an[1][0], g_in[1][1] + an[1][1]]];
        let (gg_out, gg_in) = (matmul(g_out, g_out), matmul(g_in, g_in));
        let un = dot(u, n);
        let advection = [0, 1].map(|i| {
            let hu = velocity[i].hess;
            let grad = [0, 1].map(|k| gg_out[i][k] - gg_in[i][k] + u[0] * hu[k][0] + u[1] * hu[k][1]);
            ScalarJump { value: un * a[i], grad, hess: [[0.0; 2]; 2] }
        });

        let vn = dot(p.velocity, n);
        Ok(JumpSet { velocity, pressure, advection, body, velocity_t: a.map(|ai| -vn * ai) })
    }
}
