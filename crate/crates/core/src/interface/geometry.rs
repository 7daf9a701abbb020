//! Closed interface curves with prescribed motion.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the curve in its reference configuration, parameterized
/// counterclockwise by `theta in [0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        angle: f64,
    },
    /// Trigonometric interpolant through equally spaced samples.
    Sampled(SampledCurve),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Motion {
    Static,
    Translate {
        velocity: [f64; 2],
    },
    /// Rigid rotation about the shape center.
    Rotate {
        omega: f64,
    },
}

/// Smooth closed curve through `points[k]` at `theta_k = 2 pi k / K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    coeffs: [Vec<Complex64>; 2],
    center: [f64; 2],
}

impl SampledCurve {
    pub fn new(points: &[[f64; 2]]) -> Result<Self> {
        let k = points.len();
        if k < 5 {
            return Err(Error::GeometryDegenerate(format!("need at least 5 samples, got {k}")));
        }
        let coeffs = [0, 1].map(|c| {
            (0..k)
                .map(|m| {
                    let mut acc = Complex64::default();
                    for (j, p) in points.iter().enumerate() {
                        acc += p[c] * Complex64::from_polar(1.0, -TAU * (m * j) as f64 / k as f64);
                    }
                    acc / k as f64
                })
                .collect::<Vec<_>>()
        });
        let center = [coeffs[0][0].re, coeffs[1][0].re];
        Ok(Self { coeffs, center })
    }

    /// `d^order X / d theta^order` of one coordinate.
    fn eval(&self, c: usize, theta: f64, order: u32) -> f64 {
        let co = &self.coeffs[c];
        let k = co.len();
        let mut acc = 0.0;
        for (m, a) in co.iter().enumerate() {
            let freq = if 2 * m < k {
                m as f64
            } else if 2 * m == k {
                // split the Nyquist term symmetrically
                let w = m as f64;
                let term = |f: f64| (Complex64::new(0.0, f).powu(order) * a * Complex64::from_polar(1.0, f * theta)).re;
                acc += 0.5 * (term(w) + term(-w));
                continue;
            } else {
                m as f64 - k as f64
            };
            acc += (Complex64::new(0.0, freq).powu(order) * a * Complex64::from_polar(1.0, freq * theta)).re;
        }
        acc
    }
}

impl Shape {
    pub fn center(&self) -> [f64; 2] {
        match self {
            Shape::Circle { center, .. } | Shape::Ellipse { center, .. } => *center,
            Shape::Sampled(s) => s.center,
        }
    }

    /// Position and its first two theta derivatives.
    fn derivs(&self, theta: f64) -> [[f64; 2]; 3] {
        match self {
            Shape::Circle { center, radius } => {
                let (s, c) = theta.sin_cos();
                [[center[0] + radius * c, center[1] + radius * s], [-radius * s, radius * c], [-radius * c, -radius * s]]
            }
            Shape::Ellipse { center, semi_axes, angle } => {
                let (s, c) = theta.sin_cos();
                let (sa, ca) = angle.sin_cos();
                let rot = |v: [f64; 2]| [ca * v[0] - sa * v[1], sa * v[0] + ca * v[1]];
                let [a, b] = *semi_axes;
                let p = rot([a * c, b * s]);
                [[center[0] + p[0], center[1] + p[1]], rot([-a * s, b * c]), rot([-a * c, -b * s])]
            }
            Shape::Sampled(sc) => [0, 1, 2].map(|o| [sc.eval(0, theta, o), sc.eval(1, theta, o)]),
        }
    }

    fn max_extent(&self) -> f64 {
        match self {
            Shape::Circle { radius, .. } => 2.0 * radius,
            Shape::Ellipse { semi_axes, .. } => 2.0 * semi_axes[0].max(semi_axes[1]),
            Shape::Sampled(_) => {
                let c = self.center();
                2.0 * (0..256)
                    .map(|k| {
                        let p = self.derivs(TAU * k as f64 / 256.0)[0];
                        ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }
}

/// Local geometric data at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub theta: f64,
    pub t: f64,
    pub x: [f64; 2],
    /// Outward unit normal.
    pub normal: [f64; 2],
    /// Counterclockwise unit tangent.
    pub tangent: [f64; 2],
    /// `|dX/d theta|`.
    pub speed: f64,
    /// Signed curvature, positive for a convex counterclockwise curve.
    pub curvature: f64,
    /// Velocity of the material point of the interface.
    pub velocity: [f64; 2],
}

/// A closed curve moving by a prescribed rigid motion inside the periodic box
/// `[-L, L)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceGeometry {
    shape: Shape,
    motion: Motion,
    half_period: f64,
}

fn rotate(v: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

const CLOSEST_SAMPLES: usize = 96;

/// Curve positions at evenly spaced parameters, for repeated distance queries
/// at one time.
#[derive(Debug, Clone)]
pub struct CurveSamples {
    t: f64,
    points: Vec<[f64; 2]>,
}

impl CurveSamples {
    const EMPTY: CurveSamples = CurveSamples { t: 0.0, points: Vec::new() };
}

impl InterfaceGeometry {
    pub fn new(shape: Shape, motion: Motion, half_period: f64) -> Result<Self> {
        match &shape {
            Shape::Circle { radius, .. } if !(*radius > 0.0) => {
                return Err(Error::GeometryDegenerate(format!("radius {radius} must be positive")))
            }
            Shape::Ellipse { semi_axes, .. } if !(semi_axes[0] > 0.0 && semi_axes[1] > 0.0) => {
                return Err(Error::GeometryDegenerate(format!("semi-axes {semi_axes:?} must be positive")))
            }
            _ => {}
        }
        let g = Self { shape, motion, half_period };
        if g.shape.max_extent() >= 2.0 * half_period {
            return Err(Error::GeometryDegenerate("curve does not fit in one period".into()));
        }
        if let Shape::Sampled(_) = g.shape {
            g.check_simple()?;
        }
        Ok(g)
    }

    pub fn circle(center: [f64; 2], radius: f64, motion: Motion, half_period: f64) -> Result<Self> {
        Self::new(Shape::Circle { center, radius }, motion, half_period)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn motion(&self) -> Motion {
        self.motion
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn is_static(&self) -> bool {
        matches!(self.motion, Motion::Static) || matches!(self.motion, Motion::Rotate { omega } if omega == 0.0)
    }

    /// Center of the shape at time `t`.
    pub fn center(&self, t: f64) -> [f64; 2] {
        let c = self.shape.center();
        match self.motion {
            Motion::Translate { velocity } => [c[0] + velocity[0] * t, c[1] + velocity[1] * t],
            _ => c,
        }
    }

    /// Position and theta-derivatives at time `t`.
    fn moved(&self, theta: f64, t: f64) -> [[f64; 2]; 3] {
        let [p, d1, d2] = self.shape.derivs(theta);
        match self.motion {
            Motion::Static => [p, d1, d2],
            Motion::Translate { velocity } => [[p[0] + velocity[0] * t, p[1] + velocity[1] * t], d1, d2],
            Motion::Rotate { omega } => {
                let c = self.shape.center();
                let a = omega * t;
                let r = rotate([p[0] - c[0], p[1] - c[1]], a);
                [[c[0] + r[0], c[1] + r[1]], rotate(d1, a), rotate(d2, a)]
            }
        }
    }

    pub fn position(&self, theta: f64, t: f64) -> [f64; 2] {
        self.moved(theta, t)[0]
    }

    pub fn velocity(&self, theta: f64, t: f64) -> [f64; 2] {
        match self.motion {
            Motion::Static => [0.0, 0.0],
            Motion::Translate { velocity } => velocity,
            Motion::Rotate { omega } => {
                let c = self.shape.center();
                let p = self.position(theta, t);
                [-omega * (p[1] - c[1]), omega * (p[0] - c[0])]
            }
        }
    }

    pub fn point(&self, theta: f64, t: f64) -> CurvePoint {
        let [x, d1, d2] = self.moved(theta, t);
        let speed = d1[0].hypot(d1[1]);
        let tangent = [d1[0] / speed, d1[1] / speed];
        let normal = [tangent[1], -tangent[0]];
        let curvature = (d1[0] * d2[1] - d1[1] * d2[0]) / speed.powi(3);
        CurvePoint { theta, t, x, normal, tangent, speed, curvature, velocity: self.velocity(theta, t) }
    }

    /// Image of `x` in the period closest to the shape center at time `t`.
    pub fn nearest_image(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let c = self.center(t);
        let p = 2.0 * self.half_period;
        [0, 1].map(|k| {
            let d = x[k] - c[k];
            c[k] + d - p * (d / p).round()
        })
    }

    /// Parameter of the point on the curve closest to `x` (nearest image).
    pub fn closest_theta(&self, x: [f64; 2], t: f64) -> f64 {
        if self.exact_circle_angle() {
            return self.closest_theta_in(&CurveSamples::EMPTY, x, t);
        }
        self.closest_theta_in(&self.samples(t), x, t)
    }

    /// Coarse curve samples at time `t`, reusable across many queries.
    pub fn samples(&self, t: f64) -> CurveSamples {
        CurveSamples { t, points: (0..CLOSEST_SAMPLES).map(|k| self.position(TAU * k as f64 / CLOSEST_SAMPLES as f64, t)).collect() }
    }

    fn exact_circle_angle(&self) -> bool {
        matches!((&self.shape, self.motion), (Shape::Circle { .. }, Motion::Static | Motion::Translate { .. }))
    }

    fn exact_circle_distance(&self) -> bool {
        matches!(self.shape, Shape::Circle { .. })
    }

    /// As [`InterfaceGeometry::closest_theta`], using precomputed samples.
    pub fn closest_theta_in(&self, samples: &CurveSamples, x: [f64; 2], t: f64) -> f64 {
        let x = self.nearest_image(x, t);
        if self.exact_circle_angle() {
            let c = self.center(t);
            return (x[1] - c[1]).atan2(x[0] - c[0]).rem_euclid(TAU);
        }
        debug_assert!(samples.t == t && samples.points.len() == CLOSEST_SAMPLES);
        let dist2 = |th: f64| {
            let p = self.position(th, t);
            (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)
        };
        let mut best = (0.0, f64::INFINITY);
        for (k, p) in samples.points.iter().enumerate() {
            let d = (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
            if d < best.1 {
                best = (TAU * k as f64 / CLOSEST_SAMPLES as f64, d);
            }
        }
        // Newton on (X - x) . X' = 0, kept inside the sampling bracket
        let width = TAU / CLOSEST_SAMPLES as f64;
        let (lo, hi) = (best.0 - width, best.0 + width);
        let mut th = best.0;
        for _ in 0..50 {
            let [p, d1, d2] = self.moved(th, t);
            let r = [p[0] - x[0], p[1] - x[1]];
            let g = r[0] * d1[0] + r[1] * d1[1];
            let gp = d1[0] * d1[0] + d1[1] * d1[1] + r[0] * d2[0] + r[1] * d2[1];
            if gp <= 0.0 {
                break;
            }
            let next = (th - g / gp).clamp(lo, hi);
            if (next - th).abs() < 1e-15 {
                th = next;
                break;
            }
            th = next;
        }
        if dist2(th) > best.1 {
            th = best.0;
        }
        th.rem_euclid(TAU)
    }

    /// Signed distance, positive outside. Exact for circles.
    pub fn signed_distance(&self, x: [f64; 2], t: f64) -> f64 {
        if self.exact_circle_distance() {
            return self.signed_distance_in(&CurveSamples::EMPTY, x, t);
        }
        self.signed_distance_in(&self.samples(t), x, t)
    }

    /// As [`InterfaceGeometry::signed_distance`], using precomputed samples.
    pub fn signed_distance_in(&self, samples: &CurveSamples, x: [f64; 2], t: f64) -> f64 {
        let xi = self.nearest_image(x, t);
        if let Shape::Circle { radius, .. } = &self.shape {
            let c = self.center(t);
            return (xi[0] - c[0]).hypot(xi[1] - c[1]) - radius;
        }
        let th = self.closest_theta_in(samples, x, t);
        let pt = self.point(th, t);
        let r = [xi[0] - pt.x[0], xi[1] - pt.x[1]];
        let d = r[0].hypot(r[1]);
        let s = r[0] * pt.normal[0] + r[1] * pt.normal[1];
        if s >= 0.0 {
            d
        } else {
            -d
        }
    }

    fn check_simple(&self) -> Result<()> {
        const K: usize = 256;
        let pts: Vec<[f64; 2]> = (0..K).map(|k| self.position(TAU * k as f64 / K as f64, 0.0)).collect();
        let seg = |a: usize| (pts[a], pts[(a + 1) % K]);
        let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
        for i in 0..K {
            for j in i + 2..K {
                if i == 0 && j == K - 1 {
                    continue;
                }
                let (p1, p2) = seg(i);
                let (q1, q2) = seg(j);
                let d1 = cross(q1, q2, p1);
                let d2 = cross(q1, q2, p2);
                let d3 = cross(p1, p2, q1);
                let d4 = cross(p1, p2, q2);
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    return Err(Error::GeometryDegenerate("curve self-intersects".into()));
                }
            }
        }
        // counterclockwise orientation keeps the normal outward
        let area: f64 = (0..K).map(|i| cross([0.0, 0.0], seg(i).0, seg(i).1)).sum::<f64>() * 0.5;
        if area <= 0.0 {
            return Err(Error::GeometryDegenerate("curve must be counterclockwise".into()));
        }
        Ok(())
    }

    /// Trapezoidal quadrature of `f(theta)` against arclength over the curve.
    pub fn integrate_arclength(&self, t: f64, samples: usize, f: impl Fn(&CurvePoint) -> f64) -> f64 {
        (0..samples)
            .map(|k| {
                let p = self.point(TAU * k as f64 / samples as f64, t);
                f(&p) * p.speed
            })
            .sum::<f64>()
            * TAU
            / samples as f64
    }
}

/// Trigonometric interpolant of periodic samples on `[0, 2 pi)`.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn from_samples(samples: &[f64]) -> Self {
        let k = samples.len();
        let coeffs = (0..k)
            .map(|m| {
                samples
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| v * Complex64::from_polar(1.0, -TAU * ((m * j) % k) as f64 / k as f64))
                    .sum::<Complex64>()
                    / k as f64
            })
            .collect();
        Self { coeffs }
    }

    fn freq(&self, m: usize) -> f64 {
        let k = self.coeffs.len();
        if 2 * m < k {
            m as f64
        } else if 2 * m == k {
            0.0
        } else {
            m as f64 - k as f64
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(m, a)| {
                let k = self.coeffs.len();
                if 2 * m == k {
                    a.re * (m as f64 * theta).cos()
                } else {
                    (a * Complex64::from_polar(1.0, self.freq(m) * theta)).re
                }
            })
            .sum()
    }

    /// Derivative interpolant (Nyquist term dropped).
    pub fn derivative(&self) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(m, a)| a * Complex64::new(0.0, self.freq(m))).collect();
        Self { coeffs }
    }
}

/// Arclength derivatives of a function of theta along the curve at time `t`.
#[derive(Debug, Clone)]
pub struct ArclengthSeries {
    value: TrigInterpolant,
    d1: TrigInterpolant,
    d2: TrigInterpolant,
    speed: TrigInterpolant,
}

impl ArclengthSeries {
    pub fn new(geometry: &InterfaceGeometry, t: f64, samples: usize, f: impl Fn(&CurvePoint) -> f64) -> Self {
        let pts: Vec<CurvePoint> = (0..samples).map(|k| geometry.point(TAU * k as f64 / samples as f64, t)).collect();
        let vals: Vec<f64> = pts.iter().map(&f).collect();
        let value = TrigInterpolant::from_samples(&vals);
        let dth = value.derivative();
        let ds: Vec<f64> = pts.iter().map(|p| dth.eval(p.theta) / p.speed).collect();
        let d1 = TrigInterpolant::from_samples(&ds);
        let speed = TrigInterpolant::from_samples(&pts.iter().map(|p| p.speed).collect::<Vec<_>>());
        let d2 = d1.derivative();
        Self { value, d1, d2, speed }
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.value.eval(theta)
    }

    pub fn d_ds(&self, theta: f64) -> f64 {
        self.d1.eval(theta)
    }

    pub fn d2_ds2(&self, theta: f64) -> f64 {
        self.d2.eval(theta) / self.speed.eval(theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn circle_point_data() {
        let g = InterfaceGeometry::circle([0.0, 0.0], 0.5, Motion::Static, PI).unwrap();
        let p = g.point(0.3, 0.0);
        assert!((p.normal[0] - 0.3f64.cos()).abs() < 1e-14);
        assert!((p.curvature - 2.0).abs() < 1e-12);
        assert!((p.normal[0] * p.tangent[0] + p.normal[1] * p.tangent[1]).abs() < 1e-15);
        assert!((g.signed_distance([0.0, 0.0], 0.0) + 0.5).abs() < 1e-15);
        // nearest periodic image
        assert!((g.signed_distance([2.0 * PI + 0.6, 0.0], 0.0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ellipse_distance_matches_brute_force() {
        let shape = Shape::Ellipse { center: [0.2, -0.1], semi_axes: [1.0, 0.6], angle: 0.4 };
        let g = InterfaceGeometry::new(shape, Motion::Rotate { omega: 0.7 }, PI).unwrap();
        let t = 0.3;
        for x in [[1.3, 0.2], [0.1, 0.1], [-0.9, 0.5], [0.25, 0.62]] {
            let d = g.signed_distance(x, t);
            let brute = (0..200_000)
                .map(|k| {
                    let p = g.position(TAU * k as f64 / 200_000.0, t);
                    (p[0] - x[0]).hypot(p[1] - x[1])
                })
                .fold(f64::INFINITY, f64::min);
            assert!((d.abs() - brute).abs() < 1e-8, "{d} vs {brute}");
        }
        assert!(g.signed_distance([0.2, -0.1], t) < 0.0);
    }

    #[test]
    fn sampled_curve_reproduces_circle() {
        let pts: Vec<[f64; 2]> = (0..32)
            .map(|k| {
                let th = TAU * k as f64 / 32.0;
                [0.7 * th.cos(), 0.7 * th.sin()]
            })
            .collect();
        let g = InterfaceGeometry::new(Shape::Sampled(SampledCurve::new(&pts).unwrap()), Motion::Static, PI).unwrap();
        let p = g.point(0.123, 0.0);
        assert!((p.x[0] - 0.7 * 0.123f64.cos()).abs() < 1e-12);
        assert!((p.curvature - 1.0 / 0.7).abs() < 1e-10);
        assert!((g.signed_distance([0.0, 0.9], 0.0) - 0.2).abs() < 1e-10);
    }

    #[test]
    fn rejects_degenerate_curves() {
        assert!(InterfaceGeometry::circle([0.0; 2], 4.0, Motion::Static, PI).is_err());
        assert!(InterfaceGeometry::circle([0.0; 2], -1.0, Motion::Static, PI).is_err());
        // figure eight
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|k| {
                let th = TAU * k as f64 / 40.0;
                [th.sin(), (2.0 * th).sin() * 0.5]
            })
            .collect();
        let r = InterfaceGeometry::new(Shape::Sampled(SampledCurve::new(&pts).unwrap()), Motion::Static, PI);
        assert!(matches!(r, Err(Error::GeometryDegenerate(_))));
    }

    #[test]
    fn arclength_derivatives_on_circle() {
        let g = InterfaceGeometry::circle([0.0; 2], 0.5, Motion::Static, PI).unwrap();
        let s = ArclengthSeries::new(&g, 0.0, 64, |p| p.theta.sin());
        let th = 1.1;
        assert!((s.d_ds(th) - th.cos() / 0.5).abs() < 1e-10);
        assert!((s.d2_ds2(th) + th.sin() / 0.25).abs() < 1e-9);
    }
}
