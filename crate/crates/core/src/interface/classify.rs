use crate::error::{Error, Result};
use crate::grid::{GridSpec, DIM};

use super::geometry::{CurvePoint, InterfaceGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Inside,
    Outside,
}

impl Side {
    pub fn of_distance(phi: f64) -> Self {
        if phi <= 0.0 {
            Side::Inside
        } else {
            Side::Outside
        }
    }

    /// `+1` outside, `-1` inside: the sign that turns a jump (outside minus
    /// inside) into the change when moving onto this side.
    pub fn sign(self) -> f64 {
        match self {
            Side::Inside => -1.0,
            Side::Outside => 1.0,
        }
    }
}

/// Side of every grid node at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct SideField {
    spec: GridSpec,
    distance: Vec<f64>,
}

impl SideField {
    /// Every node outside; used when there is no interface.
    pub fn all_outside(spec: GridSpec) -> Self {
        Self { spec, distance: vec![f64::INFINITY; spec.len()] }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn side(&self, node: [usize; 2]) -> Side {
        Side::of_distance(self.distance[self.spec.index_of(node)])
    }

    pub fn side_at(&self, idx: usize) -> Side {
        Side::of_distance(self.distance[idx])
    }

    pub fn distance(&self, node: [usize; 2]) -> f64 {
        self.distance[self.spec.index_of(node)]
    }

    pub fn count_inside(&self) -> usize {
        self.distance.iter().filter(|&&d| d <= 0.0).count()
    }
}

pub fn classify(spec: GridSpec, geometry: &InterfaceGeometry, t: f64) -> SideField {
    let samples = geometry.samples(t);
    let distance = spec.nodes().map(|n| geometry.signed_distance_in(&samples, spec.node(n), t)).collect();
    SideField { spec, distance }
}

/// Crossing of the segment `[base, base + e_axis]` by the interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionRecord {
    pub axis: usize,
    pub base: [usize; 2],
    /// Intersection point, in the unwrapped coordinates of `base`.
    pub x_star: [f64; 2],
    /// Distance from `x_star` to the node `base + e_axis`.
    pub h_plus: f64,
    pub base_side: Side,
    pub point: CurvePoint,
}

impl IntersectionRecord {
    /// The other end of the segment.
    pub fn upper(&self, spec: &GridSpec) -> [usize; 2] {
        spec.neighbor(self.base, self.axis, 1)
    }

    pub fn h_minus(&self, spec: &GridSpec) -> f64 {
        spec.h() - self.h_plus
    }
}

pub const ROOT_TOL: f64 = 1e-12;

/// Every grid segment whose endpoints lie on opposite sides.
pub fn find_intersections(spec: GridSpec, geometry: &InterfaceGeometry, sides: &SideField, t: f64) -> Result<Vec<IntersectionRecord>> {
    let h = spec.h();
    let samples = geometry.samples(t);
    let mut out = Vec::new();
    for base in spec.nodes() {
        for axis in 0..DIM {
            let upper = spec.neighbor(base, axis, 1);
            let (sb, su) = (sides.side(base), sides.side(upper));
            if sb == su {
                continue;
            }
            let x0 = spec.node(base);
            let at = |s: f64| {
                let mut x = x0;
                x[axis] += s * h;
                x
            };
            let phi = |s: f64| geometry.signed_distance_in(&samples, at(s), t);
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            let inside_lo = sb == Side::Inside;
            if (phi(lo) <= 0.0) != inside_lo || (phi(hi) <= 0.0) == inside_lo {
                return Err(Error::RootNotBracketed { node: base, axis });
            }
            while (hi - lo) * h > ROOT_TOL {
                let mid = 0.5 * (lo + hi);
                if (phi(mid) <= 0.0) == inside_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = 0.5 * (lo + hi);
            let x_star = at(s);
            let theta = geometry.closest_theta_in(&samples, x_star, t);
            out.push(IntersectionRecord { axis, base, x_star, h_plus: (1.0 - s) * h, base_side: sb, point: geometry.point(theta, t) });
        }
    }
    Ok(out)
}

/// Nodes with more than two crossings on their four arms; the correction
/// stencils are under-resolved there.
pub fn underresolved_nodes(spec: &GridSpec, records: &[IntersectionRecord]) -> Vec<[usize; 2]> {
    let mut count = vec![[0u8; DIM]; spec.len()];
    for r in records {
        count[spec.index_of(r.base)][r.axis] += 1;
        count[spec.index_of(r.upper(spec))][r.axis] += 1;
    }
    spec.nodes().filter(|&n| count[spec.index_of(n)].iter().any(|&c| c > 1)).collect()
}

/// A node whose side changes over a time interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEvent {
    pub node: [usize; 2],
    /// Crossing time as a fraction of the interval.
    pub fraction: f64,
    pub time: f64,
    pub from: Side,
    pub to: Side,
}

const SUBSAMPLES: usize = 4;

/// Side changes of grid nodes between `t0` and `t1`.
pub fn crossing_events(
    spec: GridSpec,
    geometry: &InterfaceGeometry,
    before: &SideField,
    after: &SideField,
    t0: f64,
    t1: f64,
) -> Result<Vec<CrossingEvent>> {
    let mut out = Vec::new();
    if geometry.is_static() {
        return Ok(out);
    }
    let dt = t1 - t0;
    let sweep = (0..64)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / 64.0;
            let (a, b) = (geometry.position(th, t0), geometry.position(th, t1));
            (a[0] - b[0]).hypot(a[1] - b[1])
        })
        .fold(0.0, f64::max);
    let margin = 2.0 * sweep + 2.0 * spec.h();
    for node in spec.nodes() {
        let x = spec.node(node);
        let d0 = before.distance(node);
        let d1 = after.distance(node);
        // far nodes cannot change side
        if d0.abs().min(d1.abs()) > margin && d0.signum() == d1.signum() {
            continue;
        }
        let phi: Vec<f64> = (0..=SUBSAMPLES)
            .map(|k| match k {
                0 => d0,
                k if k == SUBSAMPLES => d1,
                k => geometry.signed_distance(x, t0 + dt * k as f64 / SUBSAMPLES as f64),
            })
            .collect();
        let sides: Vec<Side> = phi.iter().map(|&p| Side::of_distance(p)).collect();
        let changes: Vec<usize> = (0..SUBSAMPLES).filter(|&k| sides[k] != sides[k + 1]).collect();
        match changes.len() {
            0 => {}
            1 => {
                let k = changes[0];
                let sub = |s: f64| t0 + dt * (k as f64 + s) / SUBSAMPLES as f64;
                // linear interpolation as the first guess, then bisection
                let s_lin = (phi[k] / (phi[k] - phi[k + 1])).clamp(0.0, 1.0);
                let s = refine_crossing(geometry, x, sides[k], sub(0.0), sub(1.0), sub(s_lin));
                out.push(CrossingEvent { node, fraction: (s - t0) / dt, time: s, from: sides[0], to: sides[SUBSAMPLES] });
            }
            _ => return Err(Error::MultipleCrossings { node, t0, t1 }),
        }
    }
    Ok(out)
}

/// Bisection in time for the crossing of `x`, with `from` the side at `lo`.
fn refine_crossing(geometry: &InterfaceGeometry, x: [f64; 2], from: Side, mut lo: f64, mut hi: f64, guess: f64) -> f64 {
    let mut mid = guess;
    for _ in 0..60 {
        if hi - lo < 1e-14 * (1.0 + hi.abs()) {
            break;
        }
        if Side::of_distance(geometry.signed_distance(x, mid)) == from {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
    }
    0.5 * (lo + hi)
}

/// Time in `(t0, t1]` at which `x` leaves `from`; `None` if it never does.
pub fn crossing_time(geometry: &InterfaceGeometry, x: [f64; 2], from: Side, t0: f64, t1: f64) -> Option<f64> {
    if Side::of_distance(geometry.signed_distance(x, t1)) == from {
        return None;
    }
    Some(refine_crossing(geometry, x, from, t0, t1, 0.5 * (t0 + t1)))
}
