use crate::error::Result;
use crate::grid::GridSpec;

use super::classify::{classify, find_intersections, IntersectionRecord, SideField};
use super::geometry::{CurvePoint, InterfaceGeometry};
use super::jumps::{JumpProvider, JumpSet, OneSidedVelocity};

/// Sides, intersections and jump data at one time.
#[derive(Debug, Clone)]
pub struct InterfaceLevel {
    pub t: f64,
    pub sides: SideField,
    pub intersections: Vec<IntersectionRecord>,
    /// Jump data at each intersection, in the same order.
    pub jumps: Vec<JumpSet>,
}

impl InterfaceLevel {
    pub fn empty(spec: GridSpec, t: f64) -> Self {
        Self { t, sides: SideField::all_outside(spec), intersections: Vec::new(), jumps: Vec::new() }
    }

    pub fn build(
        spec: GridSpec,
        geometry: &InterfaceGeometry,
        provider: &dyn JumpProvider,
        inside: &dyn OneSidedVelocity,
        t: f64,
    ) -> Result<Self> {
        let sides = classify(spec, geometry, t);
        let intersections = find_intersections(spec, geometry, &sides, t)?;
        let jumps = intersections.iter().map(|r| provider.jumps(&r.point, inside)).collect::<Result<Vec<_>>>()?;
        Ok(Self { t, sides, intersections, jumps })
    }

    pub fn spec(&self) -> GridSpec {
        self.sides.spec()
    }

    pub fn records(&self) -> impl Iterator<Item = (&IntersectionRecord, &JumpSet)> {
        self.intersections.iter().zip(&self.jumps)
    }
}

/// Curve point closest to `x` at time `t`.
pub fn foot_point(geometry: &InterfaceGeometry, x: [f64; 2], t: f64) -> CurvePoint {
    geometry.point(geometry.closest_theta(x, t), t)
}
