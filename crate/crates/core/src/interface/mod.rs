//! Interface geometry, node classification, grid intersections and jump data.

mod classify;
mod geometry;
mod jumps;
mod level;

pub use classify::{
    classify, crossing_events, crossing_time, find_intersections, underresolved_nodes, CrossingEvent, IntersectionRecord, Side, SideField,
    ROOT_TOL,
};
pub use geometry::{ArclengthSeries, CurvePoint, CurveSamples, InterfaceGeometry, Motion, SampledCurve, Shape, TrigInterpolant};
pub use jumps::{
    surface_divergence_ftan, BodyForce, DerivedJumps, ForceDensity, JumpProvider, JumpSet, NoJumps, NoVelocity, OneSidedVelocity,
    ScalarJump,
};
pub use level::{foot_point, InterfaceLevel};
