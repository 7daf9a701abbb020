//! Sparse correction terms that restore consistency of the difference
//! operators across the interface.

use std::collections::BTreeMap;
use std::io::Write;

use crate::grid::{GridFunction, GridSpec, VectorGridFunction};
use crate::interface::{InterfaceLevel, IntersectionRecord, JumpSet, ScalarJump, Side};

/// Correction values on the few nodes next to the interface.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionField {
    spec: GridSpec,
    entries: BTreeMap<usize, f64>,
}

impl CorrectionField {
    pub fn new(spec: GridSpec) -> Self {
        Self { spec, entries: BTreeMap::new() }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn add(&mut self, node: [usize; 2], v: f64) {
        if v != 0.0 {
            *self.entries.entry(self.spec.index_of(node)).or_insert(0.0) += v;
        }
    }

    pub fn get(&self, node: [usize; 2]) -> f64 {
        self.entries.get(&self.spec.index_of(node)).copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.values().all(|&v| v == 0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.entries.iter().filter(|(_, &v)| v != 0.0).map(|(&k, _)| self.spec.unidx(k))
    }

    pub fn entries(&self) -> impl Iterator<Item = ([usize; 2], f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (self.spec.unidx(k), v))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.entries.values_mut().for_each(|v| *v *= c);
        out
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &CorrectionField) {
        for (&k, &v) in &other.entries {
            *self.entries.entry(k).or_insert(0.0) += c * v;
        }
    }

    pub fn add_to(&self, f: &mut GridFunction) {
        let values = f.values_mut();
        for (&k, &v) in &self.entries {
            values[k] += v;
        }
    }

    pub fn to_grid(&self) -> GridFunction {
        let mut f = GridFunction::zeros(self.spec);
        self.add_to(&mut f);
        f
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().sum()
    }
}

pub type VectorCorrection = [CorrectionField; 2];

pub fn vector_correction(spec: GridSpec) -> VectorCorrection {
    [CorrectionField::new(spec), CorrectionField::new(spec)]
}

pub fn add_vector_to(c: &VectorCorrection, f: &mut VectorGridFunction) {
    for (i, ci) in c.iter().enumerate() {
        ci.add_to(f.comp_mut(i));
    }
}

/// One stencil arm that crosses the interface, seen from its center node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arm {
    pub node: [usize; 2],
    /// `+1` or `-1` along the record's axis.
    pub offset: i8,
    /// `+1` if the arm end is outside and the center inside, `-1` otherwise.
    pub chi: f64,
    /// Signed distance from the intersection to the arm end.
    pub d: f64,
}

/// The two arms cut by an intersection: from `base` forward and from the
/// upper node backward.
pub fn arms(spec: &GridSpec, rec: &IntersectionRecord) -> [Arm; 2] {
    let chi = match rec.base_side {
        Side::Inside => 1.0,
        Side::Outside => -1.0,
    };
    [Arm { node: rec.base, offset: 1, chi, d: rec.h_plus }, Arm { node: rec.upper(spec), offset: -1, chi: -chi, d: -rec.h_minus(spec) }]
}

/// Corrections for the centered first difference along the record's axis.
pub fn stencil_correction_first(spec: &GridSpec, rec: &IntersectionRecord, jump: &ScalarJump) -> [([usize; 2], f64); 2] {
    let w = 0.5 / spec.h();
    arms(spec, rec).map(|a| (a.node, -(w * a.offset as f64) * a.chi * jump.taylor(rec.axis, a.d)))
}

/// Corrections for the second difference along the record's axis.
pub fn stencil_correction_second(spec: &GridSpec, rec: &IntersectionRecord, jump: &ScalarJump) -> [([usize; 2], f64); 2] {
    let w = 1.0 / (spec.h() * spec.h());
    arms(spec, rec).map(|a| (a.node, -w * a.chi * jump.taylor(rec.axis, a.d)))
}

/// Advection: `u . grad_h u + C2` approximates `u . grad u` on each side.
pub fn build_c2(level: &InterfaceLevel, u: &VectorGridFunction) -> VectorCorrection {
    let spec = level.spec();
    let mut out = vector_correction(spec);
    for (rec, j) in level.records() {
        let ua = u.comp(rec.axis);
        for (i, c) in out.iter_mut().enumerate() {
            for (node, v) in stencil_correction_first(&spec, rec, &j.velocity[i]) {
                c.add(node, ua.at(node) * v);
            }
        }
    }
    out
}

/// Diffusion: `Delta_h u + C3` approximates `Delta u` on each side.
pub fn build_c3(level: &InterfaceLevel) -> VectorCorrection {
    let spec = level.spec();
    let mut out = vector_correction(spec);
    for (rec, j) in level.records() {
        for (i, c) in out.iter_mut().enumerate() {
            for (node, v) in stencil_correction_second(&spec, rec, &j.velocity[i]) {
                c.add(node, v);
            }
        }
    }
    out
}

/// Divergence of the explicit term: `div_h F + C4` approximates `div F`.
pub fn build_c4(level: &InterfaceLevel) -> CorrectionField {
    let spec = level.spec();
    let mut out = CorrectionField::new(spec);
    for (rec, j) in level.records() {
        for (node, v) in stencil_correction_first(&spec, rec, &j.explicit(rec.axis)) {
            out.add(node, v);
        }
    }
    out
}

/// Pressure Laplacian: `Delta_h p = Delta p + C5` on each side.
pub fn build_c5(level: &InterfaceLevel) -> CorrectionField {
    let spec = level.spec();
    let mut out = CorrectionField::new(spec);
    for (rec, j) in level.records() {
        for (node, v) in stencil_correction_second(&spec, rec, &j.pressure) {
            out.add(node, -v);
        }
    }
    out
}

/// Pressure gradient: `grad_h p + C6` approximates `grad p`.
pub fn build_c6(level: &InterfaceLevel) -> VectorCorrection {
    let spec = level.spec();
    let mut out = vector_correction(spec);
    for (rec, j) in level.records() {
        for (node, v) in stencil_correction_first(&spec, rec, &j.pressure) {
            out[rec.axis].add(node, v);
        }
    }
    out
}

/// A node that changes side within a time window, with the jumps at its
/// position and crossing time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCrossing {
    pub node: [usize; 2],
    /// Crossing time as a fraction of the step.
    pub fraction: f64,
    pub to: Side,
    pub jumps: JumpSet,
}

/// Time-derivative correction for nodes crossing during the step.
pub fn build_c1(spec: GridSpec, crossings: &[NodeCrossing]) -> VectorCorrection {
    let mut out = vector_correction(spec);
    for c in crossings {
        let chi = c.to.sign();
        for (i, f) in out.iter_mut().enumerate() {
            f.add(c.node, -c.fraction * chi * c.jumps.velocity_t[i]);
        }
    }
    out
}

/// Moves the explicit term and the pressure gradient, evaluated on the side
/// held at the pressure time, and the explicit half of the diffusion,
/// evaluated on the side held at the old time, onto the new side.
pub fn build_c7(spec: GridSpec, pressure_side: &[NodeCrossing], old_side: &[NodeCrossing]) -> VectorCorrection {
    let mut out = vector_correction(spec);
    for c in pressure_side {
        let chi = c.to.sign();
        for (i, f) in out.iter_mut().enumerate() {
            f.add(c.node, -chi * (c.jumps.explicit(i).value + c.jumps.pressure.grad[i]));
        }
    }
    for c in old_side {
        let chi = c.to.sign();
        for (i, f) in out.iter_mut().enumerate() {
            f.add(c.node, 0.5 * chi * c.jumps.velocity[i].laplacian());
        }
    }
    out
}

/// Moves one time level of the explicit term onto the side held at the
/// pressure time, with extrapolation weight `weight`.
pub fn build_level_shift(spec: GridSpec, crossings: &[NodeCrossing], weight: f64) -> VectorCorrection {
    let mut out = vector_correction(spec);
    for c in crossings {
        let chi = c.to.sign();
        for (i, f) in out.iter_mut().enumerate() {
            f.add(c.node, weight * chi * c.jumps.advection[i].value);
        }
    }
    out
}

/// All corrections used over one time step.
#[derive(Debug, Clone)]
pub struct CorrectionBundle {
    pub t_n: f64,
    pub t_next: f64,
    pub c1: VectorCorrection,
    /// Extrapolated advection correction.
    pub c2: VectorCorrection,
    /// Average of the diffusion corrections at both ends of the step.
    pub c3: VectorCorrection,
    pub c4: CorrectionField,
    pub c5: CorrectionField,
    pub c6: VectorCorrection,
    pub c7: VectorCorrection,
    /// Side shifts of the extrapolated explicit term.
    pub level_shift: VectorCorrection,
}

impl CorrectionBundle {
    pub fn empty(spec: GridSpec, t_n: f64, t_next: f64) -> Self {
        Self {
            t_n,
            t_next,
            c1: vector_correction(spec),
            c2: vector_correction(spec),
            c3: vector_correction(spec),
            c4: CorrectionField::new(spec),
            c5: CorrectionField::new(spec),
            c6: vector_correction(spec),
            c7: vector_correction(spec),
            level_shift: vector_correction(spec),
        }
    }

    fn named(&self) -> Vec<(String, &CorrectionField)> {
        let mut v = Vec::new();
        let vec_fields =
            [("c1", &self.c1), ("c2", &self.c2), ("c3", &self.c3), ("c6", &self.c6), ("c7", &self.c7), ("shift", &self.level_shift)];
        for (name, f) in vec_fields {
            v.push((format!("{name}x"), &f[0]));
            v.push((format!("{name}y"), &f[1]));
        }
        v.push(("c4".into(), &self.c4));
        v.push(("c5".into(), &self.c5));
        v
    }

    /// CSV rows `field,i0,i1,value` for every stored entry.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "field,i0,i1,value")?;
        for (name, f) in self.named() {
            for (node, v) in f.entries() {
                writeln!(w, "{name},{},{},{v:e}", node[0], node[1])?;
            }
        }
        Ok(())
    }
}
