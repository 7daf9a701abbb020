//! Periodic node grid on `[-L, L)^2` and the finite-difference operators
//! used by the scheme.
//!
//! Nodes sit at `x_j = j h` with `j in [-N, N)` on each axis and `h = L / N`,
//! so one period holds `2N` nodes per axis. Values are stored row-major with
//! storage index `i = j + N`; all stencils wrap around.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Number of spatial dimensions. Fixed.
pub const DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    half_period: f64,
}

impl GridSpec {
    /// Grid with `n` nodes per half-period on `[-half_period, half_period)`.
    pub fn new(n: usize, half_period: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::Config(format!("N must be even and >= 4, got {n}")));
        }
        if !(half_period.is_finite() && half_period > 0.0) {
            return Err(Error::Config(format!("half-period must be positive, got {half_period}")));
        }
        Ok(Self { n, half_period })
    }

    /// The `L = pi` grid used throughout the analysis.
    pub fn periodic_2pi(n: usize) -> Result<Self> {
        Self::new(n, std::f64::consts::PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nodes per axis over one period, `2N`.
    pub fn m(&self) -> usize {
        2 * self.n
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn h(&self) -> f64 {
        self.half_period / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.m() * self.m()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i0: usize, i1: usize) -> usize {
        i0 * self.m() + i1
    }

    #[inline]
    pub fn index_of(&self, node: [usize; 2]) -> usize {
        self.idx(node[0], node[1])
    }

    pub fn unidx(&self, k: usize) -> [usize; 2] {
        [k / self.m(), k % self.m()]
    }

    /// Storage index of `i + offset` with periodic wrap.
    #[inline]
    pub fn wrap(&self, i: usize, offset: isize) -> usize {
        let m = self.m() as isize;
        (i as isize + offset).rem_euclid(m) as usize
    }

    /// Node coordinate along one axis for storage index `i`.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - self.n as f64) * self.h()
    }

    #[inline]
    pub fn node(&self, i: [usize; 2]) -> [f64; 2] {
        [self.coord(i[0]), self.coord(i[1])]
    }

    /// Neighbor of `node` shifted by `offset` along `axis`.
    #[inline]
    pub fn neighbor(&self, node: [usize; 2], axis: usize, offset: isize) -> [usize; 2] {
        let mut out = node;
        out[axis] = self.wrap(node[axis], offset);
        out
    }

    /// Maps a point into the fundamental period `[-L, L)^2`.
    pub fn wrap_point(&self, x: [f64; 2]) -> [f64; 2] {
        let l = self.half_period;
        x.map(|c| (c + l).rem_euclid(2.0 * l) - l)
    }

    pub fn nodes(&self) -> impl Iterator<Item = [usize; 2]> + '_ {
        let m = self.m();
        (0..m).flat_map(move |i0| (0..m).map(move |i1| [i0, i1]))
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Periodic scalar grid function over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![0.0; spec.len()] }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self { spec, values: vec![c; spec.len()] }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!("expected {} values, got {}", spec.len(), values.len())));
        }
        Ok(Self { spec, values })
    }

    /// Samples `f` at every node coordinate.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let values = spec.nodes().map(|i| f(spec.node(i))).collect();
        Self { spec, values }
    }

    /// Samples `f` at every storage index.
    pub fn from_index_fn(spec: GridSpec, mut f: impl FnMut([usize; 2]) -> f64) -> Self {
        let values = spec.nodes().map(&mut f).collect();
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: [usize; 2]) -> f64 {
        self.values[self.spec.idx(i[0], i[1])]
    }

    /// Value at logical (possibly out-of-period) index `j`, `j in Z^2`.
    pub fn at_logical(&self, j: [i64; 2]) -> f64 {
        let m = self.spec.m() as i64;
        let n = self.spec.n() as i64;
        let i0 = (j[0] + n).rem_euclid(m) as usize;
        let i1 = (j[1] + n).rem_euclid(m) as usize;
        self.at([i0, i1])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.spec, other.spec);
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { spec: self.spec, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Cyclic shift: `out(j) = self(j - s)`.
    pub fn shifted(&self, s: [isize; 2]) -> Self {
        let spec = self.spec;
        Self::from_index_fn(spec, |i| self.at([spec.wrap(i[0], -s[0]), spec.wrap(i[1], -s[1])]))
    }
}

impl Index<[usize; 2]> for GridFunction {
    type Output = f64;
    fn index(&self, i: [usize; 2]) -> &f64 {
        &self.values[self.spec.idx(i[0], i[1])]
    }
}

impl IndexMut<[usize; 2]> for GridFunction {
    fn index_mut(&mut self, i: [usize; 2]) -> &mut f64 {
        let k = self.spec.idx(i[0], i[1]);
        &mut self.values[k]
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: &GridFunction) -> GridFunction {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: f64) -> GridFunction {
        self.map(|a| a * rhs)
    }
}

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.map(|a| -a)
    }
}

impl AddAssign<&GridFunction> for GridFunction {
    fn add_assign(&mut self, rhs: &GridFunction) {
        debug_assert_eq!(self.spec, rhs.spec);
        self.values.iter_mut().zip(&rhs.values).for_each(|(a, b)| *a += b);
    }
}

impl SubAssign<&GridFunction> for GridFunction {
    fn sub_assign(&mut self, rhs: &GridFunction) {
        debug_assert_eq!(self.spec, rhs.spec);
        self.values.iter_mut().zip(&rhs.values).for_each(|(a, b)| *a -= b);
    }
}

impl GridFunction {
    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &GridFunction) {
        debug_assert_eq!(self.spec, x.spec);
        self.values.iter_mut().zip(&x.values).for_each(|(s, v)| *s += a * v);
    }
}

/// A grid vector field; both components share one spec.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorGridFunction {
    comps: [GridFunction; DIM],
}

impl VectorGridFunction {
    pub fn new(c0: GridFunction, c1: GridFunction) -> Result<Self> {
        c0.spec.check_same(&c1.spec)?;
        Ok(Self { comps: [c0, c1] })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { comps: [GridFunction::zeros(spec), GridFunction::zeros(spec)] }
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut([f64; 2]) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(spec);
        for i in spec.nodes() {
            let v = f(spec.node(i));
            out.comps[0][i] = v[0];
            out.comps[1][i] = v[1];
        }
        out
    }

    pub fn from_index_fn(spec: GridSpec, mut f: impl FnMut([usize; 2]) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(spec);
        for i in spec.nodes() {
            let v = f(i);
            out.comps[0][i] = v[0];
            out.comps[1][i] = v[1];
        }
        out
    }

    pub fn spec(&self) -> &GridSpec {
        self.comps[0].spec()
    }

    pub fn comp(&self, i: usize) -> &GridFunction {
        &self.comps[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut GridFunction {
        &mut self.comps[i]
    }

    pub fn comps(&self) -> &[GridFunction; DIM] {
        &self.comps
    }

    pub fn at(&self, i: [usize; 2]) -> [f64; 2] {
        [self.comps[0].at(i), self.comps[1].at(i)]
    }

    pub fn map_comps(&self, f: impl Fn(&GridFunction) -> GridFunction) -> Self {
        Self { comps: [f(&self.comps[0]), f(&self.comps[1])] }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps[0].max_abs().max(self.comps[1].max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(GridFunction::is_finite)
    }

    pub fn axpy(&mut self, a: f64, x: &VectorGridFunction) {
        for c in 0..DIM {
            self.comps[c].axpy(a, &x.comps[c]);
        }
    }
}

impl Add for &VectorGridFunction {
    type Output = VectorGridFunction;
    fn add(self, rhs: &VectorGridFunction) -> VectorGridFunction {
        VectorGridFunction { comps: [&self.comps[0] + &rhs.comps[0], &self.comps[1] + &rhs.comps[1]] }
    }
}

impl Sub for &VectorGridFunction {
    type Output = VectorGridFunction;
    fn sub(self, rhs: &VectorGridFunction) -> VectorGridFunction {
        VectorGridFunction { comps: [&self.comps[0] - &rhs.comps[0], &self.comps[1] - &rhs.comps[1]] }
    }
}

impl Mul<f64> for &VectorGridFunction {
    type Output = VectorGridFunction;
    fn mul(self, rhs: f64) -> VectorGridFunction {
        self.map_comps(|c| c * rhs)
    }
}

fn stencil(f: &GridFunction, axis: usize, taps: &[(isize, f64)]) -> GridFunction {
    let spec = *f.spec();
    GridFunction::from_index_fn(spec, |i| taps.iter().map(|&(o, w)| w * f.at(spec.neighbor(i, axis, o))).sum())
}

/// `(f(j + e) - f(j - e)) / 2h` along `axis`.
pub fn centered_diff(f: &GridFunction, axis: usize) -> GridFunction {
    let c = 0.5 / f.spec().h();
    stencil(f, axis, &[(1, c), (-1, -c)])
}

pub fn forward_diff(f: &GridFunction, axis: usize) -> GridFunction {
    let c = 1.0 / f.spec().h();
    stencil(f, axis, &[(1, c), (0, -c)])
}

pub fn backward_diff(f: &GridFunction, axis: usize) -> GridFunction {
    let c = 1.0 / f.spec().h();
    stencil(f, axis, &[(0, c), (-1, -c)])
}

/// One-axis second difference `(f(j+e) - 2 f(j) + f(j-e)) / h^2`.
pub fn second_diff(f: &GridFunction, axis: usize) -> GridFunction {
    let c = 1.0 / (f.spec().h() * f.spec().h());
    stencil(f, axis, &[(1, c), (0, -2.0 * c), (-1, c)])
}

/// Standard 5-point Laplacian.
pub fn laplacian_h(f: &GridFunction) -> GridFunction {
    let spec = *f.spec();
    let c = 1.0 / (spec.h() * spec.h());
    GridFunction::from_index_fn(spec, |i| {
        let mut s = -4.0 * f.at(i);
        for axis in 0..DIM {
            s += f.at(spec.neighbor(i, axis, 1)) + f.at(spec.neighbor(i, axis, -1));
        }
        c * s
    })
}

/// Wide Laplacian: step-`2h` second differences over `(2h)^2`. Equals
/// `divergence_h(gradient_h(f))`.
pub fn wide_laplacian(f: &GridFunction) -> GridFunction {
    let spec = *f.spec();
    let c = 0.25 / (spec.h() * spec.h());
    GridFunction::from_index_fn(spec, |i| {
        let mut s = -4.0 * f.at(i);
        for axis in 0..DIM {
            s += f.at(spec.neighbor(i, axis, 2)) + f.at(spec.neighbor(i, axis, -2));
        }
        c * s
    })
}

pub fn gradient_h(f: &GridFunction) -> VectorGridFunction {
    VectorGridFunction { comps: [centered_diff(f, 0), centered_diff(f, 1)] }
}

pub fn divergence_h(v: &VectorGridFunction) -> GridFunction {
    let mut out = centered_diff(v.comp(0), 0);
    out += &centered_diff(v.comp(1), 1);
    out
}

pub fn mean(f: &GridFunction) -> f64 {
    f.sum() / f.spec().len() as f64
}

pub fn subtract_mean(f: &GridFunction) -> GridFunction {
    let m = mean(f);
    f.map(|v| v - m)
}

/// Checkerboard `(-1)^(j0 + j1)`, an element of the wide Laplacian's null space.
pub fn checkerboard(spec: GridSpec) -> GridFunction {
    GridFunction::from_index_fn(spec, |i| if (i[0] + i[1]) % 2 == 0 { 1.0 } else { -1.0 })
}
