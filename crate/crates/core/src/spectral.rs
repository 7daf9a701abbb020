//! Fourier diagonalization of the periodic difference operators.
//!
//! Every operator here is a Fourier multiplier on the `2N x 2N` lattice. Mode
//! `k` (with `-N <= k_nu < N`) is `e_k(x_j) = exp(i k j h pi / L)`, so only the
//! phase `xi = k pi / N` enters the symbols. The maximum-norm operator norm of
//! a multiplier is computed exactly as the l1 sum of its convolution kernel.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{self, GridFunction, GridSpec, VectorGridFunction, DIM};

/// Relative tolerance separating legitimate inputs from misuse in the
/// inverse Laplacian solves.
pub const RANGE_TOL: f64 = 1e-10;

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(m: usize) -> PlanPair {
    static CACHE: OnceLock<RwLock<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(p) = cache.read().expect("plan cache poisoned").get(&m) {
        return p.clone();
    }
    let mut planner = FftPlanner::new();
    let pair = (planner.plan_fft_forward(m), planner.plan_fft_inverse(m));
    cache.write().expect("plan cache poisoned").entry(m).or_insert(pair).clone()
}

/// Unnormalized 2D transform in place on row-major `m x m` data.
fn fft2(data: &mut [Complex64], m: usize, inverse: bool) {
    let (fwd, inv) = plans(m);
    let plan = if inverse { inv } else { fwd };
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    // rows (axis 1 contiguous)
    plan.process_with_scratch(data, &mut scratch);
    // columns
    let mut col = vec![Complex64::default(); m];
    for i1 in 0..m {
        for i0 in 0..m {
            col[i0] = data[i0 * m + i1];
        }
        plan.process_with_scratch(&mut col, &mut scratch);
        for i0 in 0..m {
            data[i0 * m + i1] = col[i0];
        }
    }
}

/// Signed frequency for storage index `s`.
#[inline]
pub fn freq(spec: &GridSpec, s: usize) -> i64 {
    let n = spec.n() as i64;
    let s = s as i64;
    if s < n {
        s
    } else {
        s - 2 * n
    }
}

/// Discrete Fourier coefficients `f^(k) = sum_j f(x_j) exp(-i k j h pi / L)`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    spec: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Coefficient at signed frequency `k` (taken modulo `2N`).
    pub fn at(&self, k: [i64; 2]) -> Complex64 {
        let m = self.spec.m() as i64;
        let s0 = k[0].rem_euclid(m) as usize;
        let s1 = k[1].rem_euclid(m) as usize;
        self.coeffs[self.spec.idx(s0, s1)]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
}

// (-1)^(k0 + k1): node storage starts at j = -N.
fn phase(spec: &GridSpec, s: usize) -> f64 {
    let [s0, s1] = spec.unidx(s);
    if (s0 + s1) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn dft(f: &GridFunction) -> Spectrum {
    let spec = *f.spec();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut data, spec.m(), false);
    for (s, c) in data.iter_mut().enumerate() {
        *c *= phase(&spec, s);
    }
    Spectrum { spec, coeffs: data }
}

/// Inverse of [`dft`]; the imaginary part is discarded.
pub fn idft(s: &Spectrum) -> GridFunction {
    let spec = s.spec;
    let m = spec.m();
    let mut data: Vec<Complex64> = s.coeffs.iter().enumerate().map(|(k, c)| c * phase(&spec, k)).collect();
    fft2(&mut data, m, true);
    let scale = 1.0 / (m * m) as f64;
    let values = data.iter().map(|c| c.re * scale).collect();
    GridFunction::from_values(spec, values).expect("length matches spec")
}

/// A Fourier multiplier: a function of the signed frequency `k`, periodic
/// with period `2N` in each component.
#[derive(Clone)]
pub struct Symbol {
    spec: GridSpec,
    eval: Arc<dyn Fn([i64; 2]) -> Complex64 + Send + Sync>,
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol").field("spec", &self.spec).finish_non_exhaustive()
    }
}

fn xi(spec: &GridSpec, k: i64) -> f64 {
    PI * k as f64 / spec.n() as f64
}

fn is_zero_mode(spec: &GridSpec, k: [i64; 2]) -> bool {
    let m = spec.m() as i64;
    k.iter().all(|&c| c.rem_euclid(m) == 0)
}

fn is_wide_null_mode(spec: &GridSpec, k: [i64; 2]) -> bool {
    let n = spec.n() as i64;
    k.iter().all(|&c| c.rem_euclid(n) == 0)
}

/// `sigma(kh) = -(4/h^2) sum sin^2(xi/2)`.
pub fn sigma(spec: &GridSpec, k: [i64; 2]) -> f64 {
    let h = spec.h();
    -(4.0 / (h * h)) * k.iter().map(|&c| (0.5 * xi(spec, c)).sin().powi(2)).sum::<f64>()
}

/// `sigma_0(kh) = -(1/h^2) sum sin^2(xi)`.
pub fn sigma0(spec: &GridSpec, k: [i64; 2]) -> f64 {
    let h = spec.h();
    -(1.0 / (h * h)) * k.iter().map(|&c| xi(spec, c).sin().powi(2)).sum::<f64>()
}

impl Symbol {
    pub fn new(spec: GridSpec, f: impl Fn([i64; 2]) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { spec, eval: Arc::new(f) }
    }

    pub fn real(spec: GridSpec, f: impl Fn([i64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(spec, move |k| Complex64::new(f(k), 0.0))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn eval(&self, k: [i64; 2]) -> Complex64 {
        (self.eval)(k)
    }

    pub fn identity(spec: GridSpec) -> Self {
        Self::real(spec, |_| 1.0)
    }

    pub fn zero(spec: GridSpec) -> Self {
        Self::real(spec, |_| 0.0)
    }

    pub fn laplacian(spec: GridSpec) -> Self {
        Self::real(spec, move |k| sigma(&spec, k))
    }

    pub fn wide_laplacian(spec: GridSpec) -> Self {
        Self::real(spec, move |k| sigma0(&spec, k))
    }

    /// `(Delta_h)^{-1}` on mean-zero functions, zero at `k = 0`.
    pub fn inverse_laplacian(spec: GridSpec) -> Self {
        Self::real(spec, move |k| if is_zero_mode(&spec, k) { 0.0 } else { 1.0 / sigma(&spec, k) })
    }

    /// `(Delta_0)^{-1}` on `X_0`, zero on the `2^d` null modes.
    pub fn inverse_wide_laplacian(spec: GridSpec) -> Self {
        Self::real(spec, move |k| if is_wide_null_mode(&spec, k) { 0.0 } else { 1.0 / sigma0(&spec, k) })
    }

    pub fn centered_diff(spec: GridSpec, axis: usize) -> Self {
        let h = spec.h();
        Self::new(spec, move |k| Complex64::new(0.0, xi(&spec, k[axis]).sin() / h))
    }

    pub fn forward_diff(spec: GridSpec, axis: usize) -> Self {
        let h = spec.h();
        Self::new(spec, move |k| (Complex64::from_polar(1.0, xi(&spec, k[axis])) - 1.0) / h)
    }

    pub fn backward_diff(spec: GridSpec, axis: usize) -> Self {
        let h = spec.h();
        Self::new(spec, move |k| (1.0 - Complex64::from_polar(1.0, -xi(&spec, k[axis]))) / h)
    }

    /// `A = (Delta_h - Delta_0) Delta_h^{-1}`, zero at `k = 0`.
    pub fn operator_a(spec: GridSpec) -> Self {
        Self::real(spec, move |k| {
            if is_zero_mode(&spec, k) {
                0.0
            } else {
                let s = sigma(&spec, k);
                (s - sigma0(&spec, k)) / s
            }
        })
    }

    /// Resolvent `R = (I - (tau/2) Delta_h)^{-1}`.
    pub fn cn_resolvent(spec: GridSpec, tau: f64) -> Self {
        Self::real(spec, move |k| 1.0 / (1.0 - 0.5 * tau * sigma(&spec, k)))
    }

    /// Crank-Nicolson step `S = (I + (tau/2) Delta_h) R`.
    pub fn cn_step(spec: GridSpec, tau: f64) -> Self {
        Self::real(spec, move |k| {
            let a = 0.5 * tau * sigma(&spec, k);
            (1.0 + a) / (1.0 - a)
        })
    }

    pub fn mul(&self, other: &Symbol) -> Symbol {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self::new(self.spec, move |k| a(k) * b(k))
    }

    pub fn add(&self, other: &Symbol) -> Symbol {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self::new(self.spec, move |k| a(k) + b(k))
    }

    pub fn scale(&self, c: f64) -> Symbol {
        let a = self.eval.clone();
        Self::new(self.spec, move |k| a(k) * c)
    }

    pub fn powi(&self, n: i32) -> Symbol {
        let a = self.eval.clone();
        Self::new(self.spec, move |k| a(k).powi(n))
    }

    /// Symbol values in storage order.
    pub fn lattice(&self) -> Vec<Complex64> {
        let spec = self.spec;
        spec.nodes().map(|[s0, s1]| self.eval([freq(&spec, s0), freq(&spec, s1)])).collect()
    }
}

/// Applies a multiplier to a real grid function, keeping the real part.
pub fn apply_multiplier(f: &GridFunction, symbol: &Symbol) -> GridFunction {
    let spec = *f.spec();
    let m = spec.m();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut data, m, false);
    for ([s0, s1], c) in spec.nodes().zip(data.iter_mut()) {
        *c *= symbol.eval([freq(&spec, s0), freq(&spec, s1)]);
    }
    fft2(&mut data, m, true);
    let scale = 1.0 / (m * m) as f64;
    GridFunction::from_values(spec, data.iter().map(|c| c.re * scale).collect()).expect("length matches spec")
}

fn check_mean_zero(f: &GridFunction) -> Result<()> {
    let mean = grid::mean(f);
    let norm = f.max_abs();
    if mean.abs() > RANGE_TOL * norm.max(f64::MIN_POSITIVE) && norm > 0.0 {
        return Err(Error::NotMeanZero { mean, norm });
    }
    Ok(())
}

/// Mean-zero `g` with `laplacian_h(g) = f`.
pub fn solve_laplacian_h(f: &GridFunction) -> Result<GridFunction> {
    check_mean_zero(f)?;
    Ok(apply_multiplier(f, &Symbol::inverse_laplacian(*f.spec())))
}

/// Solves `wide_laplacian(g) = f` on `X_0`; null-mode content of the output
/// is zero.
pub fn solve_wide_laplacian(f: &GridFunction) -> Result<GridFunction> {
    let spec = *f.spec();
    let norm = f.max_abs();
    let s = dft(f);
    let n = spec.n() as i64;
    let scale = 1.0 / spec.len() as f64;
    let content = [[0, 0], [0, n], [n, 0], [n, n]].iter().map(|&k| s.at(k).norm() * scale).fold(0.0, f64::max);
    if norm > 0.0 && content > RANGE_TOL * norm {
        return Err(Error::NotInRange { content, norm });
    }
    Ok(apply_multiplier(f, &Symbol::inverse_wide_laplacian(spec)))
}

/// Exact discrete projection `P_0 v = v - grad_h Delta_0^{-1} div_h v`.
pub fn project_p0(v: &VectorGridFunction) -> VectorGridFunction {
    let div = grid::divergence_h(v);
    let phi = apply_multiplier(&div, &Symbol::inverse_wide_laplacian(*v.spec()));
    v - &grid::gradient_h(&phi)
}

/// Approximate projection `v - grad_h Delta_h^{-1} div_h v`.
pub fn project_tilde_p(v: &VectorGridFunction) -> VectorGridFunction {
    let div = grid::divergence_h(v);
    let phi = apply_multiplier(&div, &Symbol::inverse_laplacian(*v.spec()));
    v - &grid::gradient_h(&phi)
}

pub fn apply_a(f: &GridFunction) -> Result<GridFunction> {
    check_mean_zero(f)?;
    Ok(apply_multiplier(f, &Symbol::operator_a(*f.spec())))
}

/// Applies `R = (I - (tau/2) Delta_h)^{-1}`.
pub fn cn_resolvent(f: &GridFunction, tau: f64) -> GridFunction {
    apply_multiplier(f, &Symbol::cn_resolvent(*f.spec(), tau))
}

/// Applies `S^n`, or `S^n R` when `with_resolvent` is set.
pub fn cn_power(f: &GridFunction, tau: f64, n: u32, with_resolvent: bool) -> GridFunction {
    let spec = *f.spec();
    let mut sym = Symbol::cn_step(spec, tau).powi(n as i32);
    if with_resolvent {
        sym = sym.mul(&Symbol::cn_resolvent(spec, tau));
    }
    apply_multiplier(f, &sym)
}

/// Convolution kernel `a_j = (2N)^{-2} sum_k s(k) exp(i k j pi / N)`, indexed
/// by storage offset `j mod 2N`.
pub fn kernel(symbol: &Symbol) -> Vec<Complex64> {
    let spec = *symbol.spec();
    let m = spec.m();
    let mut data = symbol.lattice();
    fft2(&mut data, m, true);
    let scale = 1.0 / (m * m) as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    data
}

/// Exact maximum-norm operator norm of a multiplier: `sum_j |a_j|`.
pub fn maxnorm_of_multiplier(symbol: &Symbol) -> f64 {
    kernel(symbol).iter().map(|c| c.norm()).sum()
}

/// Norm of a `DIM x DIM` block multiplier acting on vector fields with the
/// max norm over components: the largest block-row sum of kernel l1 norms.
pub fn maxnorm_of_matrix_multiplier(blocks: &[[Symbol; DIM]; DIM]) -> f64 {
    blocks.iter().map(|row| row.iter().map(maxnorm_of_multiplier).sum::<f64>()).fold(0.0, f64::max)
}

/// Block symbols of `P_0` (`wide = true`) or the approximate projection.
pub fn projection_blocks(spec: GridSpec, wide: bool) -> [[Symbol; DIM]; DIM] {
    let inv = if wide { Symbol::inverse_wide_laplacian(spec) } else { Symbol::inverse_laplacian(spec) };
    let d = [Symbol::centered_diff(spec, 0), Symbol::centered_diff(spec, 1)];
    let block = |i: usize, m: usize| {
        let g = d[i].mul(&inv).mul(&d[m]).scale(-1.0);
        if i == m {
            g.add(&Symbol::identity(spec))
        } else {
            g
        }
    };
    [[block(0, 0), block(0, 1)], [block(1, 0), block(1, 1)]]
}

/// `s`-fold forward divided difference in `xi = k pi / N` along `axis`,
/// evaluated on the lattice (storage order).
fn xi_forward_difference(symbol: &Symbol, axis: usize, s_order: u32) -> Vec<Complex64> {
    let spec = *symbol.spec();
    let m = spec.m();
    let dxi = PI / spec.n() as f64;
    let mut vals = symbol.lattice();
    for _ in 0..s_order {
        let prev = vals.clone();
        for [s0, s1] in spec.nodes() {
            let mut nb = [s0, s1];
            nb[axis] = (nb[axis] + 1) % m;
            vals[spec.idx(s0, s1)] = (prev[spec.idx(nb[0], nb[1])] - prev[spec.idx(s0, s1)]) / dxi;
        }
    }
    vals
}

/// Rigorous upper bound on `maxnorm_of_multiplier` computed only from
/// lattice sums of the symbol and its `s_order`-fold forward differences.
///
/// Splits the kernel sum at radius `R`, applies Cauchy-Schwarz on each part,
/// bounds the weighted kernel moments by the differenced symbol via
/// Parseval, and minimizes over `R`. Every constant is explicit.
pub fn lemma_a1_bound(symbol: &Symbol, s_order: u32) -> Result<f64> {
    if s_order < 2 {
        return Err(Error::Config(format!("s_order must exceed d/2 = 1, got {s_order}")));
    }
    let spec = *symbol.spec();
    let n_lat = spec.len() as f64;
    let m0_sq: f64 = symbol.lattice().iter().map(|c| c.norm_sqr()).sum::<f64>() / n_lat;
    let diff_sq: f64 =
        (0..DIM).map(|ax| xi_forward_difference(symbol, ax, s_order).iter().map(|c| c.norm_sqr()).sum::<f64>()).sum::<f64>() / n_lat;
    // |j|^{2s} <= 2^{s-1} sum_nu |j_nu|^{2s}, |j_nu| <= (pi/2)|beta_nu|
    let m1_sq = 2f64.powi(s_order as i32 - 1) * (PI / 2.0).powi(2 * s_order as i32) * diff_sq;
    if m0_sq == 0.0 {
        return Ok(0.0);
    }
    let (m0, m1) = (m0_sq.sqrt(), m1_sq.sqrt());

    let mut radii: Vec<f64> = spec
        .nodes()
        .map(|[s0, s1]| {
            let (j0, j1) = (freq(&spec, s0) as f64, freq(&spec, s1) as f64);
            (j0 * j0 + j1 * j1).sqrt()
        })
        .collect();
    radii.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
    // tail[i] = sum over radii[i..] of r^{-2s}
    let mut tail = vec![0.0; radii.len() + 1];
    for i in (0..radii.len()).rev() {
        let r = radii[i];
        tail[i] = tail[i + 1] + if r > 0.0 { r.powi(-2 * s_order as i32) } else { f64::INFINITY };
    }
    let mut best = f64::INFINITY;
    // split so that radii[..i] lie inside (count i), radii[i..] outside
    for i in 1..=radii.len() {
        if i < radii.len() && radii[i] == radii[i - 1] {
            continue;
        }
        let val = tail[i].sqrt() * m1 + (i as f64).sqrt() * m0;
        best = best.min(val);
    }
    Ok(best)
}

/// The lattice-sum expression bounding the operator norm up to an
/// h-independent constant (taken as 1 here).
pub fn lemma_a1_shape(symbol: &Symbol, s_order: u32) -> Result<f64> {
    if s_order < 2 {
        return Err(Error::Config(format!("s_order must exceed d/2 = 1, got {s_order}")));
    }
    let spec = *symbol.spec();
    let hd = (PI / spec.n() as f64).powi(DIM as i32);
    let sig_sq: f64 = symbol.lattice().iter().map(|c| c.norm_sqr()).sum::<f64>() * hd;
    let diff_sq: f64 =
        (0..DIM).map(|ax| xi_forward_difference(symbol, ax, s_order).iter().map(|c| c.norm_sqr()).sum::<f64>()).sum::<f64>() * hd;
    let d = DIM as f64;
    let s = s_order as f64;
    Ok((diff_sq + sig_sq).powf(d / (4.0 * s)) * sig_sq.powf((1.0 - d / (2.0 * s)) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{checkerboard, divergence_h, gradient_h, laplacian_h, mean, subtract_mean};
    use crate::random::{random_field, random_vector_field};

    fn spec(n: usize) -> GridSpec {
        GridSpec::periodic_2pi(n).unwrap()
    }

    #[test]
    fn single_mode_concentrates() {
        let s = spec(8);
        let f = GridFunction::from_fn(s, |x| (x[0] + 2.0 * x[1]).cos());
        let sp = dft(&f);
        let m2 = s.len() as f64;
        assert!((sp.at([1, 2]).re - m2 / 2.0).abs() < 1e-9);
        assert!((sp.at([-1, -2]).re - m2 / 2.0).abs() < 1e-9);
        let other: f64 = sp.coeffs().iter().map(|c| c.norm()).sum::<f64>() - m2;
        assert!(other.abs() < 1e-8);
    }

    #[test]
    fn roundtrip_and_parseval() {
        let s = spec(16);
        let f = random_field(s, 1);
        let sp = dft(&f);
        assert!((&idft(&sp) - &f).max_abs() < 1e-12 * f.max_abs());
        let lhs: f64 = f.values().iter().map(|v| v * v).sum();
        let h = s.h();
        let rhs: f64 = sp.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>() * h * h / (2.0 * PI).powi(2);
        assert!((lhs - rhs).abs() < 1e-10 * lhs);
    }

    #[test]
    fn laplacian_solve() {
        let s = spec(16);
        let f = GridFunction::from_fn(s, |x| x[0].cos());
        let g = solve_laplacian_h(&f).unwrap();
        let sig = sigma(&s, [1, 0]);
        assert!((&g - &(&f * (1.0 / sig))).max_abs() < 1e-12);
        assert!(solve_laplacian_h(&GridFunction::zeros(s)).unwrap().max_abs() == 0.0);
        let r = subtract_mean(&random_field(s, 2));
        let g = solve_laplacian_h(&r).unwrap();
        assert!((&laplacian_h(&g) - &r).max_abs() < 1e-10 * r.max_abs());
        assert!(mean(&g).abs() < 1e-12);
        assert!(matches!(solve_laplacian_h(&GridFunction::constant(s, 1.0)), Err(Error::NotMeanZero { .. })));
    }

    #[test]
    fn wide_laplacian_solve() {
        let s = spec(16);
        let v = random_vector_field(s, 3);
        let d = divergence_h(&v);
        let g = solve_wide_laplacian(&d).unwrap();
        assert!((&crate::grid::wide_laplacian(&g) - &d).max_abs() < 1e-10 * d.max_abs());
        assert!(matches!(solve_wide_laplacian(&checkerboard(s)), Err(Error::NotInRange { .. })));
        let f = GridFunction::from_fn(s, |x| x[0].cos());
        let g = solve_wide_laplacian(&f).unwrap();
        assert!((&g - &(&f * (1.0 / sigma0(&s, [1, 0])))).max_abs() < 1e-12);
    }

    #[test]
    fn projections() {
        let s = spec(16);
        let phi = random_field(s, 4);
        assert!(project_p0(&gradient_h(&phi)).max_abs() < 1e-10);
        let v = random_vector_field(s, 5);
        let p = project_p0(&v);
        assert!(divergence_h(&p).max_abs() < 1e-10);
        assert!((&project_p0(&p) - &p).max_abs() < 1e-12);
        assert!((&project_tilde_p(&p) - &p).max_abs() < 1e-10);
        assert!((&project_p0(&project_tilde_p(&v)) - &p).max_abs() < 1e-10);
        let q = &v - &p;
        let lhs = &project_tilde_p(&v) - &p;
        for c in 0..DIM {
            let a = apply_a(q.comp(c)).unwrap();
            assert!((lhs.comp(c) - &a).max_abs() < 1e-10);
        }
    }

    #[test]
    fn operator_a_symbol() {
        let s = spec(8);
        let f = GridFunction::from_fn(s, |x| x[0].cos());
        let a = apply_a(&f).unwrap();
        let mult = (s.h() / 2.0).sin().powi(2);
        assert!((&a - &(&f * mult)).max_abs() < 1e-12);
        assert!(apply_a(&GridFunction::zeros(s)).unwrap().max_abs() == 0.0);
        for n in [8, 16, 64, 256] {
            let sp = spec(n);
            let sym = Symbol::operator_a(sp);
            assert!(sym.lattice().iter().all(|c| c.re >= 0.0 && c.re <= 2.0));
        }
    }

    #[test]
    fn crank_nicolson_operators() {
        let s = spec(16);
        let tau = 0.5 * s.h();
        let c = GridFunction::constant(s, 2.0);
        assert!((&cn_resolvent(&c, tau) - &c).max_abs() < 1e-12);
        assert!((&cn_power(&c, tau, 5, true) - &c).max_abs() < 1e-12);
        let sym = Symbol::cn_resolvent(s, tau);
        assert!(sym.lattice().iter().all(|m| m.re > 0.0 && m.re <= 1.0));
        let r = random_field(s, 6);
        let x = cn_resolvent(&r, tau);
        let back = &x - &(&laplacian_h(&x) * (0.5 * tau));
        assert!((&back - &r).max_abs() < 1e-10);
    }

    #[test]
    fn kernel_norms() {
        let s = spec(16);
        assert!((maxnorm_of_multiplier(&Symbol::identity(s)) - 1.0).abs() < 1e-12);
        // forward difference kernel is (+1/h, -1/h): norm 2/h
        let d = maxnorm_of_multiplier(&Symbol::forward_diff(s, 0));
        assert!((d - 2.0 / s.h()).abs() < 1e-9);
    }

    #[test]
    fn lemma_bound_edge_cases() {
        let s = spec(8);
        assert_eq!(lemma_a1_bound(&Symbol::zero(s), 2).unwrap(), 0.0);
        assert_eq!(lemma_a1_shape(&Symbol::zero(s), 2).unwrap(), 0.0);
        assert!(lemma_a1_bound(&Symbol::identity(s), 1).is_err());
        let a = Symbol::operator_a(s);
        assert!(lemma_a1_bound(&a, 2).unwrap() >= maxnorm_of_multiplier(&a));
    }
}
