//! Truncated bivariate Taylor expansions ("jets") for exact derivatives of
//! closed-form fields.
//!
//! A jet of order `K` at `(x0, y0)` stores the coefficients `c_ij` of
//! `sum c_ij dx^i dy^j` for `i + j <= K`. Arithmetic truncates at the smaller
//! order of the operands; differentiation lowers the order by one.

use std::ops::{Add, Mul, Neg, Sub};

pub const MAX_ORDER: usize = 5;
const NCOEF: usize = (MAX_ORDER + 1) * (MAX_ORDER + 2) / 2;

#[inline]
const fn index(i: usize, j: usize) -> usize {
    let m = i + j;
    m * (m + 1) / 2 + j
}

const fn powers() -> [(usize, usize); NCOEF] {
    let mut out = [(0, 0); NCOEF];
    let mut m = 0;
    while m <= MAX_ORDER {
        let mut j = 0;
        while j <= m {
            out[index(m - j, j)] = (m - j, j);
            j += 1;
        }
        m += 1;
    }
    out
}

const POWERS: [(usize, usize); NCOEF] = powers();

#[inline]
fn ncoef(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; NCOEF],
    order: usize,
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = [0.0; NCOEF];
        c[0] = v;
        Self { c, order }
    }

    /// The coordinate function `x_axis` expanded about `x0`.
    pub fn var(axis: usize, x0: f64, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order >= 1 {
            j.c[if axis == 0 { index(1, 0) } else { index(0, 1) }] = 1.0;
        }
        j
    }

    /// Both coordinate jets at a point.
    pub fn coords(x: [f64; 2], order: usize) -> [Jet; 2] {
        [Self::var(0, x[0], order), Self::var(1, x[1], order)]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `d^(i+j) f / dx^i dy^j` at the expansion point.
    pub fn partial(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            return 0.0;
        }
        self.c[index(i, j)] * factorial(i) * factorial(j)
    }

    pub fn grad(&self) -> [f64; 2] {
        [self.partial(1, 0), self.partial(0, 1)]
    }

    pub fn hessian(&self) -> [[f64; 2]; 2] {
        let xy = self.partial(1, 1);
        [[self.partial(2, 0), xy], [xy, self.partial(0, 2)]]
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let mut c = [0.0; NCOEF];
        c[..ncoef(order)].copy_from_slice(&self.c[..ncoef(order)]);
        Self { c, order }
    }

    /// Partial derivative along `axis`; the result has order one lower.
    pub fn d(&self, axis: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let mut c = [0.0; NCOEF];
        for (k, &(i, j)) in POWERS.iter().enumerate().take(ncoef(order)) {
            c[k] = if axis == 0 { (i + 1) as f64 * self.c[index(i + 1, j)] } else { (j + 1) as f64 * self.c[index(i, j + 1)] };
        }
        Self { c, order }
    }

    pub fn laplacian(&self) -> Self {
        self.d(0).d(0) + self.d(1).d(1)
    }

    /// `g(self)` given `derivs[k] = g^(k)(self.value())`, `k = 0..=order`.
    pub fn compose(&self, derivs: &[f64]) -> Self {
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut out = Self::constant(derivs[0], self.order);
        let mut pow = Self::constant(1.0, self.order);
        for (k, dk) in derivs.iter().enumerate().take(self.order + 1).skip(1) {
            pow = pow * delta;
            out = out + pow * (dk / factorial(k));
        }
        out
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let d: Vec<f64> = (0..=self.order).map(|k| [s, c, -s, -c][k % 4]).collect();
        self.compose(&d)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let d: Vec<f64> = (0..=self.order).map(|k| [c, -s, -c, s][k % 4]).collect();
        self.compose(&d)
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose(&vec![e; self.order + 1])
    }

    pub fn powi(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(1.0, self.order), |acc, _| acc * *self)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut c = [0.0; NCOEF];
        for k in 0..ncoef(order) {
            c[k] = self.c[k] + rhs.c[k];
        }
        Jet { c, order }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.c.iter_mut().for_each(|v| *v = -*v);
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut c = [0.0; NCOEF];
        for (ka, &(ia, ja)) in POWERS.iter().enumerate().take(ncoef(order)) {
            let a = self.c[ka];
            if a == 0.0 {
                continue;
            }
            let left = order - ia - ja;
            for (kb, &(ib, jb)) in POWERS.iter().enumerate().take(ncoef(left)) {
                c[index(ia + ib, ja + jb)] += a * rhs.c[kb];
            }
        }
        Jet { c, order }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.c.iter_mut().for_each(|v| *v *= rhs);
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let [x, y] = Jet::coords([0.3, -0.7], 4);
        // f = x^3 y + 2 y^2
        let f = x.powi(3) * y + y.powi(2) * 2.0;
        assert!((f.value() - (0.027 * -0.7 + 2.0 * 0.49)).abs() < 1e-14);
        assert!((f.partial(1, 0) - 3.0 * 0.09 * -0.7).abs() < 1e-14);
        assert!((f.partial(0, 1) - (0.027 + 4.0 * -0.7)).abs() < 1e-14);
        assert!((f.partial(2, 1) - 6.0 * 0.3).abs() < 1e-14);
        assert!((f.partial(3, 1) - 6.0).abs() < 1e-14);
        assert!((f.d(0).d(1).value() - 3.0 * 0.09).abs() < 1e-14);
    }

    #[test]
    fn transcendental_derivatives() {
        let [x, y] = Jet::coords([0.4, 1.1], 5);
        let f = (x * y).sin() + (x - y).exp() * y.cos();
        let fd = |x: f64, y: f64| (x * y).sin() + (x - y).exp() * y.cos();
        let e = 1e-4;
        let (x0, y0) = (0.4, 1.1);
        let fxy = (fd(x0 + e, y0 + e) - fd(x0 + e, y0 - e) - fd(x0 - e, y0 + e) + fd(x0 - e, y0 - e)) / (4.0 * e * e);
        assert!((f.partial(1, 1) - fxy).abs() < 1e-6);
        // d^4/dx^4 of sin(x y) is y^4 sin(x y)
        let g = (x * y).sin();
        assert!((g.partial(4, 0) - 1.1f64.powi(4) * (0.44f64).sin()).abs() < 1e-12);
        assert!((x.cos().partial(5, 0) + 0.4f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn derivative_lowers_order() {
        let [x, _] = Jet::coords([1.0, 0.0], 3);
        let d = x.powi(3).d(0);
        assert_eq!(d.order(), 2);
        assert!((d.partial(2, 0) - 6.0).abs() < 1e-14);
        assert_eq!(d.partial(3, 0), 0.0);
    }
}
