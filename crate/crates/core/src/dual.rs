//! Forward-mode dual numbers and the minimal 3-vector algebra the kinematics
//! needs. Evaluating the kinematics on [`Dual`] yields exact first
//! derivatives, which is how the Christoffel symbols are formed.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Scalar field the kinematics is generic over.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn cst(v: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn value(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
}

/// `re + eps·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }
}

impl Add for Dual {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Neg for Dual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.re += o.re;
        self.eps += o.eps;
    }
}

impl Real for Dual {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::new(v, 0.0)
    }
    #[inline]
    fn sin(self) -> Self {
        Self::new(self.re.sin(), self.eps * self.re.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        Self::new(self.re.cos(), -self.eps * self.re.sin())
    }
    #[inline]
    fn value(self) -> f64 {
        self.re
    }
}

pub type V3<S> = [S; 3];
/// Row-major 3×3 matrix.
pub type M3<S> = [[S; 3]; 3];

#[inline]
pub fn dot<S: Real>(a: &V3<S>, b: &V3<S>) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<S: Real>(a: &V3<S>, b: &V3<S>) -> V3<S> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn sub<S: Real>(a: &V3<S>, b: &V3<S>) -> V3<S> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn axpy<S: Real>(a: &V3<S>, k: S, b: &V3<S>) -> V3<S> {
    [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]]
}

#[inline]
pub fn scale<S: Real>(k: S, a: &V3<S>) -> V3<S> {
    [k * a[0], k * a[1], k * a[2]]
}

#[inline]
pub fn mat_vec<S: Real>(m: &M3<S>, v: &V3<S>) -> V3<S> {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

pub fn mat_mul<S: Real>(a: &M3<S>, b: &M3<S>) -> M3<S> {
    let mut out = [[S::cst(0.0); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

/// Column `j` of `m`.
#[inline]
pub fn col<S: Real>(m: &M3<S>, j: usize) -> V3<S> {
    [m[0][j], m[1][j], m[2][j]]
}

pub fn rot_x<S: Real>(a: S) -> M3<S> {
    let (s, c) = (a.sin(), a.cos());
    let (o, z) = (S::cst(1.0), S::cst(0.0));
    [[o, z, z], [z, c, -s], [z, s, c]]
}

pub fn rot_y<S: Real>(a: S) -> M3<S> {
    let (s, c) = (a.sin(), a.cos());
    let (o, z) = (S::cst(1.0), S::cst(0.0));
    [[c, z, s], [z, o, z], [-s, z, c]]
}

pub fn rot_z<S: Real>(a: S) -> M3<S> {
    let (s, c) = (a.sin(), a.cos());
    let (o, z) = (S::cst(1.0), S::cst(0.0));
    [[c, -s, z], [s, c, z], [z, z, o]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_derivative_of_product_of_trig() {
        // f(x) = sin(x) cos(x) x, f'(x) = cos(2x) x + sin(x) cos(x)
        let x = 0.7;
        let d = Dual::new(x, 1.0);
        let f = d.sin() * d.cos() * d;
        assert!((f.re - x.sin() * x.cos() * x).abs() < 1e-15);
        let expected = (2.0 * x).cos() * x + x.sin() * x.cos();
        assert!((f.eps - expected).abs() < 1e-14);
    }

    #[test]
    fn rotations_are_orthonormal() {
        let r = mat_mul(&mat_mul(&rot_x(0.3), &rot_y(-1.1)), &rot_z(2.0));
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&col(&r, i), &col(&r, j));
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d - e).abs() < 1e-14);
            }
        }
    }
}
