use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|det − 1|` for matrices used as group elements.
pub const DET_TOL: f64 = 1e-9;

/// A point of the plane, treated as a row vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Row vector times matrix, `v M`.
    pub fn mul_mat(self, m: &Mat2) -> Vec2 {
        Vec2 {
            x: self.x * m.a11 + self.y * m.a21,
            y: self.x * m.a12 + self.y * m.a22,
        }
    }

    /// Whether both coordinates are within `tol` of an integer.
    pub fn is_integral(self, tol: f64) -> bool {
        (self.x - self.x.round()).abs() <= tol && (self.y - self.y.round()).abs() <= tol
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A real 2×2 matrix `[[a11, a12], [a21, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub fn from_rows(r1: Vec2, r2: Vec2) -> Self {
        Mat2::new(r1.x, r1.y, r2.x, r2.y)
    }

    pub fn row1(&self) -> Vec2 {
        Vec2::new(self.a11, self.a12)
    }

    pub fn row2(&self) -> Vec2 {
        Vec2::new(self.a21, self.a22)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }

    /// Inverse via the adjugate. Errors when the determinant vanishes.
    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(Error::Degenerate { det });
        }
        Ok(Mat2::new(
            self.a22 / det,
            -self.a12 / det,
            -self.a21 / det,
            self.a11 / det,
        ))
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn is_integral(&self, tol: f64) -> bool {
        [self.a11, self.a12, self.a21, self.a22]
            .iter()
            .all(|v| (v - v.round()).abs() <= tol)
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        [
            self.a11 - o.a11,
            self.a12 - o.a12,
            self.a21 - o.a21,
            self.a22 - o.a22,
        ]
        .iter()
        .fold(0.0_f64, |acc, d| acc.max(d.abs()))
    }
}

/// An element `(M, ξ)` of ASL(2,ℝ), acting on row vectors by `x ↦ xM + ξ`.
///
/// Multiplication follows the right-action convention
/// `(M, ξ)(M', ξ') = (MM', ξM' + ξ')`, so that acting by `g` and then by `h`
/// is the same as acting by `g.compose(&h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    m: Mat2,
    t: Vec2,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        m: Mat2::IDENTITY,
        t: Vec2::ZERO,
    };

    /// Builds `(m, t)`, rejecting matrices with `|det − 1| > DET_TOL`.
    pub fn new(m: Mat2, t: Vec2) -> Result<Self> {
        let det = m.det();
        if !((det - 1.0).abs() <= DET_TOL) {
            return Err(Error::NotUnimodular { det });
        }
        if !(t.x.is_finite() && t.y.is_finite()) {
            return Err(Error::pre("translation must be finite"));
        }
        Ok(AffineMap { m, t })
    }

    pub fn linear(m: Mat2) -> Result<Self> {
        AffineMap::new(m, Vec2::ZERO)
    }

    pub fn translation(t: Vec2) -> Self {
        AffineMap {
            m: Mat2::IDENTITY,
            t,
        }
    }

    /// `D(T) = diag(T^{-1/2}, T^{1/2})`.
    pub fn dilation(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::pre(format!("dilation requires T > 0, got {t}")));
        }
        let s = t.sqrt();
        Ok(AffineMap {
            m: Mat2::new(1.0 / s, 0.0, 0.0, s),
            t: Vec2::ZERO,
        })
    }

    /// `k(θ) = [[cos θ, −sin θ], [sin θ, cos θ]]`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        AffineMap {
            m: Mat2::new(c, -s, s, c),
            t: Vec2::ZERO,
        }
    }

    /// `N(ξ) = ([[1, 2ξ], [0, 1]], (−ξ, −ξ²))`.
    pub fn shear(xi: f64) -> Self {
        AffineMap {
            m: Mat2::new(1.0, 2.0 * xi, 0.0, 1.0),
            t: Vec2::new(-xi, -xi * xi),
        }
    }

    /// `(−I, 0)`, the reflection through the origin.
    pub fn negation() -> Self {
        AffineMap {
            m: Mat2::new(-1.0, 0.0, 0.0, -1.0),
            t: Vec2::ZERO,
        }
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.m
    }

    pub fn translation_part(&self) -> Vec2 {
        self.t
    }

    pub fn compose(&self, h: &AffineMap) -> AffineMap {
        AffineMap {
            m: self.m.mul(&h.m),
            t: self.t.mul_mat(&h.m) + h.t,
        }
    }

    pub fn inverse(&self) -> AffineMap {
        // det is 1 within DET_TOL by construction, so this cannot fail.
        let inv = self.m.inverse().expect("unimodular matrix is invertible");
        AffineMap {
            m: inv,
            t: -self.t.mul_mat(&inv),
        }
    }

    pub fn act(&self, p: Vec2) -> Vec2 {
        p.mul_mat(&self.m) + self.t
    }

    /// Largest componentwise difference over matrix and translation parts.
    pub fn max_abs_diff(&self, o: &AffineMap) -> f64 {
        self.m
            .max_abs_diff(&o.m)
            .max((self.t.x - o.t.x).abs())
            .max((self.t.y - o.t.y).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol
    }

    #[test]
    fn compose_examples() {
        let g = AffineMap::shear(0.41).compose(&AffineMap::rotation(1.3));
        assert!(AffineMap::IDENTITY.compose(&g).max_abs_diff(&g) == 0.0);

        let a = AffineMap::translation(Vec2::new(0.3, 0.5));
        let b = AffineMap::translation(Vec2::new(0.1, -0.2));
        let c = a.compose(&b);
        assert_eq!(*c.matrix(), Mat2::IDENTITY);
        assert!(close(c.translation_part(), Vec2::new(0.4, 0.3), 1e-15));

        let n = AffineMap::shear(0.2).compose(&AffineMap::shear(0.3));
        assert!(n.max_abs_diff(&AffineMap::shear(0.5)) <= 1e-12);
    }

    #[test]
    fn act_examples() {
        let p = Vec2::new(1.0, 2.0);
        assert_eq!(AffineMap::IDENTITY.act(p), p);
        let r = AffineMap::rotation(FRAC_PI_2).act(Vec2::new(0.3, -1.7));
        assert!(close(r, Vec2::new(-1.7, -0.3), 1e-15));
        let d = AffineMap::dilation(4.0).unwrap().act(Vec2::new(1.0, 0.0));
        assert_eq!(d, Vec2::new(0.5, 0.0));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(AffineMap::IDENTITY.inverse(), AffineMap::IDENTITY);
        let t = AffineMap::translation(Vec2::new(0.25, -3.0)).inverse();
        assert_eq!(t, AffineMap::translation(Vec2::new(-0.25, 3.0)));
        let n = AffineMap::shear(0.37).inverse();
        assert!(n.max_abs_diff(&AffineMap::shear(-0.37)) <= 1e-12);
    }

    #[test]
    fn special_elements() {
        assert_eq!(AffineMap::dilation(1.0).unwrap(), AffineMap::IDENTITY);
        assert_eq!(AffineMap::shear(0.0), AffineMap::IDENTITY);
        assert!((AffineMap::rotation(0.7).matrix().a11 - 0.764_842_187_284_488_8).abs() < 1e-15);
        assert!(AffineMap::dilation(0.0).is_err());
        assert!(AffineMap::dilation(-2.0).is_err());
        let n = AffineMap::shear(0.3);
        assert_eq!(*n.matrix(), Mat2::new(1.0, 0.6, 0.0, 1.0));
        assert!(close(n.translation_part(), Vec2::new(-0.3, -0.09), 1e-16));
    }

    #[test]
    fn construction_checks_determinant() {
        assert!(AffineMap::linear(Mat2::new(2.0, 0.0, 0.0, 1.0)).is_err());
        assert!(AffineMap::linear(Mat2::new(2.0, 5.0, 0.0, 0.5)).is_ok());
        assert!(AffineMap::linear(Mat2::new(1.0, 0.0, 0.0, 1.0 + 1e-8)).is_err());
    }

    /// B = N(ζ)·[(I,(½,−¼))N(ξ)]⁻¹ with ζ = ξ − ½ lies in ASL(2,ℤ), so both
    /// maps generate the same affine lattice from ℤ².
    #[test]
    fn half_shift_lattice_identity() {
        let offset = AffineMap::translation(Vec2::new(0.5, -0.25));
        for i in 0..100 {
            let xi = -3.0 + 6.0 * (i as f64 + 0.5) / 100.0 + 0.013 * (i as f64).sin();
            let lhs = AffineMap::shear(xi - 0.5);
            let rhs = offset.compose(&AffineMap::shear(xi));
            let b = lhs.compose(&rhs.inverse());
            assert!(b.matrix().is_integral(1e-9), "xi={xi}: {:?}", b);
            assert!(b.translation_part().is_integral(1e-9), "xi={xi}: {:?}", b);
        }
    }

    fn arb_map() -> impl Strategy<Value = AffineMap> {
        (
            -3.0..3.0f64,
            0.0..std::f64::consts::TAU,
            0.2..5.0f64,
            -2.0..2.0f64,
            -2.0..2.0f64,
        )
            .prop_map(|(xi, th, t, tx, ty)| {
                AffineMap::shear(xi)
                    .compose(&AffineMap::rotation(th))
                    .compose(&AffineMap::dilation(t).unwrap())
                    .compose(&AffineMap::translation(Vec2::new(tx, ty)))
            })
    }

    proptest! {
        #[test]
        fn compose_is_associative(a in arb_map(), b in arb_map(), c in arb_map()) {
            let l = a.compose(&b).compose(&c);
            let r = a.compose(&b.compose(&c));
            prop_assert!(l.max_abs_diff(&r) <= 1e-9);
        }

        #[test]
        fn inverse_is_two_sided(a in arb_map()) {
            prop_assert!(a.compose(&a.inverse()).max_abs_diff(&AffineMap::IDENTITY) <= 1e-9);
            prop_assert!(a.inverse().compose(&a).max_abs_diff(&AffineMap::IDENTITY) <= 1e-9);
        }

        #[test]
        fn action_is_a_right_action(a in arb_map(), b in arb_map(), x in -5.0..5.0f64, y in -5.0..5.0f64) {
            let p = Vec2::new(x, y);
            prop_assert!(close(b.act(a.act(p)), a.compose(&b).act(p), 1e-9));
        }

        #[test]
        fn shear_is_a_homomorphism(x1 in -2.0..2.0f64, x2 in -2.0..2.0f64) {
            let l = AffineMap::shear(x1).compose(&AffineMap::shear(x2));
            prop_assert!(l.max_abs_diff(&AffineMap::shear(x1 + x2)) <= 1e-12);
        }

        #[test]
        fn composition_keeps_unit_determinant(a in arb_map(), b in arb_map()) {
            prop_assert!((a.compose(&b).matrix().det() - 1.0).abs() <= DET_TOL);
        }
    }
}
