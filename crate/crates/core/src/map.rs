//! Generalized Henon systems: factors, affine/projective points, forward and
//! inverse application, projective extensions and exact Jacobians.
//!
//! A factor is f(z, w) = (p(z) - a*w, z) with p monic of degree >= 2 and
//! a != 0; a system is an ordered composition f_N o ... o f_1.

use crate::ext::{ExtComplex, ExtPoint};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("polynomial must be monic of degree >= 2 (got degree {0})")]
    BadDegree(usize),
    #[error("leading coefficient must be exactly 1")]
    NotMonic,
    #[error("factor constant a must be nonzero")]
    ZeroA,
    #[error("system needs at least one factor")]
    NoFactors,
    #[error("projective orbit hit an indeterminacy point")]
    IndeterminacyPoint,
    #[error("invalid map document: {0}")]
    InvalidDocument(String),
}

/// One Henon factor (p, a) with p monic, deg p >= 2.
#[derive(Clone, Debug)]
pub struct HenonFactor {
    coeffs: Vec<Complex64>, // constant term first, leading 1 last
    a: Complex64,
}

impl HenonFactor {
    pub fn new(coeffs: Vec<Complex64>, a: Complex64) -> Result<Self, MapError> {
        if coeffs.len() < 3 {
            return Err(MapError::BadDegree(coeffs.len().saturating_sub(1)));
        }
        let lead = *coeffs.last().unwrap();
        if lead != Complex64::new(1.0, 0.0) {
            return Err(MapError::NotMonic);
        }
        if a.re == 0.0 && a.im == 0.0 {
            return Err(MapError::ZeroA);
        }
        Ok(Self { coeffs, a })
    }

    /// Monic p(z) = z^d + c_{d-1} z^{d-1} + ... + c_0 from the non-leading
    /// coefficients (constant term first).
    pub fn monic(lower_coeffs: &[Complex64], a: Complex64) -> Result<Self, MapError> {
        let mut coeffs = lower_coeffs.to_vec();
        coeffs.push(Complex64::new(1.0, 0.0));
        Self::new(coeffs, a)
    }

    pub fn degree(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn p_eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn p_derivative(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * z + c * (k as f64);
        }
        acc
    }

    /// Horner in extended range; the pivot-sum keeps the dominant power exact.
    pub fn p_eval_ext(&self, z: ExtComplex) -> ExtComplex {
        let mut acc = ExtComplex::ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(z).add(ExtComplex::from_complex(*c));
        }
        acc
    }

    pub fn p_derivative_ext(&self, z: ExtComplex) -> ExtComplex {
        let mut acc = ExtComplex::ZERO;
        for (k, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc
                .mul(z)
                .add(ExtComplex::from_complex(c * (k as f64)));
        }
        acc
    }

    /// Sum of |c_k| over non-leading coefficients.
    pub fn lower_coeff_mass(&self) -> f64 {
        self.coeffs[..self.coeffs.len() - 1]
            .iter()
            .map(|c| c.norm())
            .sum()
    }

    /// Sum of k*|c_k| over non-leading coefficients of p' (i.e. excluding d*z^{d-1}).
    pub fn lower_derivative_mass(&self) -> f64 {
        self.coeffs[1..self.coeffs.len() - 1]
            .iter()
            .enumerate()
            .map(|(i, c)| ((i + 1) as f64) * c.norm())
            .sum()
    }
}

/// Composition f_N o ... o f_1 of Henon factors; the single-factor system is
/// the basic case.
#[derive(Clone, Debug)]
pub struct HenonSystem {
    factors: Vec<HenonFactor>,
}

impl HenonSystem {
    pub fn new(factors: Vec<HenonFactor>) -> Result<Self, MapError> {
        if factors.is_empty() {
            return Err(MapError::NoFactors);
        }
        Ok(Self { factors })
    }

    pub fn single(factor: HenonFactor) -> Self {
        Self {
            factors: vec![factor],
        }
    }

    pub fn factors(&self) -> &[HenonFactor] {
        &self.factors
    }

    /// Total degree d = prod d_i.
    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|f| f.degree()).product()
    }

    /// a = prod a_i.
    pub fn a(&self) -> Complex64 {
        self.factors
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, f| acc * f.a)
    }

    /// ln|a_N^{e_N} * ... * a_1^{e_1}| with e_i = d_{i-1}*...*d_1: the constant
    /// by which one full inverse step offsets ln|w| at infinity.
    pub fn inverse_log_constant(&self) -> f64 {
        let mut exp = 1.0f64;
        let mut acc = 0.0f64;
        for f in &self.factors {
            acc += exp * f.a.norm().ln();
            exp *= f64::from(f.degree());
        }
        acc
    }
}

/// Point of the standard affine chart (z, w) -> [z : w : 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePoint {
    pub z: Complex64,
    pub w: Complex64,
}

impl AffinePoint {
    pub fn new(z: Complex64, w: Complex64) -> Self {
        Self { z, w }
    }

    pub fn from_re(z: f64, w: f64) -> Self {
        Self::new(Complex64::new(z, 0.0), Complex64::new(w, 0.0))
    }

    pub fn norm_max(&self) -> f64 {
        self.z.norm().max(self.w.norm())
    }

    pub fn dist(&self, other: &AffinePoint) -> f64 {
        ((self.z - other.z).norm_sqr() + (self.w - other.w).norm_sqr()).sqrt()
    }
}

/// Tangent vector at an affine base point.
#[derive(Clone, Copy, Debug)]
pub struct Tangent {
    pub base: AffinePoint,
    pub dz: Complex64,
    pub dw: Complex64,
}

/// Homogeneous point [z : w : t], normalized so the largest-modulus
/// coordinate is exactly 1 (ties broken in z, w, t order).
#[derive(Clone, Copy, Debug)]
pub struct ProjPoint {
    pub z: Complex64,
    pub w: Complex64,
    pub t: Complex64,
}

impl ProjPoint {
    pub fn new(z: Complex64, w: Complex64, t: Complex64) -> Self {
        let mut p = Self { z, w, t };
        p.normalize();
        p
    }

    pub fn i_plus() -> Self {
        Self::new(
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        )
    }

    pub fn i_minus() -> Self {
        Self::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        )
    }

    pub fn from_affine(p: AffinePoint) -> Self {
        Self::new(p.z, p.w, Complex64::new(1.0, 0.0))
    }

    /// Back to the affine chart; None on the line at infinity.
    pub fn to_affine(&self) -> Option<AffinePoint> {
        if self.t.norm() == 0.0 {
            None
        } else {
            Some(AffinePoint::new(self.z / self.t, self.w / self.t))
        }
    }

    fn normalize(&mut self) {
        let mods = [self.z.norm(), self.w.norm(), self.t.norm()];
        let mut best = 0;
        for i in 1..3 {
            if mods[i] > mods[best] {
                best = i;
            }
        }
        let pivot = [self.z, self.w, self.t][best];
        assert!(pivot.norm() > 0.0, "projective point must be nonzero");
        self.z /= pivot;
        self.w /= pivot;
        self.t /= pivot;
        // the pivot slot is exactly 1 after self-division
        match best {
            0 => self.z = Complex64::new(1.0, 0.0),
            1 => self.w = Complex64::new(1.0, 0.0),
            _ => self.t = Complex64::new(1.0, 0.0),
        }
    }

    pub fn approx_eq(&self, other: &ProjPoint, tol: f64) -> bool {
        (self.z - other.z).norm() <= tol
            && (self.w - other.w).norm() <= tol
            && (self.t - other.t).norm() <= tol
    }

    pub fn is_i_plus(&self) -> bool {
        self.z.norm() == 0.0 && self.t.norm() == 0.0
    }
}

/// 2x2 complex matrix, row-major.
#[derive(Clone, Copy, Debug)]
pub struct Mat2 {
    pub m: [[Complex64; 2]; 2],
}

impl Mat2 {
    pub fn identity() -> Self {
        Self {
            m: [
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            ],
        }
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        Mat2 { m: out }
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn apply(&self, v: (Complex64, Complex64)) -> (Complex64, Complex64) {
        (
            self.m[0][0] * v.0 + self.m[0][1] * v.1,
            self.m[1][0] * v.0 + self.m[1][1] * v.1,
        )
    }
}

/// f applied factor by factor, f_1 first.
pub fn apply_forward(sys: &HenonSystem, p: AffinePoint) -> AffinePoint {
    let mut cur = p;
    for f in sys.factors() {
        cur = AffinePoint::new(f.p_eval(cur.z) - f.a * cur.w, cur.z);
    }
    cur
}

/// f^{-1}(z, w) = (w, (p(w) - z)/a), factors in reverse order.
pub fn apply_inverse(sys: &HenonSystem, p: AffinePoint) -> AffinePoint {
    let mut cur = p;
    for f in sys.factors().iter().rev() {
        cur = AffinePoint::new(cur.w, (f.p_eval(cur.w) - cur.z) / f.a);
    }
    cur
}

/// Forward step in extended range; same composition as [`apply_forward`].
pub fn apply_forward_ext(sys: &HenonSystem, p: ExtPoint) -> ExtPoint {
    let mut cur = p;
    for f in sys.factors() {
        let fz = f
            .p_eval_ext(cur.z)
            .add(ExtComplex::from_complex(-f.a).mul(cur.w));
        cur = ExtPoint::new(fz, cur.z);
    }
    cur
}

pub fn apply_inverse_ext(sys: &HenonSystem, p: ExtPoint) -> ExtPoint {
    let mut cur = p;
    for f in sys.factors().iter().rev() {
        let nw = f
            .p_eval_ext(cur.w)
            .sub(cur.z)
            .div(ExtComplex::from_complex(f.a));
        cur = ExtPoint::new(cur.w, nw);
    }
    cur
}

/// t^d * p(z/t) as the homogeneous polynomial sum_k c_k z^k t^{d-k}.
fn homogeneous_p(f: &HenonFactor, z: Complex64, t: Complex64) -> Complex64 {
    let d = f.degree() as usize;
    // powers of t from t^0 up to t^d
    let mut tp = Complex64::new(1.0, 0.0);
    let mut tpow = vec![tp; d + 1];
    for slot in tpow.iter_mut().skip(1) {
        tp *= t;
        *slot = tp;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut zp = Complex64::new(1.0, 0.0);
    for (k, c) in f.coeffs().iter().enumerate() {
        acc += c * zp * tpow[d - k];
        if k < d {
            zp *= z;
        }
    }
    acc
}

/// Projective extension of f; errors when an intermediate image is I_+.
pub fn extend_forward_proj(sys: &HenonSystem, q: ProjPoint) -> Result<ProjPoint, MapError> {
    let mut cur = q;
    for f in sys.factors() {
        if cur.is_i_plus() {
            return Err(MapError::IndeterminacyPoint);
        }
        let d = f.degree() as i32;
        let t_dm1 = cur.t.powi(d - 1);
        let nz = homogeneous_p(f, cur.z, cur.t) - f.a * cur.w * t_dm1;
        let nw = cur.z * t_dm1;
        let nt = cur.t.powi(d);
        if nz.norm() == 0.0 && nw.norm() == 0.0 && nt.norm() == 0.0 {
            return Err(MapError::IndeterminacyPoint);
        }
        cur = ProjPoint::new(nz, nw, nt);
    }
    Ok(cur)
}

/// Projective extension of f^{-1}; errors when an intermediate image is I_-.
pub fn extend_inverse_proj(sys: &HenonSystem, q: ProjPoint) -> Result<ProjPoint, MapError> {
    let mut cur = q;
    for f in sys.factors().iter().rev() {
        let d = f.degree() as i32;
        let t_dm1 = cur.t.powi(d - 1);
        let nz = cur.w * t_dm1;
        let nw = (homogeneous_p(f, cur.w, cur.t) - cur.z * t_dm1) / f.a;
        let nt = cur.t.powi(d);
        if nz.norm() == 0.0 && nw.norm() == 0.0 && nt.norm() == 0.0 {
            return Err(MapError::IndeterminacyPoint);
        }
        cur = ProjPoint::new(nz, nw, nt);
    }
    Ok(cur)
}

/// Chain-rule Jacobian of the full forward composition at p.
pub fn jacobian_forward(sys: &HenonSystem, p: AffinePoint) -> Mat2 {
    let mut cur = p;
    let mut jac = Mat2::identity();
    for f in sys.factors() {
        let df = Mat2 {
            m: [
                [f.p_derivative(cur.z), -f.a],
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            ],
        };
        jac = df.mul(&jac);
        cur = AffinePoint::new(f.p_eval(cur.z) - f.a * cur.w, cur.z);
    }
    jac
}

/// Jacobian of one inverse factor g(z, w) = (w, (p(w) - z)/a) at (z, w).
pub fn inverse_factor_jacobian(f: &HenonFactor, at_w: Complex64) -> Mat2 {
    Mat2 {
        m: [
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            [-Complex64::new(1.0, 0.0) / f.a, f.p_derivative(at_w) / f.a],
        ],
    }
}

/// Chain-rule Jacobian of the full inverse composition at p.
pub fn jacobian_inverse(sys: &HenonSystem, p: AffinePoint) -> Mat2 {
    let mut cur = p;
    let mut jac = Mat2::identity();
    for f in sys.factors().iter().rev() {
        let dg = inverse_factor_jacobian(f, cur.w);
        jac = dg.mul(&jac);
        cur = AffinePoint::new(cur.w, (f.p_eval(cur.w) - cur.z) / f.a);
    }
    jac
}

/// n-fold iterate in extended range; direction +1 forward, -1 inverse.
/// Agrees with repeated plain application while both stay in f64 range;
/// zero coordinates are representable directly (log-magnitude -inf), so no
/// per-step fallback is needed.
pub fn iterate_ext(sys: &HenonSystem, p: AffinePoint, n: u32, direction: i8) -> ExtPoint {
    let mut cur = ExtPoint::from_complex(p.z, p.w);
    for _ in 0..n {
        cur = if direction >= 0 {
            apply_forward_ext(sys, cur)
        } else {
            apply_inverse_ext(sys, cur)
        };
    }
    cur
}

// ---------------------------------------------------------------------------
// Map definition document

#[derive(Debug, Serialize, Deserialize)]
pub struct FactorDoc {
    /// Coefficients from constant term upward, [re, im] pairs; leading 1 must
    /// be present.
    pub coeffs: Vec<[f64; 2]>,
    pub a: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MapDocument {
    pub factors: Vec<FactorDoc>,
}

impl MapDocument {
    pub fn parse(text: &str) -> Result<HenonSystem, MapError> {
        let doc: MapDocument =
            serde_json::from_str(text).map_err(|e| MapError::InvalidDocument(e.to_string()))?;
        doc.build()
    }

    pub fn build(&self) -> Result<HenonSystem, MapError> {
        let mut factors = Vec::with_capacity(self.factors.len());
        for fd in &self.factors {
            let coeffs: Vec<Complex64> =
                fd.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect();
            factors.push(HenonFactor::new(coeffs, Complex64::new(fd.a[0], fd.a[1]))?);
        }
        HenonSystem::new(factors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sq_sys() -> HenonSystem {
        // p(z) = z^2, a = 1
        HenonSystem::single(
            HenonFactor::monic(&[Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)], Complex64::new(1.0, 0.0))
                .unwrap(),
        )
    }

    fn two_factor_sys() -> HenonSystem {
        let f1 = HenonFactor::monic(
            &[Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let f2 = HenonFactor::monic(
            &[Complex64::new(0.3, 0.0), Complex64::new(0.0, 0.0)],
            Complex64::new(0.5, 0.0),
        )
        .unwrap();
        HenonSystem::new(vec![f1, f2]).unwrap()
    }

    #[test]
    fn forward_examples() {
        let sys = sq_sys();
        // (2,1) -> (3,2)
        let q = apply_forward(&sys, AffinePoint::from_re(2.0, 1.0));
        assert_eq!(q, AffinePoint::from_re(3.0, 2.0));
        // fixed point (2,2): z = z^2 - z at z=2
        let fp = apply_forward(&sys, AffinePoint::from_re(2.0, 2.0));
        assert_eq!(fp, AffinePoint::from_re(2.0, 2.0));
        // origin fixed since p(0) = 0
        let o = apply_forward(&sys, AffinePoint::from_re(0.0, 0.0));
        assert_eq!(o, AffinePoint::from_re(0.0, 0.0));
    }

    #[test]
    fn inverse_examples() {
        let sys = sq_sys();
        assert_eq!(
            apply_inverse(&sys, AffinePoint::from_re(3.0, 2.0)),
            AffinePoint::from_re(2.0, 1.0)
        );
        assert_eq!(
            apply_inverse(&sys, AffinePoint::from_re(2.0, 2.0)),
            AffinePoint::from_re(2.0, 2.0)
        );
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            HenonFactor::new(vec![Complex64::new(1.0, 0.0); 2], Complex64::new(1.0, 0.0)),
            Err(MapError::BadDegree(_))
        ));
        assert!(matches!(
            HenonFactor::new(
                vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(2.0, 0.0)
                ],
                Complex64::new(1.0, 0.0)
            ),
            Err(MapError::NotMonic)
        ));
        assert!(matches!(
            HenonFactor::monic(&[Complex64::new(0.0, 0.0); 2], Complex64::new(0.0, 0.0)),
            Err(MapError::ZeroA)
        ));
    }

    #[test]
    fn projective_fixed_points() {
        let sys = sq_sys();
        // I_- is fixed by the forward extension
        let im = extend_forward_proj(&sys, ProjPoint::i_minus()).unwrap();
        assert!(im.approx_eq(&ProjPoint::i_minus(), 0.0));
        // I_+ is fixed by the inverse extension
        let ip = extend_inverse_proj(&sys, ProjPoint::i_plus()).unwrap();
        assert!(ip.approx_eq(&ProjPoint::i_plus(), 0.0));
        // forward of I_+ is indeterminate
        assert!(matches!(
            extend_forward_proj(&sys, ProjPoint::i_plus()),
            Err(MapError::IndeterminacyPoint)
        ));
    }

    #[test]
    fn infinity_collapses() {
        let sys = sq_sys();
        // {t = 0} \ I_+ -> I_-
        let q = extend_forward_proj(
            &sys,
            ProjPoint::new(
                Complex64::new(1.0, 0.0),
                Complex64::new(5.0, 0.0),
                Complex64::new(0.0, 0.0),
            ),
        )
        .unwrap();
        assert!(q.approx_eq(&ProjPoint::i_minus(), 1e-15));
        // {t = 0} \ I_- -> I_+ under the inverse
        let r = extend_inverse_proj(
            &sys,
            ProjPoint::new(
                Complex64::new(5.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ),
        )
        .unwrap();
        assert!(r.approx_eq(&ProjPoint::i_plus(), 1e-15));
    }

    #[test]
    fn projective_matches_affine() {
        let sys = sq_sys();
        // [1:1:1] -> [0:1:1], same as f(1,1) = (0,1)
        let q = extend_forward_proj(&sys, ProjPoint::from_affine(AffinePoint::from_re(1.0, 1.0)))
            .unwrap();
        let aff = q.to_affine().unwrap();
        assert!((aff.z.norm()) < 1e-15 && (aff.w - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // inverse of that example
        let r = extend_inverse_proj(&sys, ProjPoint::from_affine(AffinePoint::from_re(0.0, 1.0)))
            .unwrap();
        let aff = r.to_affine().unwrap();
        assert!((aff.z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((aff.w - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn jacobian_single_factor_form() {
        let sys = sq_sys();
        let p = AffinePoint::from_re(1.5, -0.7);
        let j = jacobian_forward(&sys, p);
        assert!((j.m[0][0] - Complex64::new(3.0, 0.0)).norm() < 1e-15); // p'(1.5) = 3
        assert!((j.m[0][1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((j.m[1][0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(j.m[1][1].norm() < 1e-15);
        assert!((j.det() - sys.a()).norm() < 1e-12);
    }

    #[test]
    fn jacobian_vs_finite_differences() {
        let sys = two_factor_sys();
        let p = AffinePoint::new(Complex64::new(0.9, 0.2), Complex64::new(-0.4, 0.1));
        let j = jacobian_forward(&sys, p);
        let h = 1e-6;
        let fd_col = |dz: Complex64, dw: Complex64| {
            let plus = apply_forward(&sys, AffinePoint::new(p.z + h * dz, p.w + h * dw));
            let minus = apply_forward(&sys, AffinePoint::new(p.z - h * dz, p.w - h * dw));
            (
                (plus.z - minus.z) / (2.0 * h),
                (plus.w - minus.w) / (2.0 * h),
            )
        };
        let e1 = fd_col(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let e2 = fd_col(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        let scale = 1.0 + e1.0.norm().max(e2.1.norm());
        assert!((j.m[0][0] - e1.0).norm() / scale < 1e-6);
        assert!((j.m[1][0] - e1.1).norm() / scale < 1e-6);
        assert!((j.m[0][1] - e2.0).norm() / scale < 1e-6);
        assert!((j.m[1][1] - e2.1).norm() / scale < 1e-6);
    }

    #[test]
    fn iterate_ext_examples() {
        let sys = sq_sys();
        let p = AffinePoint::from_re(1e3, 0.0);
        // n = 0 leaves the point unchanged
        let e0 = iterate_ext(&sys, p, 0, 1);
        assert!((e0.z.to_complex() - p.z).norm() < 1e-12);
        // z_4: log|z| ~ 16 ln(1e3) by pure squaring dominance
        let e4 = iterate_ext(&sys, p, 4, 1);
        let expect = 16.0 * 1e3f64.ln();
        assert!((e4.z.log_mag - expect).abs() / expect < 1e-6);
        // n = 3 cross-check against plain application
        let mut q = p;
        for _ in 0..3 {
            q = apply_forward(&sys, q);
        }
        let e3 = iterate_ext(&sys, p, 3, 1);
        assert!((e3.z.to_complex() - q.z).norm() / q.z.norm() < 1e-9);
        assert!((e3.w.to_complex() - q.w).norm() / q.w.norm() < 1e-9);
    }

    #[test]
    fn map_document_round_trip() {
        let text = r#"{"factors":[{"coeffs":[[0.3,0.0],[0.0,0.0],[1.0,0.0]],"a":[0.5,0.0]}]}"#;
        let sys = MapDocument::parse(text).unwrap();
        assert_eq!(sys.degree(), 2);
        assert!((sys.a() - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        // missing leading 1 is rejected
        let bad = r#"{"factors":[{"coeffs":[[0.3,0.0],[0.0,0.0],[1.5,0.0]],"a":[0.5,0.0]}]}"#;
        assert!(MapDocument::parse(bad).is_err());
    }

    proptest! {
        // apply_inverse o apply_forward = id
        #[test]
        fn round_trip_inverse(
            zr in -5.0f64..5.0, zi in -5.0f64..5.0,
            wr in -5.0f64..5.0, wi in -5.0f64..5.0,
        ) {
            for sys in [sq_sys(), two_factor_sys()] {
                let p = AffinePoint::new(Complex64::new(zr, zi), Complex64::new(wr, wi));
                let q = apply_inverse(&sys, apply_forward(&sys, p));
                prop_assert!(q.dist(&p) <= 1e-10 * (1.0 + p.norm_max()));
                let r = apply_forward(&sys, apply_inverse(&sys, p));
                prop_assert!(r.dist(&p) <= 1e-10 * (1.0 + p.norm_max()));
            }
        }

        // det(Df) = prod a_i everywhere
        #[test]
        fn det_is_a(
            zr in -3.0f64..3.0, zi in -3.0f64..3.0,
            wr in -3.0f64..3.0, wi in -3.0f64..3.0,
        ) {
            for sys in [sq_sys(), two_factor_sys()] {
                let p = AffinePoint::new(Complex64::new(zr, zi), Complex64::new(wr, wi));
                let d = jacobian_forward(&sys, p).det();
                prop_assert!((d - sys.a()).norm() < 1e-10 * (1.0 + sys.a().norm()));
                // forward * inverse at matched points = identity
                let ji = jacobian_inverse(&sys, apply_forward(&sys, p));
                let prod = ji.mul(&jacobian_forward(&sys, p));
                prop_assert!((prod.m[0][0] - Complex64::new(1.0,0.0)).norm() < 1e-9);
                prop_assert!((prod.m[1][1] - Complex64::new(1.0,0.0)).norm() < 1e-9);
                prop_assert!(prod.m[0][1].norm() < 1e-9 && prod.m[1][0].norm() < 1e-9);
            }
        }

        // projective extension restricted to t = 1 equals the affine map
        #[test]
        fn proj_extends_affine(
            zr in -3.0f64..3.0, zi in -3.0f64..3.0,
            wr in -3.0f64..3.0, wi in -3.0f64..3.0,
        ) {
            let sys = two_factor_sys();
            let p = AffinePoint::new(Complex64::new(zr, zi), Complex64::new(wr, wi));
            let via_proj = extend_forward_proj(&sys, ProjPoint::from_affine(p)).unwrap();
            let direct = apply_forward(&sys, p);
            let aff = via_proj.to_affine().unwrap();
            prop_assert!(aff.dist(&direct) <= 1e-9 * (1.0 + direct.norm_max()));
        }
    }
}
