//! Extended-range complex arithmetic in log-magnitude/phase form.
//!
//! Orbits near infinity reach |z| ~ exp(c*d^n), far beyond any floating-point
//! format. `ExtComplex` stores ln|z| and arg(z) instead, so magnitude lives in
//! the exponent of nothing: products are additions and the only delicate
//! operation is the sum, which pivots on the larger operand.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Complex scalar as (natural-log magnitude, phase in (-pi, pi]).
///
/// Zero is `log_mag = -inf` with phase 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtComplex {
    pub log_mag: f64,
    pub phase: f64,
}

/// Reduce a phase to (-pi, pi].
pub fn wrap_phase(p: f64) -> f64 {
    if p > -PI && p <= PI {
        return p;
    }
    let mut x = p.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

impl ExtComplex {
    pub const ZERO: Self = Self {
        log_mag: f64::NEG_INFINITY,
        phase: 0.0,
    };

    pub const ONE: Self = Self {
        log_mag: 0.0,
        phase: 0.0,
    };

    pub fn new(log_mag: f64, phase: f64) -> Self {
        Self {
            log_mag,
            phase: wrap_phase(phase),
        }
    }

    pub fn from_complex(c: Complex64) -> Self {
        if c.re == 0.0 && c.im == 0.0 {
            return Self::ZERO;
        }
        Self {
            log_mag: c.norm().ln(),
            phase: c.arg(),
        }
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    /// Back to an ordinary complex number. Overflows to infinity when
    /// `log_mag` exceeds ~709.78; callers guard with [`Self::in_f64_range`].
    pub fn to_complex(self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.log_mag.exp(), self.phase)
    }

    pub fn is_zero(self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn in_f64_range(self) -> bool {
        self.is_zero() || self.log_mag.abs() < 700.0
    }

    pub fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.log_mag + other.log_mag, self.phase + other.phase)
    }

    pub fn div(self, other: Self) -> Self {
        debug_assert!(!other.is_zero(), "ExtComplex division by zero");
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.log_mag - other.log_mag, self.phase - other.phase)
    }

    pub fn recip(self) -> Self {
        debug_assert!(!self.is_zero());
        Self::new(-self.log_mag, -self.phase)
    }

    pub fn neg(self) -> Self {
        if self.is_zero() {
            return self;
        }
        Self::new(self.log_mag, self.phase + PI)
    }

    /// Integer power; exact in log space.
    pub fn powi(self, k: i32) -> Self {
        if self.is_zero() {
            return if k == 0 { Self::ONE } else { Self::ZERO };
        }
        Self::new(self.log_mag * f64::from(k), self.phase * f64::from(k))
    }

    /// Principal k-th root (phase divided from its (-pi, pi] representative).
    pub fn principal_root(self, k: u32) -> Self {
        debug_assert!(k > 0);
        if self.is_zero() {
            return Self::ZERO;
        }
        Self {
            log_mag: self.log_mag / f64::from(k),
            phase: self.phase / f64::from(k),
        }
    }

    /// Sum pivoting on the larger magnitude: a + b = a * (1 + b/a) with
    /// |b/a| <= 1, so the ratio is always safe to materialize.
    pub fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.log_mag >= other.log_mag {
            (self, other)
        } else {
            (other, self)
        };
        let dl = small.log_mag - big.log_mag;
        if dl < -745.0 {
            return big;
        }
        let r = Complex64::from_polar(dl.exp(), small.phase - big.phase);
        let s = Complex64::new(1.0, 0.0) + r;
        if s.re == 0.0 && s.im == 0.0 {
            return Self::ZERO;
        }
        Self::new(big.log_mag + s.norm().ln(), big.phase + s.arg())
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(other.neg())
    }

    /// Complex logarithm as an ordinary pair (ln|z| stays a plain f64).
    pub fn log(self) -> Complex64 {
        Complex64::new(self.log_mag, self.phase)
    }

    /// exp of an ordinary complex number, landing in extended range.
    pub fn exp_of(c: Complex64) -> Self {
        Self::new(c.re, c.im)
    }

    pub fn norm_ln(self) -> f64 {
        self.log_mag
    }

    /// Relative distance |a-b|/max(|a|,|b|), computed without leaving log space.
    pub fn rel_distance(self, other: Self) -> f64 {
        if self.is_zero() && other.is_zero() {
            return 0.0;
        }
        let m = self.log_mag.max(other.log_mag);
        let d = self.sub(other);
        if d.is_zero() {
            0.0
        } else {
            (d.log_mag - m).exp()
        }
    }
}

/// Affine point of C^2 carried in extended range.
#[derive(Clone, Copy, Debug)]
pub struct ExtPoint {
    pub z: ExtComplex,
    pub w: ExtComplex,
}

impl ExtPoint {
    pub fn new(z: ExtComplex, w: ExtComplex) -> Self {
        Self { z, w }
    }

    pub fn from_complex(z: Complex64, w: Complex64) -> Self {
        Self {
            z: ExtComplex::from_complex(z),
            w: ExtComplex::from_complex(w),
        }
    }

    pub fn in_f64_range(self) -> bool {
        self.z.in_f64_range() && self.w.in_f64_range()
    }
}

/// Tangent vector rider for extended-range points.
#[derive(Clone, Copy, Debug)]
pub struct ExtTangent {
    pub dz: ExtComplex,
    pub dw: ExtComplex,
}

/// ln(sum of exp(t_i)) over nonnegative quantities given by their logs.
/// Empty input and all -inf inputs give -inf.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = terms.iter().map(|t| (t - m).exp()).sum();
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
    }

    #[test]
    fn zero_behaves() {
        let z = ExtComplex::ZERO;
        let a = ExtComplex::from_complex(Complex64::new(2.0, -1.0));
        assert!(z.is_zero());
        assert_eq!(z.mul(a).is_zero(), true);
        assert!(close(z.add(a).to_complex(), a.to_complex(), 1e-14));
        assert_eq!(ExtComplex::from_complex(Complex64::new(0.0, 0.0)), z);
    }

    #[test]
    fn cancellation_to_zero() {
        let a = ExtComplex::from_complex(Complex64::new(3.0, 0.0));
        let d = a.sub(a);
        assert!(d.is_zero() || d.log_mag < a.log_mag - 30.0);
    }

    #[test]
    fn huge_magnitudes_survive() {
        // |z| = exp(1e5), far past f64 range.
        let z = ExtComplex::new(1.0e5, 0.3);
        let z2 = z.mul(z);
        assert_eq!(z2.log_mag, 2.0e5);
        let s = z2.add(z); // smaller term is negligible
        assert!((s.log_mag - 2.0e5).abs() < 1e-10);
        let r = z2.principal_root(2);
        assert!((r.log_mag - 1.0e5).abs() < 1e-10);
        assert!((r.phase - 0.3).abs() < 1e-12);
    }

    proptest! {
        // Round-trip agrees with ordinary complex arithmetic while in range.
        #[test]
        fn round_trip(re in -1e3f64..1e3, im in -1e3f64..1e3) {
            prop_assume!(re != 0.0 || im != 0.0);
            let c = Complex64::new(re, im);
            let e = ExtComplex::from_complex(c);
            prop_assert!(e.log_mag.abs() <= 200.0);
            prop_assert!(close(e.to_complex(), c, 1e-12));
        }

        #[test]
        fn add_matches_complex(
            a_re in -1e6f64..1e6, a_im in -1e6f64..1e6,
            b_re in -1e6f64..1e6, b_im in -1e6f64..1e6,
        ) {
            let a = Complex64::new(a_re, a_im);
            let b = Complex64::new(b_re, b_im);
            let ea = ExtComplex::from_complex(a);
            let eb = ExtComplex::from_complex(b);
            let s = ea.add(eb).to_complex();
            prop_assert!(close(s, a + b, 1e-11));
        }

        #[test]
        fn mul_matches_complex(
            a_re in -1e3f64..1e3, a_im in -1e3f64..1e3,
            b_re in -1e3f64..1e3, b_im in -1e3f64..1e3,
        ) {
            let a = Complex64::new(a_re, a_im);
            let b = Complex64::new(b_re, b_im);
            prop_assume!(a.norm() > 1e-12 && b.norm() > 1e-12);
            let p = ExtComplex::from_complex(a).mul(ExtComplex::from_complex(b));
            prop_assert!(close(p.to_complex(), a * b, 1e-11));
        }

        #[test]
        fn phase_stays_wrapped(lm in -1e4f64..1e4, ph in -50.0f64..50.0, k in 1u32..9) {
            let e = ExtComplex::new(lm, ph);
            prop_assert!(e.phase > -PI && e.phase <= PI);
            let p = e.powi(k as i32);
            prop_assert!(p.phase > -PI && p.phase <= PI);
        }
    }

    #[test]
    fn log_sum_exp_basics() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[0.0, 0.0]);
        assert!((v - 2.0f64.ln()).abs() < 1e-14);
        let big = log_sum_exp(&[1e6, 1e6 - 40.0]);
        assert!((big - 1e6).abs() < 1e-12);
    }
}
