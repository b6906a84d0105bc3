//! Model map near infinity, chart transition, and numerical leaf
//! parametrization of the level sets {g+ = c}.
//!
//! Discs are anchored at a measured base point on the leaf and displaced in
//! the w-direction at depth n, Newton-projected back onto the leaf
//! {bottcher coordinate = const}, then pulled back down. The pullback tracks
//! deviations from the stored forward orbit instead of raw coordinates: the
//! raw inverse recursion subtracts terms that agree to e^{-c d^k} relative
//! precision, which no fixed-precision format survives, while the deviation
//! recursion only ever multiplies and adds well-scaled quantities.

use crate::ext::{wrap_phase, ExtComplex, ExtPoint, ExtTangent};
use crate::filtration::{region_of_ext, FiltrationConstants, Region};
use crate::green::{bottcher_log_ext, green_plus, GreenError, GreenParams};
use crate::map::{AffinePoint, HenonFactor, HenonSystem};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NormalFormError {
    #[error("division by zero in chart transition")]
    DivisionByZero,
    #[error("series truncation insufficient for the requested iterate")]
    TruncationLoss,
    #[error("negative model-map power needs x != 0")]
    ZeroX,
    #[error("depth does not reach the deep zone of V+")]
    DepthInsufficient,
    #[error("base point is not on the requested level")]
    BaseOffLevel,
    #[error("Newton projection onto the leaf failed to converge")]
    ProjectionDiverged,
    #[error("result left f64 range; use the extended-range accessor")]
    RangeExceeded,
    #[error(transparent)]
    Green(#[from] GreenError),
}

// ---------------------------------------------------------------------------
// Model map G(x, y) = (x^d, (a/d) y x^{2d-2} + x^{d-1}(1 + r(x)))

/// Favre-type model map. `r_coeffs[k]` is the coefficient of x^{k+1}, so the
/// constant term of r is structurally zero.
#[derive(Clone, Debug)]
pub struct ModelMapG {
    pub d: u32,
    pub a: Complex64,
    pub r_coeffs: Vec<Complex64>,
}

impl ModelMapG {
    pub fn new(d: u32, a: Complex64, r_coeffs: Vec<Complex64>) -> Self {
        assert!(d >= 2);
        assert!(a.norm() > 0.0);
        Self { d, a, r_coeffs }
    }

    pub fn r_is_zero(&self) -> bool {
        self.r_coeffs.iter().all(|c| c.norm() == 0.0)
    }

    fn r_eval(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.r_coeffs.iter().rev() {
            acc = (acc + c) * x;
        }
        acc
    }

    fn r_tail_ok(&self, x: Complex64) -> bool {
        if self.r_is_zero() {
            return true;
        }
        let xn = x.norm();
        if xn >= 1.0 {
            return false;
        }
        let last = self.r_coeffs.last().map(|c| c.norm()).unwrap_or(0.0);
        let tail = last * xn.powi(self.r_coeffs.len() as i32 + 1) / (1.0 - xn);
        tail <= 1e-9 * (1.0 + self.r_eval(x).norm())
    }

    pub fn apply(&self, v: (Complex64, Complex64)) -> (Complex64, Complex64) {
        let (x, y) = v;
        let d = self.d as i32;
        let x_new = x.powi(d);
        let y_new = (self.a / f64::from(self.d)) * y * x.powi(2 * d - 2)
            + x.powi(d - 1) * (Complex64::new(1.0, 0.0) + self.r_eval(x));
        (x_new, y_new)
    }

    fn apply_inverse_once(&self, v: (Complex64, Complex64)) -> Result<(Complex64, Complex64), NormalFormError> {
        let (x_img, y_img) = v;
        if x_img.norm() == 0.0 {
            return Err(NormalFormError::ZeroX);
        }
        let d = self.d as i32;
        let x = Complex64::from_polar(x_img.norm().powf(1.0 / f64::from(self.d)), x_img.arg() / f64::from(self.d));
        if !self.r_tail_ok(x) {
            return Err(NormalFormError::TruncationLoss);
        }
        let lead = x.powi(d - 1) * (Complex64::new(1.0, 0.0) + self.r_eval(x));
        let y = (y_img - lead) * (f64::from(self.d) / self.a) * x.powi(-(2 * d - 2));
        Ok((x, y))
    }

    /// Signed iterate. Negative powers take the principal root branch of the
    /// first coordinate; with r == 0 they use the closed inverse form
    /// G^{-n}(x^{d^n}, y) = (x, (y - Q_n(x)) / ((a/d)^n x^{q_n})),
    /// q_n = 2(d^n - 1), with Q_n built by the exact forward recursion of the
    /// polynomial part.
    pub fn pow(
        &self,
        v: (Complex64, Complex64),
        n: i32,
    ) -> Result<(Complex64, Complex64), NormalFormError> {
        if n >= 0 {
            let mut cur = v;
            for _ in 0..n {
                if !self.r_tail_ok(cur.0) && !self.r_is_zero() {
                    return Err(NormalFormError::TruncationLoss);
                }
                cur = self.apply(cur);
            }
            return Ok(cur);
        }
        let m = n.unsigned_abs();
        if v.0.norm() == 0.0 {
            return Err(NormalFormError::ZeroX);
        }
        if !self.r_is_zero() {
            let mut cur = v;
            for _ in 0..m {
                cur = self.apply_inverse_once(cur)?;
            }
            return Ok(cur);
        }
        let d = self.d as i32;
        let df = f64::from(self.d);
        let dpow = df.powi(m as i32);
        let x_root = Complex64::from_polar(v.0.norm().powf(1.0 / dpow), v.0.arg() / dpow);
        // polynomial part Q_m by forward recursion
        let mut b = Complex64::new(0.0, 0.0);
        let mut xp = x_root;
        for _ in 0..m {
            b = (self.a / df) * xp.powi(2 * d - 2) * b + xp.powi(d - 1);
            xp = xp.powi(d);
        }
        // denominator (a/d)^m x^{q_m} in extended range; q_m can be enormous
        let q_m = 2.0 * (dpow - 1.0);
        let ex = ExtComplex::from_complex(x_root);
        let den = ExtComplex::from_complex(self.a / df)
            .powi(m as i32)
            .mul(ExtComplex::new(ex.log_mag * q_m, wrap_phase(ex.phase * q_m)));
        let y = ExtComplex::from_complex(v.1 - b).div(den);
        if !y.in_f64_range() {
            return Err(NormalFormError::RangeExceeded);
        }
        Ok((x_root, y.to_complex()))
    }
}

/// Chart transition psi(z, w) = (1/z, w/z) toward the I_- chart.
pub fn psi(p: AffinePoint) -> Result<(Complex64, Complex64), NormalFormError> {
    if p.z.norm() == 0.0 {
        return Err(NormalFormError::DivisionByZero);
    }
    Ok((Complex64::new(1.0, 0.0) / p.z, p.w / p.z))
}

pub fn psi_inverse(v: (Complex64, Complex64)) -> Result<AffinePoint, NormalFormError> {
    let (zeta, omega) = v;
    if zeta.norm() == 0.0 {
        return Err(NormalFormError::DivisionByZero);
    }
    Ok(AffinePoint::new(
        Complex64::new(1.0, 0.0) / zeta,
        omega / zeta,
    ))
}

// ---------------------------------------------------------------------------
// Leaf discs

/// Parameters of one analytic disc on the leaf through `base` in {g+ = c}.
#[derive(Clone, Copy, Debug)]
pub struct LeafParam {
    pub c: f64,
    pub s_phase: f64,
    pub base: AffinePoint,
    pub depth: u32,
}

impl LeafParam {
    /// Validates the level invariant |g+(base) - c| <= 1e-8 max(1, c) and
    /// records the branch phase of the anchoring coordinate.
    pub fn new(
        sys: &HenonSystem,
        params: &GreenParams,
        c: f64,
        base: AffinePoint,
        depth: u32,
    ) -> Result<Self, NormalFormError> {
        let g = green_plus(sys, base, params)?;
        if !g.escaped() || (g.value - c).abs() > 1e-8 * c.max(1.0) {
            return Err(NormalFormError::BaseOffLevel);
        }
        // phase of s from the depth-n anchor, divided back down; the branch is
        // fixed by continuous tracking from the seed, not claimed canonical
        let dpow = f64::from(sys.degree()).powi(depth as i32);
        let q = crate::map::iterate_ext(sys, base, depth, 1);
        let lam = bottcher_log_ext(sys, q, params)?;
        Ok(Self {
            c,
            s_phase: wrap_phase(lam.im / dpow),
            base,
            depth,
        })
    }
}

/// One traced disc sample at the base level.
#[derive(Clone, Debug)]
pub struct DiscSample {
    pub theta: Complex64,
    pub point: AffinePoint,
    pub fs_norm_ln: f64,
    pub region_trace: Vec<Region>,
}

/// Full multi-level trace of a disc: per theta, the pulled-back points,
/// tangents and regions at every composed level 0..=n.
pub struct DiscTrace {
    pub thetas: Vec<Complex64>,
    /// [theta][level]
    pub points: Vec<Vec<ExtPoint>>,
    pub tangents: Vec<Vec<ExtTangent>>,
    pub regions: Vec<Vec<Region>>,
    pub depth: u32,
}

impl DiscTrace {
    /// theta index membership in Theta^s_{n,i}: forward images at composed
    /// steps i..n all classify V+.
    pub fn theta_in_region_index(&self, theta_idx: usize, i: u32) -> bool {
        let n = self.depth as usize;
        (i as usize..=n).all(|j| self.regions[theta_idx][j] == Region::VPlus)
    }
}

/// Divided difference (p(u) - p(v)) / (u - v) as a polynomial in u, v;
/// never divides, so u = v is fine and returns p'(v).
fn divided_difference_ext(f: &HenonFactor, u: ExtComplex, v: ExtComplex) -> ExtComplex {
    let d = f.degree() as usize;
    let mut u_pow = vec![ExtComplex::ONE; d];
    let mut v_pow = vec![ExtComplex::ONE; d];
    for j in 1..d {
        u_pow[j] = u_pow[j - 1].mul(u);
        v_pow[j] = v_pow[j - 1].mul(v);
    }
    let mut acc = ExtComplex::ZERO;
    for (k, c) in f.coeffs().iter().enumerate().skip(1) {
        let ce = ExtComplex::from_complex(*c);
        let mut inner = ExtComplex::ZERO;
        for j in 0..k {
            inner = inner.add(u_pow[j].mul(v_pow[k - 1 - j]));
        }
        acc = acc.add(ce.mul(inner));
    }
    acc
}

/// Disc tracer bound to one system, one set of constants and one LeafParam.
pub struct LeafTracer<'a> {
    sys: &'a HenonSystem,
    constants: &'a FiltrationConstants,
    params: GreenParams,
    pub leaf: LeafParam,
    /// forward orbit of base at factor granularity, length depth*N + 1
    anchor: Vec<ExtPoint>,
    lambda_target: Complex64,
    /// w-displacement unit rho = (c_phi / 2) |z_Q|, real positive
    rho: ExtComplex,
    newton_tol: f64,
}

/// Smallest depth whose forward image is in the deep zone of V+:
/// ln|z| >= max(ln(1/c_phi), 30).
pub fn depth_for(
    sys: &HenonSystem,
    k: &FiltrationConstants,
    base: AffinePoint,
) -> Result<u32, NormalFormError> {
    let threshold = (1.0 / k.c_phi).ln().max(30.0);
    let mut cur = ExtPoint::from_complex(base.z, base.w);
    for n in 0..=64u32 {
        if cur.z.log_mag >= threshold && region_of_ext(cur, k) == Region::VPlus {
            return Ok(n);
        }
        cur = crate::map::apply_forward_ext(sys, cur);
    }
    Err(NormalFormError::DepthInsufficient)
}

impl<'a> LeafTracer<'a> {
    pub fn new(
        sys: &'a HenonSystem,
        constants: &'a FiltrationConstants,
        params: GreenParams,
        leaf: LeafParam,
    ) -> Result<Self, NormalFormError> {
        let n = leaf.depth as usize;
        let n_factors = sys.factors().len();
        let mut anchor = Vec::with_capacity(n * n_factors + 1);
        let mut cur = ExtPoint::from_complex(leaf.base.z, leaf.base.w);
        anchor.push(cur);
        for _ in 0..n {
            for f in sys.factors() {
                let fz = f
                    .p_eval_ext(cur.z)
                    .add(ExtComplex::from_complex(-f.a()).mul(cur.w));
                cur = ExtPoint::new(fz, cur.z);
                anchor.push(cur);
            }
        }
        let deep = *anchor.last().unwrap();
        if deep.z.log_mag < (1.0 / constants.c_phi).ln()
            || region_of_ext(deep, constants) != Region::VPlus
        {
            return Err(NormalFormError::DepthInsufficient);
        }
        let lambda_target = bottcher_log_ext(sys, deep, &params)?;
        let rho = ExtComplex::new(deep.z.log_mag + (constants.c_phi / 2.0).ln(), 0.0);
        Ok(Self {
            sys,
            constants,
            params,
            leaf,
            anchor,
            lambda_target,
            rho,
            newton_tol: 1e-13,
        })
    }

    fn deep(&self) -> ExtPoint {
        *self.anchor.last().unwrap()
    }

    /// Newton-project the displaced point (z, w_Q + rho*theta) back onto the
    /// leaf {bottcher = const}, adjusting z at fixed w. Returns the relative
    /// z-offset eps with z = z_Q (1 + eps), so the deviation never passes
    /// through a catastrophic subtraction.
    fn solve_eps(&self, theta: Complex64) -> Result<Complex64, NormalFormError> {
        let deep = self.deep();
        let w_disp = deep.w.add(self.rho.mul(ExtComplex::from_complex(theta)));
        let lam_at = |eps: Complex64| -> Result<Complex64, NormalFormError> {
            let z = deep.z.mul(ExtComplex::from_complex(Complex64::new(1.0, 0.0) + eps));
            Ok(bottcher_log_ext(self.sys, ExtPoint::new(z, w_disp), &self.params)?)
        };
        let mut eps = Complex64::new(0.0, 0.0);
        let h = 1e-6;
        for _ in 0..50 {
            let lam = match lam_at(eps) {
                Ok(l) => l,
                Err(NormalFormError::Green(GreenError::BranchAmbiguity)) => {
                    return Err(NormalFormError::ProjectionDiverged)
                }
                Err(e) => return Err(e),
            };
            let resid = Complex64::new(
                lam.re - self.lambda_target.re,
                wrap_phase(lam.im - self.lambda_target.im),
            );
            if resid.norm() <= self.newton_tol {
                return Ok(eps);
            }
            let lam_p = lam_at(eps + Complex64::new(h, 0.0))?;
            let lam_m = lam_at(eps - Complex64::new(h, 0.0))?;
            let dlam = Complex64::new(
                lam_p.re - lam_m.re,
                wrap_phase(lam_p.im - lam_m.im),
            ) / (2.0 * h);
            if dlam.norm() == 0.0 {
                return Err(NormalFormError::ProjectionDiverged);
            }
            let step = -resid / dlam;
            if step.norm() > 0.5 {
                return Err(NormalFormError::ProjectionDiverged);
            }
            eps += step;
        }
        Err(NormalFormError::ProjectionDiverged)
    }

    /// Pull the projected point at depth back to every level via the
    /// anchored deviation recursion, with the tangent riding along through
    /// exact inverse-factor Jacobians.
    fn descend(
        &self,
        eps: Complex64,
        theta: Complex64,
        tangent_deep: Option<ExtTangent>,
    ) -> (Vec<ExtPoint>, Vec<ExtTangent>, Vec<Region>) {
        let n = self.leaf.depth as usize;
        let n_factors = self.sys.factors().len();
        let deep = self.deep();

        let mut dz = deep
            .z
            .mul(ExtComplex::from_complex(eps));
        let mut dw = self.rho.mul(ExtComplex::from_complex(theta));
        let mut tan = tangent_deep.unwrap_or(ExtTangent {
            dz: ExtComplex::ZERO,
            dw: ExtComplex::ZERO,
        });

        let mut points = vec![
            ExtPoint::new(ExtComplex::ZERO, ExtComplex::ZERO);
            n + 1
        ];
        let mut tangents = vec![
            ExtTangent {
                dz: ExtComplex::ZERO,
                dw: ExtComplex::ZERO
            };
            n + 1
        ];
        let mut regions = vec![Region::Ambiguous; n + 1];

        let materialize = |anchor: ExtPoint, dz: ExtComplex, dw: ExtComplex| {
            ExtPoint::new(anchor.z.add(dz), anchor.w.add(dw))
        };

        points[n] = materialize(deep, dz, dw);
        tangents[n] = tan;
        regions[n] = region_of_ext(points[n], self.constants);

        for j in (1..=n * n_factors).rev() {
            let factor = &self.sys.factors()[(j - 1) % n_factors];
            let post = self.anchor[j];
            let w_actual = post.w.add(dw);
            let a_ext = ExtComplex::from_complex(factor.a());
            // deviation recursion through one inverse factor
            let q = divided_difference_ext(factor, w_actual, post.w);
            let new_dz = dw;
            let new_dw = q.mul(dw).sub(dz).div(a_ext);
            // tangent through the exact Jacobian of the inverse factor at the
            // actual (deviated) post point
            let pd = factor.p_derivative_ext(w_actual);
            let new_tan = ExtTangent {
                dz: tan.dw,
                dw: pd.mul(tan.dw).sub(tan.dz).div(a_ext),
            };
            dz = new_dz;
            dw = new_dw;
            tan = new_tan;
            if (j - 1) % n_factors == 0 {
                let level = (j - 1) / n_factors;
                points[level] = materialize(self.anchor[j - 1], dz, dw);
                tangents[level] = tan;
                regions[level] = region_of_ext(points[level], self.constants);
            }
        }
        (points, tangents, regions)
    }

    /// Trace one theta; no tangent.
    pub fn point_at(&self, theta: Complex64) -> Result<Vec<ExtPoint>, NormalFormError> {
        let eps = self.solve_eps(theta)?;
        Ok(self.descend(eps, theta, None).0)
    }

    /// Trace a theta grid with tangents. The deep tangent pairs the exact
    /// w-derivative rho with a finite-difference z-derivative along theta;
    /// everything below is exact Jacobian products, never finite differences
    /// across the inverse iteration.
    pub fn trace(&self, thetas: &[Complex64]) -> Result<DiscTrace, NormalFormError> {
        let deep = self.deep();
        let fd_h = 1e-3;
        let mut points = Vec::with_capacity(thetas.len());
        let mut tangents = Vec::with_capacity(thetas.len());
        let mut regions = Vec::with_capacity(thetas.len());
        for &theta in thetas {
            let eps = self.solve_eps(theta)?;
            let eps_p = self.solve_eps(theta + Complex64::new(fd_h, 0.0))?;
            let eps_m = self.solve_eps(theta - Complex64::new(fd_h, 0.0))?;
            let deps = (eps_p - eps_m) / (2.0 * fd_h);
            let tangent_deep = ExtTangent {
                dz: deep.z.mul(ExtComplex::from_complex(deps)),
                dw: self.rho,
            };
            let (p, t, r) = self.descend(eps, theta, Some(tangent_deep));
            points.push(p);
            tangents.push(t);
            regions.push(r);
        }
        Ok(DiscTrace {
            thetas: thetas.to_vec(),
            points,
            tangents,
            regions,
            depth: self.leaf.depth,
        })
    }
}

/// Leaf disc point in ordinary coordinates.
///
/// theta = 0 reproduces the base point exactly; other thetas satisfy
/// |g+(result) - c| <= 1e-6 max(1, c).
pub fn leaf_point(
    sys: &HenonSystem,
    k: &FiltrationConstants,
    params: &GreenParams,
    leaf: &LeafParam,
    theta: Complex64,
) -> Result<AffinePoint, NormalFormError> {
    let tracer = LeafTracer::new(sys, k, *params, *leaf)?;
    let levels = tracer.point_at(theta)?;
    let p0 = levels[0];
    if !p0.in_f64_range() {
        return Err(NormalFormError::RangeExceeded);
    }
    Ok(AffinePoint::new(p0.z.to_complex(), p0.w.to_complex()))
}

/// Membership of theta in Theta^s_{n,i}: forward images at steps i..n all in V+.
pub fn theta_region_index(
    sys: &HenonSystem,
    k: &FiltrationConstants,
    params: &GreenParams,
    leaf: &LeafParam,
    theta: Complex64,
    i: u32,
) -> Result<bool, NormalFormError> {
    assert!(i <= leaf.depth);
    let tracer = LeafTracer::new(sys, k, *params, *leaf)?;
    let levels = tracer.point_at(theta)?;
    Ok((i..=leaf.depth).all(|j| region_of_ext(levels[j as usize], k) == Region::VPlus))
}

/// Measured verticality constant: sup over V+-classified trace samples of
/// |dz/dtheta| / |dw/dtheta|.
pub fn verticality_slope(trace: &DiscTrace, k: &FiltrationConstants) -> f64 {
    verticality_slope_above(trace, k, f64::NEG_INFINITY)
}

/// Same, restricted to samples with ln|z| above a threshold (deeper zone).
pub fn verticality_slope_above(
    trace: &DiscTrace,
    _k: &FiltrationConstants,
    min_ln_z: f64,
) -> f64 {
    let mut sup: f64 = 0.0;
    for (ti, levels) in trace.points.iter().enumerate() {
        for (li, p) in levels.iter().enumerate() {
            if trace.regions[ti][li] != Region::VPlus || p.z.log_mag < min_ln_z {
                continue;
            }
            let t = &trace.tangents[ti][li];
            if t.dw.is_zero() {
                continue;
            }
            let slope = (t.dz.log_mag - t.dw.log_mag).exp();
            sup = sup.max(slope);
        }
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_examples() {
        let v = psi(AffinePoint::from_re(2.0, 4.0)).unwrap();
        assert!((v.0 - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((v.1 - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        let back = psi_inverse(v).unwrap();
        assert!(back.dist(&AffinePoint::from_re(2.0, 4.0)) < 1e-14);
        assert!(matches!(
            psi(AffinePoint::from_re(0.0, 1.0)),
            Err(NormalFormError::DivisionByZero)
        ));
        // large |z| lands near the origin of the zeta chart
        let far = psi(AffinePoint::from_re(1e9, 1.0)).unwrap();
        assert!(far.0.norm() < 1e-8);
    }

    #[test]
    fn psi_round_trip_random() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let p = AffinePoint::new(
                Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
                Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
            );
            if p.z.norm() < 1e-3 {
                continue;
            }
            let q = psi_inverse(psi(p).unwrap()).unwrap();
            assert!(q.dist(&p) < 1e-12 * (1.0 + p.norm_max()));
        }
    }

    #[test]
    fn model_g_examples() {
        // d = 2, a = 1, r = 0
        let g = ModelMapG::new(2, Complex64::new(1.0, 0.0), vec![]);
        let v = g.apply((Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.0)));
        assert!((v.0 - Complex64::new(0.01, 0.0)).norm() < 1e-15);
        assert!((v.1 - Complex64::new(0.1, 0.0)).norm() < 1e-15);
        let v2 = g.apply((Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0)));
        assert!((v2.0 - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        assert!((v2.1 - Complex64::new(0.625, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn model_g_round_trip() {
        use rand::Rng;
        use rand::SeedableRng;
        let g = ModelMapG::new(2, Complex64::new(1.0, 0.0), vec![]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = 3;
        // Phase in the principal sector of the d^3-rd root so the branch is
        // recoverable, and |x| large enough that the forward step does not
        // round the y-information entirely away.
        let sector = std::f64::consts::PI / 8.0;
        for _ in 0..100 {
            let x = Complex64::from_polar(rng.gen_range(0.35..0.5), rng.gen_range(-sector..sector));
            let y = Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(-3.1..3.1));
            let fwd = g.pow((x, y), n).unwrap();
            let back = g.pow(fwd, -n).unwrap();
            assert!((back.0 - x).norm() / x.norm() < 1e-9);
            assert!((back.1 - y).norm() / y.norm() < 1e-9);
        }
    }

    #[test]
    fn model_g_closed_form_matches_stepwise() {
        // closed-form inverse against stepwise inversion with r = 0
        let g = ModelMapG::new(3, Complex64::new(0.5, 0.2), vec![]);
        let v = (Complex64::new(0.4, 0.1), Complex64::new(1.3, -0.2));
        let img = g.pow(v, 2).unwrap();
        let closed = g.pow(img, -2).unwrap();
        // manual stepwise
        let s1 = g.apply_inverse_once(img).unwrap();
        let s2 = g.apply_inverse_once(s1).unwrap();
        assert!((closed.0 - s2.0).norm() < 1e-12);
        assert!((closed.1 - s2.1).norm() < 1e-9 * (1.0 + s2.1.norm()));
    }

    #[test]
    fn model_g_truncation_guard() {
        // r with a large trailing coefficient near |x| = 1 must refuse
        let g = ModelMapG::new(2, Complex64::new(1.0, 0.0), vec![Complex64::new(0.5, 0.0)]);
        let r = g.pow((Complex64::new(0.999, 0.0), Complex64::new(1.0, 0.0)), -1);
        assert!(matches!(r, Err(NormalFormError::TruncationLoss)));
    }
}
