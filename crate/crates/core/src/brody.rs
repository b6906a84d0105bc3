//! Fubini-Study metric evaluation and the empirical harness around the
//! derivative estimates for the analytic-disc family.
//!
//! All disc-level norms are carried as natural logs: the raw values reach
//! exp(c d^n (2 - 2/d)) and beyond, but every asserted inequality is a ratio,
//! so the log domain is exact where linear f64 would overflow.

use crate::ext::{log_sum_exp, ExtPoint, ExtTangent};
use crate::filtration::{FiltrationConstants, Mode};
use crate::green::GreenParams;
use crate::map::{HenonSystem, Tangent};
use crate::normal::{DiscSample, DiscTrace, LeafParam, LeafTracer, NormalFormError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Fubini-Study norm of a tangent vector in the affine chart:
/// [(|z'|^2 + |w'|^2 + |z w' - z' w|^2) / (1 + |z|^2 + |w|^2)^2]^{1/2}.
pub fn fs_norm(t: &Tangent) -> f64 {
    let num = t.dz.norm_sqr()
        + t.dw.norm_sqr()
        + (t.base.z * t.dw - t.dz * t.base.w).norm_sqr();
    let den = 1.0 + t.base.z.norm_sqr() + t.base.w.norm_sqr();
    (num / (den * den)).sqrt()
}

/// ln of the same quantity for extended-range points and tangents.
pub fn fs_norm_ln_ext(p: &ExtPoint, t: &ExtTangent) -> f64 {
    let cross = p.z.mul(t.dw).sub(t.dz.mul(p.w));
    let num = log_sum_exp(&[
        2.0 * t.dz.log_mag,
        2.0 * t.dw.log_mag,
        2.0 * cross.log_mag,
    ]);
    let den = log_sum_exp(&[0.0, 2.0 * p.z.log_mag, 2.0 * p.w.log_mag]);
    0.5 * num - den
}

/// Default theta grid: center, 4 interior rings of 8, 64 boundary points.
pub fn default_theta_grid() -> Vec<Complex64> {
    let mut grid = vec![Complex64::new(0.0, 0.0)];
    for ring in 1..=4 {
        let r = ring as f64 / 5.0;
        for j in 0..8 {
            let ang = 2.0 * std::f64::consts::PI * (j as f64) / 8.0 + 0.1 * ring as f64;
            grid.push(Complex64::from_polar(r, ang));
        }
    }
    for j in 0..64 {
        let ang = 2.0 * std::f64::consts::PI * (j as f64) / 64.0;
        grid.push(Complex64::from_polar(1.0, ang));
    }
    grid
}

/// Boundary-only grid of m points.
pub fn boundary_theta_grid(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j as f64) / (m as f64)))
        .collect()
}

/// Base-level samples of the traced disc with FS norms and region traces.
pub fn disc_fs_profile(trace: &DiscTrace) -> Vec<DiscSample> {
    trace
        .thetas
        .iter()
        .enumerate()
        .map(|(ti, &theta)| {
            let p0 = trace.points[ti][0];
            let point = if p0.in_f64_range() {
                crate::map::AffinePoint::new(p0.z.to_complex(), p0.w.to_complex())
            } else {
                crate::map::AffinePoint::new(
                    Complex64::new(f64::INFINITY, 0.0),
                    Complex64::new(f64::INFINITY, 0.0),
                )
            };
            DiscSample {
                theta,
                point,
                fs_norm_ln: fs_norm_ln_ext(&trace.points[ti][0], &trace.tangents[ti][0]),
                region_trace: trace.regions[ti].clone(),
            }
        })
        .collect()
}

/// One per-theta entry of a case table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseEntry {
    pub n: u32,
    pub i: u32,
    /// 1 = V+ to V+, 2 = crossing V+ to V-, 3 = V- to V-
    pub case: u8,
    pub theta: [f64; 2],
    /// ln of ||f^{i-1} o phi||^2_FS / ||f^i o phi||^2_FS
    pub ln_ratio: f64,
    /// ln of the closed-form bound this entry was compared against (case 1:
    /// lower bound; case 3: upper bound); NaN when no bound applies
    pub ln_bound: f64,
    pub pass: bool,
}

/// Aggregate of one (i, n) case check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseCheck {
    pub n: u32,
    pub i: u32,
    pub case_counts: [usize; 3],
    pub min_ln_ratio_case1: Option<f64>,
    pub max_ln_ratio_case2: Option<f64>,
    pub max_ln_ratio_case3: Option<f64>,
    /// sup/inf of ||f^i o phi||^2 over Theta^s_{n,i}
    pub c_s_vplus: Option<f64>,
    /// sup crossing ratio / inf case-1 ratio
    pub c_s: Option<f64>,
    pub sandwich_violations: u32,
    pub bound_violations: u32,
    pub entries: Vec<CaseEntry>,
}

/// ln of the case-1 (V+ to V+) lower bound:
/// d^2 / (96 (1 + c_g^2) 2^{2d-2} |a|^2) * |s|^{-(4 - 4/d) d^i}.
fn ln_bound_case1(sys: &HenonSystem, k: &FiltrationConstants, c: f64, i: u32) -> f64 {
    let d = f64::from(sys.degree());
    let a2 = sys.a().norm_sqr();
    let con = d * d / (96.0 * (1.0 + k.c_g * k.c_g) * 2f64.powf(2.0 * d - 2.0) * a2);
    con.ln() + c * (4.0 - 4.0 / d) * d.powi(i as i32)
}

/// ln of the case-3 (V- to V-) upper bound:
/// 2^4 * 3^2 * 41 d^2 |a|^2 c_V^{2d} / R^{2d-4}.
fn ln_bound_case3(sys: &HenonSystem, k: &FiltrationConstants) -> f64 {
    let d = f64::from(sys.degree());
    let a2 = sys.a().norm_sqr();
    (16.0 * 9.0 * 41.0 * d * d * a2).ln() + 2.0 * d * k.c_vplus.ln()
        - (2.0 * d - 4.0) * k.r_big.ln()
}

/// Classify every theta for one i, compare the FS ratios of consecutive
/// levels against the closed-form bounds (asserted only under PaperFaithful
/// constants), and record the verticality sandwich at level i.
pub fn case_bound_check(
    sys: &HenonSystem,
    k: &FiltrationConstants,
    c: f64,
    trace: &DiscTrace,
    i: u32,
    keep_entries: bool,
) -> CaseCheck {
    assert!(i >= 1 && i <= trace.depth);
    let assert_bounds = k.mode == Mode::PaperFaithful;
    let lb1 = ln_bound_case1(sys, k, c, i);
    let lb3 = ln_bound_case3(sys, k);
    let n = trace.depth;
    let li = i as usize;

    let mut counts = [0usize; 3];
    let mut min1: Option<f64> = None;
    let mut max2: Option<f64> = None;
    let mut max3: Option<f64> = None;
    let mut fs_i_min: Option<f64> = None;
    let mut fs_i_max: Option<f64> = None;
    let mut sandwich_violations = 0u32;
    let mut bound_violations = 0u32;
    let mut entries = Vec::new();

    for (ti, &theta) in trace.thetas.iter().enumerate() {
        let in_i = trace.theta_in_region_index(ti, i);
        let in_im1 = trace.theta_in_region_index(ti, i - 1);
        let fs_prev = fs_norm_ln_ext(&trace.points[ti][li - 1], &trace.tangents[ti][li - 1]);
        let fs_here = fs_norm_ln_ext(&trace.points[ti][li], &trace.tangents[ti][li]);
        let ln_ratio = 2.0 * (fs_prev - fs_here);

        let (case, ln_bound, pass) = if in_im1 {
            counts[0] += 1;
            min1 = Some(min1.map_or(ln_ratio, |m: f64| m.min(ln_ratio)));
            let ok = !assert_bounds || (ln_ratio >= lb1 && lb1 > 0.0);
            (1u8, lb1, ok)
        } else if in_i {
            counts[1] += 1;
            max2 = Some(max2.map_or(ln_ratio, |m: f64| m.max(ln_ratio)));
            (2u8, f64::NAN, true)
        } else {
            counts[2] += 1;
            max3 = Some(max3.map_or(ln_ratio, |m: f64| m.max(ln_ratio)));
            let ok = !assert_bounds || ln_ratio <= lb3;
            (3u8, lb3, ok)
        };
        if !pass {
            bound_violations += 1;
        }

        if in_i {
            // Lemma-style sandwich at level i on Theta^s_{n,i}:
            // |w'|^2 / (4 D) <= fs^2 <= 2 (1 + c_g^2) |w'|^2 / D
            let p = &trace.points[ti][li];
            let t = &trace.tangents[ti][li];
            let ln_d = log_sum_exp(&[0.0, 2.0 * p.z.log_mag, 2.0 * p.w.log_mag]);
            let fs2 = 2.0 * fs_here;
            let lower = 2.0 * t.dw.log_mag - 4f64.ln() - ln_d;
            let upper = (2.0 * (1.0 + k.c_g * k.c_g)).ln() + 2.0 * t.dw.log_mag - ln_d;
            let slack = 1e-9;
            if fs2 < lower - slack || fs2 > upper + slack {
                sandwich_violations += 1;
            }
            fs_i_min = Some(fs_i_min.map_or(fs2, |m: f64| m.min(fs2)));
            fs_i_max = Some(fs_i_max.map_or(fs2, |m: f64| m.max(fs2)));
        }

        if keep_entries {
            entries.push(CaseEntry {
                n,
                i,
                case,
                theta: [theta.re, theta.im],
                ln_ratio,
                ln_bound,
                pass,
            });
        }
    }

    let c_s_vplus = match (fs_i_min, fs_i_max) {
        (Some(lo), Some(hi)) => Some((hi - lo).exp()),
        _ => None,
    };
    let c_s = match (max2, min1) {
        (Some(m2), Some(m1)) => Some((m2 - m1).exp()),
        _ => None,
    };

    CaseCheck {
        n,
        i,
        case_counts: counts,
        min_ln_ratio_case1: min1,
        max_ln_ratio_case2: max2,
        max_ln_ratio_case3: max3,
        c_s_vplus,
        c_s,
        sandwich_violations,
        bound_violations,
        entries,
    }
}

/// Empirical surrogates for the derivative-bound constants, with FS norms in
/// natural-log form (the linear values overflow any float at realistic n).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BrodyReport {
    pub c: f64,
    pub mode: Mode,
    pub n_values: Vec<u32>,
    pub base_norms_ln: Vec<f64>,
    pub sup_norms_ln: Vec<f64>,
    /// sup/base per n (linear; bounded when the derivative bound holds)
    pub ratios: Vec<f64>,
    /// sup over rescaled half-disc samples of ||k_n||_FS (linear)
    pub m_s_hat: f64,
    pub c_s_hat: Option<f64>,
    pub c_s_vplus_hat: Option<f64>,
    pub rescaled_base_norm_max_err: f64,
    pub case_checks: Vec<CaseCheck>,
    pub sandwich_violations: u32,
    pub bound_violations: u32,
}

/// Run the whole harness over a range of depths on one leaf.
pub fn brody_ratio_sequence(
    sys: &HenonSystem,
    k: &FiltrationConstants,
    params: &GreenParams,
    c: f64,
    base: crate::map::AffinePoint,
    n_range: std::ops::RangeInclusive<u32>,
    thetas: &[Complex64],
    keep_entries: bool,
) -> Result<BrodyReport, NormalFormError> {
    let mut n_values = Vec::new();
    let mut base_norms_ln = Vec::new();
    let mut sup_norms_ln = Vec::new();
    let mut ratios = Vec::new();
    let mut case_checks = Vec::new();
    let mut m_s_hat: f64 = 0.0;
    let mut c_s_hat: Option<f64> = None;
    let mut c_s_vplus_hat: Option<f64> = None;
    let mut sandwich_violations = 0;
    let mut bound_violations = 0;
    let mut rescale_err: f64 = 0.0;

    for n in n_range {
        let leaf = LeafParam::new(sys, params, c, base, n)?;
        let tracer = LeafTracer::new(sys, k, *params, leaf)?;
        let trace = tracer.trace(thetas)?;

        // base norm: theta = 0 must be on the grid (grid[0] by convention)
        let base_idx = trace
            .thetas
            .iter()
            .position(|t| t.norm() == 0.0)
            .expect("theta grid must contain 0");
        let base_ln = fs_norm_ln_ext(
            &trace.points[base_idx][0],
            &trace.tangents[base_idx][0],
        );
        let mut sup_ln = f64::NEG_INFINITY;
        for ti in 0..trace.thetas.len() {
            let v = fs_norm_ln_ext(&trace.points[ti][0], &trace.tangents[ti][0]);
            sup_ln = sup_ln.max(v);
        }

        // rescaled maps k_n(theta) = phi(theta / R_n): ||k_n||_{FS,0} = 1 by
        // construction; record the reconstruction error and the sup over the
        // half-disc |theta| <= 1/2 as the M_s surrogate.
        let r_n_ln = base_ln;
        for ti in 0..trace.thetas.len() {
            let th = trace.thetas[ti];
            let v = fs_norm_ln_ext(&trace.points[ti][0], &trace.tangents[ti][0]);
            if th.norm() == 0.0 {
                rescale_err = rescale_err.max(((v - r_n_ln).exp() - 1.0).abs());
            }
            if th.norm() <= 0.5 {
                m_s_hat = m_s_hat.max((v - r_n_ln).exp());
            }
        }

        for i in 1..=n {
            let check = case_bound_check(sys, k, c, &trace, i, keep_entries);
            sandwich_violations += check.sandwich_violations;
            bound_violations += check.bound_violations;
            if let Some(cs) = check.c_s {
                c_s_hat = Some(c_s_hat.map_or(cs, |m: f64| m.max(cs)));
            }
            if let Some(cv) = check.c_s_vplus {
                c_s_vplus_hat = Some(c_s_vplus_hat.map_or(cv, |m: f64| m.max(cv)));
            }
            case_checks.push(check);
        }

        n_values.push(n);
        base_norms_ln.push(base_ln);
        sup_norms_ln.push(sup_ln);
        ratios.push((sup_ln - base_ln).exp());
    }

    Ok(BrodyReport {
        c,
        mode: k.mode,
        n_values,
        base_norms_ln,
        sup_norms_ln,
        ratios,
        m_s_hat,
        c_s_hat,
        c_s_vplus_hat,
        rescaled_base_norm_max_err: rescale_err,
        case_checks,
        sandwich_violations,
        bound_violations,
    })
}

/// Case tables as CSV (n, i, case, theta, ln_ratio, ln_bound, pass).
pub fn case_tables_csv(checks: &[CaseCheck]) -> String {
    let mut out = String::from("n,i,case,theta_re,theta_im,ln_ratio,ln_bound,pass\n");
    for ch in checks {
        for e in &ch.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                e.n, e.i, e.case, e.theta[0], e.theta[1], e.ln_ratio, e.ln_bound, e.pass
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::AffinePoint;
    use proptest::prelude::*;

    #[test]
    fn fs_norm_examples() {
        // base (0,0), tangent (1,0) -> 1
        let t = Tangent {
            base: AffinePoint::from_re(0.0, 0.0),
            dz: Complex64::new(1.0, 0.0),
            dw: Complex64::new(0.0, 0.0),
        };
        assert!((fs_norm(&t) - 1.0).abs() < 1e-15);
        // base (1,0), tangent (0,1) -> sqrt(2)/2
        let t2 = Tangent {
            base: AffinePoint::from_re(1.0, 0.0),
            dz: Complex64::new(0.0, 0.0),
            dw: Complex64::new(1.0, 0.0),
        };
        assert!((fs_norm(&t2) - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fs_norm_ext_agrees_with_plain() {
        let base = AffinePoint::new(Complex64::new(3.0, -1.0), Complex64::new(0.5, 2.0));
        let t = Tangent {
            base,
            dz: Complex64::new(0.7, 0.3),
            dw: Complex64::new(-1.2, 0.4),
        };
        let plain = fs_norm(&t).ln();
        let p = ExtPoint::from_complex(base.z, base.w);
        let te = ExtTangent {
            dz: crate::ext::ExtComplex::from_complex(t.dz),
            dw: crate::ext::ExtComplex::from_complex(t.dw),
        };
        assert!((fs_norm_ln_ext(&p, &te) - plain).abs() < 1e-10);
    }

    proptest! {
        // homogeneity |lambda| scaling and positivity
        #[test]
        fn fs_norm_homogeneous(
            zr in -3.0f64..3.0, zi in -3.0f64..3.0,
            wr in -3.0f64..3.0, wi in -3.0f64..3.0,
            dzr in -2.0f64..2.0, dzi in -2.0f64..2.0,
            dwr in -2.0f64..2.0, dwi in -2.0f64..2.0,
            lr in -2.0f64..2.0, li in -2.0f64..2.0,
        ) {
            let base = AffinePoint::new(Complex64::new(zr, zi), Complex64::new(wr, wi));
            let dz = Complex64::new(dzr, dzi);
            let dw = Complex64::new(dwr, dwi);
            prop_assume!(dz.norm() + dw.norm() > 1e-6);
            let lam = Complex64::new(lr, li);
            let t = Tangent { base, dz, dw };
            let ts = Tangent { base, dz: lam * dz, dw: lam * dw };
            let a = fs_norm(&t);
            let b = fs_norm(&ts);
            prop_assert!(a > 0.0);
            prop_assert!((b - lam.norm() * a).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn theta_grid_shape() {
        let g = default_theta_grid();
        assert_eq!(g.len(), 1 + 32 + 64);
        assert_eq!(g[0], Complex64::new(0.0, 0.0));
        assert!(g.iter().all(|t| t.norm() <= 1.0 + 1e-12));
    }
}
