//! Filtration constants, the V+/V-/W partition, and its empirical
//! verification.
//!
//! Paper-faithful constants come from closed-form sufficient bounds on
//! coefficient magnitudes and are astronomically large by design; relaxed
//! constants are the smallest power-of-two R that survives sampling, so leaf
//! tracing and rendering can work at humane magnitudes.

use crate::ext::ExtPoint;
use crate::green::{green_plus, GreenError, GreenParams};
use crate::map::{apply_forward, apply_inverse, AffinePoint, HenonFactor, HenonSystem};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FiltrationError {
    #[error("paper-faithful constants are infeasible for this system: {0}")]
    Infeasible(String),
    #[error("no R in the search ladder passed sampling verification")]
    SearchExhausted,
    #[error(transparent)]
    Green(#[from] GreenError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    PaperFaithful,
    Relaxed,
}

/// R, c_{V+}, c_phi, r_phi plus the measured verticality constant c_g.
/// r_phi is not derivable from coefficient data (it depends on the conjugacy
/// domain), so it is fixed at the nominal 4.04 * c_phi.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FiltrationConstants {
    pub r_big: f64,
    pub c_vplus: f64,
    pub c_phi: f64,
    pub r_phi: f64,
    pub c_g: f64,
    pub mode: Mode,
}

impl FiltrationConstants {
    pub fn validate(&self) {
        assert!(self.r_big > 1.0);
        assert!(self.c_phi < self.r_phi / 4.0);
        assert!(self.c_vplus > 1.0 / self.c_phi);
        if self.mode == Mode::PaperFaithful {
            assert!(self.c_phi < 0.01);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    VPlus,
    VMinus,
    W,
    Ambiguous,
}

/// Closed-set membership with boundary priority V+ > V- > W.
pub fn region_of(p: AffinePoint, k: &FiltrationConstants) -> Region {
    let zn = p.z.norm();
    let cw = k.c_vplus * p.w.norm();
    if zn >= k.r_big && cw <= zn {
        Region::VPlus
    } else if cw >= k.r_big && zn <= cw {
        Region::VMinus
    } else if zn <= k.r_big && cw <= k.r_big {
        Region::W
    } else {
        Region::Ambiguous
    }
}

/// Same classification on extended-range points, in log space.
pub fn region_of_ext(p: ExtPoint, k: &FiltrationConstants) -> Region {
    let lz = p.z.log_mag;
    let lcw = k.c_vplus.ln() + p.w.log_mag;
    let lr = k.r_big.ln();
    if lz >= lr && lcw <= lz {
        Region::VPlus
    } else if lcw >= lr && lz <= lcw {
        Region::VMinus
    } else if lz <= lr && lcw <= lr {
        Region::W
    } else {
        Region::Ambiguous
    }
}

/// Requirements on s = R/c_V and on R itself for one factor. Returns the
/// minimal admissible R, or an explanation when no R works.
fn paper_r_requirement(f: &HenonFactor, c_v: f64, c_g: f64) -> Result<f64, String> {
    let d = f64::from(f.degree());
    let m = f.lower_coeff_mass();
    let mp = f.lower_derivative_mass();
    let an = f.a().norm();

    // approximation property (1): |z|^d/2 + c_V |z| <= |p(z)| <= 2|z|^d - c_V|z|
    let mut s_req = 1.0f64.max(4.0 * m).max((4.0 * c_v).powf(1.0 / (d - 1.0)));

    // approximation property (2), lower side: d|z|^{d-1}/2 + |z| <= |p'(z)|.
    // For d = 2 it reads 2|z| <= |2z + c_1|, which no R can satisfy unless
    // c_1 = 0; equality then holds everywhere.
    if f.degree() == 2 {
        if mp > 0.0 {
            return Err(format!(
                "degree-2 factor with p'(z) = 2z + c, |c| = {mp}: the bound \
                 d|z|/2 + |z| <= |p'(z)| fails on a ray for every R"
            ));
        }
    } else {
        s_req = s_req
            .max(4.0 * mp / d)
            .max((4.0 / d).powf(1.0 / (d - 2.0)))
            .max(2.0 * mp / d)
            .max((2.0 / d).powf(1.0 / (d - 2.0)));
    }
    if f.degree() == 2 {
        s_req = s_req.max(mp); // upper side of (2) at d = 2
    }

    let mut r_req = c_v * s_req;

    // trichotomy bullets
    r_req = r_req.max((2.0 * an / c_v).powf(1.0 / (d - 1.0)));
    r_req = r_req.max(c_v * (2.0 * an).powf(1.0 / (d - 1.0)));

    // approximation property (3), with ||g|| = c_g / 2 as the surrogate
    let g_norm = c_g / 2.0;
    r_req = r_req.max(
        2f64.powf(d + 5.0) * 9.0 * 41f64.sqrt() * (1.0 + an).powi(2) * c_v.powf(d)
            * (1.0 + g_norm * g_norm).sqrt(),
    );

    Ok(r_req)
}

fn next_power_of_two(x: f64) -> f64 {
    let mut r = 2.0f64;
    while r < x {
        r *= 2.0;
    }
    r
}

pub const DEFAULT_C_G: f64 = 0.1;

/// Select the filtration constants for a system.
///
/// PaperFaithful: smallest power-of-two R satisfying the closed-form
/// sufficient bounds for every factor. Relaxed: smallest power-of-two R whose
/// sampled filtration check is violation-free. c_g starts at the nominal 0.1
/// until a verticality measurement replaces it.
pub fn choose_constants(
    sys: &HenonSystem,
    mode: Mode,
) -> Result<FiltrationConstants, FiltrationError> {
    match mode {
        Mode::PaperFaithful => {
            let c_phi = 0.009;
            let c_v = 120.0;
            let mut r_req = 2.0f64;
            for f in sys.factors() {
                let r =
                    paper_r_requirement(f, c_v, DEFAULT_C_G).map_err(FiltrationError::Infeasible)?;
                r_req = r_req.max(r);
            }
            let k = FiltrationConstants {
                r_big: next_power_of_two(r_req),
                c_vplus: c_v,
                c_phi,
                r_phi: 4.04 * c_phi,
                c_g: DEFAULT_C_G,
                mode,
            };
            k.validate();
            Ok(k)
        }
        Mode::Relaxed => {
            let c_phi = 0.04;
            let c_v = 26.0;
            let mut r = 2.0f64;
            for _ in 0..60 {
                let k = FiltrationConstants {
                    r_big: r,
                    c_vplus: c_v,
                    c_phi,
                    r_phi: 4.04 * c_phi,
                    c_g: DEFAULT_C_G,
                    mode,
                };
                let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
                let report = verify_filtration(sys, &k, 100_000, &GreenParams::default(), &mut rng)?;
                if report.violations == 0 {
                    k.validate();
                    return Ok(k);
                }
                r *= 2.0;
            }
            Err(FiltrationError::SearchExhausted)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    pub kind: String,
    pub z: [f64; 2],
    pub w: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiltrationReport {
    pub samples: u64,
    pub violations: u64,
    pub witnesses: Vec<Witness>,
    pub mode: Mode,
}

fn random_phase_complex(rng: &mut impl Rng, modulus: f64) -> Complex64 {
    Complex64::from_polar(modulus, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
}

/// Sample-based check of f(V+) in V+, f^{-1}(V-) in V-, and that escaped
/// points reach V+ within the iteration budget. n_samples applies to each of
/// the V+/V- draws; the escape-reach check uses n_samples/10.
pub fn verify_filtration(
    sys: &HenonSystem,
    k: &FiltrationConstants,
    n_samples: u64,
    params: &GreenParams,
    rng: &mut impl Rng,
) -> Result<FiltrationReport, FiltrationError> {
    let d = f64::from(sys.degree());
    let mut violations = 0u64;
    let mut witnesses: Vec<Witness> = Vec::new();
    let record = |kind: &str, p: AffinePoint, violations: &mut u64, w: &mut Vec<Witness>| {
        *violations += 1;
        if w.len() < 16 {
            w.push(Witness {
                kind: kind.to_string(),
                z: [p.z.re, p.z.im],
                w: [p.w.re, p.w.im],
            });
        }
    };

    // keep |z|^d comfortably inside f64 range
    let ln_span = 46f64.min(660.0 / d - k.r_big.ln()).max(1.0);

    // forward invariance of V+
    for _ in 0..n_samples {
        let lz = rng.gen_range(0.0..ln_span) + k.r_big.ln();
        let z = random_phase_complex(rng, lz.exp());
        let frac: f64 = rng.gen_range(0.0..=1.0);
        let w = random_phase_complex(rng, frac * z.norm() / k.c_vplus);
        let p = AffinePoint::new(z, w);
        debug_assert_eq!(region_of(p, k), Region::VPlus);
        if region_of(apply_forward(sys, p), k) != Region::VPlus {
            record("forward_vplus", p, &mut violations, &mut witnesses);
        }
    }

    // backward invariance of V-
    for _ in 0..n_samples {
        let lw = rng.gen_range(0.0..ln_span) + (k.r_big / k.c_vplus).ln();
        let w = random_phase_complex(rng, lw.exp());
        let frac: f64 = rng.gen_range(0.0..=1.0);
        let z = random_phase_complex(rng, frac * k.c_vplus * w.norm());
        let p = AffinePoint::new(z, w);
        debug_assert_eq!(region_of(p, k), Region::VMinus);
        if region_of(apply_inverse(sys, p), k) != Region::VMinus {
            record("backward_vminus", p, &mut violations, &mut witnesses);
        }
    }

    // escaped points reach V+ within budget
    let reach_target = (n_samples / 10).max(1);
    let mut reached_checks = 0u64;
    let mut attempts = 0u64;
    while reached_checks < reach_target && attempts < reach_target * 50 {
        attempts += 1;
        let p = AffinePoint::new(
            Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
            Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
        );
        let g = green_plus(sys, p, params)?;
        if !g.escaped() {
            continue;
        }
        reached_checks += 1;
        let mut cur = p;
        let mut ok = false;
        for _ in 0..=params.max_iter {
            if region_of(cur, k) == Region::VPlus {
                ok = true;
                break;
            }
            cur = apply_forward(sys, cur);
            if !cur.z.is_finite() || !cur.w.is_finite() {
                // left f64 range while |z| dominant; it was already in V+
                ok = region_of(cur, k) == Region::VPlus;
                break;
            }
        }
        if !ok {
            record("uplus_reach", p, &mut violations, &mut witnesses);
        }
    }

    Ok(FiltrationReport {
        samples: n_samples,
        violations,
        witnesses,
        mode: k.mode,
    })
}

/// Smallest level c admissible for the analytic-disc family: above the
/// sampled max of g+ on W (plus pushed-forward W images for compositions,
/// with a 1.1 safety factor), above ln R, and large enough for the disc
/// definition bullet (r == 0 surrogate).
pub fn min_large_c(
    sys: &HenonSystem,
    k: &FiltrationConstants,
    params: &GreenParams,
    n_grid: u64,
    rng: &mut impl Rng,
) -> Result<f64, FiltrationError> {
    let an = sys.a().norm();
    let d = f64::from(sys.degree());

    // sample W
    let mut w_samples = Vec::with_capacity(n_grid as usize);
    for _ in 0..n_grid {
        let fz: f64 = rng.gen_range(0.0..=1.0);
        let z = random_phase_complex(rng, fz.sqrt() * k.r_big);
        let fw: f64 = rng.gen_range(0.0..=1.0);
        let w = random_phase_complex(rng, fw.sqrt() * k.r_big / k.c_vplus);
        w_samples.push(AffinePoint::new(z, w));
    }

    let max_g = |pts: &[AffinePoint]| -> Result<f64, FiltrationError> {
        let mut m = 0.0f64;
        for p in pts {
            m = m.max(green_plus(sys, *p, params)?.value);
        }
        Ok(m)
    };

    let mut bound = max_g(&w_samples)?;
    let n = sys.factors().len();
    if n > 1 {
        // composed systems: add max g+ over (f_N o ... o f_i)(W) for each i
        for i in 0..n {
            let pushed: Vec<AffinePoint> = w_samples
                .iter()
                .map(|p| {
                    let mut cur = *p;
                    for f in &sys.factors()[i..] {
                        cur = AffinePoint::new(f.p_eval(cur.z) - f.a() * cur.w, cur.z);
                    }
                    cur
                })
                .collect();
            bound += max_g(&pushed)?;
        }
    }

    let c0 = 1.1 * bound;
    let c1 = k.r_big.ln() + 0.01;
    let c2 = (8.0 * (an * k.c_phi / d + 1.0) / k.c_phi).ln() + 0.01;
    Ok(c0.max(c1).max(c2))
}
