//! Numerical laboratory for generalized Henon mappings of C^2.
//!
//! The crate computes Green functions and their level sets, selects and
//! verifies the filtration of C^2 near infinity, traces the foliation leaves
//! of {g+ = c} through a Boettcher-type coordinate, and profiles
//! Fubini-Study derivatives along the analytic-disc family living on a leaf.

pub mod brody;
pub mod ext;
pub mod filtration;
pub mod green;
pub mod map;
pub mod normal;
pub mod render;

pub use ext::{ExtComplex, ExtPoint, ExtTangent};
pub use filtration::{
    choose_constants, min_large_c, region_of, region_of_ext, verify_filtration,
    FiltrationConstants, FiltrationError, FiltrationReport, Mode, Region,
};
pub use green::{
    bottcher_x, classify, green_minus, green_plus, level_set_seed, Classification, GreenError,
    GreenParams, GreenStatus, GreenValue, SideClass,
};
pub use map::{
    apply_forward, apply_inverse, extend_forward_proj, extend_inverse_proj, iterate_ext,
    jacobian_forward, jacobian_inverse, AffinePoint, HenonFactor, HenonSystem, MapDocument,
    MapError, Mat2, ProjPoint, Tangent,
};
pub use normal::{
    depth_for, leaf_point, psi, psi_inverse, theta_region_index, verticality_slope, DiscSample,
    DiscTrace, LeafParam, LeafTracer, ModelMapG, NormalFormError,
};

use num_complex::Complex64;

/// The three benchmark systems used throughout tests and reports.
pub fn benchmark_systems() -> Vec<(String, HenonSystem)> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let sq = HenonFactor::monic(&[zero, zero], one).unwrap();
    let shifted = HenonFactor::monic(&[Complex64::new(0.3, 0.0), zero], Complex64::new(0.5, 0.0))
        .unwrap();
    vec![
        (
            "square".to_string(),
            HenonSystem::single(sq.clone()),
        ),
        (
            "shifted".to_string(),
            HenonSystem::single(shifted.clone()),
        ),
        (
            "composed".to_string(),
            HenonSystem::new(vec![sq, shifted]).unwrap(),
        ),
    ]
}
