use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use super::{FlagDensityField, ReconstructionConfig, MIN_STEP};
use crate::sphere::{tangent_direction, Direction, Flag, Point3};
use crate::transforms::PlaneCoords;
use crate::{Error, Result};

/// Spatial derivatives of `ρ` along the `x2` axis of a flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialDerivs {
    pub rho_y: f64,
    pub rho_yy: f64,
    pub rho_phi_y: f64,
}

fn check_step(delta: f64) -> Result<()> {
    if !(delta >= MIN_STEP) {
        return Err(Error::StepDegenerate {
            step: delta,
            minimum: MIN_STEP,
        });
    }
    Ok(())
}

fn spatial_once(field: &FlagDensityField, f: &Flag, delta: f64) -> Result<SpatialDerivs> {
    let y = f.right().into_inner() * delta;
    let r0 = field.flag_density_at(f)?;
    let (rp, dp) = field.rho_and_rate(&f.translated(&y))?;
    let (rm, dm) = field.rho_and_rate(&f.translated(&-y))?;
    Ok(SpatialDerivs {
        rho_y: (rp - rm) / (2.0 * delta),
        rho_yy: (rp - 2.0 * r0 + rm) / (delta * delta),
        rho_phi_y: (dp - dm) / (2.0 * delta),
    })
}

/// `(ρ'_y, ρ''_yy, ρ''_Φy)` by central differences over `x ± δ·x2`. With
/// `richardson`, the differences at `δ` and `δ/2` are combined to fourth
/// order.
pub fn rho_spatial_derivs(field: &FlagDensityField, f: &Flag, delta: f64, richardson: bool) -> Result<SpatialDerivs> {
    check_step(delta)?;
    let a = spatial_once(field, f, delta)?;
    if !richardson {
        return Ok(a);
    }
    check_step(delta / 2.0)?;
    let b = spatial_once(field, f, delta / 2.0)?;
    let r = |a: f64, b: f64| (4.0 * b - a) / 3.0;
    Ok(SpatialDerivs {
        rho_y: r(a.rho_y, b.rho_y),
        rho_yy: r(a.rho_yy, b.rho_yy),
        rho_phi_y: r(a.rho_phi_y, b.rho_phi_y),
    })
}

/// Second derivative of `M` along the direction at angle `phi` in the plane
/// with normal `normal`, by a 3-point central difference.
pub fn bundle_mass_derivs(
    field: &FlagDensityField,
    x: &Point3,
    normal: &Direction,
    phi: f64,
    delta: f64,
) -> Result<f64> {
    check_step(delta)?;
    let g = tangent_direction(normal, phi).into_inner() * delta;
    let m0 = field.bundle_mass(x)?;
    let mp = field.bundle_mass(&(x + g))?;
    let mm = field.bundle_mass(&(x - g))?;
    Ok((mp - 2.0 * m0 + mm) / (delta * delta))
}

/// `∂M/∂n` along `normal` by a central difference.
pub fn normal_mass_derivative(field: &FlagDensityField, x: &Point3, normal: &Direction, delta: f64) -> Result<f64> {
    check_step(delta)?;
    let n = normal.into_inner() * delta;
    Ok((field.bundle_mass(&(x + n))? - field.bundle_mass(&(x - n))?) / (2.0 * delta))
}

/// Terms of the inversion formula at one plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketTerms {
    /// `M(x)`
    pub mass: f64,
    /// `(1/2π) ∫ ∂²M/∂²_φ x dφ`
    pub mass_curvature: f64,
    /// `(2/π) ∫ (ρ''_ΦΦ + 2ρ''_Φy + ρ''_yy) dφ`
    pub flag_terms: f64,
    /// `2 ∂M/∂n`, zero when disabled
    pub normal_term: f64,
    /// `M + mass_curvature − flag_terms + normal_term`
    pub bracket: f64,
    /// `c_norm · bracket`
    pub value: f64,
}

/// Reconstructs `h(e)` at the foot of the perpendicular from the origin.
pub fn reconstruct_plane(
    field: &FlagDensityField,
    plane: &PlaneCoords,
    config: &ReconstructionConfig,
) -> Result<BracketTerms> {
    let e = plane.canonical();
    reconstruct_plane_at(field, &e, &e.foot(), config)
}

/// Reconstructs `h(e)` from the bundle of flags at `x ∈ e`:
///
/// ```text
/// h(e) = c · [ M + (1/2π) ∫ ∂²M/∂²_φ x dφ − (2/π) ∫ (ρ''_ΦΦ + 2ρ''_Φy + ρ''_yy) dφ + 2 ∂M/∂n ]
/// ```
///
/// where the flags have positive normal `n`, the canonical normal of `e`,
/// and `c = c_norm`. The last term is omitted when
/// `include_normal_term` is off; it is needed whenever `M` varies along the
/// normal.
pub fn reconstruct_plane_at(
    field: &FlagDensityField,
    plane: &PlaneCoords,
    x: &Point3,
    config: &ReconstructionConfig,
) -> Result<BracketTerms> {
    config.validate()?;
    if !plane.contains(x, 1e-9 * (1.0 + plane.p.abs())) {
        return Err(Error::InvalidConfig("base point is not on the plane".into()));
    }
    let normal = plane.normal;
    let delta = config.delta;
    let mass = field.bundle_mass(x)?;
    let dphi = TAU / config.n_phi as f64;
    let (mut curv, mut flag) = (0.0, 0.0);
    for k in 0..config.n_phi {
        let phi = config.phi_offset + k as f64 * dphi;
        let f = Flag::from_plane(*x, normal, phi);
        curv += bundle_mass_derivs(field, x, &normal, phi, delta)?;
        let (_, rpp) = field.rho_rotational_derivs(&f)?;
        let s = rho_spatial_derivs(field, &f, delta, config.richardson)?;
        flag += rpp + 2.0 * s.rho_phi_y + s.rho_yy;
    }
    let mass_curvature = curv * dphi / TAU;
    let flag_terms = 2.0 / PI * flag * dphi;
    let normal_term = if config.include_normal_term {
        2.0 * normal_mass_derivative(field, x, &normal, delta)?
    } else {
        0.0
    };
    let bracket = mass + mass_curvature - flag_terms + normal_term;
    Ok(BracketTerms {
        mass,
        mass_curvature,
        flag_terms,
        normal_term,
        bracket,
        value: config.c_norm * bracket,
    })
}
