use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::{FlagDensityField, ReconstructionConfig, MIN_STEP};
use crate::sphere::{frame_of_normal, gauss_legendre_on, Direction, Flag, Point3};
use crate::transforms::{DensityField, PlaneCoords};
use crate::{Error, Result};

/// The tangent flag at angle `phi` on the boundary of the disc of angular
/// radius `alpha` on the unit sphere that touches the plane with normal
/// `normal` at `x` (centre `x − normal`).
///
/// The positive normal is the outer sphere normal and the line runs
/// counter-clockwise seen from outside, leaving the disc on its left. The
/// flag is the rigid rotation by `alpha` of the flag `(x, normal, g)` about
/// the line through the sphere centre parallel to `g`.
pub fn tangent_flag(x: &Point3, normal: &Direction, phi: f64, alpha: f64) -> Flag {
    let (e1, e2) = frame_of_normal(normal);
    let (s, c) = phi.sin_cos();
    let r = e1.as_vector() * c + e2.as_vector() * s;
    let g = e2.as_vector() * c - e1.as_vector() * s;
    let n = Direction::new(normal.as_vector() * alpha.cos() + r * alpha.sin()).expect("unit combination");
    let point = x - normal.as_vector() + n.as_vector();
    Flag::new(point, g, n).expect("line is tangent")
}

/// Nodes `(s, n, weight)` of a product rule on the cap of angular radius
/// `alpha` about `normal` on the unit sphere centred at `x − normal`.
fn cap_nodes(x: &Point3, normal: &Direction, alpha: f64, rings: usize, azimuths: usize) -> Vec<(Point3, Direction, f64)> {
    let (e1, e2) = frame_of_normal(normal);
    let (nu, wnu) = gauss_legendre_on(rings, 0.0, alpha);
    let dphi = TAU / azimuths as f64;
    let centre = x - normal.as_vector();
    let mut out = Vec::with_capacity(rings * azimuths);
    for (v, wv) in nu.iter().zip(&wnu) {
        for k in 0..azimuths {
            let (s, c) = (k as f64 * dphi).sin_cos();
            let n = normal.as_vector() * v.cos() + (e1.as_vector() * c + e2.as_vector() * s) * v.sin();
            let n = Direction::new(n).expect("unit combination");
            out.push((centre + n.as_vector(), n, wv * v.sin() * dphi));
        }
    }
    out
}

/// Both sides of the disc identity for the tangent cap `A` of radius
/// `alpha`:
///
/// ```text
/// 2π ∫_A h*(s) ds = ∫_A M ds + ∫_A ∂M/∂n ds
///                 + ∮ [cos α·M − sin α·ρ'_Φ − 2 cos α·ρ − sin α·ρ'_y] dφ
/// ```
///
/// with the boundary terms at the tangent flags. `h*(s)` is the density of
/// the plane tangent to the sphere at `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem5Sides {
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub area: f64,
}

/// Right side of the disc identity.
pub fn theorem5_rhs(
    field: &FlagDensityField,
    x: &Point3,
    normal: &Direction,
    alpha: f64,
    config: &ReconstructionConfig,
) -> Result<f64> {
    let d = config.oracle_step;
    if !(d >= MIN_STEP) {
        return Err(Error::StepDegenerate { step: d, minimum: MIN_STEP });
    }
    let mut area_terms = 0.0;
    for (s, n, w) in cap_nodes(x, normal, alpha, config.disc_rings, config.disc_azimuths) {
        let dn = n.into_inner() * d;
        let m = field.bundle_mass(&s)?;
        let dm = (field.bundle_mass(&(s + dn))? - field.bundle_mass(&(s - dn))?) / (2.0 * d);
        area_terms += w * (m + dm);
    }
    let nb = config.disc_azimuths;
    let dphi = TAU / nb as f64;
    let (sa, ca) = alpha.sin_cos();
    let mut boundary = 0.0;
    for k in 0..nb {
        let f = tangent_flag(x, normal, k as f64 * dphi, alpha);
        let m = field.bundle_mass(&f.x)?;
        let (rho, rate) = field.rho_and_rate(&f)?;
        let y = f.right().into_inner() * d;
        let rho_y = (field.flag_density_at(&f.translated(&y))? - field.flag_density_at(&f.translated(&-y))?) / (2.0 * d);
        boundary += ca * m - sa * rate - 2.0 * ca * rho - sa * rho_y;
    }
    Ok(area_terms + boundary * dphi)
}

/// Evaluates both sides of the disc identity; the left side uses the
/// plane density `h` directly.
pub fn theorem5_sides<D: DensityField + ?Sized>(
    field: &FlagDensityField,
    h: &D,
    x: &Point3,
    normal: &Direction,
    alpha: f64,
    config: &ReconstructionConfig,
) -> Result<Theorem5Sides> {
    let lhs = TAU
        * cap_nodes(x, normal, alpha, config.disc_rings, config.disc_azimuths)
            .iter()
            .map(|(s, n, w)| w * h.density(s.dot(n), n))
            .sum::<f64>();
    Ok(Theorem5Sides {
        alpha,
        lhs,
        rhs: theorem5_rhs(field, x, normal, alpha, config)?,
        area: TAU * (1.0 - alpha.cos()),
    })
}

/// Disc-limit estimate of `h(e)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscOracle {
    pub alphas: Vec<f64>,
    /// Mean conditional measure `rhs / (2π |A|)` per radius.
    pub means: Vec<f64>,
    /// Extrapolation to `α → 0`, polynomial in `α²`.
    pub value: f64,
    /// Gap between the last two extrapolants.
    pub gap: f64,
}

/// Estimates `h(e)` as the limit of the mean conditional measure over
/// tangent discs at `x ∈ e`, extrapolating in `α²` through all radii of
/// `config.alpha_sequence` (Neville's scheme).
pub fn disc_limit_oracle(
    field: &FlagDensityField,
    plane: &PlaneCoords,
    x: &Point3,
    config: &ReconstructionConfig,
) -> Result<DiscOracle> {
    config.validate()?;
    let normal = plane.normal;
    let alphas = config.alpha_sequence.clone();
    let means = alphas
        .iter()
        .map(|a| Ok(theorem5_rhs(field, x, &normal, *a, config)? / (TAU * TAU * (1.0 - a.cos()))))
        .collect::<Result<Vec<f64>>>()?;
    let (value, gap) = neville_at_zero(&alphas.iter().map(|a| a * a).collect::<Vec<_>>(), &means);
    if gap > config.oracle_tol * value.abs().max(1.0) {
        return Err(Error::NoConvergence {
            difference: gap,
            tolerance: config.oracle_tol,
        });
    }
    Ok(DiscOracle {
        alphas,
        means,
        value,
        gap,
    })
}

/// Value at 0 of the interpolating polynomial through `(t_i, v_i)`, and the
/// difference between the two highest-order extrapolants.
fn neville_at_zero(t: &[f64], v: &[f64]) -> (f64, f64) {
    let n = t.len();
    let mut p = v.to_vec();
    let mut prev = p[n - 1];
    for k in 1..n {
        prev = p[n - 1];
        for i in (k..n).rev() {
            // p[i] interpolates t[i-k..=i]
            p[i] = (t[i - k] * p[i] - t[i] * p[i - 1]) / (t[i - k] - t[i]);
        }
    }
    let value = p[n - 1];
    (value, if n > 1 { (value - prev).abs() } else { f64::INFINITY })
}

/// `(d/dα ρ(tangent flag), ρ'_Φ + ρ'_y)` at `α = 0`, both by central
/// differences with `step`.
pub fn lemma_radial_check(
    field: &FlagDensityField,
    x: &Point3,
    normal: &Direction,
    phi: f64,
    step: f64,
) -> Result<(f64, f64)> {
    if !(step >= MIN_STEP) {
        return Err(Error::StepDegenerate { step, minimum: MIN_STEP });
    }
    let lhs = (field.flag_density_at(&tangent_flag(x, normal, phi, step))?
        - field.flag_density_at(&tangent_flag(x, normal, phi, -step))?)
        / (2.0 * step);
    let f = tangent_flag(x, normal, phi, 0.0);
    let (_, rate) = field.rho_and_rate(&f)?;
    let y = f.right().into_inner() * step;
    let rho_y = (field.flag_density_at(&f.translated(&y))? - field.flag_density_at(&f.translated(&-y))?) / (2.0 * step);
    Ok((lhs, rate + rho_y))
}

/// `(M''_αα, ∂²M/∂²_φ x − ∂M/∂n)` at `α = 0`: the second derivative of `M`
/// along the meridian of the tangent sphere against the straight-line second
/// difference in the plane minus the normal derivative.
pub fn curvature_correction_check(
    field: &FlagDensityField,
    x: &Point3,
    normal: &Direction,
    phi: f64,
    step: f64,
) -> Result<(f64, f64)> {
    if !(step >= MIN_STEP) {
        return Err(Error::StepDegenerate { step, minimum: MIN_STEP });
    }
    let m0 = field.bundle_mass(x)?;
    let h2 = step * step;
    let along = |a: f64| field.bundle_mass(&tangent_flag(x, normal, phi, a).x);
    let lhs = (along(step)? - 2.0 * m0 + along(-step)?) / h2;
    let r = tangent_flag(x, normal, phi, 0.0).right().into_inner() * step;
    let straight = (field.bundle_mass(&(x + r))? - 2.0 * m0 + field.bundle_mass(&(x - r))?) / h2;
    let n = normal.into_inner() * step;
    let dn = (field.bundle_mass(&(x + n))? - field.bundle_mass(&(x - n))?) / (2.0 * step);
    Ok((lhs, straight - dn))
}

/// `∮ (ρ'_Φ + ρ'_y) dφ` over the tangent flags at `α = 0`; it must vanish
/// for the disc expansion to have no first-order term.
pub fn first_order_defect(
    field: &FlagDensityField,
    x: &Point3,
    normal: &Direction,
    n_phi: usize,
    step: f64,
) -> Result<f64> {
    let dphi = TAU / n_phi as f64;
    let mut total = 0.0;
    for k in 0..n_phi {
        let f = tangent_flag(x, normal, k as f64 * dphi, 0.0);
        let (_, rate) = field.rho_and_rate(&f)?;
        let y = f.right().into_inner() * step;
        let rho_y =
            (field.flag_density_at(&f.translated(&y))? - field.flag_density_at(&f.translated(&-y))?) / (2.0 * step);
        total += rate + rho_y;
    }
    Ok(total * dphi)
}
