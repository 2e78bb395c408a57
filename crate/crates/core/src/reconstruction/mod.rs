//! Reconstruction of a plane density from its metric.
//!
//! [`FlagDensityField`] turns a metric (or, for testing, a known plane
//! density) into the flag density `ρ` with its derivatives.
//! [`reconstruct_plane`] evaluates the inversion formula over the bundle of
//! flags in a plane and [`disc_limit_oracle`] gives an independent estimate
//! from shrinking tangent discs.

mod disc;
mod field;
mod formula;

pub use disc::{
    curvature_correction_check, disc_limit_oracle, first_order_defect, lemma_radial_check, tangent_flag,
    theorem5_rhs, theorem5_sides, DiscOracle, Theorem5Sides,
};
pub use field::{FlagDensityField, FlagSource, Restriction, QUANTUM};
pub use formula::{
    bundle_mass_derivs, normal_mass_derivative, reconstruct_plane, reconstruct_plane_at, rho_spatial_derivs,
    BracketTerms, SpatialDerivs,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::{Error, Result};

/// Smallest admissible finite-difference step (synthetic fields have unit
/// length scale).
pub const MIN_STEP: f64 = 1e-6;

/// Discretization of the reconstruction and of the disc oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionConfig {
    /// Band limit of the per-point zonoid solutions.
    pub l_max: usize,
    /// Spatial finite-difference step.
    pub delta: f64,
    /// Trapezoid nodes over the bundle angle.
    pub n_phi: usize,
    /// Rotation of the bundle nodes away from the frame seam.
    pub phi_offset: f64,
    /// Overall factor of the bracket; `1/(2π)` by calibration.
    pub c_norm: f64,
    /// Adds the `2 ∂M/∂n` term missing from the uncorrected formula.
    pub include_normal_term: bool,
    /// Richardson extrapolation of spatial differences (`δ` and `δ/2`).
    pub richardson: bool,
    /// Disc radii for the oracle, strictly decreasing.
    pub alpha_sequence: Vec<f64>,
    /// Gauss–Legendre nodes across a disc radius.
    pub disc_rings: usize,
    /// Trapezoid nodes around a disc.
    pub disc_azimuths: usize,
    /// Finite-difference step inside the disc oracle.
    pub oracle_step: f64,
    /// Allowed gap between the last two extrapolants (relative).
    pub oracle_tol: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            l_max: 16,
            delta: 1e-2,
            n_phi: 64,
            phi_offset: 0.0,
            c_norm: 1.0 / TAU,
            include_normal_term: true,
            richardson: false,
            alpha_sequence: vec![0.2, 0.1, 0.05],
            disc_rings: 4,
            disc_azimuths: 16,
            oracle_step: 1e-3,
            oracle_tol: 1e-2,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.delta > 0.0) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if self.delta < MIN_STEP {
            return Err(Error::StepDegenerate {
                step: self.delta,
                minimum: MIN_STEP,
            });
        }
        if self.n_phi < 16 || self.n_phi % 2 == 1 {
            return bad(format!("n_phi must be even and at least 16, got {}", self.n_phi));
        }
        if self.alpha_sequence.is_empty() {
            return bad("alpha_sequence is empty".into());
        }
        for w in self.alpha_sequence.windows(2) {
            if !(w[1] < w[0]) {
                return bad("alpha_sequence must be strictly decreasing".into());
            }
        }
        if self.alpha_sequence.iter().any(|a| !(*a > 0.0 && *a < FRAC_PI_2)) {
            return bad("alpha_sequence entries must lie in (0, π/2)".into());
        }
        if self.disc_rings == 0 || self.disc_azimuths < 4 {
            return bad("disc quadrature too small".into());
        }
        if !(self.oracle_step >= MIN_STEP) {
            return Err(Error::StepDegenerate {
                step: self.oracle_step,
                minimum: MIN_STEP,
            });
        }
        if !self.c_norm.is_finite() {
            return bad("c_norm must be finite".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ReconstructionConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        let base = ReconstructionConfig::default();
        let mut c = base.clone();
        c.n_phi = 15;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.alpha_sequence = vec![0.1, 0.2];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.alpha_sequence = vec![1.6];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.delta = 1e-8;
        assert!(matches!(c.validate(), Err(Error::StepDegenerate { .. })));
    }
}
