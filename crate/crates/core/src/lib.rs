//! Numerical integral geometry on the space of planes in R³.
//!
//! The crate reconstructs the density `h` of a (signed) Crofton measure on
//! planes from a projective Finsler metric `H(x, Ω)`. The pipeline is:
//!
//! 1. at every point `x`, solve the zonoid (cosine transform) equation for
//!    `H(x, ·)` by dividing spherical-harmonic coefficients by the
//!    Funk–Hecke multipliers of `|⟨Ω, ξ⟩|` ([`zonoid`]);
//! 2. push the per-point solution through the sine-square transform to get
//!    the flag density `ρ(x, ω, φ)` ([`reconstruction::FlagDensityField`]);
//! 3. combine the bundle mass `M(x)` with rotational and spatial derivatives
//!    of `ρ` over the bundle of flags in the target plane
//!    ([`reconstruction::reconstruct_plane`]).
//!
//! An independent estimate comes from the mean conditional measure of
//! shrinking spherical discs tangent to the plane
//! ([`reconstruction::disc_limit_oracle`]).
//!
//! # Conventions
//!
//! * Planes are `(p, ξ)` with signed support distance `p` and unit normal
//!   `ξ`. Integrals over planes run over all `p ∈ ℝ` and all `ξ ∈ S²` and are
//!   halved, so every unoriented plane is counted once.
//! * Spherical harmonics are real and orthonormal, `∫ Y_{n,m}² dξ = 1`,
//!   without the Condon–Shortley phase.
//! * A flag `(x, g, e)` carries the left-handed frame `x1 = g`,
//!   `x2 = g × ω`, `x3 = ω`, where `ω` is the positive normal of `e`.
//!   Positive rotation about `g` is the right-handed rotation, which turns
//!   `ω` towards `x2`.

pub mod harness;
pub mod reconstruction;
pub mod sphere;
pub mod transforms;
pub mod zonoid;

pub use sphere::{Direction, Flag, Point3};
pub use transforms::{DensityField, MetricField, PlaneCoords};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cannot normalize a vector of length {0:e}")]
    DegenerateVector(f64),

    #[error("rotation-rate formula has a pole: |cos(latitude)| = {cos_lat:e} < 1e-8")]
    Pole { cos_lat: f64 },

    #[error("odd part of the input carries {relative_energy:e} of its energy (tolerance {tolerance:e})")]
    OddPartTooLarge { relative_energy: f64, tolerance: f64 },

    #[error("multipliers underflow above degree {effective}; requested band limit {requested}")]
    DegreeCapExceeded { requested: usize, effective: usize },

    #[error("finite-difference step {step:e} is below the admissible minimum {minimum:e}")]
    StepDegenerate { step: f64, minimum: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("extrapolation did not converge: successive estimates differ by {difference:e} (tolerance {tolerance:e})")]
    NoConvergence { difference: f64, tolerance: f64 },

    #[error("metric samples unavailable: {0}")]
    MissingSamples(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}
