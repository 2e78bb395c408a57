//! Spherical geometry substrate: directions, flags, quadrature rules and
//! real spherical harmonics.

mod direction;
mod flag;
mod harmonics;
mod quadrature;

pub use direction::{
    frame_of_normal, rotate, tangent_angle, tangent_direction, wrap_angle, Direction, Point3, SphereCoords,
};
pub use flag::{flag_convert, flag_convert_inverse, phi_rotation_derivatives, Flag, FlagFrame, RotationRates};
pub use harmonics::{
    harmonics_for, odd_energy_fraction, sh_analyze, sh_count, sh_degree, sh_index, sh_synthesize, Parity,
    RealHarmonics, SphereEval, SphericalFunction,
};
pub use quadrature::{
    gauss_legendre, gauss_legendre_on, legendre, legendre_with_derivative, PolarNode, PolarRule, SphericalQuadrature,
    SplitRule,
};
