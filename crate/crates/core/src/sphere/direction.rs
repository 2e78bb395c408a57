use nalgebra::Vector3;
use std::ops::Deref;

use crate::{Error, Result};

/// A point of R³ (length units).
pub type Point3 = Vector3<f64>;

/// Axis alignment beyond which [`frame_of_normal`] switches to its fallback.
const FRAME_FALLBACK: f64 = 1.0 - 1e-6;

/// A unit vector on S².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vector3<f64>);

impl Direction {
    /// Normalizes `v`. Fails for (numerically) zero vectors.
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(Error::DegenerateVector(n));
        }
        Ok(Direction(v / n))
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Vector3::new(x, y, z))
    }

    /// Wraps a vector the caller guarantees to be unit length.
    pub(crate) fn new_unchecked(v: Vector3<f64>) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < 1e-9, "not a unit vector: {v:?}");
        Direction(v)
    }

    pub fn x_axis() -> Self {
        Direction(Vector3::x())
    }

    pub fn y_axis() -> Self {
        Direction(Vector3::y())
    }

    pub fn z_axis() -> Self {
        Direction(Vector3::z())
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Vector3<f64> {
        self.0
    }

    pub fn neg(&self) -> Self {
        Direction(-self.0)
    }

    /// Right-handed rotation of `self` about `axis` by `angle` (Rodrigues).
    pub fn rotated_about(&self, axis: &Direction, angle: f64) -> Self {
        Direction::new_unchecked(rotate(&self.0, axis, angle))
    }
}

impl Deref for Direction {
    type Target = Vector3<f64>;

    fn deref(&self) -> &Vector3<f64> {
        &self.0
    }
}

/// Right-handed rotation of `v` about the unit `axis` by `angle`.
pub fn rotate(v: &Vector3<f64>, axis: &Direction, angle: f64) -> Vector3<f64> {
    let (s, c) = angle.sin_cos();
    let k = axis.as_vector();
    v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c))
}

/// Latitude/longitude of a direction, in radians.
///
/// `lat ∈ [−π/2, π/2]`, `lon ∈ [−π, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereCoords {
    pub lat: f64,
    pub lon: f64,
}

impl SphereCoords {
    pub fn new(lat: f64, lon: f64) -> Self {
        SphereCoords { lat, lon }
    }

    pub fn of(d: &Direction) -> Self {
        let lat = d.z.clamp(-1.0, 1.0).asin();
        let mut lon = d.y.atan2(d.x);
        if lon >= std::f64::consts::PI {
            lon -= 2.0 * std::f64::consts::PI;
        }
        SphereCoords { lat, lon }
    }

    pub fn direction(&self) -> Direction {
        let (sl, cl) = self.lat.sin_cos();
        let (so, co) = self.lon.sin_cos();
        Direction::new_unchecked(Vector3::new(cl * co, cl * so, sl))
    }
}

/// Orthonormal pair `(e1, e2)` spanning the plane orthogonal to `normal`.
///
/// `e1` is the local east direction `ẑ × ω / |ẑ × ω|` and `e2 = ω × e1` is
/// local north, so `(e1, e2, ω)` is always right-handed (determinant +1).
/// Within `1e-6` of the poles the east direction is replaced by the
/// projection of the x-axis onto the tangent plane. Angles `φ` in the plane
/// of a flag are measured from `e1` towards `e2`.
pub fn frame_of_normal(normal: &Direction) -> (Direction, Direction) {
    let w = normal.as_vector();
    let e1 = if w.z.abs() > FRAME_FALLBACK {
        let x = Vector3::x();
        (x - w * w.dot(&x)).normalize()
    } else {
        Vector3::z().cross(w).normalize()
    };
    let e2 = w.cross(&e1);
    (Direction::new_unchecked(e1), Direction::new_unchecked(e2))
}

/// Unit vector at angle `phi` in the tangent plane of `normal`.
pub fn tangent_direction(normal: &Direction, phi: f64) -> Direction {
    let (e1, e2) = frame_of_normal(normal);
    let (s, c) = phi.sin_cos();
    Direction::new_unchecked(e1.as_vector() * c + e2.as_vector() * s)
}

/// Angle of the tangent vector `v` in the frame of `normal`, in `[0, 2π)`.
pub fn tangent_angle(normal: &Direction, v: &Vector3<f64>) -> f64 {
    let (e1, e2) = frame_of_normal(normal);
    wrap_angle(v.dot(&e2).atan2(v.dot(&e1)))
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = a.rem_euclid(tau);
    if r >= tau {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormal(e1: &Direction, e2: &Direction, w: &Direction) -> f64 {
        [
            e1.dot(w).abs(),
            e2.dot(w).abs(),
            e1.dot(e2).abs(),
            (e1.norm() - 1.0).abs(),
            (e2.norm() - 1.0).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    #[test]
    fn frame_at_north_pole_is_xy() {
        let (e1, e2) = frame_of_normal(&Direction::z_axis());
        assert!((e1.into_inner() - Vector3::x()).norm() < 1e-15);
        assert!((e2.into_inner() - Vector3::y()).norm() < 1e-15);
    }

    #[test]
    fn frame_at_south_pole_is_right_handed() {
        let w = Direction::z_axis().neg();
        let (e1, e2) = frame_of_normal(&w);
        assert!(orthonormal(&e1, &e2, &w) < 1e-15);
        assert!((e1.cross(&e2).dot(&w) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frame_on_diagonal() {
        let w = Direction::from_xyz(1.0, 1.0, 1.0).unwrap();
        let (e1, e2) = frame_of_normal(&w);
        assert!(orthonormal(&e1, &e2, &w) < 1e-12);
        assert!((e1.cross(&e2).dot(&w) - 1.0).abs() < 1e-12);
        // east direction has no vertical component
        assert!(e1.z.abs() < 1e-15);
    }

    #[test]
    fn frame_is_deterministic_near_fallback() {
        for z in [1.0f64 - 2e-6, 1.0 - 5e-7, -(1.0 - 5e-7)] {
            let w = Direction::from_xyz((1.0 - z * z).sqrt(), 0.0, z).unwrap();
            let (a1, a2) = frame_of_normal(&w);
            let (b1, b2) = frame_of_normal(&w);
            assert_eq!(a1, b1);
            assert_eq!(a2, b2);
            assert!(orthonormal(&a1, &a2, &w) < 1e-12);
            assert!((a1.cross(&a2).dot(&w) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coords_round_trip() {
        for &(lat, lon) in &[(0.3, -2.0), (-1.2, 0.5), (0.0, 3.0), (1.5, -3.1)] {
            let c = SphereCoords::new(lat, lon);
            let back = SphereCoords::of(&c.direction());
            assert!((back.lat - lat).abs() < 1e-12);
            assert!((back.lon - lon).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert!(Direction::from_xyz(0.0, 0.0, 0.0).is_err());
    }
}
