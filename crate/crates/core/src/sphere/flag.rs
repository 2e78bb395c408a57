use nalgebra::Vector3;

use super::direction::{rotate, tangent_angle, tangent_direction, Direction, Point3, SphereCoords};
use crate::{Error, Result};

/// A directed flag `(x, g, e)`: a point, a directed line through it and an
/// oriented plane containing the line.
///
/// Stored as the location, the line direction `Ω` and the positive plane
/// normal `ω`. The two angular parametrizations are derived on demand:
/// `(x, Ω, Φ)` where `Φ` is the angle of `ω` in the frame of `Ω`, and
/// `(x, ω, φ)` where `φ` is the angle of `Ω` in the frame of `ω`
/// (see [`frame_of_normal`](super::frame_of_normal)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flag {
    pub x: Point3,
    line: Direction,
    normal: Direction,
}

/// Axes attached to a flag. `x1` is the line, `x2` points into the right
/// half of the plane, `x3` is the positive normal; the triad is left-handed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlagFrame {
    pub x1: Direction,
    pub x2: Direction,
    pub x3: Direction,
}

impl Flag {
    /// Builds a flag from a line and a plane normal, re-orthogonalizing the
    /// line against the normal.
    pub fn new(x: Point3, line: Vector3<f64>, normal: Direction) -> Result<Self> {
        let w = normal.as_vector();
        let line = Direction::new(line - w * w.dot(&line))?;
        Ok(Flag { x, line, normal })
    }

    /// `(x, Ω, Φ)` representation.
    pub fn from_line(x: Point3, line: Direction, plane_angle: f64) -> Self {
        let normal = tangent_direction(&line, plane_angle);
        Flag { x, line, normal }
    }

    /// `(x, ω, φ)` representation.
    pub fn from_plane(x: Point3, normal: Direction, line_angle: f64) -> Self {
        let line = tangent_direction(&normal, line_angle);
        Flag { x, line, normal }
    }

    pub fn line(&self) -> &Direction {
        &self.line
    }

    pub fn normal(&self) -> &Direction {
        &self.normal
    }

    /// `Φ`: angle of the plane normal in the frame of the line.
    pub fn plane_angle(&self) -> f64 {
        tangent_angle(&self.line, self.normal.as_vector())
    }

    /// `φ`: angle of the line in the frame of the plane normal.
    pub fn line_angle(&self) -> f64 {
        tangent_angle(&self.normal, self.line.as_vector())
    }

    pub fn frame(&self) -> FlagFrame {
        FlagFrame {
            x1: self.line,
            x2: self.right(),
            x3: self.normal,
        }
    }

    /// The `x2` axis, `g × ω`.
    pub fn right(&self) -> Direction {
        Direction::new_unchecked(self.line.cross(&self.normal))
    }

    /// Positive rotation of the flag about its own line by `angle`.
    pub fn rotated_about_line(&self, angle: f64) -> Self {
        Flag {
            x: self.x,
            line: self.line,
            normal: self.normal.rotated_about(&self.line, angle),
        }
    }

    /// The same flag moved rigidly by `v`.
    pub fn translated(&self, v: &Vector3<f64>) -> Self {
        Flag {
            x: self.x + v,
            line: self.line,
            normal: self.normal,
        }
    }

    /// Rigid rotation of the whole flag (location and frame) by `angle`
    /// about the axis through `center` with direction `axis`.
    pub fn rotated_rigidly(&self, center: &Point3, axis: &Direction, angle: f64) -> Self {
        Flag {
            x: center + rotate(&(self.x - center), axis, angle),
            line: self.line.rotated_about(axis, angle),
            normal: self.normal.rotated_about(axis, angle),
        }
    }
}

/// Converts `(x, Ω, Φ)` to `(x, ω, φ)`.
pub fn flag_convert(x: Point3, line: Direction, plane_angle: f64) -> (Point3, Direction, f64) {
    let f = Flag::from_line(x, line, plane_angle);
    (f.x, f.normal, f.line_angle())
}

/// Converts `(x, ω, φ)` back to `(x, Ω, Φ)`.
pub fn flag_convert_inverse(x: Point3, normal: Direction, line_angle: f64) -> (Point3, Direction, f64) {
    let f = Flag::from_plane(x, normal, line_angle);
    (f.x, f.line, f.plane_angle())
}

/// Rates of change of `(φ, lat, lon)` of a flag `(x, ω, φ)` under positive
/// rotation about its line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationRates {
    pub line_angle: f64,
    pub lat: f64,
    pub lon: f64,
}

/// Derivatives with respect to `Φ` of the line angle and the spherical
/// coordinates of the normal:
///
/// ```text
/// φ'  = −tan(lat) · sin φ
/// lat' = −cos φ
/// lon' = sin φ / cos(lat)
/// ```
///
/// These hold for `φ` measured by [`frame_of_normal`](super::frame_of_normal) (from east towards
/// north) and right-handed rotation about the line. The `1 / cos(lat)`
/// factor is singular at the poles; `|cos(lat)| < 1e-8` is reported.
pub fn phi_rotation_derivatives(normal: SphereCoords, line_angle: f64) -> Result<RotationRates> {
    let cos_lat = normal.lat.cos();
    if cos_lat.abs() < 1e-8 {
        return Err(Error::Pole { cos_lat });
    }
    let (s, c) = line_angle.sin_cos();
    Ok(RotationRates {
        line_angle: -normal.lat.tan() * s,
        lat: -c,
        lon: s / cos_lat,
    })
}
