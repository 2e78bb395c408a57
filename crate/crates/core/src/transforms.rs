//! Forward integral operators on planes and flags: the cosine transform,
//! the sine-square (flag) transform, bundle mass and measures of the planes
//! meeting a ball.

use nalgebra::Vector3;
use std::f64::consts::{PI, TAU};

use crate::sphere::{
    gauss_legendre_on, tangent_direction, Direction, Flag, Parity, Point3, PolarRule, SphereEval, SphericalFunction,
    SphericalQuadrature, SplitRule,
};
use crate::Result;

/// Below this value of `1 − ⟨ω, ξ⟩²` the flag kernel is set to zero.
pub const KERNEL_POLE_EPS: f64 = 1e-12;

/// A plane `{y : ⟨y, ξ⟩ = p}`.
///
/// `(p, ξ)` and `(−p, −ξ)` describe the same unoriented plane. The canonical
/// representative has `p > 0`; for `p = 0` the normal is taken in the upper
/// half-space (`z > 0`, then `y > 0`, then `x > 0` on ties).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneCoords {
    pub p: f64,
    pub normal: Direction,
}

impl PlaneCoords {
    pub fn new(p: f64, normal: Direction) -> Self {
        PlaneCoords { p, normal }
    }

    /// The plane through `x` with normal `normal`.
    pub fn through(x: &Point3, normal: Direction) -> Self {
        PlaneCoords {
            p: x.dot(&normal),
            normal,
        }
    }

    pub fn canonical(&self) -> Self {
        let flip = if self.p != 0.0 {
            self.p < 0.0
        } else {
            let n = self.normal.as_vector();
            if n.z != 0.0 {
                n.z < 0.0
            } else if n.y != 0.0 {
                n.y < 0.0
            } else {
                n.x < 0.0
            }
        };
        if flip {
            PlaneCoords {
                p: -self.p,
                normal: self.normal.neg(),
            }
        } else {
            *self
        }
    }

    /// Foot of the perpendicular from the origin.
    pub fn foot(&self) -> Point3 {
        self.normal.as_vector() * self.p
    }

    pub fn contains(&self, x: &Point3, tol: f64) -> bool {
        (x.dot(&self.normal) - self.p).abs() <= tol
    }
}

/// Density `h(p, ξ)` of a signed measure on planes with respect to
/// `dp dξ`. Implementations must be even: `h(p, ξ) = h(−p, −ξ)`.
pub trait DensityField: Send + Sync {
    fn density(&self, p: f64, normal: &Vector3<f64>) -> f64;

    /// `∂h/∂p`, when available in closed form.
    fn density_dp(&self, _p: f64, _normal: &Vector3<f64>) -> Option<f64> {
        None
    }

    /// `∂²h/∂p²`, when available in closed form.
    fn density_dpp(&self, _p: f64, _normal: &Vector3<f64>) -> Option<f64> {
        None
    }

    /// Whether `h` ignores `p`.
    fn translation_invariant(&self) -> bool {
        false
    }

    fn at(&self, plane: &PlaneCoords) -> f64 {
        self.density(plane.p, plane.normal.as_vector())
    }

    /// `h_x(ξ)`: density of the plane through `x` with normal `ξ`.
    fn restricted(&self, x: &Point3, normal: &Vector3<f64>) -> f64 {
        self.density(x.dot(normal), normal)
    }
}

/// `h ≡ c`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantDensity(pub f64);

impl DensityField for ConstantDensity {
    fn density(&self, _p: f64, _normal: &Vector3<f64>) -> f64 {
        self.0
    }

    fn density_dp(&self, _p: f64, _normal: &Vector3<f64>) -> Option<f64> {
        Some(0.0)
    }

    fn density_dpp(&self, _p: f64, _normal: &Vector3<f64>) -> Option<f64> {
        Some(0.0)
    }

    fn translation_invariant(&self) -> bool {
        true
    }
}

/// A metric `H(x, Ω)` on `R³ × S²`.
pub trait MetricField: Send + Sync {
    fn metric(&self, x: &Point3, dir: &Vector3<f64>) -> Result<f64>;

    /// `H(x, ·)` at every node of `quad`.
    fn sample_on(&self, x: &Point3, quad: &SphericalQuadrature) -> Result<Vec<f64>> {
        quad.nodes().iter().map(|d| self.metric(x, d.as_vector())).collect()
    }
}

/// The restriction `h_x` as an even function on the quadrature nodes.
pub fn restrict_density<D: DensityField + ?Sized>(
    h: &D,
    x: &Point3,
    quad: std::sync::Arc<SphericalQuadrature>,
) -> SphericalFunction {
    SphericalFunction::from_fn(quad, Parity::Even, |xi| h.restricted(x, xi))
}

/// `∫ |⟨Ω, ξ⟩| f(ξ) dξ` with a rule split along the great circle `⟨Ω, ξ⟩ = 0`.
pub fn cosine_transform_with<F: SphereEval + ?Sized>(f: &F, dir: &Direction, rule: &SplitRule) -> f64 {
    rule.nodes_about(dir)
        .iter()
        .map(|n| n.weight * n.t.abs() * f.eval(&n.xi))
        .sum()
}

/// Cosine transform of a band-limited spherical function; the split rule
/// is sized to integrate it exactly.
pub fn cosine_transform(h_x: &SphericalFunction, dir: &Direction) -> f64 {
    let rule = SplitRule::for_degree(h_x.l_max());
    if h_x.l_max() > rule.design_degree() {
        log::warn!(
            "band limit {} exceeds the split-rule design degree {}",
            h_x.l_max(),
            rule.design_degree()
        );
    }
    cosine_transform_with(h_x, dir, &rule)
}

/// `sin²α(ξ, f) = cos²(φ − ψ) = ⟨g, ξ⟩² / (1 − ⟨ω, ξ⟩²)`.
///
/// `ω` is the plane normal and `g` the line of the flag. The kernel is set to
/// zero where `1 − ⟨ω, ξ⟩² < 1e-12`; the limit there depends on the direction
/// of approach.
#[inline]
pub fn flag_kernel(xi: &Vector3<f64>, normal: &Vector3<f64>, line: &Vector3<f64>) -> f64 {
    let b = normal.dot(xi);
    let d = 1.0 - b * b;
    if d < KERNEL_POLE_EPS {
        return 0.0;
    }
    let a = line.dot(xi);
    (a * a / d).min(1.0)
}

/// `d/dt` of the flag kernel at `t = 0` as the flag rotates positively about
/// its line: with `a = ⟨g, ξ⟩`, `b = ⟨ω, ξ⟩`, `b' = ⟨g × ω, ξ⟩` this is
/// `2a²bb' / (1 − b²)²`.
#[inline]
pub fn flag_kernel_rotation_rate(xi: &Vector3<f64>, normal: &Vector3<f64>, line: &Vector3<f64>) -> f64 {
    let b = normal.dot(xi);
    let d = 1.0 - b * b;
    if d < KERNEL_POLE_EPS {
        return 0.0;
    }
    let a = line.dot(xi);
    let bp = line.cross(normal).dot(xi);
    2.0 * a * a * b * bp / (d * d)
}

/// `½ ∫ sin²α(ξ, f) f(ξ) dξ` on a polar rule about the plane normal.
pub fn sine_square_transform_with<F: SphereEval + ?Sized>(
    h_x: &F,
    normal: &Direction,
    line: &Direction,
    rule: &PolarRule,
) -> f64 {
    let (w, g) = (normal.as_vector(), line.as_vector());
    0.5 * rule
        .nodes_about(normal)
        .iter()
        .map(|n| n.weight * flag_kernel(&n.xi, w, g) * h_x.eval(&n.xi))
        .sum::<f64>()
}

/// Sine-square transform of a band-limited spherical function.
pub fn sine_square_transform(h_x: &SphericalFunction, normal: &Direction, line: &Direction) -> f64 {
    sine_square_transform_with(h_x, normal, line, &PolarRule::for_degree(h_x.l_max()))
}

/// Value and first rotational derivative of the sine-square transform,
/// differentiating the kernel under the integral sign.
///
/// The first-derivative kernel is `O(1/sin θ)` near the normal and remains
/// integrable. The second derivative is not obtained this way: its kernel
/// is `O(1/sin²θ)` and the singular point moves with the flag.
pub fn sine_square_with_rate<F: SphereEval + ?Sized>(
    h_x: &F,
    normal: &Direction,
    line: &Direction,
    rule: &PolarRule,
) -> (f64, f64) {
    let (w, g) = (normal.as_vector(), line.as_vector());
    let (mut v, mut d) = (0.0, 0.0);
    for n in rule.nodes_about(normal) {
        let hv = n.weight * h_x.eval(&n.xi);
        v += flag_kernel(&n.xi, w, g) * hv;
        d += flag_kernel_rotation_rate(&n.xi, w, g) * hv;
    }
    (0.5 * v, 0.5 * d)
}

/// `M = ½ ∫ h_x(ξ) dξ`.
pub fn bundle_mass(h_x: &SphericalFunction) -> f64 {
    0.5 * h_x.integral()
}

/// `(1/2π) ∫₀^{2π} sin²α(ξ, (x, Ω, Φ)) dΦ` by the periodic trapezoid rule on
/// `n` equally spaced plane angles. The exact value is `|⟨Ω, ξ⟩|`.
///
/// As a function of `Φ` the kernel is `k² / (1 − (1 − k²) cos²(Φ − Φ₀))`
/// with `k = ⟨Ω, ξ⟩`: its poles sit at distance `≈ |k|` from the real axis,
/// so the rule converges like `exp(−n|k|)` and degrades for `ξ` nearly
/// orthogonal to `Ω`.
pub fn kernel_phi_average(xi: &Direction, line: &Direction, n: usize) -> f64 {
    let g = line.as_vector();
    let dphi = TAU / n as f64;
    let sum: f64 = (0..n)
        .map(|k| {
            let w = tangent_direction(line, k as f64 * dphi);
            flag_kernel(xi, &w, g)
        })
        .sum();
    sum / n as f64
}

/// Both sides of the bundle-average identity
/// `(1/2π) ∫ ρ(x, Ω, Φ) dΦ = ½ ∫ |⟨Ω, ξ⟩| h_x(ξ) dξ`, the left side by the
/// trapezoid rule on `n_phi ≥ 8` plane angles.
pub fn flag_average_identity(h_x: &SphericalFunction, line: &Direction, n_phi: usize) -> (f64, f64) {
    assert!(n_phi >= 8, "need at least 8 plane angles");
    let rule = PolarRule::for_degree(h_x.l_max());
    let dphi = TAU / n_phi as f64;
    let lhs = (0..n_phi)
        .map(|k| {
            let f = Flag::from_line(Point3::zeros(), *line, k as f64 * dphi);
            sine_square_transform_with(h_x, f.normal(), f.line(), &rule)
        })
        .sum::<f64>()
        / n_phi as f64;
    let rhs = 0.5 * cosine_transform(h_x, line);
    (lhs, rhs)
}

/// Measure of the planes meeting the ball `B(center, radius)`:
/// `½ ∫_{S²} ∫_{⟨c,ξ⟩−R}^{⟨c,ξ⟩+R} h(p, ξ) dp dξ`, with `n_p`
/// Gauss–Legendre nodes per normal.
pub fn plane_measure_ball<D: DensityField + ?Sized>(
    h: &D,
    center: &Point3,
    radius: f64,
    quad: &SphericalQuadrature,
    n_p: usize,
) -> f64 {
    let (pt, pw) = gauss_legendre_on(n_p, -radius, radius);
    let total: f64 = quad
        .nodes()
        .iter()
        .zip(quad.weights())
        .map(|(xi, w)| {
            let c = center.dot(xi);
            let inner: f64 = pt.iter().zip(&pw).map(|(s, ws)| ws * h.density(c + s, xi)).sum();
            w * inner
        })
        .sum();
    0.5 * total
}

/// `(2π)⁻¹ ∫_{∂B} [k₁ρ(f₂) + k₂ρ(f₁)] ds` for the sphere `∂B(center, radius)`,
/// where `k₁ = k₂ = 1/R` and `f₁, f₂` are tangent flags (outer normal as
/// positive normal) whose lines run east and north.
pub fn flag_measure_ball<F: FnMut(&Flag) -> f64>(mut rho: F, center: &Point3, radius: f64, quad: &SphericalQuadrature) -> f64 {
    let total: f64 = quad
        .nodes()
        .iter()
        .zip(quad.weights())
        .map(|(n, w)| {
            let s = center + n.as_vector() * radius;
            let f1 = Flag::from_plane(s, *n, 0.0);
            let f2 = Flag::from_plane(s, *n, 0.5 * PI);
            w * radius * radius * (rho(&f1) + rho(&f2)) / radius
        })
        .sum();
    total / TAU
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{harmonics_for, sh_count, sh_index};
    use std::sync::Arc;

    fn quad(l: usize) -> Arc<SphericalQuadrature> {
        Arc::new(SphericalQuadrature::new(l))
    }

    #[test]
    fn canonical_plane() {
        let n = Direction::from_xyz(0.0, 0.0, -1.0).unwrap();
        let c = PlaneCoords::new(-2.0, n).canonical();
        assert_eq!(c.p, 2.0);
        assert_eq!(c.normal.z, 1.0);
        let c0 = PlaneCoords::new(0.0, n).canonical();
        assert_eq!(c0.normal.z, 1.0);
        let e = Direction::from_xyz(0.0, -1.0, 0.0).unwrap();
        assert_eq!(PlaneCoords::new(0.0, e).canonical().normal.y, 1.0);
    }

    #[test]
    fn restriction_of_constant_and_p_only_fields() {
        struct POnly;
        impl DensityField for POnly {
            fn density(&self, p: f64, _n: &Vector3<f64>) -> f64 {
                (-p * p).exp()
            }
        }
        let f = restrict_density(&ConstantDensity(3.0), &Point3::new(1.0, 2.0, 3.0), quad(4));
        assert!(f.values().iter().all(|v| *v == 3.0));
        let g = restrict_density(&POnly, &Point3::zeros(), quad(4));
        assert!(g.values().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn restriction_named_value() {
        struct Tilted;
        impl DensityField for Tilted {
            fn density(&self, p: f64, n: &Vector3<f64>) -> f64 {
                1.0 + (-p * p).exp() * n.z * n.z
            }
        }
        // plane through (1,0,0) with normal z has p = 0
        let v = Tilted.restricted(&Point3::new(1.0, 0.0, 0.0), &Vector3::z());
        assert_eq!(v, 2.0);
    }

    #[test]
    fn cosine_transform_of_constant() {
        let f = SphericalFunction::from_fn(quad(4), Parity::Even, |_| 1.0);
        for d in [Direction::z_axis(), Direction::from_xyz(0.3, 0.5, -0.2).unwrap()] {
            assert!((cosine_transform(&f, &d) - TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_transform_of_odd_function_vanishes() {
        let u = Direction::from_xyz(0.2, -0.4, 0.9).unwrap();
        let f = SphericalFunction::from_fn(quad(4), Parity::Odd, |xi| xi.dot(&u));
        let d = Direction::from_xyz(-0.7, 0.1, 0.3).unwrap();
        assert!(cosine_transform(&f, &d).abs() < 1e-12);
    }

    #[test]
    fn cosine_transform_of_y20_at_pole() {
        let l = 4;
        let mut c = vec![0.0; sh_count(l)];
        c[sh_index(2, 0)] = 1.0;
        let f = SphericalFunction::from_coeffs(quad(l), c.clone(), Parity::Even);
        let y20_pole = harmonics_for(l).eval_sum(&c, &Vector3::z());
        let v = cosine_transform(&f, &Direction::z_axis());
        assert!((v - 0.5 * PI * y20_pole).abs() < 1e-12);
    }

    #[test]
    fn kernel_named_values() {
        let w = Vector3::z();
        let g = Vector3::x();
        assert!((flag_kernel(&g, &w, &g) - 1.0).abs() < 1e-15);
        assert_eq!(flag_kernel(&Vector3::y(), &w, &g), 0.0);
        let xi = Vector3::new(1.0, 1.0, 1.0).normalize();
        assert!((flag_kernel(&xi, &w, &g) - 0.5).abs() < 1e-15);
        // explicit angle: ψ is the azimuth of the projection of ξ
        let psi = xi.y.atan2(xi.x);
        assert!((flag_kernel(&xi, &w, &g) - psi.cos().powi(2)).abs() < 1e-15);
        assert_eq!(flag_kernel(&w, &w, &g), 0.0);
    }

    #[test]
    fn sine_square_of_constant_is_pi() {
        let f = SphericalFunction::from_fn(quad(6), Parity::Even, |_| 1.0);
        let flag = Flag::from_plane(Point3::zeros(), Direction::from_xyz(0.1, -0.3, 0.9).unwrap(), 1.3);
        assert!((sine_square_transform(&f, flag.normal(), flag.line()) - PI).abs() < 1e-12);
    }

    #[test]
    fn bundle_mass_named_values() {
        let one = SphericalFunction::from_fn(quad(4), Parity::Even, |_| 1.0);
        assert!((bundle_mass(&one) - TAU).abs() < 1e-12);
        let zero = SphericalFunction::from_fn(quad(4), Parity::Even, |_| 0.0);
        assert_eq!(bundle_mass(&zero), 0.0);
        let mut c = vec![0.0; sh_count(4)];
        c[sh_index(2, 0)] = 1.0;
        let y20 = SphericalFunction::from_coeffs(quad(4), c, Parity::Even);
        assert!(bundle_mass(&y20).abs() < 1e-12);
    }

    #[test]
    fn kernel_average_when_line_orthogonal() {
        let line = Direction::x_axis();
        let xi = Direction::y_axis();
        assert!(kernel_phi_average(&xi, &line, 64).abs() < 1e-15);
    }

    #[test]
    fn flag_average_identity_for_constant() {
        let f = SphericalFunction::from_fn(quad(6), Parity::Even, |_| 1.0);
        let (l, r) = flag_average_identity(&f, &Direction::from_xyz(0.4, 0.4, -0.1).unwrap(), 16);
        assert!((l - PI).abs() < 1e-8 && (r - PI).abs() < 1e-8);
    }

    #[test]
    fn ball_measures_of_constant() {
        let q = SphericalQuadrature::new(8);
        let c = Point3::new(0.3, -1.0, 2.0);
        for r in [0.5, 1.0, 2.0] {
            let pm = plane_measure_ball(&ConstantDensity(1.0), &c, r, &q, 32);
            assert!((pm - 4.0 * PI * r).abs() < 1e-10);
            let fm = flag_measure_ball(|_| PI, &c, r, &q);
            assert!((fm - 4.0 * PI * r).abs() < 1e-10);
        }
        assert_eq!(plane_measure_ball(&ConstantDensity(0.0), &c, 1.0, &q, 32), 0.0);
        assert_eq!(flag_measure_ball(|_| 0.0, &c, 1.0, &q), 0.0);
    }
}
