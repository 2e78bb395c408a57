use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

use crate::sphere::{Direction, Point3};
use crate::transforms::PlaneCoords;

/// Deterministic generator for a named stream under `seed`.
pub fn rng_for(seed: u64, stream: &str) -> ChaCha8Rng {
    let mut s = seed ^ 0x9e37_79b9_7f4a_7c15;
    for b in stream.bytes() {
        s = s.rotate_left(5) ^ b as u64;
        s = s.wrapping_mul(0x1000_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(s)
}

/// Uniform direction on S².
pub fn random_direction<R: Rng>(rng: &mut R) -> Direction {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let lon: f64 = rng.gen_range(0.0..TAU);
    let s = (1.0 - z * z).sqrt();
    Direction::from_xyz(s * lon.cos(), s * lon.sin(), z).expect("unit vector")
}

/// Uniform point in the ball of the given radius about the origin.
pub fn random_point<R: Rng>(rng: &mut R, radius: f64) -> Point3 {
    let r = radius * rng.gen_range(0.0f64..1.0).cbrt();
    random_direction(rng).into_inner() * r
}

/// Plane with uniform normal and `p` uniform in `[−p_max, p_max]`.
pub fn random_plane<R: Rng>(rng: &mut R, p_max: f64) -> PlaneCoords {
    let n = random_direction(rng);
    PlaneCoords::new(rng.gen_range(-p_max..p_max), n)
}

pub fn random_angle<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(0.0..TAU)
}

/// Signed difference of two angles, in `[−π, π)`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    (a - b + PI).rem_euclid(TAU) - PI
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = rng_for(7, "x").gen();
        let b: f64 = rng_for(7, "x").gen();
        let c: f64 = rng_for(7, "y").gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn simpson_on_polynomial_and_exp() {
        let v = adaptive_simpson(&|t: f64| t * t * t - t, 0.0, 2.0, 1e-14);
        assert!((v - 2.0).abs() < 1e-12);
        let e = adaptive_simpson(&f64::exp, 0.0, 1.0, 1e-14);
        assert!((e - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn angle_difference_wraps() {
        assert!((angle_diff(0.1, TAU - 0.1) - 0.2).abs() < 1e-15);
        assert!((angle_diff(TAU - 0.1, 0.1) + 0.2).abs() < 1e-15);
    }
}
