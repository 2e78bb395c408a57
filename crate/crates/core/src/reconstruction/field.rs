use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use parking_lot::Mutex;

use crate::sphere::{
    harmonics_for, Flag, Point3, PolarRule, RealHarmonics, SphereEval, SphericalFunction, SphericalQuadrature,
};
use crate::transforms::{flag_kernel, flag_kernel_rotation_rate, DensityField, MetricField};
use crate::zonoid::zonoid_invert;
use crate::Result;

/// Grid spacing of the per-point cache keys. Points are snapped to this grid
/// before solving, so every stencil point is solved once.
pub const QUANTUM: f64 = 1.0 / (1u64 << 40) as f64;

/// Where the restricted plane density comes from.
#[derive(Clone)]
pub enum FlagSource {
    /// Per-point zonoid inversion of sampled metric values.
    Metric {
        metric: Arc<dyn MetricField>,
        l_max: usize,
        odd_tol: f64,
    },
    /// A known plane density, restricted directly. Used as an oracle.
    Density(Arc<dyn DensityField>),
}

/// The restriction `h_x` at one point.
#[derive(Clone)]
pub enum Restriction {
    Harmonic {
        solution: Arc<SphericalFunction>,
        tables: Arc<RealHarmonics>,
    },
    Exact {
        density: Arc<dyn DensityField>,
        x: Point3,
    },
}

impl SphereEval for Restriction {
    fn eval(&self, xi: &Vector3<f64>) -> f64 {
        match self {
            Restriction::Harmonic { solution, tables } => tables.eval_sum(solution.coeffs(), xi),
            Restriction::Exact { density, x } => density.restricted(x, xi),
        }
    }
}

/// Flag density `ρ(f) = ½ ∫ sin²α(ξ, f) h_x(ξ) dξ` of a plane measure given
/// through its metric, with a cache of per-point solutions.
pub struct FlagDensityField {
    source: FlagSource,
    quad: Arc<SphericalQuadrature>,
    rule: PolarRule,
    spectral_samples: usize,
    cache: Mutex<HashMap<[i64; 3], Arc<SphericalFunction>>>,
}

impl FlagDensityField {
    /// Inverts `metric` at band limit `l_max` on the standard grid of the
    /// same band limit.
    pub fn from_metric(metric: Arc<dyn MetricField>, l_max: usize, odd_tol: f64) -> Self {
        FlagDensityField {
            source: FlagSource::Metric { metric, l_max, odd_tol },
            quad: Arc::new(SphericalQuadrature::new(l_max)),
            rule: PolarRule::for_degree(l_max),
            // ρ along a rotation is a trigonometric polynomial with period π
            // and frequencies ≤ l_max
            spectral_samples: 2 * (l_max / 2) + 1,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Uses a known density; `resolution` sets the quadrature sizes.
    pub fn from_density(density: Arc<dyn DensityField>, resolution: usize) -> Self {
        FlagDensityField {
            source: FlagSource::Density(density),
            quad: Arc::new(SphericalQuadrature::new(resolution)),
            rule: PolarRule::new(resolution / 2 + 3, resolution + 6),
            spectral_samples: 2 * (resolution / 2) + 1,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn source(&self) -> &FlagSource {
        &self.source
    }

    pub fn quadrature(&self) -> &Arc<SphericalQuadrature> {
        &self.quad
    }

    /// Number of solved points held in the cache.
    pub fn cached_points(&self) -> usize {
        self.cache.lock().len()
    }

    fn key(x: &Point3) -> [i64; 3] {
        [
            (x.x / QUANTUM).round() as i64,
            (x.y / QUANTUM).round() as i64,
            (x.z / QUANTUM).round() as i64,
        ]
    }

    /// Per-point zonoid solution `h_x` (metric source only).
    pub fn solution_at(&self, x: &Point3) -> Result<Option<Arc<SphericalFunction>>> {
        let FlagSource::Metric { metric, l_max, odd_tol } = &self.source else {
            return Ok(None);
        };
        let key = Self::key(x);
        if let Some(s) = self.cache.lock().get(&key) {
            return Ok(Some(s.clone()));
        }
        let xq = Point3::new(key[0] as f64 * QUANTUM, key[1] as f64 * QUANTUM, key[2] as f64 * QUANTUM);
        let values = metric.sample_on(&xq, &self.quad)?;
        let h = SphericalFunction::from_values(self.quad.clone(), values, crate::sphere::Parity::Even);
        let sol = Arc::new(zonoid_invert(&h, *l_max, *odd_tol)?);
        sol.coeffs();
        // a concurrent solver of the same key computed the same value
        Ok(Some(self.cache.lock().entry(key).or_insert(sol).clone()))
    }

    pub fn restriction(&self, x: &Point3) -> Result<Restriction> {
        match &self.source {
            FlagSource::Metric { .. } => {
                let solution = self.solution_at(x)?.expect("metric source");
                let tables = harmonics_for(solution.l_max());
                Ok(Restriction::Harmonic { solution, tables })
            }
            FlagSource::Density(d) => Ok(Restriction::Exact {
                density: d.clone(),
                x: *x,
            }),
        }
    }

    /// `ρ(f)`.
    pub fn flag_density_at(&self, f: &Flag) -> Result<f64> {
        let r = self.restriction(&f.x)?;
        Ok(self.rho_of(&r, f))
    }

    fn rho_of(&self, r: &Restriction, f: &Flag) -> f64 {
        let (w, g) = (f.normal().as_vector(), f.line().as_vector());
        0.5 * self
            .rule
            .nodes_about(f.normal())
            .iter()
            .map(|n| n.weight * flag_kernel(&n.xi, w, g) * r.eval(&n.xi))
            .sum::<f64>()
    }

    /// `(ρ, ρ'_Φ)` with the rotation rate of the kernel integrated against
    /// `h_x`.
    pub fn rho_and_rate(&self, f: &Flag) -> Result<(f64, f64)> {
        let r = self.restriction(&f.x)?;
        Ok(self.rho_and_rate_of(&r, f))
    }

    fn rho_and_rate_of(&self, r: &Restriction, f: &Flag) -> (f64, f64) {
        let (w, g) = (f.normal().as_vector(), f.line().as_vector());
        let (mut v, mut d) = (0.0, 0.0);
        for n in self.rule.nodes_about(f.normal()) {
            let hv = n.weight * r.eval(&n.xi);
            v += flag_kernel(&n.xi, w, g) * hv;
            d += flag_kernel_rotation_rate(&n.xi, w, g) * hv;
        }
        (0.5 * v, 0.5 * d)
    }

    /// `(ρ'_Φ, ρ''_ΦΦ)`.
    ///
    /// The first derivative integrates the kernel's rotation rate. The second
    /// is taken spectrally: along the rotation, `ρ` is a trigonometric
    /// polynomial of period `π` and degree at most the band limit, so it is
    /// differentiated exactly from `N = 2⌊L/2⌋ + 1` equally spaced samples.
    /// (Differentiating the kernel twice under the integral produces a
    /// non-integrable singularity at the plane normal.)
    pub fn rho_rotational_derivs(&self, f: &Flag) -> Result<(f64, f64)> {
        let r = self.restriction(&f.x)?;
        let (_, d1) = self.rho_and_rate_of(&r, f);
        Ok((d1, self.rho_second_rotational(&r, f)))
    }

    fn rho_second_rotational(&self, r: &Restriction, f: &Flag) -> f64 {
        let n = self.spectral_samples;
        let j_max = (n - 1) / 2;
        let nf = n as f64;
        (0..n)
            .map(|k| {
                let t = k as f64 * PI / nf;
                let w: f64 = (1..=j_max)
                    .map(|j| {
                        let jf = j as f64;
                        jf * jf * (2.0 * jf * t).cos()
                    })
                    .sum();
                let rho = if k == 0 {
                    self.rho_of(r, f)
                } else {
                    self.rho_of(r, &f.rotated_about_line(t))
                };
                -8.0 / nf * w * rho
            })
            .sum()
    }

    /// `M(x) = ½ ∫ h_x(ξ) dξ`.
    pub fn bundle_mass(&self, x: &Point3) -> Result<f64> {
        match &self.source {
            FlagSource::Metric { .. } => Ok(0.5 * self.solution_at(x)?.expect("metric source").integral()),
            FlagSource::Density(d) => Ok(0.5 * self.quad.integrate_fn(|xi| d.restricted(x, xi))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::Direction;
    use crate::transforms::ConstantDensity;

    struct ConstMetric(f64);
    impl MetricField for ConstMetric {
        fn metric(&self, _x: &Point3, _d: &Vector3<f64>) -> Result<f64> {
            Ok(self.0)
        }
    }

    #[test]
    fn constant_metric_gives_pi() {
        let f = FlagDensityField::from_metric(Arc::new(ConstMetric(std::f64::consts::TAU)), 8, 1e-6);
        let flag = Flag::from_plane(Point3::new(0.2, 1.0, -3.0), Direction::from_xyz(0.3, -0.4, 0.5).unwrap(), 0.7);
        assert!((f.flag_density_at(&flag).unwrap() - PI).abs() < 1e-12);
        let (d1, d2) = f.rho_rotational_derivs(&flag).unwrap();
        assert!(d1.abs() < 1e-12 && d2.abs() < 1e-12);
        assert!((f.bundle_mass(&flag.x).unwrap() - std::f64::consts::TAU).abs() < 1e-12);
    }

    #[test]
    fn cache_is_keyed_by_snapped_point() {
        let f = FlagDensityField::from_metric(Arc::new(ConstMetric(1.0)), 4, 1e-6);
        let x = Point3::new(0.1, 0.2, 0.3);
        f.solution_at(&x).unwrap();
        f.solution_at(&(x + Vector3::repeat(QUANTUM * 0.1))).unwrap();
        assert_eq!(f.cached_points(), 1);
        f.solution_at(&(x + Vector3::repeat(1e-9))).unwrap();
        assert_eq!(f.cached_points(), 2);
    }

    #[test]
    fn exact_source_constant() {
        let f = FlagDensityField::from_density(Arc::new(ConstantDensity(2.0)), 12);
        let flag = Flag::from_plane(Point3::zeros(), Direction::z_axis(), 0.0);
        assert!((f.flag_density_at(&flag).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((f.bundle_mass(&flag.x).unwrap() - 4.0 * PI).abs() < 1e-12);
    }
}
