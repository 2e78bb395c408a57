//! Real orthonormal spherical harmonics.
//!
//! `Y_{n,0} = N_{n,0} P_n(z)`, `Y_{n,m} = √2 N_{n,m} P_n^m(z) cos mλ` and
//! `Y_{n,−m} = √2 N_{n,m} P_n^m(z) sin mλ` for `m > 0`, with
//! `∫ Y_{n,m}² dξ = 1` and no Condon–Shortley phase. Coefficients are stored
//! flat at index `n² + n + m`.
//!
//! Analysis on a [`SphericalQuadrature`] is exact for functions of degree
//! `≤ l_max`. Content above the band limit aliases into the computed
//! coefficients; callers own the band limit.

use nalgebra::Vector3;
use std::sync::{Arc, OnceLock};

use super::quadrature::SphericalQuadrature;

/// Flat index of `(n, m)`, `|m| ≤ n`.
pub fn sh_index(n: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= n);
    ((n * n + n) as i64 + m) as usize
}

/// Number of coefficients up to degree `l_max`.
pub fn sh_count(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// Degree of a flat index.
pub fn sh_degree(index: usize) -> usize {
    (index as f64).sqrt().floor() as usize
}

/// Recurrence constants for the scaled associated Legendre functions
/// `Q_{n,m}(z) = N_{n,m} P_n^m(z) / (1 − z²)^{m/2}`.
#[derive(Debug, Clone)]
pub struct RealHarmonics {
    l_max: usize,
    diag: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

fn tri(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

impl RealHarmonics {
    pub fn new(l_max: usize) -> Self {
        let mut diag = vec![0.0; l_max + 1];
        diag[0] = 1.0 / (4.0 * std::f64::consts::PI).sqrt();
        for m in 1..=l_max {
            let mf = m as f64;
            diag[m] = diag[m - 1] * ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt();
        }
        let size = tri(l_max, l_max) + 1;
        let mut a = vec![0.0; size];
        let mut b = vec![0.0; size];
        for m in 0..=l_max {
            for n in (m + 1)..=l_max {
                let (nf, mf) = (n as f64, m as f64);
                a[tri(n, m)] = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
                b[tri(n, m)] = (((nf - 1.0) * (nf - 1.0) - mf * mf) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0)).sqrt();
            }
        }
        RealHarmonics { l_max, diag, a, b }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// Fills `col[n − m]` with `Q_{n,m}(z)` for `n = m..=l_max`.
    #[inline]
    fn column(&self, m: usize, z: f64, col: &mut [f64]) {
        let l = self.l_max;
        col[0] = self.diag[m];
        if m < l {
            col[1] = (2.0 * m as f64 + 3.0).sqrt() * z * col[0];
        }
        for n in (m + 2)..=l {
            let k = tri(n, m);
            col[n - m] = self.a[k] * (z * col[n - m - 1] - self.b[k] * col[n - m - 2]);
        }
    }

    /// All basis values at the unit vector `v`, written to `out`
    /// (length [`sh_count`]`(l_max)`).
    pub fn eval_all(&self, v: &Vector3<f64>, out: &mut [f64]) {
        let l = self.l_max;
        let mut col = vec![0.0; l + 1];
        let (mut re, mut im) = (1.0, 0.0);
        for m in 0..=l {
            self.column(m, v.z, &mut col);
            if m == 0 {
                for n in 0..=l {
                    out[sh_index(n, 0)] = col[n];
                }
            } else {
                let (c, s) = (std::f64::consts::SQRT_2 * re, std::f64::consts::SQRT_2 * im);
                for n in m..=l {
                    out[sh_index(n, m as i64)] = col[n - m] * c;
                    out[sh_index(n, -(m as i64))] = col[n - m] * s;
                }
            }
            // (x + iy)^(m+1)
            let nre = re * v.x - im * v.y;
            im = re * v.y + im * v.x;
            re = nre;
        }
    }

    /// `Σ c_{n,m} Y_{n,m}(v)` over the stored band limit.
    pub fn eval_sum(&self, coeffs: &[f64], v: &Vector3<f64>) -> f64 {
        let mut col = [0.0; 64];
        let mut heap;
        let col: &mut [f64] = if self.l_max < 64 {
            &mut col[..=self.l_max]
        } else {
            heap = vec![0.0; self.l_max + 1];
            &mut heap
        };
        self.eval_sum_with(coeffs, v, col)
    }

    fn eval_sum_with(&self, coeffs: &[f64], v: &Vector3<f64>, col: &mut [f64]) -> f64 {
        let l = self.l_max.min(sh_degree(coeffs.len().max(1) - 1));
        let (mut re, mut im) = (1.0, 0.0);
        let mut total = 0.0;
        for m in 0..=l {
            self.column(m, v.z, col);
            if m == 0 {
                for n in 0..=l {
                    total += coeffs[sh_index(n, 0)] * col[n];
                }
            } else {
                let (mut sc, mut ss) = (0.0, 0.0);
                for n in m..=l {
                    sc += coeffs[sh_index(n, m as i64)] * col[n - m];
                    ss += coeffs[sh_index(n, -(m as i64))] * col[n - m];
                }
                total += std::f64::consts::SQRT_2 * (sc * re + ss * im);
            }
            let nre = re * v.x - im * v.y;
            im = re * v.y + im * v.x;
            re = nre;
        }
        total
    }
}

/// Anything that can be evaluated at a unit vector.
pub trait SphereEval: Send + Sync {
    fn eval(&self, xi: &Vector3<f64>) -> f64;
}

impl<F: Fn(&Vector3<f64>) -> f64 + Send + Sync> SphereEval for F {
    fn eval(&self, xi: &Vector3<f64>) -> f64 {
        self(xi)
    }
}

/// Declared symmetry of a spherical function under `ξ ↦ −ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    General,
}

/// A function on S² sampled at the nodes of a quadrature, with lazily
/// computed harmonic coefficients.
#[derive(Debug, Clone)]
pub struct SphericalFunction {
    quad: Arc<SphericalQuadrature>,
    values: Vec<f64>,
    coeffs: OnceLock<Vec<f64>>,
    parity: Parity,
}

impl SphericalFunction {
    pub fn from_values(quad: Arc<SphericalQuadrature>, values: Vec<f64>, parity: Parity) -> Self {
        assert_eq!(values.len(), quad.len(), "one value per quadrature node");
        SphericalFunction {
            quad,
            values,
            coeffs: OnceLock::new(),
            parity,
        }
    }

    pub fn from_fn<F: Fn(&Vector3<f64>) -> f64>(quad: Arc<SphericalQuadrature>, parity: Parity, f: F) -> Self {
        let values = quad.nodes().iter().map(|d| f(d.as_vector())).collect();
        Self::from_values(quad, values, parity)
    }

    /// Synthesizes node values from coefficients up to the grid's band limit.
    pub fn from_coeffs(quad: Arc<SphericalQuadrature>, coeffs: Vec<f64>, parity: Parity) -> Self {
        assert_eq!(coeffs.len(), sh_count(quad.l_max()));
        let values = sh_synthesize(&quad, &coeffs);
        let f = SphericalFunction {
            quad,
            values,
            coeffs: OnceLock::new(),
            parity,
        };
        let _ = f.coeffs.set(coeffs);
        f
    }

    pub fn quadrature(&self) -> &Arc<SphericalQuadrature> {
        &self.quad
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn l_max(&self) -> usize {
        self.quad.l_max()
    }

    /// Harmonic coefficients up to the grid's band limit.
    pub fn coeffs(&self) -> &[f64] {
        self.coeffs.get_or_init(|| analyze_values(&self.quad, &self.values))
    }

    pub fn integral(&self) -> f64 {
        self.quad.integrate(&self.values)
    }

    /// Share of coefficient energy in odd degrees.
    pub fn odd_energy_fraction(&self) -> f64 {
        odd_energy_fraction(self.coeffs())
    }

    pub fn scaled(&self, a: f64) -> Self {
        let f = Self::from_values(self.quad.clone(), self.values.iter().map(|v| a * v).collect(), self.parity);
        if let Some(c) = self.coeffs.get() {
            let _ = f.coeffs.set(c.iter().map(|v| a * v).collect());
        }
        f
    }
}

impl SphereEval for SphericalFunction {
    fn eval(&self, xi: &Vector3<f64>) -> f64 {
        harmonics_for(self.l_max()).eval_sum(self.coeffs(), xi)
    }
}

/// Shared recurrence tables per band limit.
pub fn harmonics_for(l_max: usize) -> Arc<RealHarmonics> {
    use parking_lot::Mutex;
    use std::collections::HashMap;
    static TABLES: OnceLock<Mutex<HashMap<usize, Arc<RealHarmonics>>>> = OnceLock::new();
    let map = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    map.lock().entry(l_max).or_insert_with(|| Arc::new(RealHarmonics::new(l_max))).clone()
}

/// Share of the total squared coefficient mass sitting in odd degrees.
pub fn odd_energy_fraction(coeffs: &[f64]) -> f64 {
    let mut odd = 0.0;
    let mut total = 0.0;
    for (i, c) in coeffs.iter().enumerate() {
        let e = c * c;
        total += e;
        if sh_degree(i) % 2 == 1 {
            odd += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        odd / total
    }
}

/// Harmonic coefficients of a sampled function.
pub fn sh_analyze(f: &SphericalFunction) -> Vec<f64> {
    f.coeffs().to_vec()
}

fn analyze_values(quad: &SphericalQuadrature, values: &[f64]) -> Vec<f64> {
    let l = quad.l_max();
    let tables = harmonics_for(l);
    let n_lon = quad.n_lon();
    let mut coeffs = vec![0.0; sh_count(l)];
    let trig = lon_table(l, n_lon);
    let dlon = std::f64::consts::TAU / n_lon as f64;
    let mut col = vec![0.0; l + 1];
    for (j, (&z, &wz)) in quad.ring_z().iter().zip(quad.ring_weights()).enumerate() {
        let ring = &values[j * n_lon..(j + 1) * n_lon];
        let s = (1.0 - z * z).sqrt();
        let mut sm = 1.0;
        for m in 0..=l {
            let (mut a, mut b) = (0.0, 0.0);
            for (k, v) in ring.iter().enumerate() {
                let (c, sn) = trig[m * n_lon + k];
                a += v * c;
                b += v * sn;
            }
            a *= wz * dlon * sm;
            b *= wz * dlon * sm;
            tables.column(m, z, &mut col);
            if m == 0 {
                for n in 0..=l {
                    coeffs[sh_index(n, 0)] += a * col[n];
                }
            } else {
                let r2 = std::f64::consts::SQRT_2;
                for n in m..=l {
                    coeffs[sh_index(n, m as i64)] += r2 * a * col[n - m];
                    coeffs[sh_index(n, -(m as i64))] += r2 * b * col[n - m];
                }
            }
            sm *= s;
        }
    }
    coeffs
}

/// Node values on `quad` of the expansion with the given coefficients.
pub fn sh_synthesize(quad: &SphericalQuadrature, coeffs: &[f64]) -> Vec<f64> {
    let l = quad.l_max().min(sh_degree(coeffs.len() - 1));
    let tables = harmonics_for(quad.l_max());
    let n_lon = quad.n_lon();
    let trig = lon_table(l, n_lon);
    let mut values = vec![0.0; quad.len()];
    let mut col = vec![0.0; quad.l_max() + 1];
    for (j, &z) in quad.ring_z().iter().enumerate() {
        let s = (1.0 - z * z).sqrt();
        let ring = &mut values[j * n_lon..(j + 1) * n_lon];
        let mut sm = 1.0;
        for m in 0..=l {
            tables.column(m, z, &mut col);
            let (mut a, mut b) = (0.0, 0.0);
            if m == 0 {
                for n in 0..=l {
                    a += coeffs[sh_index(n, 0)] * col[n];
                }
            } else {
                for n in m..=l {
                    a += coeffs[sh_index(n, m as i64)] * col[n - m];
                    b += coeffs[sh_index(n, -(m as i64))] * col[n - m];
                }
                a *= std::f64::consts::SQRT_2;
                b *= std::f64::consts::SQRT_2;
            }
            a *= sm;
            b *= sm;
            for (k, v) in ring.iter_mut().enumerate() {
                let (c, sn) = trig[m * n_lon + k];
                *v += a * c + b * sn;
            }
            sm *= s;
        }
    }
    values
}

fn lon_table(l: usize, n_lon: usize) -> Vec<(f64, f64)> {
    let dlon = std::f64::consts::TAU / n_lon as f64;
    let mut t = Vec::with_capacity((l + 1) * n_lon);
    for m in 0..=l {
        for k in 0..n_lon {
            let a = ((m * k) % n_lon) as f64 * dlon;
            t.push((a.cos(), a.sin()));
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::direction::Direction;
    use std::f64::consts::PI;

    fn quad(l: usize) -> Arc<SphericalQuadrature> {
        Arc::new(SphericalQuadrature::new(l))
    }

    #[test]
    fn low_degree_closed_forms() {
        let h = RealHarmonics::new(2);
        let v = Direction::from_xyz(0.3, -0.4, 0.5).unwrap();
        let mut out = vec![0.0; 9];
        h.eval_all(&v, &mut out);
        let (x, y, z) = (v.x, v.y, v.z);
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        assert!((out[0] - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert!((out[sh_index(1, 0)] - c1 * z).abs() < 1e-15);
        assert!((out[sh_index(1, 1)] - c1 * x).abs() < 1e-15);
        assert!((out[sh_index(1, -1)] - c1 * y).abs() < 1e-15);
        let c2 = (15.0 / (4.0 * PI)).sqrt();
        assert!((out[sh_index(2, 1)] - c2 * x * z).abs() < 1e-14);
        assert!((out[sh_index(2, -2)] - c2 * x * y).abs() < 1e-14);
        let y20 = (5.0 / (16.0 * PI)).sqrt() * (3.0 * z * z - 1.0);
        assert!((out[sh_index(2, 0)] - y20).abs() < 1e-14);
    }

    #[test]
    fn quadrature_orthonormality() {
        let l = 10;
        let q = quad(l);
        let h = RealHarmonics::new(l);
        let n = sh_count(l);
        let mut gram = vec![0.0; n * n];
        let mut buf = vec![0.0; n];
        for (d, w) in q.nodes().iter().zip(q.weights()) {
            h.eval_all(d, &mut buf);
            for i in 0..n {
                for j in 0..n {
                    gram[i * n + j] += w * buf[i] * buf[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i * n + j] - expect).abs() < 1e-10, "({i},{j}) = {}", gram[i * n + j]);
            }
        }
    }

    #[test]
    fn analyze_single_harmonic() {
        let q = quad(6);
        let h = RealHarmonics::new(6);
        let f = SphericalFunction::from_fn(q, Parity::General, |v| {
            let mut out = vec![0.0; 49];
            h.eval_all(v, &mut out);
            out[sh_index(2, 1)]
        });
        for (i, c) in f.coeffs().iter().enumerate() {
            let expect = if i == sh_index(2, 1) { 1.0 } else { 0.0 };
            assert!((c - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_has_sqrt_4pi_coefficient() {
        let f = SphericalFunction::from_fn(quad(8), Parity::Even, |_| 1.0);
        let c = f.coeffs();
        assert!((c[0] - (4.0 * PI).sqrt()).abs() < 1e-10);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-10));
        assert!(f.odd_energy_fraction() < 1e-28);
    }

    #[test]
    fn eval_sum_matches_synthesis_at_nodes() {
        let l = 7;
        let q = quad(l);
        let coeffs: Vec<f64> = (0..sh_count(l)).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let f = SphericalFunction::from_coeffs(q.clone(), coeffs.clone(), Parity::General);
        for (d, v) in q.nodes().iter().zip(f.values()) {
            assert!((f.eval(d) - v).abs() < 1e-12);
        }
        let fresh = SphericalFunction::from_values(q, f.values().to_vec(), Parity::General);
        for (a, b) in fresh.coeffs().iter().zip(&coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eval_at_poles_is_finite() {
        let l = 5;
        let coeffs: Vec<f64> = (0..sh_count(l)).map(|i| i as f64 * 0.1).collect();
        let h = RealHarmonics::new(l);
        let up = h.eval_sum(&coeffs, &Vector3::z());
        // only m = 0 survives at the pole: Y_{n,0}(N) = sqrt((2n+1)/4π)
        let expect: f64 = (0..=l).map(|n| coeffs[sh_index(n, 0)] * ((2 * n + 1) as f64 / (4.0 * PI)).sqrt()).sum();
        assert!((up - expect).abs() < 1e-12);
    }
}
