//! Inversion of the cosine transform on one sphere.
//!
//! By Funk–Hecke the map `h ↦ ∫ |⟨Ω, ξ⟩| h(ξ) dξ` is diagonal on spherical
//! harmonics: degree `n` is multiplied by `λ_n = 2π ∫_{−1}^{1} |t| P_n(t) dt`.
//! The multipliers vanish for odd `n`, so only the even part of a metric
//! restriction can be inverted.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use parking_lot::Mutex;

use crate::sphere::{gauss_legendre_on, legendre, odd_energy_fraction, sh_degree, Parity, SphericalFunction};
use crate::{Error, Result};

/// Default bound on the relative odd energy of an inversion input.
pub const DEFAULT_ODD_TOL: f64 = 1e-6;

/// Multipliers below `UNDERFLOW · λ₀` are treated as lost.
pub const UNDERFLOW: f64 = 1e-10;

/// Funk–Hecke multipliers of `|⟨Ω, ξ⟩|` for degrees `0..=l_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierTable {
    lambdas: Vec<f64>,
}

impl MultiplierTable {
    /// Computes `λ_n = 4π ∫₀¹ t P_n(t) dt` for even `n` by Gauss–Legendre
    /// quadrature on `[0, 1]`, which is exact for the polynomial integrand.
    pub fn new(l_max: usize) -> Self {
        let (t, w) = gauss_legendre_on(l_max / 2 + 2, 0.0, 1.0);
        let lambdas = (0..=l_max)
            .map(|n| {
                if n % 2 == 1 {
                    0.0
                } else {
                    2.0 * TAU * t.iter().zip(&w).map(|(t, w)| w * t * legendre(n, *t)).sum::<f64>()
                }
            })
            .collect();
        MultiplierTable { lambdas }
    }

    pub fn l_max(&self) -> usize {
        self.lambdas.len() - 1
    }

    pub fn get(&self, n: usize) -> f64 {
        self.lambdas[n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambdas
    }

    /// Highest even degree `≤ l_max` before the first multiplier that falls
    /// below `UNDERFLOW · λ₀`.
    pub fn effective_degree(&self) -> usize {
        let floor = UNDERFLOW * self.lambdas[0].abs();
        let mut eff = 0;
        for n in (0..=self.l_max()).step_by(2) {
            if self.lambdas[n].abs() < floor {
                break;
            }
            eff = n;
        }
        eff
    }
}

/// Cached multiplier table for `l_max`.
pub fn multipliers(l_max: usize) -> Arc<MultiplierTable> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<MultiplierTable>>>> = OnceLock::new();
    CACHE
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .entry(l_max)
        .or_insert_with(|| Arc::new(MultiplierTable::new(l_max)))
        .clone()
}

/// Solves `H = ∫ |⟨·, ξ⟩| h(ξ) dξ` for `h` up to degree `l_max`.
///
/// The odd part of `H` must carry at most `odd_tol` of its coefficient
/// energy; it is discarded. The result lives on the input's quadrature and
/// has exactly zero odd coefficients.
pub fn zonoid_invert(metric: &SphericalFunction, l_max: usize, odd_tol: f64) -> Result<SphericalFunction> {
    let grid_l = metric.l_max();
    if l_max > grid_l {
        return Err(Error::InvalidConfig(format!(
            "band limit {l_max} exceeds the quadrature band limit {grid_l}"
        )));
    }
    let coeffs = metric.coeffs();
    let odd = odd_energy_fraction(coeffs);
    if odd > odd_tol {
        return Err(Error::OddPartTooLarge {
            relative_energy: odd,
            tolerance: odd_tol,
        });
    }
    let table = multipliers(l_max);
    let eff = table.effective_degree();
    if eff + 1 < l_max {
        return Err(Error::DegreeCapExceeded {
            requested: l_max,
            effective: eff,
        });
    }
    let out = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let n = sh_degree(i);
            if n % 2 == 1 || n > l_max {
                0.0
            } else {
                c / table.get(n)
            }
        })
        .collect();
    Ok(SphericalFunction::from_coeffs(metric.quadrature().clone(), out, Parity::Even))
}

/// Cosine transform applied degree by degree through the multipliers.
pub fn cosine_transform_spectral(h: &SphericalFunction) -> SphericalFunction {
    let table = multipliers(h.l_max());
    let out = h
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c * table.get(sh_degree(i)))
        .collect();
    SphericalFunction::from_coeffs(h.quadrature().clone(), out, Parity::Even)
}
