use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::Vector3;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::sphere::{
    gauss_legendre_on, Direction, Flag, Point3, PolarRule, SphereEval, SphericalQuadrature, SplitRule,
};
use crate::transforms::{cosine_transform_with, flag_kernel, DensityField, MetricField};
use crate::{Error, Result};

/// Synthetic density families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `h = c`
    Constant,
    /// `h(ξ) = 1 + β⟨ξ, u⟩²`
    TranslationInvariant,
    /// `h(p, ξ) = 1 + β exp(−(p − ⟨q, ξ⟩)²/σ²) ⟨ξ, u⟩²`
    GaussianBump,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Constant, Family::TranslationInvariant, Family::GaussianBump];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Constant => "constant",
            Family::TranslationInvariant => "translation-invariant",
            Family::GaussianBump => "gaussian-bump",
        }
    }
}

/// Parameters of a synthetic density. All families have unit length scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticDensitySpec {
    pub family: Family,
    pub c: f64,
    pub u: [f64; 3],
    pub beta: f64,
    pub q: [f64; 3],
    pub sigma: f64,
}

impl Default for SyntheticDensitySpec {
    fn default() -> Self {
        SyntheticDensitySpec {
            family: Family::GaussianBump,
            c: 1.0,
            u: [0.0, 0.0, 1.0],
            beta: 0.5,
            q: [0.3, -0.2, 0.1],
            sigma: 1.0,
        }
    }
}

impl SyntheticDensitySpec {
    pub fn of(family: Family) -> Self {
        SyntheticDensitySpec {
            family,
            ..Default::default()
        }
    }

    pub fn constant(c: f64) -> Self {
        SyntheticDensitySpec {
            family: Family::Constant,
            c,
            ..Default::default()
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
}

/// A synthetic density with closed-form `p`-derivatives.
#[derive(Debug, Clone)]
pub struct SyntheticDensity {
    spec: SyntheticDensitySpec,
    u: Vector3<f64>,
    q: Vector3<f64>,
}

pub fn make_density(spec: &SyntheticDensitySpec) -> Result<SyntheticDensity> {
    let u = Direction::new(Vector3::from(spec.u))
        .map_err(|_| Error::InvalidConfig("axis u must be nonzero".into()))?
        .into_inner();
    if !spec.c.is_finite() || !spec.beta.is_finite() || spec.q.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("density parameters must be finite".into()));
    }
    if !(spec.sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {}", spec.sigma)));
    }
    Ok(SyntheticDensity {
        spec: spec.clone(),
        u,
        q: Vector3::from(spec.q),
    })
}

impl SyntheticDensity {
    pub fn spec(&self) -> &SyntheticDensitySpec {
        &self.spec
    }

    /// `(A, e)` with `h = 1 + A·e` for the bump, `e` the Gaussian factor.
    fn bump_parts(&self, p: f64, n: &Vector3<f64>) -> (f64, f64, f64) {
        let d = n.dot(&self.u);
        let a = self.spec.beta * d * d;
        let s = p - self.q.dot(n);
        let sig2 = self.spec.sigma * self.spec.sigma;
        (a, (-s * s / sig2).exp(), s / sig2)
    }

    /// `M(x) = ½ ∫ h_x`, reduced to a 1-D integral along `x − q`.
    pub fn bundle_mass_exact(&self, x: &Point3) -> f64 {
        match self.spec.family {
            Family::Constant => std::f64::consts::TAU * self.spec.c,
            Family::TranslationInvariant => std::f64::consts::TAU * (1.0 + self.spec.beta / 3.0),
            Family::GaussianBump => {
                let v = (x - self.q) / self.spec.sigma;
                let a = v.norm();
                let c2 = if a > 0.0 {
                    let c = v.dot(&self.u) / a;
                    c * c
                } else {
                    1.0 / 3.0
                };
                let (t, w) = gauss_legendre_on(48, -1.0, 1.0);
                let inner: f64 = t
                    .iter()
                    .zip(&w)
                    .map(|(t, w)| {
                        let ang = if a > 0.0 {
                            c2 * t * t + 0.5 * (1.0 - c2) * (1.0 - t * t)
                        } else {
                            1.0 / 3.0
                        };
                        w * (-a * a * t * t).exp() * ang
                    })
                    .sum();
                std::f64::consts::TAU * (1.0 + 0.5 * self.spec.beta * inner)
            }
        }
    }

    /// Second derivative of `M` along the unit vector `d`, by direct
    /// quadrature of the differentiated restriction.
    pub fn bundle_mass_dd_exact(&self, x: &Point3, d: &Vector3<f64>) -> f64 {
        let quad = SphericalQuadrature::new(48);
        0.5 * quad.integrate_fn(|xi| {
            let t = d.dot(xi);
            self.density_dpp(x.dot(xi), xi).unwrap_or(0.0) * t * t
        })
    }

    /// `ρ'_y` at a flag, differentiating the restriction exactly.
    pub fn rho_y_exact(&self, f: &Flag) -> f64 {
        let rule = PolarRule::new(40, 80);
        let (w, g) = (f.normal().as_vector(), f.line().as_vector());
        let y = f.right().into_inner();
        0.5 * rule
            .nodes_about(f.normal())
            .iter()
            .map(|n| {
                let dh = self.density_dp(f.x.dot(&n.xi), &n.xi).unwrap_or(0.0) * y.dot(&n.xi);
                n.weight * flag_kernel(&n.xi, w, g) * dh
            })
            .sum::<f64>()
    }
}

impl DensityField for SyntheticDensity {
    fn density(&self, p: f64, n: &Vector3<f64>) -> f64 {
        match self.spec.family {
            Family::Constant => self.spec.c,
            Family::TranslationInvariant => {
                let d = n.dot(&self.u);
                1.0 + self.spec.beta * d * d
            }
            Family::GaussianBump => {
                let (a, e, _) = self.bump_parts(p, n);
                1.0 + a * e
            }
        }
    }

    fn density_dp(&self, p: f64, n: &Vector3<f64>) -> Option<f64> {
        Some(match self.spec.family {
            Family::Constant | Family::TranslationInvariant => 0.0,
            Family::GaussianBump => {
                let (a, e, s) = self.bump_parts(p, n);
                -2.0 * s * a * e
            }
        })
    }

    fn density_dpp(&self, p: f64, n: &Vector3<f64>) -> Option<f64> {
        Some(match self.spec.family {
            Family::Constant | Family::TranslationInvariant => 0.0,
            Family::GaussianBump => {
                let (a, e, s) = self.bump_parts(p, n);
                let sig2 = self.spec.sigma * self.spec.sigma;
                (4.0 * s * s - 2.0 / sig2) * a * e
            }
        })
    }

    fn translation_invariant(&self) -> bool {
        self.spec.family != Family::GaussianBump
    }
}

/// `H(x, Ω) = ∫ |⟨Ω, ξ⟩| h_x(ξ) dξ`, integrated on demand with a split rule.
/// For translation-invariant densities the samples on a grid are computed
/// once and reused.
pub struct ForwardMetric {
    density: Arc<dyn DensityField>,
    rule: SplitRule,
    shared: Mutex<HashMap<usize, Arc<Vec<f64>>>>,
}

/// Default split rule of [`forward_metric`]: 16 Gauss nodes per hemisphere
/// and 40 azimuths.
pub const FORWARD_RULE: (usize, usize) = (16, 40);

pub fn forward_metric(density: Arc<dyn DensityField>) -> ForwardMetric {
    ForwardMetric::with_rule(density, SplitRule::new(FORWARD_RULE.0, FORWARD_RULE.1))
}

impl ForwardMetric {
    pub fn with_rule(density: Arc<dyn DensityField>, rule: SplitRule) -> Self {
        ForwardMetric {
            density,
            rule,
            shared: Mutex::new(HashMap::new()),
        }
    }

    pub fn density(&self) -> &Arc<dyn DensityField> {
        &self.density
    }
}

struct RestrictedAt<'a> {
    density: &'a dyn DensityField,
    x: Point3,
}

impl SphereEval for RestrictedAt<'_> {
    fn eval(&self, xi: &Vector3<f64>) -> f64 {
        self.density.restricted(&self.x, xi)
    }
}

impl MetricField for ForwardMetric {
    fn metric(&self, x: &Point3, dir: &Vector3<f64>) -> Result<f64> {
        let d = Direction::new(*dir)?;
        let f = RestrictedAt {
            density: self.density.as_ref(),
            x: *x,
        };
        Ok(cosine_transform_with(&f, &d, &self.rule))
    }

    fn sample_on(&self, x: &Point3, quad: &SphericalQuadrature) -> Result<Vec<f64>> {
        let compute = |x: &Point3| -> Result<Vec<f64>> { quad.nodes().iter().map(|d| self.metric(x, d)).collect() };
        if !self.density.translation_invariant() {
            return compute(x);
        }
        let key = quad.len();
        if let Some(v) = self.shared.lock().get(&key) {
            return Ok(v.as_ref().clone());
        }
        let v = Arc::new(compute(&Point3::zeros())?);
        self.shared.lock().insert(key, v.clone());
        Ok(v.as_ref().clone())
    }
}
