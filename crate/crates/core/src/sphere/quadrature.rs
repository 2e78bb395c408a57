use nalgebra::Vector3;
use std::f64::consts::{PI, TAU};

use super::direction::{frame_of_normal, Direction};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Legendre polynomial `P_n(x)`.
pub fn legendre(n: usize, x: f64) -> f64 {
    let mut p0 = 1.0;
    if n == 0 {
        return p0;
    }
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Product rule on S²: Gauss–Legendre in `z = sin(lat)` times the periodic
/// trapezoid rule in longitude.
///
/// With `l_max + 1` latitude rings and `2·l_max + 2` longitudes the rule is
/// exact for every product `Y_{n,m}·Y_{n',m'}` with `n, n' ≤ l_max`. The
/// even longitude count makes the node set symmetric under `ξ ↦ −ξ`.
#[derive(Debug, Clone)]
pub struct SphericalQuadrature {
    l_max: usize,
    ring_z: Vec<f64>,
    ring_weights: Vec<f64>,
    n_lon: usize,
    nodes: Vec<Direction>,
    weights: Vec<f64>,
}

impl SphericalQuadrature {
    pub fn new(l_max: usize) -> Self {
        Self::with_size(l_max, l_max + 1, 2 * l_max + 2)
    }

    /// Explicit ring and longitude counts; `l_max` is the advertised band
    /// limit used by harmonic analysis on this grid.
    pub fn with_size(l_max: usize, n_lat: usize, n_lon: usize) -> Self {
        assert!(n_lat > l_max && n_lon > 2 * l_max, "grid too coarse for l_max = {l_max}");
        let (ring_z, ring_weights) = gauss_legendre(n_lat);
        let dlon = TAU / n_lon as f64;
        let mut nodes = Vec::with_capacity(n_lat * n_lon);
        let mut weights = Vec::with_capacity(n_lat * n_lon);
        for (z, wz) in ring_z.iter().zip(&ring_weights) {
            let s = (1.0 - z * z).sqrt();
            for k in 0..n_lon {
                let (sl, cl) = (k as f64 * dlon).sin_cos();
                nodes.push(Direction::new_unchecked(Vector3::new(s * cl, s * sl, *z)));
                weights.push(wz * dlon);
            }
        }
        SphericalQuadrature {
            l_max,
            ring_z,
            ring_weights,
            n_lon,
            nodes,
            weights,
        }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn nodes(&self) -> &[Direction] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ring_z(&self) -> &[f64] {
        &self.ring_z
    }

    pub fn ring_weights(&self) -> &[f64] {
        &self.ring_weights
    }

    pub fn n_lat(&self) -> usize {
        self.ring_z.len()
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    /// Weighted sum of node values, accumulated in node order.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.nodes.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Integral of a callable evaluated at the nodes.
    pub fn integrate_fn<F: Fn(&Direction) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(d, w)| w * f(d)).sum()
    }
}

/// Product rule on the full sphere in polar coordinates about an arbitrary
/// pole: Gauss–Legendre in `t = ⟨ξ, pole⟩` times the periodic trapezoid in
/// the azimuth `ψ`, measured in [`frame_of_normal`] of the pole.
///
/// Used for kernels that depend on the azimuth about the pole, such as the
/// sine-square kernel `cos²(φ − ψ)`.
#[derive(Debug, Clone)]
pub struct PolarRule {
    t: Vec<f64>,
    wt: Vec<f64>,
    cos_psi: Vec<f64>,
    sin_psi: Vec<f64>,
}

/// A node of a [`PolarRule`] or [`SplitRule`] placed about a pole.
#[derive(Debug, Clone, Copy)]
pub struct PolarNode {
    pub xi: Vector3<f64>,
    pub weight: f64,
    /// `⟨ξ, pole⟩`
    pub t: f64,
    pub cos_psi: f64,
    pub sin_psi: f64,
}

impl PolarRule {
    pub fn new(n_t: usize, n_psi: usize) -> Self {
        let (t, wt) = gauss_legendre(n_t);
        let (cos_psi, sin_psi) = azimuths(n_psi);
        PolarRule { t, wt, cos_psi, sin_psi }
    }

    /// Smallest rule integrating `cos²(ψ − φ)·f` and its first rotational
    /// derivative exactly for `f` of degree `≤ degree`.
    pub fn for_degree(degree: usize) -> Self {
        Self::new(degree / 2 + 3, degree + 6)
    }

    pub fn len(&self) -> usize {
        self.t.len() * self.cos_psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes about `pole`, ring by ring.
    pub fn nodes_about(&self, pole: &Direction) -> Vec<PolarNode> {
        place_nodes(pole, &self.t, &self.wt, &self.cos_psi, &self.sin_psi)
    }
}

/// Polar rule split at the equator of the pole, with a Gauss–Legendre rule
/// on each hemisphere. Integrands with a crease along the equator, such as
/// `|⟨Ω, ξ⟩|·f(ξ)` about `Ω`, stay smooth on each half.
#[derive(Debug, Clone)]
pub struct SplitRule {
    t: Vec<f64>,
    wt: Vec<f64>,
    cos_psi: Vec<f64>,
    sin_psi: Vec<f64>,
}

impl SplitRule {
    pub fn new(n_half: usize, n_psi: usize) -> Self {
        let (up, wup) = gauss_legendre_on(n_half, 0.0, 1.0);
        let mut t: Vec<f64> = up.iter().rev().map(|v| -v).collect();
        let mut wt: Vec<f64> = wup.iter().rev().copied().collect();
        t.extend_from_slice(&up);
        wt.extend_from_slice(&wup);
        let (cos_psi, sin_psi) = azimuths(n_psi);
        SplitRule { t, wt, cos_psi, sin_psi }
    }

    /// Exact for `|t|·f` with `f` band-limited to `degree`.
    pub fn for_degree(degree: usize) -> Self {
        Self::new(degree / 2 + 2, degree + 2)
    }

    pub fn len(&self) -> usize {
        self.t.len() * self.cos_psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Polynomial degree in `t` integrated exactly on each half.
    pub fn design_degree(&self) -> usize {
        self.t.len() - 1
    }

    pub fn nodes_about(&self, pole: &Direction) -> Vec<PolarNode> {
        place_nodes(pole, &self.t, &self.wt, &self.cos_psi, &self.sin_psi)
    }
}

fn azimuths(n_psi: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n_psi > 0);
    let d = TAU / n_psi as f64;
    (0..n_psi).map(|k| ((k as f64 * d).cos(), (k as f64 * d).sin())).unzip()
}

fn place_nodes(pole: &Direction, t: &[f64], wt: &[f64], cos_psi: &[f64], sin_psi: &[f64]) -> Vec<PolarNode> {
    let (e1, e2) = frame_of_normal(pole);
    let (e1, e2, p) = (e1.as_vector(), e2.as_vector(), pole.as_vector());
    let dpsi = TAU / cos_psi.len() as f64;
    let mut out = Vec::with_capacity(t.len() * cos_psi.len());
    for (ti, wi) in t.iter().zip(wt) {
        let s = (1.0 - ti * ti).sqrt();
        for (c, sn) in cos_psi.iter().zip(sin_psi) {
            out.push(PolarNode {
                xi: e1 * (s * c) + e2 * (s * sn) + p * *ti,
                weight: wi * dpsi,
                t: *ti,
                cos_psi: *c,
                sin_psi: *sn,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn large_rules_stay_accurate() {
        let (x, w) = gauss_legendre(200);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * (3.0 * x).cos()).sum();
        assert!((q - 2.0 * 3f64.sin() / 3.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_weights_sum_to_4pi() {
        for l in [0, 1, 5, 16, 40] {
            let q = SphericalQuadrature::new(l);
            assert!((q.weights().iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_rule_closed_forms() {
        let q = SphericalQuadrature::new(6);
        let u = Direction::from_xyz(0.3, -0.5, 0.8).unwrap();
        assert!(q.integrate_fn(|d| d.dot(&u)).abs() < 1e-12);
        assert!((q.integrate_fn(|d| d.z * d.z) - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn polar_rule_about_tilted_pole() {
        let pole = Direction::from_xyz(0.1, 0.9, -0.4).unwrap();
        let r = PolarRule::new(8, 16);
        let nodes = r.nodes_about(&pole);
        let total: f64 = nodes.iter().map(|n| n.weight).sum();
        assert!((total - 4.0 * PI).abs() < 1e-12);
        let second: f64 = nodes.iter().map(|n| n.weight * n.xi.x * n.xi.x).sum();
        assert!((second - 4.0 * PI / 3.0).abs() < 1e-12);
        for n in &nodes {
            assert!((n.xi.norm() - 1.0).abs() < 1e-14);
            assert!((n.xi.dot(&pole) - n.t).abs() < 1e-14);
        }
    }

    #[test]
    fn split_rule_integrates_abs_kernel() {
        let pole = Direction::from_xyz(-0.6, 0.2, 0.3).unwrap();
        let r = SplitRule::new(4, 8);
        let v: f64 = r.nodes_about(&pole).iter().map(|n| n.weight * n.t.abs()).sum();
        assert!((v - TAU).abs() < 1e-13);
    }
}
