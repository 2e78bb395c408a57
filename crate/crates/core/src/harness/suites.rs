use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{rel_err, Check, SuiteReport};
use super::sampling::{
    adaptive_simpson, angle_diff, random_angle, random_direction, random_plane, random_point, rng_for,
};
use super::synthetic::{forward_metric, make_density, Family, SyntheticDensity, SyntheticDensitySpec};
use crate::reconstruction::{
    bundle_mass_derivs, curvature_correction_check, disc_limit_oracle, first_order_defect, lemma_radial_check,
    reconstruct_plane, reconstruct_plane_at, rho_spatial_derivs, theorem5_sides, FlagDensityField,
    ReconstructionConfig,
};
use crate::sphere::{
    flag_convert, flag_convert_inverse, frame_of_normal, legendre, phi_rotation_derivatives, sh_count, sh_degree,
    sh_index, Direction, Flag, Parity, Point3, SphereCoords, SphereEval, SphericalFunction, SphericalQuadrature,
};
use crate::transforms::{
    bundle_mass, cosine_transform, flag_average_identity, flag_measure_ball, kernel_phi_average,
    plane_measure_ball, sine_square_transform, DensityField, MetricField, PlaneCoords,
};
use crate::zonoid::{multipliers, zonoid_invert, DEFAULT_ODD_TOL};
use crate::{Error, Result};

/// Names accepted by [`run_suite`].
pub const SUITES: [&str; 6] = ["identities", "zonoid", "reconstruction", "theorem3", "theorem5", "derivatives"];

/// Sizes of the randomized parts of the suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    pub config: ReconstructionConfig,
    /// Planes per family in the round-trip checks.
    pub planes: usize,
    /// Planes compared against the disc-limit oracle.
    pub oracle_planes: usize,
    /// Random configurations per derivative identity.
    pub samples: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            config: ReconstructionConfig::default(),
            planes: 50,
            oracle_planes: 3,
            samples: 20,
        }
    }
}

/// Runs a suite with default options.
pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    run_suite_with(name, seed, &SuiteOptions::default())
}

pub fn run_suite_with(name: &str, seed: u64, opts: &SuiteOptions) -> Result<SuiteReport> {
    opts.config.validate()?;
    let checks = match name {
        "identities" => identities(seed, opts),
        "zonoid" => zonoid(seed),
        "reconstruction" => reconstruction(seed, opts),
        "theorem3" => ball_measures(seed, opts),
        "theorem5" => disc_identity(seed, opts),
        "derivatives" => derivatives(seed, opts),
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    Ok(SuiteReport::new(name, seed, checks))
}

/// A synthetic density with the metric-driven flag density built on it.
pub struct Pipeline {
    pub density: Arc<SyntheticDensity>,
    pub field: FlagDensityField,
}

pub fn pipeline(spec: &SyntheticDensitySpec, l_max: usize) -> Result<Pipeline> {
    let density = Arc::new(make_density(spec)?);
    let metric = Arc::new(forward_metric(density.clone()));
    Ok(Pipeline {
        field: FlagDensityField::from_metric(metric, l_max, DEFAULT_ODD_TOL),
        density,
    })
}

fn catch(name: &str, tag: &str, tol: f64, r: Result<Check>) -> Check {
    r.unwrap_or_else(|e| Check::errored(name, tag, tol, e))
}

/// Random even function of band limit `l` with coefficients in `[−1, 1]`
/// (constant term 3, to keep magnitudes comparable).
fn random_even_coeffs<R: Rng>(rng: &mut R, l: usize) -> Vec<f64> {
    (0..sh_count(l))
        .map(|i| match sh_degree(i) {
            0 => 3.0,
            n if n % 2 == 0 => rng.gen_range(-1.0..1.0),
            _ => 0.0,
        })
        .collect()
}

// ----------------------------------------------------------------------------
// identities

/// Smallest `|⟨Ω, ξ⟩|` used in the kernel-average check. Below it, the
/// uniform 512-node trapezoid rule no longer reaches 1e-9 because the
/// kernel has complex poles at distance ≈ `|⟨Ω, ξ⟩|` from the real axis.
pub const KERNEL_AVERAGE_MIN_COS: f64 = 0.05;

/// Worst kernel-average error over `n` random pairs with
/// `|⟨Ω, ξ⟩| ≥ min_cos`, using `nodes` trapezoid nodes.
pub fn kernel_average_worst<R: Rng>(rng: &mut R, n: usize, nodes: usize, min_cos: f64) -> (f64, f64) {
    let (mut worst, mut at) = (0.0f64, f64::NAN);
    let mut done = 0;
    while done < n {
        let xi = random_direction(rng);
        let om = random_direction(rng);
        let k = xi.dot(&om).abs();
        if k < min_cos {
            continue;
        }
        done += 1;
        let e = (kernel_phi_average(&xi, &om, nodes) - k).abs();
        if e > worst {
            worst = e;
            at = k;
        }
    }
    (worst, at)
}

fn identities(seed: u64, opts: &SuiteOptions) -> Vec<Check> {
    let mut rng = rng_for(seed, "identities");
    let mut out = Vec::new();

    let (worst, at) = kernel_average_worst(&mut rng, 100, 512, KERNEL_AVERAGE_MIN_COS);
    out.push(
        Check::at_most("kernel average, 512 uniform nodes", "kernel-average", worst, 1e-9)
            .with_detail(format!("|<Ω,ξ>| ≥ {KERNEL_AVERAGE_MIN_COS}; worst at |<Ω,ξ>| = {at:.4}")),
    );

    let quad = Arc::new(SphericalQuadrature::new(8));
    let one = SphericalFunction::from_fn(quad.clone(), Parity::Even, |_| 1.0);
    let (mut e_rho, mut e_cos) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let f = Flag::from_plane(Point3::zeros(), random_direction(&mut rng), random_angle(&mut rng));
        e_rho = e_rho.max((sine_square_transform(&one, f.normal(), f.line()) - PI).abs());
        e_cos = e_cos.max((cosine_transform(&one, &random_direction(&mut rng)) - TAU).abs());
    }
    out.push(Check::at_most("sine-square transform of 1 is π", "flag-density-constant", e_rho, 1e-12));
    out.push(Check::at_most("cosine transform of 1 is 2π", "cosine-constant", e_cos, 1e-12));
    out.push(Check::at_most(
        "bundle mass of 1 is 2π",
        "bundle-mass-constant",
        (bundle_mass(&one) - TAU).abs(),
        1e-12,
    ));

    let h = SphericalFunction::from_coeffs(quad, random_even_coeffs(&mut rng, 8), Parity::Even);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (l, r) = flag_average_identity(&h, &random_direction(&mut rng), 16);
        worst = worst.max((l - r).abs());
    }
    out.push(Check::at_most(
        "bundle average of ρ equals half the cosine transform",
        "bundle-average",
        worst,
        1e-10,
    ));

    out.push(catch("metric bundle average, gaussian bump", "bundle-average-metric", 1e-6, (|| {
        let p = pipeline(&SyntheticDensitySpec::of(Family::GaussianBump), opts.config.l_max)?;
        let metric = forward_metric(p.density.clone());
        let worst = bundle_average_worst(&p.field, &metric, &mut rng, 20, 64)?;
        Ok(Check::at_most("(1/π)∫ρ dΦ = H, gaussian bump, 20 samples", "bundle-average-metric", worst, 1e-6))
    })()));

    let t = multipliers(4);
    let named = [(0, TAU), (1, 0.0), (2, PI / 2.0), (4, -PI / 12.0)]
        .iter()
        .map(|(n, v)| (t.get(*n) - v).abs())
        .fold(0.0, f64::max);
    out.push(Check::at_most("λ0 = 2π, λ1 = 0, λ2 = π/2, λ4 = −π/12", "multipliers", named, 1e-12));

    out.push(catch("rotation rates against finite differences", "rotation-rates", 1e-6, (|| {
        let worst = rotation_rate_worst(&mut rng, 100, 1e-4)?;
        Ok(Check::at_most("rotation rates, 100 flags, step 1e-4", "rotation-rates", worst, 1e-6))
    })()));

    let (mut det_err, mut conv_err) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let w = random_direction(&mut rng);
        let (e1, e2) = frame_of_normal(&w);
        det_err = det_err.max((e1.cross(&e2).dot(&w) - 1.0).abs());
        let f = Flag::from_plane(random_point(&mut rng, 1.0), w, random_angle(&mut rng)).frame();
        det_err = det_err.max((f.x1.cross(&f.x2).dot(&f.x3) + 1.0).abs());
        let line = random_direction(&mut rng);
        let big_phi = random_angle(&mut rng);
        let (x, n, phi) = flag_convert(Point3::zeros(), line, big_phi);
        let (_, l2, p2) = flag_convert_inverse(x, n, phi);
        conv_err = conv_err.max((l2.into_inner() - line.into_inner()).norm()).max(angle_diff(p2, big_phi).abs());
    }
    out.push(Check::at_most("frames: (e1, e2, ω) right-handed, flag triad left-handed", "frames", det_err, 1e-12));
    out.push(Check::at_most("flag parametrizations round trip", "flag-conversion", conv_err, 1e-12));
    out
}

/// Worst `|(1/π)∫ρ dΦ − H|` over `n` random `(x, Ω)`.
pub fn bundle_average_worst<R: Rng>(
    field: &FlagDensityField,
    metric: &dyn MetricField,
    rng: &mut R,
    n: usize,
    n_phi: usize,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let x = random_point(rng, 1.0);
        let om = random_direction(rng);
        let dphi = TAU / n_phi as f64;
        let mut s = 0.0;
        for k in 0..n_phi {
            s += field.flag_density_at(&Flag::from_line(x, om, k as f64 * dphi))?;
        }
        let lhs = s * dphi / PI;
        worst = worst.max((lhs - metric.metric(&x, &om)?).abs());
    }
    Ok(worst)
}

/// Worst deviation between the analytic rotation rates and five-point
/// central differences of rotated flags at `step`.
pub fn rotation_rate_worst<R: Rng>(rng: &mut R, n: usize, step: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let f = Flag::from_plane(Point3::zeros(), random_direction(rng), random_angle(rng));
        let c = SphereCoords::of(f.normal());
        let rates = phi_rotation_derivatives(c, f.line_angle())?;
        // (line angle, lat, lon) at offsets relative to the unrotated flag
        let at = |t: f64| {
            let r = f.rotated_about_line(t);
            let rc = SphereCoords::of(r.normal());
            [angle_diff(r.line_angle(), f.line_angle()), rc.lat - c.lat, angle_diff(rc.lon, c.lon)]
        };
        let (p1, m1, p2, m2) = (at(step), at(-step), at(2.0 * step), at(-2.0 * step));
        let d = |i: usize| (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * step);
        worst = worst
            .max((d(0) - rates.line_angle).abs())
            .max((d(1) - rates.lat).abs())
            .max((d(2) - rates.lon).abs());
    }
    Ok(worst)
}

// ----------------------------------------------------------------------------
// zonoid

/// `2π ∫_{−1}^{1} |t| P_n(t) dt` by adaptive Simpson on each half.
pub fn multiplier_oracle(n: usize) -> f64 {
    let f = |t: f64| t.abs() * legendre(n, t);
    TAU * (adaptive_simpson(&f, -1.0, 0.0, 1e-15) + adaptive_simpson(&f, 0.0, 1.0, 1e-15))
}

fn sup_on<F: SphereEval, G: SphereEval, R: Rng>(a: &F, b: &G, quad: &SphericalQuadrature, rng: &mut R) -> f64 {
    let mut worst = quad
        .nodes()
        .iter()
        .map(|d| (a.eval(d) - b.eval(d)).abs())
        .fold(0.0, f64::max);
    for _ in 0..200 {
        let d = random_direction(rng);
        worst = worst.max((a.eval(&d) - b.eval(&d)).abs());
    }
    worst
}

/// `H` on the nodes of `h`'s grid by direct quadrature of the cosine
/// transform.
fn forward_on_grid(h: &SphericalFunction) -> SphericalFunction {
    let q = h.quadrature().clone();
    let values = q.nodes().iter().map(|d| cosine_transform(h, d)).collect();
    SphericalFunction::from_values(q, values, Parity::Even)
}

fn zonoid(seed: u64) -> Vec<Check> {
    let mut rng = rng_for(seed, "zonoid");
    let mut out = Vec::new();
    let l = 20;
    let t = multipliers(l);
    let oracle = (0..=l).step_by(2).map(|n| (t.get(n) - multiplier_oracle(n)).abs()).fold(0.0, f64::max);
    out.push(Check::at_most("even multipliers against adaptive quadrature", "multipliers", oracle, 1e-12));
    let odd = (1..=l).step_by(2).map(|n| t.get(n).abs()).fold(0.0, f64::max);
    out.push(Check::at_most("odd multipliers vanish", "multipliers", odd, 1e-14));
    let ratio = (2..l).step_by(2).map(|n| t.get(n + 2).abs() / t.get(n).abs()).fold(0.0, f64::max);
    out.push(
        Check::at_most("|λn| strictly decreasing over even n ≥ 2", "multipliers", ratio, 1.0 - 1e-12)
            .with_detail("measured: largest ratio |λ(n+2)| / |λn|"),
    );

    let quad = Arc::new(SphericalQuadrature::new(8));
    let two_pi = SphericalFunction::from_fn(quad.clone(), Parity::Even, |_| TAU);
    out.push(catch("constant metric inverts to 1", "zonoid", 1e-8, (|| {
        let h = zonoid_invert(&two_pi, 8, DEFAULT_ODD_TOL)?;
        let e = h.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        Ok(Check::at_most("constant metric inverts to 1", "zonoid", e, 1e-8))
    })()));
    out.push(catch("λ2·Y20 inverts to Y20", "zonoid", 1e-8, (|| {
        let mut c = vec![0.0; sh_count(8)];
        c[sh_index(2, 0)] = t.get(2);
        let m = SphericalFunction::from_coeffs(quad.clone(), c, Parity::Even);
        let h = zonoid_invert(&m, 8, DEFAULT_ODD_TOL)?;
        let e = h
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - if i == sh_index(2, 0) { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        Ok(Check::at_most("λ2·Y20 inverts to Y20", "zonoid", e, 1e-8))
    })()));

    out.push(catch("round trips at band limit 8", "zonoid-round-trip", 1e-7, (|| {
        let (mut inv_fwd, mut fwd_inv, mut lin, mut parity) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..5 {
            let h = SphericalFunction::from_coeffs(quad.clone(), random_even_coeffs(&mut rng, 8), Parity::Even);
            let back = zonoid_invert(&forward_on_grid(&h), 8, DEFAULT_ODD_TOL)?;
            inv_fwd = inv_fwd.max(sup_on(&h, &back, &quad, &mut rng));

            let m = SphericalFunction::from_coeffs(quad.clone(), random_even_coeffs(&mut rng, 8), Parity::Even);
            let sol = zonoid_invert(&m, 8, DEFAULT_ODD_TOL)?;
            fwd_inv = fwd_inv.max(sup_on(&m, &forward_on_grid(&sol), &quad, &mut rng));
            parity = (0..sh_count(8))
                .filter(|i| sh_degree(*i) % 2 == 1)
                .map(|i| sol.coeffs()[i].abs())
                .fold(parity, f64::max);

            let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let mix = SphericalFunction::from_values(
                quad.clone(),
                m.values().iter().zip(back.values()).map(|(x, y)| a * x + b * y).collect(),
                Parity::Even,
            );
            let lhs = zonoid_invert(&mix, 8, DEFAULT_ODD_TOL)?;
            let rb = zonoid_invert(&back, 8, DEFAULT_ODD_TOL)?;
            for (k, v) in lhs.values().iter().enumerate() {
                lin = lin.max((v - (a * sol.values()[k] + b * rb.values()[k])).abs());
            }
        }
        Ok(Check::at_most("invert ∘ forward, sup error", "zonoid-round-trip", inv_fwd, 1e-7)
            .with_detail(format!("forward ∘ invert {fwd_inv:.3e}; linearity {lin:.3e}; odd coefficients {parity:.1e}"))
            .and_also(fwd_inv <= 1e-7 && lin <= 1e-10 && parity == 0.0))
    })()));

    let odd = SphericalFunction::from_fn(quad, Parity::General, |xi| TAU + 0.5 * xi.x);
    let rejected = matches!(zonoid_invert(&odd, 8, DEFAULT_ODD_TOL), Err(Error::OddPartTooLarge { .. }));
    out.push(Check::at_most("odd input is rejected", "zonoid-odd", if rejected { 0.0 } else { 1.0 }, 0.0));
    out
}

// ----------------------------------------------------------------------------
// reconstruction

/// Families and tolerances of the round-trip checks.
pub fn round_trip_cases() -> Vec<(String, SyntheticDensitySpec, f64)> {
    vec![
        ("constant c = 0.7".into(), SyntheticDensitySpec::constant(0.7), 1e-6),
        (
            "translation-invariant".into(),
            SyntheticDensitySpec::of(Family::TranslationInvariant),
            1e-3,
        ),
        ("gaussian bump".into(), SyntheticDensitySpec::of(Family::GaussianBump), 2e-2),
        (
            "gaussian bump, β = −0.8".into(),
            SyntheticDensitySpec::of(Family::GaussianBump).with_beta(-0.8),
            2e-2,
        ),
    ]
}

/// Reconstructed and true values on `planes`, in order.
pub fn round_trip(
    p: &Pipeline,
    planes: &[PlaneCoords],
    config: &ReconstructionConfig,
) -> Result<Vec<(f64, f64)>> {
    planes
        .par_iter()
        .map(|e| Ok((reconstruct_plane(&p.field, e, config)?.value, p.density.at(e))))
        .collect()
}

fn reconstruction(seed: u64, opts: &SuiteOptions) -> Vec<Check> {
    let mut rng = rng_for(seed, "reconstruction");
    let planes: Vec<PlaneCoords> = (0..opts.planes).map(|_| random_plane(&mut rng, 1.0)).collect();
    let mut out = Vec::new();
    for (name, spec, tol) in round_trip_cases() {
        let label = format!("round trip, {name}, {} planes", planes.len());
        out.push(catch(&label, "inversion-formula", tol, (|| {
            let p = pipeline(&spec, opts.config.l_max)?;
            let vals = round_trip(&p, &planes, &opts.config)?;
            let worst = vals.iter().map(|(r, t)| rel_err(*r, *t)).fold(0.0, f64::max);
            let ratio = vals.iter().map(|(r, t)| r / t).sum::<f64>() / vals.len().max(1) as f64;
            Ok(Check::at_most(&label, "inversion-formula", worst, tol)
                .with_detail(format!("mean ratio reconstructed/true = {ratio:.6}; c_norm = {}", opts.config.c_norm)))
        })()));
    }
    out.push(catch("evenness of the reconstruction", "evenness", 0.0, (|| {
        let p = pipeline(&SyntheticDensitySpec::of(Family::GaussianBump), opts.config.l_max)?;
        let e = random_plane(&mut rng, 1.0);
        let flipped = PlaneCoords::new(-e.p, e.normal.neg());
        let a = reconstruct_plane(&p.field, &e, &opts.config)?.value;
        let b = reconstruct_plane(&p.field, &flipped, &opts.config)?.value;
        Ok(Check::at_most("(p, ξ) and (−p, −ξ) reconstruct identically", "evenness", (a - b).abs(), 0.0))
    })()));
    out
}

// ----------------------------------------------------------------------------
// ball measures

fn ball_measures(seed: u64, opts: &SuiteOptions) -> Vec<Check> {
    let mut rng = rng_for(seed, "theorem3");
    let centre = random_point(&mut rng, 0.5);
    let sphere = SphericalQuadrature::new(16);
    let normals = SphericalQuadrature::new(24);
    let mut out = Vec::new();
    for fam in Family::ALL {
        let spec = SyntheticDensitySpec::of(fam);
        for r in [0.5, 1.0, 2.0] {
            let name = format!("ball measures, {}, R = {r}", fam.name());
            out.push(catch(&name, "ball-measures", 1e-3, (|| {
                let p = pipeline(&spec, opts.config.l_max)?;
                let planes = plane_measure_ball(p.density.as_ref(), &centre, r, &normals, 32);
                let mut failure = None;
                let flags = flag_measure_ball(
                    |f| {
                        p.field.flag_density_at(f).unwrap_or_else(|e| {
                            failure = Some(e);
                            f64::NAN
                        })
                    },
                    &centre,
                    r,
                    &sphere,
                );
                if let Some(e) = failure {
                    return Err(e);
                }
                let mut c = Check::at_most(&name, "ball-measures", rel_err(flags, planes), 1e-3)
                    .with_detail(format!("flags {flags:.10}, planes {planes:.10}"));
                if fam == Family::Constant {
                    let closed = 4.0 * PI * r * spec.c;
                    let e = (flags - closed).abs().max((planes - closed).abs());
                    c = c.and_also(e <= 1e-6).with_detail(format!(
                        "flags {flags:.10}, planes {planes:.10}, 4πR {closed:.10}, closed-form error {e:.2e}"
                    ));
                }
                Ok(c)
            })()));
        }
    }
    out
}

// ----------------------------------------------------------------------------
// disc identity and oracle

fn disc_identity(seed: u64, opts: &SuiteOptions) -> Vec<Check> {
    let mut rng = rng_for(seed, "theorem5");
    let mut out = Vec::new();
    let cases = [
        SyntheticDensitySpec::constant(0.7),
        SyntheticDensitySpec::of(Family::TranslationInvariant),
        SyntheticDensitySpec::of(Family::GaussianBump),
        SyntheticDensitySpec::of(Family::GaussianBump).with_beta(-0.8),
    ];
    for spec in &cases {
        let name = format!("disc identity, {}, β = {}", spec.family.name(), spec.beta);
        out.push(catch(&name, "disc-identity", 1e-3, (|| {
            let p = pipeline(spec, opts.config.l_max)?;
            let mut worst = 0.0f64;
            for _ in 0..2 {
                let x = random_point(&mut rng, 0.8);
                let w = random_direction(&mut rng);
                for alpha in [0.2, 0.4] {
                    let s = theorem5_sides(&p.field, p.density.as_ref(), &x, &w, alpha, &opts.config)?;
                    worst = worst.max(rel_err(s.rhs, s.lhs));
                }
            }
            Ok(Check::at_most(&name, "disc-identity", worst, 1e-3))
        })()));
    }

    out.push(catch("disc oracle, constant c = 0.7", "disc-oracle", 1e-4, (|| {
        let p = pipeline(&SyntheticDensitySpec::constant(0.7), opts.config.l_max)?;
        let e = random_plane(&mut rng, 1.0).canonical();
        let o = disc_limit_oracle(&p.field, &e, &e.foot(), &opts.config)?;
        Ok(Check::at_most("disc oracle, constant c = 0.7", "disc-oracle", (o.value - 0.7).abs(), 1e-4))
    })()));

    let name = format!("disc oracle against inversion formula, {} bump planes", opts.oracle_planes);
    out.push(catch(&name, "oracle-agreement", 1e-2, (|| {
        let p = pipeline(&SyntheticDensitySpec::of(Family::GaussianBump), opts.config.l_max)?;
        let (mut worst, mut defect) = (0.0f64, 0.0f64);
        for _ in 0..opts.oracle_planes {
            let e = random_plane(&mut rng, 1.0).canonical();
            let x = e.foot();
            let r = reconstruct_plane(&p.field, &e, &opts.config)?.value;
            let o = disc_limit_oracle(&p.field, &e, &x, &opts.config)?;
            worst = worst.max(rel_err(o.value, r));
            let d = first_order_defect(&p.field, &x, &e.normal, opts.config.n_phi, opts.config.oracle_step)?;
            defect = defect.max(d.abs() / (2.0 * PI * PI * r.abs()));
        }
        Ok(Check::at_most(&name, "oracle-agreement", worst, 1e-2)
            .with_detail(format!("first-order defect relative to the α² coefficient: {defect:.2e}"))
            .and_also(defect <= 1e-4))
    })()));
    out
}

// ----------------------------------------------------------------------------
// derivatives

fn derivatives(seed: u64, opts: &SuiteOptions) -> Vec<Check> {
    let mut rng = rng_for(seed, "derivatives");
    let mut out = Vec::new();
    let cfg = &opts.config;
    let bump = match pipeline(&SyntheticDensitySpec::of(Family::GaussianBump), cfg.l_max) {
        Ok(p) => p,
        Err(e) => return vec![Check::errored("pipeline", "derivatives", 0.0, e)],
    };
    let n = opts.samples;

    out.push(catch("rotational derivatives against finite differences", "rotation-derivatives", 1e-6, (|| {
        let (mut e1, mut e2, mut e1_coarse, mut e_second) = (0.0, 0.0, 0.0, 0.0f64);
        for _ in 0..n.min(10) {
            let f = Flag::from_plane(random_point(&mut rng, 0.8), random_direction(&mut rng), random_angle(&mut rng));
            let (d1, d2) = bump.field.rho_rotational_derivs(&f)?;
            let r0 = bump.field.flag_density_at(&f)?;
            let fd = |s: f64| -> Result<(f64, f64)> {
                let rp = bump.field.flag_density_at(&f.rotated_about_line(s))?;
                let rm = bump.field.flag_density_at(&f.rotated_about_line(-s))?;
                Ok(((rp - rm) / (2.0 * s), (rp - 2.0 * r0 + rm) / (s * s)))
            };
            let (a, b) = (fd(1e-3)?, fd(2e-3)?);
            e1 += (a.0 - d1).abs();
            e1_coarse += (b.0 - d1).abs();
            e2 = f64::max(e2, (a.1 - d2).abs());
            e_second = e_second.max(((4.0 * a.1 - b.1) / 3.0 - d2).abs());
        }
        let order = (e1_coarse / e1).log2();
        Ok(Check::at_most("ρ'_Φ against central differences, step 1e-3", "rotation-derivatives", e1 / 10.0, 1e-6)
            .with_detail(format!(
                "observed order {order:.2} (steps 1e-3, 2e-3); ρ''_ΦΦ max error {e2:.2e}, extrapolated {e_second:.2e}"
            ))
            .and_also((order - 2.0).abs() < 0.3 && e2 < 1e-5))
    })()));

    out.push(catch("sign of ρ'_Φ, translation-invariant field", "rotation-sign", 1e-6, (|| {
        let p = pipeline(&SyntheticDensitySpec::of(Family::TranslationInvariant), cfg.l_max)?;
        let u = Direction::z_axis();
        let g = Direction::x_axis();
        let w = u.rotated_about(&g, 0.3);
        let f = Flag::new(Point3::zeros(), g.into_inner(), w)?;
        let (d1, _) = p.field.rho_rotational_derivs(&f)?;
        let s = 1e-4;
        let fd = (p.field.flag_density_at(&f.rotated_about_line(s))? - p.field.flag_density_at(&f.rotated_about_line(-s))?)
            / (2.0 * s);
        Ok(Check::at_most("sign of ρ'_Φ, translation-invariant field", "rotation-sign", (d1 - fd).abs(), 1e-6)
            .with_detail(format!("analytic {d1:.6e}, finite difference {fd:.6e}"))
            .and_also(d1.signum() == fd.signum() && d1 != 0.0))
    })()));

    out.push(catch("ρ'_y against the differentiated density", "spatial-derivatives", 1e-4, (|| {
        let exact_field = FlagDensityField::from_density(bump.density.clone(), 24);
        let (mut worst, mut e_fine, mut e_coarse) = (0.0f64, 0.0, 0.0);
        for _ in 0..n.min(10) {
            let f = Flag::from_plane(random_point(&mut rng, 0.8), random_direction(&mut rng), random_angle(&mut rng));
            let exact = bump.density.rho_y_exact(&f);
            let s = rho_spatial_derivs(&bump.field, &f, cfg.delta, false)?;
            worst = worst.max((s.rho_y - exact).abs());
            e_coarse += (rho_spatial_derivs(&exact_field, &f, 0.04, false)?.rho_y - exact).abs();
            e_fine += (rho_spatial_derivs(&exact_field, &f, 0.02, false)?.rho_y - exact).abs();
        }
        let order = (e_coarse / e_fine).log2();
        Ok(Check::at_most("ρ'_y against the differentiated density", "spatial-derivatives", worst, 1e-4)
            .with_detail(format!("observed order {order:.2} (steps 0.04, 0.02)"))
            .and_also((order - 2.0).abs() < 0.3))
    })()));

    out.push(catch("∂²M along the plane against direct quadrature", "mass-derivatives", 1e-4, (|| {
        let mut worst = 0.0f64;
        for _ in 0..n.min(10) {
            let x = random_point(&mut rng, 0.8);
            let w = random_direction(&mut rng);
            let phi = random_angle(&mut rng);
            let d = crate::sphere::tangent_direction(&w, phi);
            let fd = bundle_mass_derivs(&bump.field, &x, &w, phi, cfg.delta)?;
            worst = worst.max((fd - bump.density.bundle_mass_dd_exact(&x, &d)).abs());
        }
        Ok(Check::at_most("∂²M along the plane against direct quadrature", "mass-derivatives", worst, 1e-4))
    })()));

    out.push(catch("translation-invariant spatial derivatives vanish", "spatial-derivatives", 1e-8, (|| {
        let p = pipeline(&SyntheticDensitySpec::of(Family::TranslationInvariant), cfg.l_max)?;
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let f = Flag::from_plane(random_point(&mut rng, 1.0), random_direction(&mut rng), random_angle(&mut rng));
            let s = rho_spatial_derivs(&p.field, &f, cfg.delta, false)?;
            let m = bundle_mass_derivs(&p.field, &f.x, f.normal(), 0.3, cfg.delta)?;
            worst = worst.max(s.rho_y.abs()).max(s.rho_yy.abs()).max(s.rho_phi_y.abs()).max(m.abs());
        }
        Ok(Check::at_most("translation-invariant spatial derivatives vanish", "spatial-derivatives", worst, 1e-8))
    })()));

    let name = format!("radial derivative of tangent flags, {n} configurations");
    out.push(catch(&name, "radial-derivative", 1e-4, (|| {
        let mut worst = 0.0f64;
        for _ in 0..n {
            let (x, w, phi) = (random_point(&mut rng, 0.8), random_direction(&mut rng), random_angle(&mut rng));
            let (l, r) = lemma_radial_check(&bump.field, &x, &w, phi, 1e-3)?;
            worst = worst.max((l - r).abs());
        }
        Ok(Check::at_most(&name, "radial-derivative", worst, 1e-4))
    })()));

    let name = format!("curvature correction of M along meridians, {n} configurations");
    out.push(catch(&name, "curvature-correction", 1e-3, (|| {
        let mut worst = 0.0f64;
        for _ in 0..n {
            let (x, w, phi) = (random_point(&mut rng, 0.8), random_direction(&mut rng), random_angle(&mut rng));
            let (l, r) = curvature_correction_check(&bump.field, &x, &w, phi, 1e-2)?;
            worst = worst.max((l - r).abs());
        }
        Ok(Check::at_most(&name, "curvature-correction", worst, 1e-3))
    })()));

    out.push(catch("base-point and frame-seam invariance", "invariance", 1e-3, (|| {
        let (mut spread, mut seam) = (0.0f64, 0.0f64);
        for _ in 0..2 {
            let e = random_plane(&mut rng, 1.0).canonical();
            let (t1, t2) = frame_of_normal(&e.normal);
            let base = reconstruct_plane(&bump.field, &e, cfg)?.value;
            for (a, b) in [(0.4, -0.3), (-0.5, 0.6)] {
                let x = e.foot() + t1.into_inner() * a + t2.into_inner() * b;
                spread = spread.max(rel_err(reconstruct_plane_at(&bump.field, &e, &x, cfg)?.value, base));
            }
            for offset in [0.37, 1.1] {
                let c = ReconstructionConfig {
                    phi_offset: offset,
                    ..cfg.clone()
                };
                seam = seam.max(rel_err(reconstruct_plane(&bump.field, &e, &c)?.value, base));
            }
        }
        Ok(Check::at_most("base-point and frame-seam invariance", "invariance", spread.max(seam), 1e-3)
            .with_detail(format!("base points {spread:.2e}, seam rotations {seam:.2e}")))
    })()));

    out.push(catch("seam independence of the averaged mass curvature", "invariance", 1e-8, (|| {
        let x = random_point(&mut rng, 0.8);
        let w = random_direction(&mut rng);
        let avg = |offset: f64| -> Result<f64> {
            let m = cfg.n_phi;
            let mut s = 0.0;
            for k in 0..m {
                s += bundle_mass_derivs(&bump.field, &x, &w, offset + TAU * k as f64 / m as f64, cfg.delta)?;
            }
            Ok(s / m as f64)
        };
        let (a, b) = (avg(0.0)?, avg(0.61)?);
        Ok(Check::at_most("seam independence of the averaged mass curvature", "invariance", (a - b).abs(), 1e-8))
    })()));
    out
}
