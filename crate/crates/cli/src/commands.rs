use std::f64::consts::TAU;
use std::sync::Arc;

use anyhow::{bail, Result};
use nalgebra::Vector3;

use crofton::harness::{forward_metric, make_density, random_plane, rel_err, rng_for, run_suite_with, SyntheticDensity, SUITES};
use crofton::reconstruction::{disc_limit_oracle, reconstruct_plane, FlagDensityField, ReconstructionConfig};
use crofton::sphere::{sh_degree, Direction, Parity, SphericalFunction, SphericalQuadrature};
use crofton::zonoid::{cosine_transform_spectral, zonoid_invert};
use crofton::{DensityField, Error, MetricField, PlaneCoords, Point3};

use crate::config::RunConfig;
use crate::output::{Cell, Table};
use crate::sampled::SampledMetric;

/// How a command ended when it produced output.
pub enum Outcome {
    Success,
    /// A computation or verification failed; the output describes it.
    Failed,
}

/// A failure caused by the configuration rather than the computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const METRIC_NOTE: &str = "H(x, Ω) = ∫ |⟨Ω, ξ⟩| h(⟨x, ξ⟩, ξ) dξ over the unit sphere; planes (p, ξ) with signed p, each plane counted once";

/// Adds `eps · Ω_x`, an odd term the zonoid inversion must reject.
struct Perturbed {
    inner: Arc<dyn MetricField>,
    eps: f64,
}

impl MetricField for Perturbed {
    fn metric(&self, x: &Point3, dir: &Vector3<f64>) -> crofton::Result<f64> {
        Ok(self.inner.metric(x, dir)? + self.eps * dir.x)
    }

    fn sample_on(&self, x: &Point3, quad: &SphericalQuadrature) -> crofton::Result<Vec<f64>> {
        let mut v = self.inner.sample_on(x, quad)?;
        for (h, d) in v.iter_mut().zip(quad.nodes()) {
            *h += self.eps * d.x;
        }
        Ok(v)
    }
}

/// The metric named by the config, and the synthetic density behind it when
/// there is one.
struct Source {
    metric: Arc<dyn MetricField>,
    density: Option<Arc<SyntheticDensity>>,
}

fn source(cfg: &RunConfig) -> Result<Source> {
    let wrap = |m: Arc<dyn MetricField>| -> Arc<dyn MetricField> {
        if cfg.odd_perturbation == 0.0 {
            m
        } else {
            Arc::new(Perturbed {
                inner: m,
                eps: cfg.odd_perturbation,
            })
        }
    };
    if let Some(path) = &cfg.input {
        let m = SampledMetric::read(path).map_err(|e| UsageError(format!("{e:#}")))?;
        if m.grid_l_max() != cfg.l_max {
            return Err(UsageError(format!(
                "input grid has grid_l_max = {}, but l_max = {}; set l_max to the grid band limit",
                m.grid_l_max(),
                cfg.l_max
            ))
            .into());
        }
        return Ok(Source {
            metric: wrap(Arc::new(m)),
            density: None,
        });
    }
    let d = Arc::new(make_density(&cfg.density_spec()).map_err(|e| UsageError(e.to_string()))?);
    Ok(Source {
        metric: wrap(Arc::new(forward_metric(d.clone()))),
        density: Some(d),
    })
}

fn error_table(command: &'static str, e: &Error) -> Table {
    let mut t = Table::new(command, &["error", "message", "value", "tolerance"]);
    let (kind, value, tol) = match e {
        Error::OddPartTooLarge {
            relative_energy,
            tolerance,
        } => ("odd_part_too_large", Cell::Num(*relative_energy), Cell::Num(*tolerance)),
        Error::NoConvergence { difference, tolerance } => ("no_convergence", Cell::Num(*difference), Cell::Num(*tolerance)),
        Error::MissingSamples(_) => ("missing_samples", Cell::Empty, Cell::Empty),
        Error::GridMismatch(_) => ("grid_mismatch", Cell::Empty, Cell::Empty),
        _ => ("error", Cell::Empty, Cell::Empty),
    };
    t.push(vec![Cell::Text(kind.into()), Cell::Text(e.to_string()), value, tol]);
    t
}

/// Writes `table`, or an error record when the computation failed.
fn finish(cfg: &RunConfig, command: &'static str, r: crofton::Result<Table>) -> Result<Outcome> {
    match r {
        Ok(t) => {
            t.write(cfg)?;
            Ok(Outcome::Success)
        }
        Err(e) => {
            eprintln!("{command}: {e}");
            error_table(command, &e).write(cfg)?;
            Ok(Outcome::Failed)
        }
    }
}

pub fn forward(cfg: &RunConfig) -> Result<Outcome> {
    let src = source(cfg)?;
    let quad = SphericalQuadrature::new(cfg.l_max);
    let r = (|| {
        let mut t = Table::new("forward", &["x", "y", "z", "omega_x", "omega_y", "omega_z", "H"]);
        t.note(METRIC_NOTE);
        t.note(format!("grid_l_max = {}", cfg.l_max));
        for p in &cfg.points {
            let x = Point3::from(*p);
            let values = src.metric.sample_on(&x, &quad)?;
            for (d, h) in quad.nodes().iter().zip(values) {
                t.push(vec![p[0].into(), p[1].into(), p[2].into(), d.x.into(), d.y.into(), d.z.into(), h.into()]);
            }
        }
        Ok(t)
    })();
    finish(cfg, "forward", r)
}

pub fn zonoid(cfg: &RunConfig) -> Result<Outcome> {
    let src = source(cfg)?;
    let quad = Arc::new(SphericalQuadrature::new(cfg.l_max));
    let x = Point3::from(cfg.point);
    let r = (|| {
        let values = src.metric.sample_on(&x, &quad)?;
        let metric = SphericalFunction::from_values(quad.clone(), values, Parity::Even);
        let h = zonoid_invert(&metric, cfg.l_max, cfg.odd_tol)?;
        let back = cosine_transform_spectral(&h);
        let mut t = Table::new(
            "zonoid",
            &["record", "n", "m", "omega_x", "omega_y", "omega_z", "h", "H", "residual"],
        );
        t.note(METRIC_NOTE);
        t.note("coefficient rows: real orthonormal harmonics Y_{n,m}; node rows: values on the grid; residual = |forward(h) − H|");
        t.note(format!("point = [{}, {}, {}]", x.x, x.y, x.z));
        for (i, (ch, cm)) in h.coeffs().iter().zip(metric.coeffs()).enumerate() {
            let n = sh_degree(i);
            if n > cfg.l_max {
                break;
            }
            let m = i as i64 - (n * n + n) as i64;
            let residual = if n % 2 == 0 { (back.coeffs()[i] - cm).abs() } else { cm.abs() };
            t.push(vec![
                Cell::Text("coefficient".into()),
                Cell::Int(n as i64),
                Cell::Int(m),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                (*ch).into(),
                (*cm).into(),
                residual.into(),
            ]);
        }
        for ((d, hv), (hm, fb)) in quad.nodes().iter().zip(h.values()).zip(metric.values().iter().zip(back.values())) {
            t.push(vec![
                Cell::Text("node".into()),
                Cell::Empty,
                Cell::Empty,
                d.x.into(),
                d.y.into(),
                d.z.into(),
                (*hv).into(),
                (*hm).into(),
                (fb - hm).abs().into(),
            ]);
        }
        Ok(t)
    })();
    finish(cfg, "zonoid", r)
}

fn planes(cfg: &RunConfig) -> Result<Vec<PlaneCoords>> {
    if cfg.plane_list.is_empty() {
        let mut rng = rng_for(cfg.seed, "planes");
        return Ok((0..cfg.planes).map(|_| random_plane(&mut rng, cfg.p_max)).collect());
    }
    cfg.plane_list
        .iter()
        .map(|e| {
            let n = Direction::from_xyz(e[1], e[2], e[3])
                .map_err(|_| UsageError(format!("plane_list entry {e:?} has a zero normal")))?;
            Ok(PlaneCoords::new(e[0], n))
        })
        .collect()
}

pub fn reconstruct(cfg: &RunConfig) -> Result<Outcome> {
    let src = source(cfg)?;
    let rc = cfg.reconstruction();
    let field = FlagDensityField::from_metric(src.metric.clone(), rc.l_max, cfg.odd_tol);
    let list = planes(cfg)?;
    let r = (|| {
        let mut t = Table::new(
            "reconstruct",
            &["p", "xi_x", "xi_y", "xi_z", "h_reconstructed", "h_true", "h_oracle", "rel_error", "c_norm"],
        );
        t.note("planes are written in canonical form (p ≥ 0); rel_error is against h_true, else h_oracle");
        for e in &list {
            let e = e.canonical();
            let h = reconstruct_plane(&field, &e, &rc)?.value;
            let truth = src.density.as_ref().map(|d| d.at(&e));
            let oracle = if cfg.oracle {
                Some(disc_limit_oracle(&field, &e, &e.foot(), &rc)?.value)
            } else {
                None
            };
            let err = truth.or(oracle).map(|r| rel_err(h, r));
            let n = e.normal.as_vector();
            t.push(vec![
                e.p.into(),
                n.x.into(),
                n.y.into(),
                n.z.into(),
                h.into(),
                truth.into(),
                oracle.into(),
                err.into(),
                rc.c_norm.into(),
            ]);
        }
        Ok(t)
    })();
    finish(cfg, "reconstruct", r)
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    if !SUITES.contains(&cfg.suite.as_str()) {
        return Err(UsageError(format!("unknown suite `{}`; expected one of {}", cfg.suite, SUITES.join(", "))).into());
    }
    let report = run_suite_with(&cfg.suite, cfg.seed, &cfg.suite_options())?;
    let mut t = Table::new(
        "verify",
        &["suite", "check", "identity", "measured", "tolerance", "passed", "detail"],
    );
    t.note(format!("suite = {}, seed = {}, passed = {}", report.suite, report.seed, report.passed));
    for c in &report.checks {
        eprintln!(
            "[{}] {} | {:.3e} <= {:.1e}{}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance,
            c.detail.as_deref().map(|d| format!(" | {d}")).unwrap_or_default()
        );
        t.push(vec![
            Cell::Text(report.suite.clone()),
            Cell::Text(c.name.clone()),
            Cell::Text(c.tag.clone()),
            c.measured.into(),
            c.tolerance.into(),
            Cell::Bool(c.passed),
            c.detail.clone().map_or(Cell::Empty, Cell::Text),
        ]);
    }
    t.write(cfg)?;
    Ok(if report.passed { Outcome::Success } else { Outcome::Failed })
}

/// Fits `c_norm` so that the constant density `c` reconstructs to itself.
pub fn calibrate(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.input.is_some() {
        bail!(UsageError("calibrate uses the constant density; remove `input`".into()));
    }
    let c = cfg.c;
    if !(c.is_finite() && c != 0.0) {
        bail!(UsageError(format!("calibrate needs a nonzero constant level, got c = {c}")));
    }
    let density: Arc<dyn DensityField> = Arc::new(crofton::transforms::ConstantDensity(c));
    let field = FlagDensityField::from_metric(Arc::new(forward_metric(density)), cfg.l_max, cfg.odd_tol);
    let rc = ReconstructionConfig {
        c_norm: 1.0,
        ..cfg.reconstruction()
    };
    let list = planes(cfg)?;
    let r = (|| {
        let mut t = Table::new("calibrate", &["p", "xi_x", "xi_y", "xi_z", "bracket", "c_norm_fit"]);
        t.note(format!("constant density c = {c}; bracket is the formula with c_norm = 1"));
        let mut sum = 0.0;
        for e in &list {
            let e = e.canonical();
            let b = reconstruct_plane(&field, &e, &rc)?.value;
            sum += b;
            let n = e.normal.as_vector();
            t.push(vec![e.p.into(), n.x.into(), n.y.into(), n.z.into(), b.into(), (c / b).into()]);
        }
        let fit = c * list.len() as f64 / sum;
        t.note(format!("fitted c_norm = {fit:.16e}; 1/(2π) = {:.16e}", 1.0 / TAU));
        eprintln!("fitted c_norm = {fit:.16e} (1/(2π) = {:.16e})", 1.0 / TAU);
        Ok(t)
    })();
    finish(cfg, "calibrate", r)
}
