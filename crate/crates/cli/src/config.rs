//! Run configuration: one flat TOML table, every key overridable from the
//! command line with `--key value`.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use crofton::harness::{Family, SuiteOptions, SyntheticDensitySpec};
use crofton::reconstruction::ReconstructionConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub format: Format,
    /// Output file; standard output when absent.
    pub output: Option<PathBuf>,
    /// Sampled-metric table; the synthetic density is used when absent.
    pub input: Option<PathBuf>,

    pub family: Family,
    pub c: f64,
    pub u: [f64; 3],
    pub beta: f64,
    pub q: [f64; 3],
    pub sigma: f64,
    /// Adds `odd_perturbation · Ω_x` to the metric.
    pub odd_perturbation: f64,
    pub odd_tol: f64,

    /// Points of the forward grid.
    pub points: Vec<[f64; 3]>,
    /// Point of the zonoid command.
    pub point: [f64; 3],
    /// Number of random planes for reconstruct and calibrate.
    pub planes: usize,
    /// Support distances of random planes are uniform in `[−p_max, p_max]`.
    pub p_max: f64,
    /// Explicit planes `[p, ξx, ξy, ξz]`; replaces the random planes.
    pub plane_list: Vec<[f64; 4]>,
    /// Also evaluate the disc-limit oracle in reconstruct.
    pub oracle: bool,

    pub suite: String,
    pub suite_planes: usize,
    pub suite_oracle_planes: usize,
    pub suite_samples: usize,

    pub l_max: usize,
    pub delta: f64,
    pub n_phi: usize,
    pub phi_offset: f64,
    pub c_norm: f64,
    pub include_normal_term: bool,
    pub richardson: bool,
    pub alpha_sequence: Vec<f64>,
    pub disc_rings: usize,
    pub disc_azimuths: usize,
    pub oracle_step: f64,
    pub oracle_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = SyntheticDensitySpec::default();
        let rc = ReconstructionConfig::default();
        let so = SuiteOptions::default();
        RunConfig {
            seed: 1,
            format: Format::Csv,
            output: None,
            input: None,
            family: spec.family,
            c: spec.c,
            u: spec.u,
            beta: spec.beta,
            q: spec.q,
            sigma: spec.sigma,
            odd_perturbation: 0.0,
            odd_tol: crofton::zonoid::DEFAULT_ODD_TOL,
            points: vec![[0.0; 3]],
            point: [0.0; 3],
            planes: 50,
            p_max: 1.0,
            plane_list: Vec::new(),
            oracle: false,
            suite: "identities".into(),
            suite_planes: so.planes,
            suite_oracle_planes: so.oracle_planes,
            suite_samples: so.samples,
            l_max: rc.l_max,
            delta: rc.delta,
            n_phi: rc.n_phi,
            phi_offset: rc.phi_offset,
            c_norm: rc.c_norm,
            include_normal_term: rc.include_normal_term,
            richardson: rc.richardson,
            alpha_sequence: rc.alpha_sequence,
            disc_rings: rc.disc_rings,
            disc_azimuths: rc.disc_azimuths,
            oracle_step: rc.oracle_step,
            oracle_tol: rc.oracle_tol,
        }
    }
}

impl RunConfig {
    /// Reads the optional config file and applies `--key value` overrides.
    pub fn load(file: Option<&PathBuf>, overrides: &[String]) -> Result<Self> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                text.parse::<toml::Table>()
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => toml::Table::new(),
        };
        for (key, value) in parse_overrides(overrides)? {
            table.insert(key, value);
        }
        let text = toml::to_string(&table)?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| anyhow!("invalid configuration: {e}"))?;
        cfg.reconstruction().validate()?;
        Ok(cfg)
    }

    pub fn reconstruction(&self) -> ReconstructionConfig {
        ReconstructionConfig {
            l_max: self.l_max,
            delta: self.delta,
            n_phi: self.n_phi,
            phi_offset: self.phi_offset,
            c_norm: self.c_norm,
            include_normal_term: self.include_normal_term,
            richardson: self.richardson,
            alpha_sequence: self.alpha_sequence.clone(),
            disc_rings: self.disc_rings,
            disc_azimuths: self.disc_azimuths,
            oracle_step: self.oracle_step,
            oracle_tol: self.oracle_tol,
        }
    }

    pub fn density_spec(&self) -> SyntheticDensitySpec {
        SyntheticDensitySpec {
            family: self.family,
            c: self.c,
            u: self.u,
            beta: self.beta,
            q: self.q,
            sigma: self.sigma,
        }
    }

    pub fn suite_options(&self) -> SuiteOptions {
        SuiteOptions {
            config: self.reconstruction(),
            planes: self.suite_planes,
            oracle_planes: self.suite_oracle_planes,
            samples: self.suite_samples,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// `--key value` and `--key=value` pairs. Values are read as TOML and fall
/// back to plain strings; dashes in keys become underscores.
fn parse_overrides(args: &[String]) -> Result<Vec<(String, toml::Value)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            bail!("unexpected argument `{arg}`; overrides are `--key value`");
        };
        let (key, raw) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| anyhow!("missing value for `--{flag}`"))?;
                (flag.to_string(), v.clone())
            }
        };
        out.push((key.replace('-', "_"), parse_value(&raw)));
    }
    Ok(out)
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.reconstruction(), ReconstructionConfig::default());
    }

    #[test]
    fn override_values() {
        let args: Vec<String> = ["--delta", "0.02", "--family=constant", "--u", "[1, 0, 0]", "--l-max", "8"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let c = RunConfig::load(None, &args).unwrap();
        assert_eq!(c.delta, 0.02);
        assert_eq!(c.family, Family::Constant);
        assert_eq!(c.u, [1.0, 0.0, 0.0]);
        assert_eq!(c.l_max, 8);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::load(None, &["--bogus".into(), "1".into()]).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }
}
