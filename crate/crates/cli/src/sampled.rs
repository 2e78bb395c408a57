//! Metric values read from a table on a declared spherical grid.
//!
//! The file has columns `x,y,z,omega_x,omega_y,omega_z,H`, comment lines
//! starting with `#`, and one line `# grid_l_max = N`. Every point must
//! carry `H` at all nodes of the standard grid of band limit `N`, which is
//! the layout written by the forward command.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::Vector3;
use serde::Deserialize;

use crofton::reconstruction::QUANTUM;
use crofton::sphere::SphericalQuadrature;
use crofton::{Error, MetricField, Point3};

#[derive(Debug, Deserialize)]
struct Row {
    x: f64,
    y: f64,
    z: f64,
    omega_x: f64,
    omega_y: f64,
    omega_z: f64,
    #[serde(rename = "H")]
    h: f64,
}

const DIRECTION_GRID: f64 = 1e-9;

fn point_key(x: &Point3) -> [i64; 3] {
    [
        (x.x / QUANTUM).round() as i64,
        (x.y / QUANTUM).round() as i64,
        (x.z / QUANTUM).round() as i64,
    ]
}

fn direction_key(d: &Vector3<f64>) -> [i64; 3] {
    [
        (d.x / DIRECTION_GRID).round() as i64,
        (d.y / DIRECTION_GRID).round() as i64,
        (d.z / DIRECTION_GRID).round() as i64,
    ]
}

pub struct SampledMetric {
    grid_l_max: usize,
    n_nodes: usize,
    nodes: HashMap<[i64; 3], usize>,
    values: HashMap<[i64; 3], Vec<f64>>,
}

impl SampledMetric {
    pub fn grid_l_max(&self) -> usize {
        self.grid_l_max
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let grid_l_max = text
            .lines()
            .filter_map(|l| l.strip_prefix('#'))
            .filter_map(|l| l.trim().strip_prefix("grid_l_max"))
            .find_map(|rest| rest.trim().strip_prefix('=').map(|v| v.trim().to_string()))
            .ok_or_else(|| anyhow!("{}: missing `# grid_l_max = N` line", path.display()))?
            .parse::<usize>()
            .with_context(|| format!("{}: grid_l_max is not an integer", path.display()))?;
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let rows = reader
            .deserialize::<Row>()
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("reading rows of {}", path.display()))?;
        Self::from_rows(grid_l_max, rows)
    }

    fn from_rows(grid_l_max: usize, rows: Vec<Row>) -> Result<Self> {
        let quad = SphericalQuadrature::new(grid_l_max);
        let nodes: HashMap<[i64; 3], usize> =
            quad.nodes().iter().enumerate().map(|(i, d)| (direction_key(d.as_vector()), i)).collect();
        let mut values: HashMap<[i64; 3], Vec<f64>> = HashMap::new();
        for r in rows {
            let x = Point3::new(r.x, r.y, r.z);
            let dir = Vector3::new(r.omega_x, r.omega_y, r.omega_z);
            let Some(&i) = nodes.get(&direction_key(&dir)) else {
                bail!("direction {dir:?} at point {x:?} is not a node of the grid with grid_l_max = {grid_l_max}");
            };
            let v = values.entry(point_key(&x)).or_insert_with(|| vec![f64::NAN; quad.len()]);
            if !v[i].is_nan() {
                bail!("duplicate sample at point {x:?}, direction {dir:?}");
            }
            v[i] = r.h;
        }
        for (k, v) in &values {
            let missing = v.iter().filter(|h| h.is_nan()).count();
            if missing > 0 {
                let x = Point3::new(k[0] as f64, k[1] as f64, k[2] as f64) * QUANTUM;
                bail!("point {x:?} lacks {missing} of the {} grid nodes", v.len());
            }
        }
        Ok(SampledMetric {
            grid_l_max,
            n_nodes: quad.len(),
            nodes,
            values,
        })
    }

    fn at(&self, x: &Point3) -> crofton::Result<&Vec<f64>> {
        self.values
            .get(&point_key(x))
            .ok_or_else(|| Error::MissingSamples(format!("no samples at point ({}, {}, {})", x.x, x.y, x.z)))
    }
}

impl MetricField for SampledMetric {
    fn metric(&self, x: &Point3, dir: &Vector3<f64>) -> crofton::Result<f64> {
        let i = self
            .nodes
            .get(&direction_key(dir))
            .ok_or_else(|| Error::GridMismatch(format!("direction {dir:?} is not a grid node")))?;
        Ok(self.at(x)?[*i])
    }

    fn sample_on(&self, x: &Point3, quad: &SphericalQuadrature) -> crofton::Result<Vec<f64>> {
        if quad.l_max() != self.grid_l_max || quad.len() != self.n_nodes {
            return Err(Error::GridMismatch(format!(
                "samples are on the grid with grid_l_max = {}, requested l_max = {}",
                self.grid_l_max,
                quad.l_max()
            )));
        }
        self.at(x).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_for(l: usize, x: [f64; 3], f: impl Fn(&Vector3<f64>) -> f64) -> Vec<Row> {
        SphericalQuadrature::new(l)
            .nodes()
            .iter()
            .map(|d| Row {
                x: x[0],
                y: x[1],
                z: x[2],
                omega_x: d.x,
                omega_y: d.y,
                omega_z: d.z,
                h: f(d.as_vector()),
            })
            .collect()
    }

    #[test]
    fn lookup_and_grid_checks() {
        let m = SampledMetric::from_rows(4, rows_for(4, [0.1, 0.2, 0.3], |d| 1.0 + d.z * d.z)).unwrap();
        let x = Point3::new(0.1, 0.2, 0.3);
        let quad = SphericalQuadrature::new(4);
        let v = m.sample_on(&x, &quad).unwrap();
        assert_eq!(v.len(), quad.len());
        assert_eq!(m.metric(&x, quad.nodes()[3].as_vector()).unwrap(), v[3]);
        assert!(matches!(m.sample_on(&Point3::zeros(), &quad), Err(Error::MissingSamples(_))));
        assert!(matches!(m.sample_on(&x, &SphericalQuadrature::new(6)), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn incomplete_points_are_rejected() {
        let mut rows = rows_for(4, [0.0; 3], |_| 1.0);
        rows.pop();
        assert!(SampledMetric::from_rows(4, rows).is_err());
        assert!(SampledMetric::from_rows(6, rows_for(4, [0.0; 3], |_| 1.0)).is_err());
    }
}
