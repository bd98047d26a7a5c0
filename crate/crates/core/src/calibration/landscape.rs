use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CostKind, Objective};
use crate::error::{invalid, Result};
use crate::measurement::ErrorModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LandscapeAxis {
    /// Position of the scanned parameter in the model's flat parameter vector.
    pub param_index: usize,
    pub name: String,
    pub values: Vec<f64>,
}

impl LandscapeAxis {
    /// `n` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(param_index: usize, name: impl Into<String>, lo: f64, hi: f64, n: usize) -> Self {
        let values = match n {
            0 => vec![],
            1 => vec![lo],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        };
        Self {
            param_index,
            name: name.into(),
            values,
        }
    }
}

/// Cost sampled on a 1-D or 2-D parameter grid. `values` is row-major with
/// the first axis varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LandscapeGrid {
    pub kind: CostKind,
    pub param_names: Vec<String>,
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl LandscapeGrid {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len()).collect()
    }

    /// Grid coordinates of flat index `k`.
    pub fn coords(&self, k: usize) -> Vec<usize> {
        match self.axes.len() {
            1 => vec![k],
            _ => vec![k / self.axes[1].len(), k % self.axes[1].len()],
        }
    }

    /// Parameter values at flat index `k`.
    pub fn point(&self, k: usize) -> Vec<f64> {
        self.coords(k).iter().zip(&self.axes).map(|(&i, a)| a[i]).collect()
    }

    /// Flat index of the lowest value, first on ties.
    pub fn argmin(&self) -> usize {
        crate::optim::argmin(&self.values).unwrap_or(0)
    }

    /// Flat index of the highest value, first on ties.
    pub fn argmax(&self) -> usize {
        let neg: Vec<f64> = self.values.iter().map(|v| -v).collect();
        crate::optim::argmin(&neg).unwrap_or(0)
    }

    fn neighbours(&self, k: usize) -> Vec<usize> {
        let shape = self.shape();
        let c = self.coords(k);
        let mut out = Vec::with_capacity(4);
        for d in 0..c.len() {
            for step in [-1i64, 1] {
                let v = c[d] as i64 + step;
                if v < 0 || v >= shape[d] as i64 {
                    continue;
                }
                let mut n = c.clone();
                n[d] = v as usize;
                out.push(if n.len() == 1 { n[0] } else { n[0] * shape[1] + n[1] });
            }
        }
        out
    }

    /// CSV with one row per node: the parameter values, then the cost.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let kind = match self.kind {
            CostKind::PurityModulation => "delta_p",
            CostKind::MinPurity => "p_min",
        };
        writeln!(w, "{},{kind}", self.param_names.join(","))?;
        for k in 0..self.values.len() {
            let p: Vec<String> = self.point(k).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{},{}", p.join(","), self.values[k])?;
        }
        Ok(())
    }
}

/// Evaluates the objective on every grid node, all other parameters held at `base`.
pub fn landscape(objective: &Objective, base: &ErrorModel, axes: &[LandscapeAxis]) -> Result<LandscapeGrid> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(invalid(format!("landscapes take 1 or 2 axes, got {}", axes.len())));
    }
    let x0 = base.params();
    for a in axes {
        if a.param_index >= x0.len() {
            return Err(invalid(format!("axis {} scans parameter {} of {}", a.name, a.param_index, x0.len())));
        }
        if a.values.is_empty() || a.values.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("axis {} needs finite values", a.name)));
        }
    }
    let grid = LandscapeGrid {
        kind: objective.kind,
        param_names: axes.iter().map(|a| a.name.clone()).collect(),
        axes: axes.iter().map(|a| a.values.clone()).collect(),
        values: Vec::new(),
    };
    let n: usize = grid.shape().iter().product();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut x = x0.clone();
            for (a, &i) in axes.iter().zip(&grid.coords(k)) {
                x[a.param_index] = a.values[i];
            }
            objective.eval(&x)
        })
        .collect();
    Ok(LandscapeGrid { values, ..grid })
}

/// Shape of the region around the global minimum of a cost landscape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BasinStats {
    pub argmin: usize,
    pub min_value: f64,
    /// Nodes connected to the minimum (grid neighbours) whose cost is at most
    /// `factor × min_value`.
    pub basin_size: usize,
    /// Connected regions of the whole sublevel set `cost ≤ factor × min_value`.
    pub regions: usize,
}

impl BasinStats {
    /// A valley through the minimum spanning at least `nodes` grid nodes.
    pub fn is_rift(&self, nodes: usize) -> bool {
        self.basin_size >= nodes
    }
}

pub fn minimum_basin(grid: &LandscapeGrid, factor: f64) -> BasinStats {
    let argmin = grid.argmin();
    let min_value = grid.values[argmin];
    let level = factor * min_value;
    let inside: Vec<bool> = grid.values.iter().map(|v| *v <= level).collect();
    let mut label = vec![usize::MAX; grid.values.len()];
    let mut regions = 0;
    let mut basin_size = 0;
    for seed in 0..grid.values.len() {
        if !inside[seed] || label[seed] != usize::MAX {
            continue;
        }
        let mut stack = vec![seed];
        label[seed] = regions;
        let mut size = 0;
        while let Some(k) = stack.pop() {
            size += 1;
            for n in grid.neighbours(k) {
                if inside[n] && label[n] == usize::MAX {
                    label[n] = regions;
                    stack.push(n);
                }
            }
        }
        if label[argmin] == regions {
            basin_size = size;
        }
        regions += 1;
    }
    BasinStats {
        argmin,
        min_value,
        basin_size,
        regions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(values: Vec<f64>, rows: usize, cols: usize) -> LandscapeGrid {
        LandscapeGrid {
            kind: CostKind::PurityModulation,
            param_names: vec!["a".into(), "b".into()],
            axes: vec![(0..rows).map(|i| i as f64).collect(), (0..cols).map(|i| i as f64).collect()],
            values,
        }
    }

    #[test]
    fn linspace_endpoints() {
        let a = LandscapeAxis::linspace(0, "d", -0.15, 0.15, 41);
        assert_eq!(a.values.len(), 41);
        assert_eq!(a.values[0], -0.15);
        assert_eq!(a.values[40], 0.15);
        assert!(a.values[20].abs() < 1e-15);
    }

    #[test]
    fn basin_of_a_bowl() {
        let mut v = Vec::new();
        for i in 0..7 {
            for j in 0..7 {
                v.push(((i as f64 - 3.2).powi(2) + (j as f64 - 2.9).powi(2)).sqrt());
            }
        }
        let s = minimum_basin(&grid(v, 7, 7), 2.0);
        assert_eq!(s.argmin, 3 * 7 + 3);
        assert_eq!(s.basin_size, 1);
        assert_eq!(s.regions, 1);
        assert!(!s.is_rift(5));
    }

    #[test]
    fn basin_of_a_valley() {
        let mut v = Vec::new();
        for i in 0..7 {
            for j in 0..7 {
                v.push(0.01 + 0.001 * (i as f64 - 3.0).abs() + (j as f64 - 3.0).abs());
            }
        }
        let s = minimum_basin(&grid(v, 7, 7), 2.0);
        assert_eq!(s.basin_size, 7);
        assert!(s.is_rift(5));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let g = grid(vec![0.5; 21 * 21], 21, 21);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 442);
        assert_eq!(text.lines().next().unwrap(), "a,b,delta_p");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn neighbours_in_one_dimension() {
        let g = LandscapeGrid {
            kind: CostKind::MinPurity,
            param_names: vec!["c1".into()],
            axes: vec![vec![0.0, 1.0, 2.0]],
            values: vec![0.9, 0.95, 0.93],
        };
        assert_eq!(g.neighbours(1), vec![0, 2]);
        assert_eq!(g.argmax(), 1);
    }
}
