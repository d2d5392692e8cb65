//! Real functions on `[0, l]` stored as samples on a uniform grid.

use serde::{Deserialize, Serialize};

use crate::error::{LassoError, Result};

/// A real function on `[0, length]` sampled at `M >= 2` uniform nodes
/// `x_i = i * length / (M - 1)` and interpolated piecewise-linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridFunction {
    length: f64,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    length: f64,
    values: Vec<f64>,
}

impl TryFrom<RawGrid> for GridFunction {
    type Error = LassoError;
    fn try_from(raw: RawGrid) -> Result<Self> {
        GridFunction::new(raw.length, raw.values)
    }
}

impl From<GridFunction> for RawGrid {
    fn from(g: GridFunction) -> Self {
        RawGrid {
            length: g.length,
            values: g.values,
        }
    }
}

impl GridFunction {
    pub fn new(length: f64, values: Vec<f64>) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(LassoError::InvalidInput(format!(
                "grid length must be positive and finite, got {length}"
            )));
        }
        if values.len() < 2 {
            return Err(LassoError::InvalidInput(format!(
                "grid needs at least 2 nodes, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LassoError::InvalidInput(format!(
                "grid value at node {i} is not finite"
            )));
        }
        Ok(Self { length, values })
    }

    /// Samples `f` at `nodes` uniform points of `[0, length]`.
    pub fn from_fn(length: f64, nodes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if nodes < 2 {
            return Err(LassoError::InvalidInput(format!(
                "grid needs at least 2 nodes, got {nodes}"
            )));
        }
        let h = length / (nodes - 1) as f64;
        let values = (0..nodes).map(|i| f(i as f64 * h)).collect();
        Self::new(length, values)
    }

    pub fn zeros(length: f64, nodes: usize) -> Result<Self> {
        Self::from_fn(length, nodes, |_| 0.0)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        self.length / (self.values.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.values.len() {
            self.length
        } else {
            i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.node(i))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let slack = 1e-12 * self.length;
        if !(x >= -slack && x <= self.length + slack) {
            return Err(LassoError::OutOfDomain {
                x,
                length: self.length,
            });
        }
        let x = x.clamp(0.0, self.length);
        let seg = self.segment_of(x);
        let (a, slope) = self.segment(seg);
        Ok(a + slope * (x - self.node(seg)))
    }

    /// Index of the segment `[x_i, x_{i+1}]` containing `x` (clamped).
    pub fn segment_of(&self, x: f64) -> usize {
        let last = self.values.len() - 2;
        let i = (x / self.step()).floor();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(last)
        }
    }

    /// Left value and slope of segment `i`.
    pub fn segment(&self, i: usize) -> (f64, f64) {
        let a = self.values[i];
        let b = self.values[i + 1];
        (a, (b - a) / (self.node(i + 1) - self.node(i)))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Trapezoidal weights matching the node layout.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.values.len()];
        w[0] = 0.5 * h;
        *w.last_mut().unwrap() = 0.5 * h;
        w
    }

    /// Exact integral of the interpolant.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(self.trapezoid_weights())
            .map(|(v, w)| v * w)
            .sum()
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.node(i), v))
            .collect();
        GridFunction {
            length: self.length,
            values,
        }
    }

    /// Resamples onto `nodes` uniform points by linear interpolation.
    pub fn resample(&self, nodes: usize) -> Result<GridFunction> {
        let src = self.clone();
        GridFunction::from_fn(self.length, nodes, move |x| {
            src.eval(x).expect("resample stays inside the domain")
        })
    }

    /// `L2` distance to `other` after removing the best additive constant,
    /// i.e. `min_c || self - other - c ||`, measured on this grid's nodes.
    pub fn l2_distance_mod_constant(&self, other: &GridFunction) -> Result<f64> {
        if (self.length - other.length).abs() > 1e-12 * self.length {
            return Err(LassoError::InvalidInput(format!(
                "grid lengths differ: {} vs {}",
                self.length, other.length
            )));
        }
        let w = self.trapezoid_weights();
        let diff: Vec<f64> = self
            .nodes()
            .zip(&self.values)
            .map(|(x, v)| other.eval(x).map(|o| v - o))
            .collect::<Result<_>>()?;
        let mean = diff.iter().zip(&w).map(|(d, w)| d * w).sum::<f64>() / self.length;
        let sq: f64 = diff
            .iter()
            .zip(&w)
            .map(|(d, w)| (d - mean) * (d - mean) * w)
            .sum();
        Ok(sq.sqrt())
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.trapezoid_weights())
            .map(|(v, w)| v * v * w)
            .sum::<f64>()
            .sqrt()
    }
}
