//! Experiment configuration in TOML.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LassoError, Result};
use crate::grid::GridFunction;
use crate::quasi_ode::Tolerances;
use crate::spectral_forward::Truncation;

/// A potential given by a named preset or explicit nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Constant {
        value: f64,
    },
    Linear {
        slope: f64,
        #[serde(default)]
        intercept: f64,
    },
    /// `Σ c_i x^i`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `amplitude · sin(2π · frequency · x + phase) + offset`.
    Sine {
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `amplitude · exp(-((x - center)/width)²)`.
    Bump {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Values at uniform nodes spanning the whole edge.
    Nodes {
        values: Vec<f64>,
    },
    Sum {
        terms: Vec<PotentialSpec>,
    },
}

fn one() -> f64 {
    1.0
}

impl PotentialSpec {
    pub fn eval(&self, x: f64, length: f64) -> Result<f64> {
        Ok(match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant { value } => *value,
            PotentialSpec::Linear { slope, intercept } => intercept + slope * x,
            PotentialSpec::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            PotentialSpec::Sine {
                amplitude,
                frequency,
                phase,
                offset,
            } => amplitude * (2.0 * PI * frequency * x + phase).sin() + offset,
            PotentialSpec::Bump {
                amplitude,
                center,
                width,
            } => amplitude * (-((x - center) / width).powi(2)).exp(),
            PotentialSpec::Nodes { values } => {
                GridFunction::new(length, values.clone())?.eval(x)?
            }
            PotentialSpec::Sum { terms } => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.eval(x, length)?;
                }
                acc
            }
        })
    }

    /// Samples on `nodes` uniform points of `[0, length]`; an explicit node
    /// array is used as given.
    pub fn to_grid(&self, length: f64, nodes: usize) -> Result<GridFunction> {
        if let PotentialSpec::Nodes { values } = self {
            return GridFunction::new(length, values.clone());
        }
        self.validate()?;
        let h = length / (nodes - 1) as f64;
        let values = (0..nodes)
            .map(|i| self.eval(i as f64 * h, length))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(length, values)
    }

    fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Bump { width, .. } if !(*width > 0.0) => Err(LassoError::Config(
                format!("bump width must be positive, got {width}"),
            )),
            PotentialSpec::Nodes { values } if values.len() < 2 => Err(LassoError::Config(
                "node potential needs at least 2 values".into(),
            )),
            PotentialSpec::Sum { terms } => terms.iter().try_for_each(|t| t.validate()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_tight")]
    pub rtol: f64,
    #[serde(default = "default_tight")]
    pub atol: f64,
    /// Clamp for negative radicands in the periodic step.
    #[serde(default = "default_radicand")]
    pub radicand: f64,
    /// `|d(ν_n)|` at or below this counts as a common zero of `h` and `d`.
    #[serde(default = "default_common_zero")]
    pub common_zero: f64,
    /// Same test on forward `d`, used by the diagnostics.
    #[serde(default = "default_forward_common_zero")]
    pub forward_common_zero: f64,
    /// Relative gap below which eigenvalues coincide.
    #[serde(default = "default_distinct")]
    pub distinct: f64,
}

fn default_tight() -> f64 {
    1e-12
}
fn default_radicand() -> f64 {
    1e-2
}
fn default_common_zero() -> f64 {
    1e-8
}
fn default_forward_common_zero() -> f64 {
    1e-10
}
fn default_distinct() -> f64 {
    1e-8
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rtol: default_tight(),
            atol: default_tight(),
            radicand: default_radicand(),
            common_zero: default_common_zero(),
            forward_common_zero: default_forward_common_zero(),
            distinct: default_distinct(),
        }
    }
}

impl ToleranceConfig {
    pub fn integrator(&self) -> Tolerances {
        Tolerances {
            rtol: self.rtol,
            atol: self.atol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    pub n: usize,
    /// Branch-0 truncation; defaults to `2n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<usize>,
    /// Number of loop eigenvalues; defaults to `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_nu: Option<usize>,
    /// Grid nodes per unit length for preset potentials.
    #[serde(default = "default_nodes_per_unit")]
    pub nodes_per_unit: usize,
    /// Gelfand–Levitan grid nodes.
    #[serde(default = "default_gl_grid")]
    pub gl_grid: usize,
    #[serde(default)]
    pub shift: f64,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    pub sigma1: PotentialSpec,
    pub sigma2: PotentialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

fn default_k() -> usize {
    1
}
fn default_nodes_per_unit() -> usize {
    400
}
fn default_gl_grid() -> usize {
    200
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| LassoError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LassoError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(LassoError::Config("m must be at least 1".into()));
        }
        if self.k == 0 || self.k > self.m {
            return Err(LassoError::Config(format!(
                "k must lie in 1..={}, got {}",
                self.m, self.k
            )));
        }
        if self.n == 0 || self.n0() == 0 || self.n_nu() == 0 {
            return Err(LassoError::Config("truncations must be at least 1".into()));
        }
        if self.nodes_per_unit < 1 || self.gl_grid < 2 {
            return Err(LassoError::Config("grid sizes are too small".into()));
        }
        if !self.shift.is_finite() {
            return Err(LassoError::Config("shift must be finite".into()));
        }
        self.sigma1.validate()?;
        self.sigma2.validate()?;
        Ok(())
    }

    pub fn n0(&self) -> usize {
        self.n0.unwrap_or(2 * self.n)
    }

    pub fn n_nu(&self) -> usize {
        self.n_nu.unwrap_or(self.n)
    }

    pub fn bounds(&self) -> Truncation {
        Truncation {
            n: self.n,
            n0: self.n0(),
        }
    }

    pub fn sigma1_grid(&self) -> Result<GridFunction> {
        self.sigma1
            .to_grid(self.m as f64, self.nodes_per_unit * self.m + 1)
    }

    pub fn sigma2_grid(&self) -> Result<GridFunction> {
        self.sigma2.to_grid(1.0, self.nodes_per_unit + 1)
    }

    /// Overrides from the command line.
    pub fn with_overrides(
        mut self,
        n: Option<usize>,
        k: Option<usize>,
        shift: Option<f64>,
    ) -> Result<Self> {
        if let Some(n) = n {
            self.n = n;
        }
        if let Some(k) = k {
            self.k = k;
        }
        if let Some(c) = shift {
            self.shift = c;
        }
        self.validate()?;
        Ok(self)
    }
}
