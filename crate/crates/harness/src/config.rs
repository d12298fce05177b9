//! Scenario files. One TOML document per run, in flat sections.

use std::path::Path;

use aniflow_core::anisotropy::{AnisotropyModel, Family};
use aniflow_core::estimates::Thresholds;
use aniflow_core::evolve::{BcMode, BoundaryCondition, BoundaryData, DiagnosticsConfig, SolverConfig};
use aniflow_core::geometry::{ConvexDomain, Field, Grid, IntervalGrid, PolarGrid};
use aniflow_core::translator::{EpsilonConfig, Method};
use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Must fit in an `i64`: TOML integers are signed.
    #[serde(default)]
    pub seed: u64,
    pub anisotropy: AnisotropySpec,
    pub domain: DomainSpec,
    pub bc: BcSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub translator: TranslatorSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub verify: VerifySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropySpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Interval { half_length: f64, nodes: usize },
    Disk { radius: f64, n_r: usize, n_theta: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcSpec {
    pub mode: BcMode,
    #[serde(flatten)]
    pub data: BoundaryData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialShape {
    Constant {
        value: f64,
    },
    GaussianBump {
        amplitude: f64,
        width: f64,
    },
    /// `sum_m (r / R)^m (a_m cos(m w) + b_m sin(m w))` in the boundary angle `w`;
    /// on an interval only the first coefficient is used, as `a_1 x / L`.
    Fourier {
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    #[serde(flatten)]
    pub shape: InitialShape,
    /// Add the profile that satisfies the boundary condition exactly.
    #[serde(default = "yes")]
    pub compatible: bool,
    /// Amplitude of a seeded random low-mode perturbation.
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "projection_steps")]
    pub project_steps: usize,
}

fn yes() -> bool {
    true
}

fn projection_steps() -> usize {
    20
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            shape: InitialShape::Constant { value: 0.0 },
            compatible: true,
            noise: 0.0,
            project_steps: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslatorSpec {
    /// Methods run by the `translator` command.
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub epsilon: EpsilonConfig,
    #[serde(default = "oracle_nodes")]
    pub oracle_nodes: usize,
}

fn all_methods() -> Vec<Method> {
    vec![Method::ParabolicAverage, Method::EpsilonScheme, Method::Oracle1D]
}

fn oracle_nodes() -> usize {
    401
}

impl Default for TranslatorSpec {
    fn default() -> Self {
        Self {
            methods: all_methods(),
            epsilon: EpsilonConfig::default(),
            oracle_nodes: oracle_nodes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "samples")]
    pub samples: usize,
    #[serde(default = "directions")]
    pub directions: usize,
    #[serde(default = "s_grid")]
    pub s_grid: Vec<f64>,
}

fn samples() -> usize {
    100
}

fn directions() -> usize {
    8
}

fn s_grid() -> Vec<f64> {
    vec![4.0, 8.0, 16.0, 32.0]
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            samples: samples(),
            directions: directions(),
            s_grid: s_grid(),
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn dim(&self) -> usize {
        match self.domain {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::Disk { .. } => 2,
        }
    }

    pub fn model(&self) -> Result<AnisotropyModel> {
        let model = AnisotropyModel::from_family(self.dim(), self.anisotropy.family.clone())?;
        Ok(match self.anisotropy.fd_step {
            Some(h) => model.with_fd_step(h),
            None => model,
        })
    }

    pub fn domain(&self) -> Result<ConvexDomain> {
        Ok(match self.domain {
            DomainSpec::Interval { half_length, .. } => ConvexDomain::interval(half_length)?,
            DomainSpec::Disk { radius, .. } => ConvexDomain::disk(radius)?,
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(match self.domain {
            DomainSpec::Interval { half_length, nodes } => Grid::Interval(IntervalGrid::new(half_length, nodes)?),
            DomainSpec::Disk { radius, n_r, n_theta } => Grid::Polar(PolarGrid::new(radius, n_r, n_theta)?),
        })
    }

    pub fn bc(&self) -> BoundaryCondition {
        BoundaryCondition {
            mode: self.bc.mode,
            data: self.bc.data.clone(),
        }
    }

    /// Initial field before projection.
    pub fn initial_field(&self, grid: &Grid) -> Result<Field> {
        let domain = self.domain()?;
        let bc = self.bc();
        bc.validate(&domain)?;
        let size = domain.size();
        let dim = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise: Vec<(f64, f64)> = (0..3)
            .map(|_| {
                (
                    self.initial.noise * rng.random_range(-1.0..1.0),
                    self.initial.noise * rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let shape = &self.initial.shape;
        if let InitialShape::GaussianBump { width, .. } = shape {
            if !(*width > 0.0) {
                bail!("gaussian bump width must be positive");
            }
        }
        Ok(Field::from_fn(grid, |p| {
            let (r, w) = if dim == 1 {
                (p[0].abs() / size, if p[0] < 0.0 { std::f64::consts::PI } else { 0.0 })
            } else {
                (p[0].hypot(p[1]) / size, p[1].atan2(p[0]))
            };
            let modes = |cos: &[f64], sin: &[f64]| -> f64 {
                let mut s = 0.0;
                for (m, a) in cos.iter().enumerate() {
                    let m = (m + 1) as f64;
                    s += a * r.powf(m) * (m * w).cos();
                }
                for (m, b) in sin.iter().enumerate() {
                    let m = (m + 1) as f64;
                    s += b * r.powf(m) * (m * w).sin();
                }
                s
            };
            let mut u = match shape {
                InitialShape::Constant { value } => *value,
                InitialShape::GaussianBump { amplitude, width } => {
                    let r2 = p[0] * p[0] + if dim == 2 { p[1] * p[1] } else { 0.0 };
                    amplitude * (-r2 / (width * width)).exp()
                }
                InitialShape::Fourier { cos, sin } => {
                    if dim == 1 {
                        cos.first().copied().unwrap_or(0.0) * p[0] / size
                    } else {
                        modes(cos, sin)
                    }
                }
            };
            if self.initial.noise != 0.0 {
                let (a, b): (Vec<f64>, Vec<f64>) = noise.iter().copied().unzip();
                u += if dim == 1 { a[0] * p[0] / size + a[1] * (p[0] / size).powi(2) } else { modes(&a, &b) };
            }
            if self.initial.compatible {
                u += bc.compatible_value(&domain, p);
            }
            u
        }))
    }
}
