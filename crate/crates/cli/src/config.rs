//! JSON configuration schema for every subcommand.
//!
//! Unknown keys are rejected. Relative paths are resolved against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use jbshap::attack::AttackConfig;
use jbshap::density::{CategoricalTable, NceConfig};
use jbshap::metrics::{DeletionTarget, RemovalOrder};
use jbshap::value_functions::SurrogateConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    Table {
        entries: Vec<TableEntry>,
        #[serde(default)]
        default: f64,
    },
    /// Network JSON as written by `train-surrogate` or the library.
    Network { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Table { entries: Vec<TableEntry> },
    Constant { value: f64 },
    Categorical { tables: Vec<CategoricalTable> },
    /// Row frequencies of the dataset.
    Empirical,
    /// Gaussian kernel around each dataset row.
    Smoothed { sigma: f64 },
    /// Classifier JSON written by `train-density`.
    Classifier { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineSpec {
    Point { values: Vec<f64> },
    /// Column means of the dataset.
    Mean,
    Distribution {
        points: Vec<Vec<f64>>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// Uniform over the product of per-feature value lists.
    Grid { supports: Vec<Vec<f64>> },
    /// Uniform over the dataset rows.
    Dataset,
}

impl BaselineSpec {
    pub fn is_distribution(&self) -> bool {
        matches!(self, Self::Distribution { .. } | Self::Grid { .. } | Self::Dataset)
    }

    pub fn needs_dataset(&self) -> bool {
        matches!(self, Self::Mean | Self::Dataset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ExplicandSpec {
    Points { points: Vec<Vec<f64>> },
    /// Zero-based dataset row indices.
    Rows { rows: Vec<usize> },
    AllRows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SupportSpec {
    Discrete { values: Vec<Vec<f64>> },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueFunctionSpec {
    Bshap,
    Rbshap { samples: usize },
    Jbshap,
    Rjbshap { samples: usize },
    CesEmpirical,
    CesSample { support: SupportSpec, samples: usize },
    /// Surrogate JSON written by `train-surrogate`.
    CesSupervised { path: PathBuf },
}

impl ValueFunctionSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bshap => "bshap",
            Self::Rbshap { .. } => "rbshap",
            Self::Jbshap => "jbshap",
            Self::Rjbshap { .. } => "rjbshap",
            Self::CesEmpirical => "ces_empirical",
            Self::CesSample { .. } => "ces_sample",
            Self::CesSupervised { .. } => "ces_supervised",
        }
    }

    pub fn needs_density(&self) -> bool {
        matches!(self, Self::Jbshap | Self::Rjbshap { .. } | Self::CesSample { .. })
    }

    pub fn needs_distribution(&self) -> bool {
        matches!(self, Self::Rbshap { .. } | Self::Rjbshap { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSpec {
    Exact,
    Permutation { permutations: usize },
    Truncated { permutations: usize, frac: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainConfig {
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    pub model: ModelSpec,
    #[serde(default)]
    pub density: Option<DensitySpec>,
    pub baseline: BaselineSpec,
    pub explicands: ExplicandSpec,
    pub value_function: ValueFunctionSpec,
    pub estimator: EstimatorSpec,
    #[serde(default = "yes")]
    pub normalize_global: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxiomsConfig {
    pub builders: Vec<String>,
    pub trials: usize,
    pub tolerance: f64,
    #[serde(default = "two")]
    pub min_dim: usize,
    #[serde(default = "four")]
    pub max_dim: usize,
    #[serde(default)]
    pub density_floor: f64,
    /// Also run the explanation-level transfer check.
    #[serde(default)]
    pub transfer: bool,
}

fn two() -> usize {
    2
}

fn four() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySpec {
    pub fracs: Vec<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    pub model: ModelSpec,
    #[serde(default)]
    pub density: Option<DensitySpec>,
    pub explicand: Vec<f64>,
    pub baseline: Vec<f64>,
    pub value_function: ValueFunctionSpec,
    pub estimator: EstimatorSpec,
    pub fractions: Vec<f64>,
    pub target: DeletionTarget,
    #[serde(default)]
    pub order: RemovalOrder,
    #[serde(default)]
    pub sensitivity: Option<SensitivitySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainDensityConfig {
    pub dataset: PathBuf,
    pub baseline: BaselineSpec,
    #[serde(default = "one")]
    pub noise_ratio: usize,
    pub nce: NceConfig,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSurrogateConfig {
    pub dataset: PathBuf,
    pub model: ModelSpec,
    pub surrogate: SurrogateConfig,
}

/// One parsed config per subcommand.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentConfig {
    Explain(ExplainConfig),
    Attack(AttackConfig),
    Axioms(AxiomsConfig),
    Metrics(MetricsConfig),
    TrainDensity(TrainDensityConfig),
    TrainSurrogate(TrainSurrogateConfig),
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
