//! Experiment configuration: one TOML file with a section per command, overridden by
//! command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use dnaexp::channel::{DecodeRule, SequencingErrorModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    #[default]
    Greedy,
    Repetition,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    None,
    Erasure,
    Random,
    Adversarial,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum DecoderKind {
    #[default]
    DistinctIntersection,
    MultiplicityCount,
    UniqueSuperset,
}

impl From<DecoderKind> for DecodeRule {
    fn from(d: DecoderKind) -> Self {
        match d {
            DecoderKind::DistinctIntersection => DecodeRule::DistinctIntersection,
            DecoderKind::MultiplicityCount => DecodeRule::MultiplicityCount,
            DecoderKind::UniqueSuperset => DecodeRule::UniqueSuperset,
        }
    }
}

impl ModelKind {
    pub fn with(self, p: f64, pair: (usize, usize)) -> SequencingErrorModel {
        match self {
            Self::None => SequencingErrorModel::None,
            Self::Erasure => SequencingErrorModel::Erasure { p },
            Self::Random => SequencingErrorModel::Random { p },
            Self::Adversarial => SequencingErrorModel::Adversarial { p, pair },
        }
    }
}

/// The whole file. Every section is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub exponent: ExponentSpec,
    pub occupancy: OccupancySpec,
    pub codebook: CodebookSpec,
    pub simulate: SimulateSpec,
    pub sweep: SweepSpec,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentSpec {
    pub coverages: Vec<f64>,
    /// Empty means the reference grid.
    pub deltas: Vec<f64>,
    pub tol: f64,
}

impl Default for ExponentSpec {
    fn default() -> Self {
        Self {
            coverages: dnaexp::exponents::FIG1_COVERAGES.to_vec(),
            deltas: Vec::new(),
            tol: dnaexp::exponents::DEFAULT_ROOT_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OccupancySpec {
    pub c: f64,
    pub delta: f64,
    pub m_grid: Vec<u32>,
    /// Explicit `[N, M, K]` queries; when present the convergence schedule is skipped.
    pub queries: Vec<[u32; 3]>,
    pub cell_cap: u64,
}

impl Default for OccupancySpec {
    fn default() -> Self {
        Self {
            c: 1.5,
            delta: 0.5,
            m_grid: vec![100, 200, 400, 800, 1600],
            queries: Vec::new(),
            cell_cap: dnaexp::balls_bins::DEFAULT_CELL_CAP as u64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookSpec {
    pub m: u32,
    pub inner_size: u64,
    pub n: u32,
    /// Target number of codewords.
    pub j: usize,
    pub construction: Construction,
    /// Intersection cap (on supports, for the repetition construction).
    pub cap: u32,
    /// Repetition exponent: `round(M^t)` distinct molecules per codeword.
    pub t: f64,
    pub budget: u64,
    /// Slack `c'` of the K1 upper bound.
    pub c_prime: f64,
    pub seed: u64,
    /// Where to write the codebook file.
    pub save: Option<PathBuf>,
}

impl Default for CodebookSpec {
    fn default() -> Self {
        Self {
            m: 16,
            inner_size: 64,
            n: 32,
            j: 256,
            construction: Construction::Greedy,
            cap: 8,
            t: 0.5,
            budget: 1_000_000,
            c_prime: 0.5,
            seed: 1,
            save: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    /// Load this codebook instead of building one from the `codebook` section.
    pub codebook_file: Option<PathBuf>,
    pub model: ModelKind,
    pub p: f64,
    /// Attack pair; defaults to the pair with the largest intersection.
    pub pair: Option<(usize, usize)>,
    pub decoder: DecoderKind,
    pub epsilon: f64,
    pub eta: f64,
    pub r0: f64,
    pub trials: u64,
    /// Run the paired attack (message uniform over the pair) instead of uniform messages.
    pub attack: bool,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self {
            codebook_file: None,
            model: ModelKind::None,
            p: 0.0,
            pair: None,
            decoder: DecoderKind::DistinctIntersection,
            epsilon: 0.05,
            eta: 0.5,
            r0: 0.0,
            trials: 100_000,
            attack: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub ns: Vec<u32>,
    pub ps: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            ns: vec![16, 24, 32, 48],
            ps: vec![0.0],
        }
    }
}
