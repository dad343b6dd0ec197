//! Experiment configuration (TOML). Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use gfou::levy::LevyModel;
use gfou::process::{GfouSpec, SdeSpec, ValueLaw};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Environment variable consulted for the output directory when neither
/// `--out` nor `out_dir` is given.
pub const OUT_DIR_ENV: &str = "GFOU_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "gfou-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessConfig {
    Gfou(GfouSpec),
    Sde(SdeSpec),
    Fou {
        lambda: f64,
        hurst: f64,
        #[serde(default)]
        x0: f64,
        horizon: f64,
        mesh: f64,
    },
    Gou {
        xi: LevyModel,
        eta: LevyModel,
        v0: ValueLaw,
        horizon: f64,
        mesh: f64,
    },
    W {
        hurst: f64,
        x: ValueLaw,
        #[serde(default)]
        drift: Option<f64>,
        horizon: f64,
        mesh: f64,
    },
    Fbm {
        hurst: f64,
        horizon: f64,
        mesh: f64,
    },
    Levy {
        model: LevyModel,
        horizon: f64,
        mesh: f64,
    },
}

impl ProcessConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProcessConfig::Gfou(_) => "gfou",
            ProcessConfig::Sde(_) => "sde",
            ProcessConfig::Fou { .. } => "fou",
            ProcessConfig::Gou { .. } => "gou",
            ProcessConfig::W { .. } => "w",
            ProcessConfig::Fbm { .. } => "fbm",
            ProcessConfig::Levy { .. } => "levy",
        }
    }

    pub fn horizon_mesh(&self) -> (f64, f64) {
        match self {
            ProcessConfig::Gfou(s) => (s.horizon, s.mesh),
            ProcessConfig::Sde(s) => (s.horizon, s.mesh),
            ProcessConfig::Fou { horizon, mesh, .. }
            | ProcessConfig::Gou { horizon, mesh, .. }
            | ProcessConfig::W { horizon, mesh, .. }
            | ProcessConfig::Fbm { horizon, mesh, .. }
            | ProcessConfig::Levy { horizon, mesh, .. } => (*horizon, *mesh),
        }
    }

    /// Number of cells of the base grid `k·mesh` on `[0, horizon]`.
    pub fn cells(&self) -> Result<usize, CliError> {
        let (horizon, mesh) = self.horizon_mesh();
        if !(horizon > 0.0 && mesh > 0.0 && mesh <= horizon) {
            return Err(CliError::Config(format!("need 0 < mesh <= horizon, got mesh = {mesh}, horizon = {horizon}")));
        }
        let n = (horizon / mesh).round();
        if (n * mesh - horizon).abs() > 1e-9 * horizon {
            return Err(CliError::Config(format!("horizon {horizon} is not a multiple of mesh {mesh}")));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Keep every `thin`-th base-grid point in the path file.
    pub thin: usize,
    pub write_paths: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            thin: 1,
            write_paths: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaOverride {
    pub theta1: f64,
    pub theta2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationConfig {
    pub lags: Vec<f64>,
    pub mc: bool,
    pub series_terms: usize,
    pub batches: usize,
    /// Analytic side uses these constants instead of the simulated model's
    /// (a negative control: the MC column must then disagree).
    pub theta_override: Option<ThetaOverride>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            lags: vec![0.5, 1.0, 2.0, 5.0, 10.0],
            mc: true,
            series_terms: 50,
            batches: 20,
            theta_override: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub oracle: f64,
    pub series: f64,
    pub mc_se: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            oracle: 1e-5,
            series: 1e-6,
            mc_se: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HurstMethod {
    VarianceTime,
    #[serde(rename = "rs")]
    RescaledRange,
}

/// What the estimators are fed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HurstInput {
    /// Differences of the path on the base grid (noise of a self-similar path).
    Increments,
    /// The path values themselves, for a stationary process: long memory
    /// shows in their slowly decaying covariance.
    Values,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HurstConfig {
    pub methods: Vec<HurstMethod>,
    pub input: HurstInput,
    pub bootstrap: usize,
    /// Moving-block length for the bootstrap; default n^{1/2}.
    pub block: Option<usize>,
}

impl Default for HurstConfig {
    fn default() -> Self {
        Self {
            methods: vec![HurstMethod::VarianceTime, HurstMethod::RescaledRange],
            input: HurstInput::Increments,
            bootstrap: 50,
            block: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PVariationConfig {
    pub p_grid: Vec<f64>,
    pub levels: Vec<usize>,
    pub threshold: f64,
}

impl Default for PVariationConfig {
    fn default() -> Self {
        Self {
            p_grid: (0..=12).map(|i| 1.0 + 0.1 * i as f64).collect(),
            levels: (8..=12).collect(),
            threshold: 0.05,
        }
    }
}

fn default_seed() -> u64 {
    1
}

fn default_reps() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub process: ProcessConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default)]
    pub tolerance: Tolerances,
    #[serde(default)]
    pub hurst: HurstConfig,
    #[serde(default)]
    pub pvariation: PVariationConfig,
}

/// Command-line overrides, applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub tolerance: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(r) = o.reps {
            self.reps = r;
        }
        if let Some(j) = o.jobs {
            self.jobs = Some(j);
        }
        if let Some(t) = o.tolerance {
            self.tolerance.oracle = t;
        }
        if let Some(d) = &o.out {
            self.out_dir = Some(d.clone());
        }
        self.check()
    }

    fn check(&self) -> Result<(), CliError> {
        if self.reps == 0 {
            return Err(CliError::Config("reps must be >= 1".into()));
        }
        if self.output.thin == 0 {
            return Err(CliError::Config("output.thin must be >= 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(CliError::Config("jobs must be >= 1".into()));
        }
        let t = self.tolerance;
        if !(t.oracle > 0.0 && t.series > 0.0 && t.mc_se > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        self.process.cells()?;
        Ok(())
    }

    /// Output directory: explicit setting, then the environment, then a
    /// fixed default.
    pub fn resolve_out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form of the
    /// effective configuration. The output directory and thread count are
    /// excluded: neither changes the results.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out_dir = None;
        canon.jobs = None;
        let json = serde_json::to_string(&canon).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn header(&self) -> String {
        format!("config_hash={} seed={}", self.hash(), self.seed)
    }
}
