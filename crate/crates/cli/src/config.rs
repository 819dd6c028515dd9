//! Resolved run configuration: defaults, overlaid by a JSON config file,
//! overlaid by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use grainforge::appearance::AppearanceParams;
use grainforge::metrics::{ClaheParams, TsneParams, DEFAULT_BF1_TOLERANCE};
use grainforge::rendering::DEFAULT_TAU;
use grainforge::seeding::CorpusOptions;
use grainforge::sim::{SimParams, StepMode};
use grainforge::Exec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedingConfig {
    pub count: usize,
    pub grains: usize,
    pub width: usize,
    pub height: usize,
    pub corpus: CorpusOptions,
}

impl Default for SeedingConfig {
    fn default() -> Self {
        SeedingConfig {
            count: 300,
            grains: 112,
            width: 512,
            height: 512,
            corpus: CorpusOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub steps: u64,
    pub snapshot_every: u64,
    pub mode: StepMode,
    /// 0 disables the energy log.
    pub energy_every: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            steps: 1000,
            snapshot_every: 100,
            mode: StepMode::Sparse,
            energy_every: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub patch: usize,
    /// `None` tiles without overlap.
    pub stride: Option<usize>,
    pub variants: usize,
    pub split: (f64, f64, f64),
    pub include_original: bool,
    pub min_score: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            patch: 512,
            stride: None,
            variants: 15,
            split: (0.8, 0.1, 0.1),
            include_original: false,
            min_score: 0.6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Mask,
    Instances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CharacterizeConfig {
    pub source: LabelSource,
    pub periodic: bool,
    pub pixel_scale: f64,
    pub bins: usize,
    pub include_border: bool,
}

impl Default for CharacterizeConfig {
    fn default() -> Self {
        CharacterizeConfig {
            source: LabelSource::Mask,
            periodic: false,
            pixel_scale: 1.0,
            bins: 20,
            include_border: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    #[serde(flatten)]
    pub params: TsneParams,
    pub standardize: bool,
    /// Split images into non-overlapping patches of this size first.
    pub patch: Option<usize>,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            params: TsneParams::default(),
            standardize: true,
            patch: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub subcommand: String,
    pub out: PathBuf,
    /// Applied to every stage that draws random numbers.
    pub seed: u64,
    pub threads: Option<usize>,
    pub exec: Exec,
    pub tau: f64,
    pub bf1_tolerance: f64,
    pub seeding: SeedingConfig,
    pub sim: SimParams,
    pub simulate: SimulateConfig,
    pub appearance: AppearanceParams,
    pub dataset: DatasetConfig,
    pub characterize: CharacterizeConfig,
    pub tsne: TsneConfig,
    pub clahe: ClaheParams,
    /// Input paths by role, as given on the command line.
    pub inputs: BTreeMap<String, Vec<PathBuf>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            subcommand: String::new(),
            out: PathBuf::from("grainforge-out"),
            seed: 0,
            threads: None,
            exec: Exec::Parallel,
            tau: DEFAULT_TAU,
            bf1_tolerance: DEFAULT_BF1_TOLERANCE,
            seeding: SeedingConfig::default(),
            sim: SimParams::default(),
            simulate: SimulateConfig::default(),
            appearance: AppearanceParams::default(),
            dataset: DatasetConfig::default(),
            characterize: CharacterizeConfig::default(),
            tsne: TsneConfig::default(),
            clahe: ClaheParams::default(),
            inputs: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }

    /// Pushes the global seed into every stage.
    pub fn propagate_seed(&mut self) {
        self.appearance.rng_seed = self.seed;
        self.tsne.params.seed = self.seed;
    }

    pub fn input(&mut self, role: &str, paths: &[PathBuf]) {
        if !paths.is_empty() {
            self.inputs.insert(role.to_string(), paths.to_vec());
        }
    }

    /// Checks cross-field constraints before any work starts.
    pub fn validate(&self) -> grainforge::Result<()> {
        use grainforge::Error;
        self.sim.validate()?;
        self.appearance.validate()?;
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidParameter(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if !(self.bf1_tolerance >= 0.0) {
            return Err(Error::InvalidParameter("bf1 tolerance must be >= 0".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be >= 1".into()));
        }
        if !(self.characterize.pixel_scale > 0.0) {
            return Err(Error::InvalidParameter("pixel scale must be positive".into()));
        }
        Ok(())
    }
}
