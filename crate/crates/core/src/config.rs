//! Run configuration shared by every pipeline command, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bayes::{HierarchicalSpec, Prior};
use crate::data::SynthConfig;
use crate::error::{Error, Result};
use crate::eval::CvConfig;
use crate::grid::{GridSpec, DEFAULT_KDE_BANDWIDTH};
use crate::optimize::FitConfig;
use crate::params::{ModelParams, ModelVariant, ModelVariantName};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub side: usize,
    pub degrees_per_cell: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { side: 64, degrees_per_cell: 0.5 }
    }
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.side, self.degrees_per_cell)
    }
}

/// How the first fixation of a scanpath enters likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstFixationMode {
    #[default]
    Condition,
    /// Scored against the uniform density.
    Uniform,
    /// Scored against the pooled density of all first fixations.
    CentralBias,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Fixation CSV.
    pub path: Option<PathBuf>,
    /// Directory of `<image>.csv` saliency maps. Without it each image's
    /// saliency is the density of all fixations on it.
    pub saliency_dir: Option<PathBuf>,
    /// Weight of the uniform component mixed into estimated densities.
    pub density_floor: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { path: None, saliency_dir: None, density_floor: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub chains: usize,
    pub draws: usize,
    pub burn_in: usize,
    pub pilot_len: usize,
    pub tune_rounds: usize,
    pub target_rate: f64,
    /// Initial proposal sd on each log-parameter before tuning.
    pub initial_sd: f64,
    /// Spread of chain starts around the center, in log units.
    pub start_jitter: f64,
    pub prior: Prior,
    /// Chain starting point; a previous fit's optimum is a good choice.
    pub start: Option<ModelParams>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            draws: 5000,
            burn_in: 1000,
            pilot_len: 200,
            tune_rounds: 10,
            target_rate: 0.25,
            initial_sd: 0.05,
            start_jitter: 0.05,
            prior: Prior::default(),
            start: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HierConfig {
    pub spec: HierarchicalSpec,
    pub sweeps: usize,
    pub burn_in: usize,
}

impl Default for HierConfig {
    fn default() -> Self {
        Self { spec: HierarchicalSpec::default(), sweeps: 2000, burn_in: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    /// Simulated scanpaths per image and observed trial.
    pub repeats: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { repeats: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossvalConfig {
    pub folds: usize,
    pub variants: Vec<ModelVariantName>,
    pub cv: CvConfig,
}

impl Default for CrossvalConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            variants: ModelVariant::comparison_set().into_iter().map(ModelVariantName).collect(),
            cv: CvConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsConfig {
    pub saccade_bin_width: f64,
    pub pcf_radii: Vec<f64>,
    pub pcf_bandwidth: f64,
    pub histogram_bins: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            saccade_bin_width: 0.5,
            pcf_radii: (1..=24).map(|k| k as f64 * 0.5).collect(),
            pcf_bandwidth: 0.5,
            histogram_bins: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    pub variants: Vec<ModelVariantName>,
    /// Previously written fit results; when given, nothing is refit.
    pub fits: Vec<PathBuf>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            variants: vec![ModelVariantName(ModelVariant::subtractive()), ModelVariantName(ModelVariant::divisive())],
            fits: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub out_dir: PathBuf,
    pub grid: GridConfig,
    pub variant: ModelVariantName,
    /// Parameters used by `eval`, `simulate` and `stats`.
    pub params: ModelParams,
    /// A fit result whose optimum replaces `params`.
    pub params_from: Option<PathBuf>,
    pub first_fixation: FirstFixationMode,
    pub kde_bandwidth: f64,
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub fit: FitConfig,
    pub sampler: SamplerConfig,
    pub hier: HierConfig,
    pub simulate: SimulateConfig,
    pub crossval: CrossvalConfig,
    pub stats: StatsConfig,
    pub compare: CompareConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            threads: 0,
            out_dir: PathBuf::from("out"),
            grid: GridConfig::default(),
            variant: ModelVariantName(ModelVariant::subtractive()),
            params: ModelParams::reference_fit(),
            params_from: None,
            first_fixation: FirstFixationMode::Condition,
            kde_bandwidth: DEFAULT_KDE_BANDWIDTH,
            data: DataConfig::default(),
            synth: SynthConfig::default(),
            fit: FitConfig::default(),
            sampler: SamplerConfig::default(),
            hier: HierConfig::default(),
            simulate: SimulateConfig::default(),
            crossval: CrossvalConfig::default(),
            stats: StatsConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Configuration(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Configuration(e.to_string()))
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Propagates the top-level seed into every component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.synth.seed = seed;
        self.fit.seed = seed;
        self.crossval.cv.fit.seed = seed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_hash() {
        let c = RunConfig::default();
        let text = c.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back.to_toml().unwrap(), text);
        assert_eq!(back.hash().unwrap(), c.hash().unwrap());
        assert_ne!(c.clone().with_seed(9).hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn partial_files_take_defaults() {
        let c = RunConfig::from_toml(
            "seed = 4\nvariant = \"divisive-gamma1\"\n[grid]\nside = 32\ndegrees_per_cell = 1.0\n",
        )
        .unwrap();
        assert_eq!(c.grid.side, 32);
        assert_eq!(c.variant.0, ModelVariant::divisive().with_gamma(1.0));
        assert_eq!(c.fit, FitConfig::default());
        assert!(RunConfig::from_toml("variant = \"sideways\"").is_err());
        assert!(RunConfig::from_toml("nonsense = [").is_err());
        assert!(RunConfig::from_toml("sed = 4").is_err());
    }
}
