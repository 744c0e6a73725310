//! Run configuration (TOML) and its hash.

use std::path::{Path, PathBuf};

use drumaug_core::augment::{AugmentationGrid, AugmentationKind};
use drumaug_core::eval::{EvalConfig, Strategy, DEFAULT_VALIDATION_FRACTION};
use drumaug_core::features::McmsConfig;
use drumaug_core::model::{Topology, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Where the source material lives: `audio_dir/<subset>/<id>.wav` with
/// `annotation_dir/<subset>/<id>.txt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub audio_dir: PathBuf,
    pub annotation_dir: PathBuf,
    pub subsets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    /// Strategy names: `original`, `dropout(p)`, `gauss(s)`, `rn`, `ra`, `t`, `t_nc`, `all`.
    #[serde(default = "default_strategies")]
    pub strategies: Vec<String>,
    #[serde(default)]
    pub grid: AugmentationGrid,
    #[serde(default)]
    pub features: McmsConfig,
    #[serde(default)]
    pub model: Topology,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    /// Parent of the `runs/` directory.
    #[serde(default = "default_output_root")]
    pub output_root: PathBuf,
}

fn default_strategies() -> Vec<String> {
    vec!["original".into()]
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

fn default_validation_fraction() -> f64 {
    DEFAULT_VALIDATION_FRACTION
}

fn default_output_root() -> PathBuf {
    PathBuf::from(".")
}

impl RunConfig {
    /// Defaults everywhere except the dataset.
    pub fn new(dataset: DatasetConfig) -> Self {
        Self {
            dataset,
            strategies: default_strategies(),
            grid: AugmentationGrid::default(),
            features: McmsConfig::default(),
            model: Topology::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            seeds: default_seeds(),
            split_seed: 0,
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
            output_root: default_output_root(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths in it are taken relative to the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.dataset.audio_dir, &mut cfg.dataset.annotation_dir, &mut cfg.output_root] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn parsed_strategies(&self) -> Result<Vec<Strategy>> {
        self.strategies.iter().map(|s| s.parse::<Strategy>().map_err(|e| Error::Config(e.to_string()))).collect()
    }

    /// Every check that can be made before touching the data.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let d = &self.dataset;
        for dir in [&d.audio_dir, &d.annotation_dir] {
            if !dir.is_dir() {
                return bad(format!("{} is not a directory", dir.display()));
            }
        }
        if d.subsets.len() < 2 {
            return bad("at least two subsets are needed for cross-validation".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &d.subsets {
            if !seen.insert(s) {
                return bad(format!("subset {s:?} listed twice"));
            }
            if !d.audio_dir.join(s).is_dir() {
                return bad(format!("missing subset directory {}", d.audio_dir.join(s).display()));
            }
        }
        let strategies = self.parsed_strategies()?;
        if strategies.is_empty() {
            return bad("no strategy selected".into());
        }
        let kinds: Vec<AugmentationKind> = strategies.iter().flat_map(|s| s.augmentation_kinds()).collect();
        let core = |e: drumaug_core::Error| Error::Config(e.to_string());
        self.grid.validate(&kinds).map_err(core)?;
        for s in &strategies {
            s.train_config(&self.train).validate().map_err(core)?;
        }
        self.features.validate().map_err(core)?;
        self.model.validate().map_err(core)?;
        if self.model.bands != self.features.n_mels || self.model.channels != 3 {
            return bad(format!(
                "model expects {} channels x {} bands, features give 3 x {}",
                self.model.channels, self.model.bands, self.features.n_mels
            ));
        }
        if self.seeds.is_empty() {
            return bad("no seeds".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!("validation fraction must lie in (0, 1), got {}", self.validation_fraction));
        }
        if self.eval.thresholds.is_empty() || !(self.eval.tolerance > 0.0) || !(self.eval.min_gap >= 0.0) {
            return bad("evaluation needs thresholds, a positive tolerance and a non-negative gap".into());
        }
        Ok(())
    }

    /// Hex SHA-256 prefix over everything that determines the run's outputs.
    ///
    /// The config is hashed through a key-sorted JSON rendering, so field
    /// order in the file does not matter. `output_root` and `strategies`
    /// are left out: every strategy of one setup shares the run directory.
    pub fn config_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let obj = v.as_object_mut().expect("config is an object");
        obj.remove("output_root");
        obj.remove("strategies");
        hex_digest(v.to_string().as_bytes())[..16].to_string()
    }

    /// `output_root/runs/<hash>`.
    pub fn run_dir(&self) -> PathBuf {
        self.output_root.join("runs").join(self.config_hash())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    hex_digest_parts(&[bytes])
}

/// Digest of the concatenation of `parts`.
pub fn hex_digest_parts(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
