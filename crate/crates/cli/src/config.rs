//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! output_dir = "runs/planted"
//! layers = [16, 8]
//!
//! [synthetic]
//! preset = "planted"
//! samples = 20000
//!
//! [split]
//! train = 10000
//! val = 2000
//! test = 8000
//!
//! [cd]
//! epochs = 20
//! ```
//!
//! Relative paths are resolved against the directory holding the config
//! file. Seeds inside `[cd]` and `[pcd]` are ignored: every component seed
//! is derived from the top-level `seed`.

use std::path::{Path, PathBuf};

use boltzworld::rng::derive_seed;
use boltzworld::schema::synthetic::planted;
use boltzworld::schema::{AttributeSchema, FlagModel, GroupModel, SyntheticConfig};
use boltzworld::{CdConfig, MeanFieldConfig, PcdConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSizes>,
    /// Hidden layer sizes; defaults to `[0.75·J, 0.4·J]` rounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<usize>>,
    #[serde(default)]
    pub cd: CdConfig,
    #[serde(default)]
    pub pcd: PcdConfig,
    #[serde(default)]
    pub mean_field: MeanFieldConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Planted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<FlagModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSizes {
    pub train: usize,
    #[serde(default)]
    pub val: usize,
    #[serde(default)]
    pub test: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub burn_in: usize,
    pub thin: usize,
    pub max_tries_per_profile: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            thin: 10,
            max_tries_per_profile: 100,
        }
    }
}

pub fn default_layers(visible_dim: usize) -> Vec<usize> {
    let scaled = |f: f64| ((visible_dim as f64 * f).round() as usize).max(1);
    vec![scaled(0.75), scaled(0.4)]
}

/// A parsed config plus the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config = Self::parse(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base_dir })
    }

    pub fn parse(text: &str) -> CliResult<RunConfig> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Paths referenced by the config that must exist before a run starts.
    pub fn check_paths(&self) -> CliResult<()> {
        for p in [&self.config.schema, &self.config.dataset].into_iter().flatten() {
            let full = self.resolve(p);
            if !full.exists() {
                return Err(CliError::io(
                    full,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "referenced by config"),
                ));
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        let invalid = |m: &str| Err(CliError::Validation(m.to_owned()));
        match (&self.dataset, &self.synthetic) {
            (Some(_), Some(_)) => return invalid("config sets both dataset and synthetic"),
            (Some(_), None) if self.schema.is_none() => return invalid("a dataset path needs a schema path"),
            _ => {}
        }
        if let Some(syn) = &self.synthetic {
            match syn.preset {
                Some(Preset::Planted) if !syn.groups.is_empty() || !syn.flags.is_empty() => {
                    return invalid("a synthetic preset cannot be combined with explicit tables")
                }
                None if self.schema.is_none() => return invalid("explicit synthetic tables need a schema path"),
                _ => {}
            }
        }
        if let Some(layers) = &self.layers {
            if layers.is_empty() || layers.contains(&0) {
                return invalid("layers must be a nonempty list of positive sizes");
            }
        }
        self.cd.validate()?;
        self.pcd.validate()?;
        self.mean_field.validate()?;
        Ok(())
    }

    pub fn pretrain_cd(&self) -> CdConfig {
        CdConfig {
            seed: derive_seed(self.seed, "pretrain"),
            ..self.cd.clone()
        }
    }

    pub fn finetune_pcd(&self) -> PcdConfig {
        PcdConfig {
            seed: derive_seed(self.seed, "finetune"),
            ..self.pcd.clone()
        }
    }

    pub fn sample_seed(&self) -> u64 {
        derive_seed(self.seed, "sample")
    }

    pub fn synthetic_seed(&self) -> u64 {
        derive_seed(self.seed, "synthetic")
    }

    pub fn split_seed(&self) -> u64 {
        derive_seed(self.seed, "split")
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("run config serializes to TOML");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn synthetic_model(&self) -> Option<SyntheticConfig> {
        self.synthetic.as_ref().map(|s| match s.preset {
            Some(Preset::Planted) => planted::config(s.samples),
            None => SyntheticConfig {
                samples: s.samples,
                groups: s.groups.clone(),
                flags: s.flags.clone(),
            },
        })
    }

    pub fn builtin_schema(&self) -> Option<AttributeSchema> {
        match self.synthetic.as_ref().and_then(|s| s.preset) {
            Some(Preset::Planted) if self.schema.is_none() => Some(planted::schema()),
            _ => None,
        }
    }
}
