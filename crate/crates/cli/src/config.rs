//! Pipeline configuration: one TOML table per module, resolved against the
//! command-line flags and written beside every output.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use subsurf::attributes::{GlcmParams, GotParams, GtcParams, SobelAngle};
use subsurf::fault::{FaultParams, TrackParams};
use subsurf::labeling::textures::CompositeSpec;
use subsurf::labeling::{FeatureConfig, NmfParams, SlicParams};
use subsurf::salt::{DelineateParams, SaltTrackParams};
use subsurf::volume::{SegyOptions, SyntheticSpec};
use subsurf::SectionAxis;

use crate::UsageError;

pub const SEED_ENV: &str = "SUBSURF_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegyConfig {
    pub inline_byte: usize,
    pub crossline_byte: usize,
}

impl Default for SegyConfig {
    fn default() -> Self {
        let o = SegyOptions::default();
        Self {
            inline_byte: o.inline_byte,
            crossline_byte: o.crossline_byte,
        }
    }
}

impl SegyConfig {
    pub fn options(&self) -> SegyOptions {
        SegyOptions {
            inline_byte: self.inline_byte,
            crossline_byte: self.crossline_byte,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobelConfig {
    /// Directions combined into the gradient magnitude.
    pub angles: Vec<SobelAngle>,
}

impl Default for SobelConfig {
    fn default() -> Self {
        Self {
            angles: vec![SobelAngle::Deg0, SobelAngle::Deg45, SobelAngle::Deg90, SobelAngle::DegMinus45],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    /// Sections are over-segmented along this axis.
    pub axis: SectionAxis,
    /// Neighbours consulted by the segment classifier.
    pub k: usize,
    /// Images returned by `label retrieve`.
    pub retrieve: usize,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            axis: SectionAxis::Inline,
            k: 5,
            retrieve: 10,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seed for every random draw. `--seed` and `SUBSURF_SEED` take precedence.
    pub rng_seed: Option<u64>,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub segy: SegyConfig,
    pub synth: SyntheticSpec,
    /// Two-texture image dataset written by `synth --dataset`.
    pub composite: CompositeSpec,
    pub gtc: GtcParams,
    pub got: GotParams,
    pub sobel: SobelConfig,
    pub glcm: GlcmParams,
    pub fault: FaultParams,
    pub fault_track: TrackParams,
    pub salt: DelineateParams,
    pub salt_track: SaltTrackParams,
    pub features: FeatureConfig,
    pub slic: SlicParams,
    pub label: LabelConfig,
    pub nmf: NmfParams,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Applies flag > environment > file precedence for the seed and turns
    /// a worker count of 0 into the machine's core count.
    pub fn resolve(&mut self, seed_flag: Option<u64>, workers_flag: Option<usize>) -> anyhow::Result<()> {
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| UsageError(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?,
            ),
            Err(_) => None,
        };
        // an explicit seed replaces the per-module ones; otherwise those stand
        if let Some(seed) = seed_flag.or(env_seed).or(self.rng_seed) {
            self.rng_seed = Some(seed);
            self.synth.seed = seed;
            self.composite.seed = seed;
            self.nmf.seed = seed;
        }

        if let Some(w) = workers_flag {
            self.workers = w;
        }
        if self.workers == 0 {
            self.workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        }
        self.nmf.workers = self.workers;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }
}

/// `<out>.config.toml`, next to the output file or directory.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_else(|| "out".into());
    name.push(".config.toml");
    out.with_file_name(name)
}

pub fn write_sidecar(out: &Path, command: &str, seed: u64, cfg: &PipelineConfig) -> anyhow::Result<()> {
    let path = sidecar_path(out);
    let text = format!("# subsurf {command}\n# seed {seed}\n{}", cfg.to_toml());
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
