//! JSON experiment descriptions.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{NlosError, Result};
use crate::geometry::{CaptureTopology, RelayGeometry};
use crate::reconstruct::{Method, ReconstructionConfig};
use crate::scene::Scene;
use crate::simulate::{add_poisson_noise, apply_jitter, simulate_impulse_response, NoiseSpec, QuadratureSpec};
use crate::transient::{TimingSpec, TransientCube};
use crate::volume::VolumeSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub target_photons: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub cube: Option<PathBuf>,
    #[serde(default)]
    pub volume: Option<PathBuf>,
    /// Destination of `bench` artefacts.
    #[serde(default)]
    pub directory: Option<PathBuf>,
}

/// Method × photon-count matrix for the `bench` protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub methods: Vec<Method>,
    pub photon_counts: Vec<f64>,
}

/// A complete experiment: scene, capture setup, optional noise, method and
/// outputs. Relative output paths are resolved against the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: Scene,
    pub relay: RelayGeometry,
    pub topology: CaptureTopology,
    pub timing: TimingSpec,
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub noise: Option<NoiseBlock>,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default)]
    pub volume: Option<VolumeSpec>,
    #[serde(default = "yes")]
    pub distance_weights: bool,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub bench: Option<BenchSpec>,
    #[serde(default = "default_visibility_samples")]
    pub visibility_samples: usize,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn yes() -> bool {
    true
}

fn default_visibility_samples() -> usize {
    32
}

impl ExperimentConfig {
    /// Parses and validates a config. Any schema violation, including unknown
    /// keys, is a validation error.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| NlosError::Invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validate(&self.relay)?;
        self.scene.validate(&self.relay)?;
        if let Some(n) = &self.noise {
            NoiseSpec::new(n.target_photons, self.seed)?;
        }
        if let Some(m) = &self.method {
            m.filter().validate()?;
            if m.requires_confocal() && !self.topology.is_confocal() {
                return Err(crate::reconstruct::confocal_only(m.name()));
            }
            if self.volume.is_none() {
                return Err(NlosError::invalid("a method needs a volume"));
            }
        }
        if let Some(b) = &self.bench {
            if b.methods.is_empty() || b.photon_counts.is_empty() {
                return Err(NlosError::invalid("bench needs at least one method and one photon count"));
            }
            for p in &b.photon_counts {
                NoiseSpec::new(*p, self.seed)?;
            }
            for m in &b.methods {
                m.filter().validate()?;
                if m.requires_confocal() && !self.topology.is_confocal() {
                    return Err(crate::reconstruct::confocal_only(m.name()));
                }
            }
            if self.volume.is_none() {
                return Err(NlosError::invalid("bench needs a volume"));
            }
        }
        if self.visibility_samples < 4 {
            return Err(NlosError::invalid("visibility_samples must be at least 4"));
        }
        Ok(())
    }

    /// Resolves a path from the config relative to the config's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Renders the scene and applies the detector jitter (no photon noise).
    pub fn simulate_noiseless(&self) -> Result<TransientCube> {
        let rendered =
            simulate_impulse_response(&self.scene, &self.relay, &self.topology, &self.timing, &self.quadrature)?;
        if rendered.truncated > 0 {
            log::warn!("{} path contributions fell outside the recorded time window", rendered.truncated);
        }
        Ok(apply_jitter(&rendered.cube))
    }

    /// [`simulate_noiseless`](Self::simulate_noiseless) plus the configured
    /// Poisson noise, if any.
    pub fn simulate(&self) -> Result<TransientCube> {
        let cube = self.simulate_noiseless()?;
        match &self.noise {
            Some(n) => add_poisson_noise(&cube, &NoiseSpec::new(n.target_photons, self.seed)?),
            None => Ok(cube),
        }
    }

    pub fn reconstruction(&self, method: Method) -> Result<ReconstructionConfig> {
        let volume = self.volume.ok_or_else(|| NlosError::invalid("config has no volume"))?;
        Ok(ReconstructionConfig { method, volume, distance_weights: self.distance_weights })
    }
}
