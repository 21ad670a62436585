//! Inverse methods. Every method is a filtered backprojection `K_v Aᵀ K_h h`
//! with a different choice of filters (or an exact frequency-domain inverse).

mod backproject;
mod filters;
mod fk;
mod lct;
mod phasor;

pub use backproject::{backproject, backproject_data, forward_project};
pub use filters::{depth_laplacian_signed, gaussian_blur, laplacian_filter, log_filter, log_filter_signed};
pub use fk::reconstruct_fk;
pub use lct::{reconstruct_lct, LightConeKernel};
pub use phasor::{inverse_prt, reconstruct_pf_cc, reconstruct_pf_cc_with, Illumination};

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{NlosError, Result};
use crate::filter::FilterSpec;
use crate::geometry::RelayGeometry;
use crate::transient::TransientCube;
use crate::volume::{normalize_volume, VolumeSpec, VoxelVolume};

/// Reconstruction method and its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Method {
    FbpLap,
    FbpLog { width_s: f64 },
    Lct { alpha: f64 },
    Fk,
    PfCc { lambda_c: f64, n_cycles: f64 },
}

impl Method {
    /// Short name used on the command line and in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Method::FbpLap => "fbp-lap",
            Method::FbpLog { .. } => "fbp-log",
            Method::Lct { .. } => "lct",
            Method::Fk => "fk",
            Method::PfCc { .. } => "pf-cc",
        }
    }

    /// The filter (or virtual illumination) this method applies.
    pub fn filter(&self) -> FilterSpec {
        match *self {
            Method::FbpLap => FilterSpec::Laplacian,
            Method::FbpLog { width_s } => FilterSpec::Log { width_s },
            Method::Lct { alpha } => FilterSpec::Wiener { alpha },
            Method::Fk => FilterSpec::None,
            Method::PfCc { lambda_c, n_cycles } => FilterSpec::Morlet { lambda_c, n_cycles },
        }
    }

    pub fn requires_confocal(&self) -> bool {
        matches!(self, Method::Lct { .. } | Method::Fk)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionConfig {
    pub method: Method,
    pub volume: VolumeSpec,
    #[serde(default = "default_distance_weights")]
    pub distance_weights: bool,
}

fn default_distance_weights() -> bool {
    true
}

impl ReconstructionConfig {
    pub fn new(method: Method, volume: VolumeSpec) -> Self {
        ReconstructionConfig { method, volume, distance_weights: true }
    }

    pub fn validate(&self, cube: &TransientCube) -> Result<()> {
        self.method.filter().validate()?;
        if self.method.requires_confocal() && !cube.topology().is_confocal() {
            return Err(confocal_only(self.method.name()));
        }
        Ok(())
    }
}

pub(crate) fn confocal_only(method: &str) -> NlosError {
    NlosError::Unsupported(format!(
        "{method} needs confocal measurements; use fbp-lap, fbp-log or pf-cc for this capture"
    ))
}

/// Runs the configured method and returns a volume normalised to `[0, 1]`.
pub fn reconstruct(cube: &TransientCube, config: &ReconstructionConfig) -> Result<VoxelVolume> {
    config.validate(cube)?;
    let spec = &config.volume;
    match config.method {
        Method::FbpLap | Method::FbpLog { .. } => reconstruct_fbp(cube, config),
        Method::Lct { alpha } => reconstruct_lct(cube, alpha, spec),
        Method::Fk => reconstruct_fk(cube, spec),
        Method::PfCc { lambda_c, n_cycles } => reconstruct_pf_cc(cube, lambda_c, n_cycles, spec),
    }
}

/// Backprojection followed by the Laplacian or LoG volume filter.
pub fn reconstruct_fbp(cube: &TransientCube, config: &ReconstructionConfig) -> Result<VoxelVolume> {
    let bp = backproject(cube, &config.volume, config.distance_weights);
    let filtered = match config.method {
        Method::FbpLap => laplacian_filter(&bp),
        Method::FbpLog { width_s } => log_filter(&bp, width_s)?,
        other => return Err(NlosError::invalid(format!("{} is not a backprojection method", other.name()))),
    };
    Ok(normalize_volume(&filtered))
}

/// Regular sampling lattice in wall-frame coordinates `(u, v, w)`:
/// sample `(i, j, k)` sits at `first + (i, j, k) · step`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LocalGrid {
    pub first: [f64; 3],
    pub step: [f64; 3],
}

/// Trilinearly resamples `src` (laid out on `grid` in the wall frame) onto
/// the voxel centres of `spec`. Samples beyond the source grid read as zero.
pub(crate) fn resample_to_spec(
    src: &Array3<f64>,
    grid: LocalGrid,
    relay: &RelayGeometry,
    spec: &VolumeSpec,
) -> Array3<f64> {
    let dims = src.dim();
    let n = [dims.0 as isize, dims.1 as isize, dims.2 as isize];
    let nz = spec.dims()[2];
    let mut out = Array3::<f64>::zeros(spec.shape());
    crate::par::for_each_chunk_mut(out.as_slice_mut().expect("contiguous"), nz, |col, column| {
        let (i, j, _) = spec.unflatten(col * nz);
        for (k, dst) in column.iter_mut().enumerate() {
            let (u, v, w) = relay.to_local(spec.voxel_center(i, j, k));
            let p = [u, v, w];
            let mut base = [0isize; 3];
            let mut frac = [0.0; 3];
            let mut outside = false;
            for a in 0..3 {
                let x = (p[a] - grid.first[a]) / grid.step[a];
                let f = x.floor();
                if !(f >= -1.0) || f >= n[a] as f64 {
                    outside = true;
                    break;
                }
                base[a] = f as isize;
                frac[a] = x - f;
            }
            if outside {
                continue;
            }
            let mut acc = 0.0;
            for corner in 0..8 {
                let mut idx = [0usize; 3];
                let mut wgt = 1.0;
                let mut valid = true;
                for a in 0..3 {
                    let hi = (corner >> a) & 1 == 1;
                    let t = base[a] + hi as isize;
                    if t < 0 || t >= n[a] {
                        valid = false;
                        break;
                    }
                    idx[a] = t as usize;
                    wgt *= if hi { frac[a] } else { 1.0 - frac[a] };
                }
                if valid && wgt != 0.0 {
                    acc += wgt * src[idx];
                }
            }
            *dst = acc;
        }
    });
    out
}

/// Clamps negatives to zero and normalises.
pub(crate) fn finish(spec: &VolumeSpec, values: Array3<f64>) -> Result<VoxelVolume> {
    let vol = VoxelVolume::new(*spec, values.mapv(|v| v.max(0.0)))
        .map_err(|_| NlosError::Numerical("reconstruction produced non-finite values".into()))?;
    Ok(normalize_volume(&vol))
}
