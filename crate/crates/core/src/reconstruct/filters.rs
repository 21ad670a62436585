//! Post-backprojection volume filters.

use ndarray::{Array3, Axis, Zip};

use crate::error::{NlosError, Result};
use crate::simulate::gaussian_kernel;
use crate::volume::VoxelVolume;

/// Negated second difference along depth (stencil `{−1, 2, −1}`). The border
/// planes repeat their edge value, so constant volumes map to zero. Keeps the sign.
pub fn depth_laplacian_signed(vol: &VoxelVolume) -> VoxelVolume {
    let v = vol.values();
    let nz = v.len_of(Axis(2));
    let out = Array3::from_shape_fn(v.dim(), |(i, j, k)| {
        let here = v[[i, j, k]];
        let prev = if k > 0 { v[[i, j, k - 1]] } else { here };
        let next = if k + 1 < nz { v[[i, j, k + 1]] } else { here };
        2.0 * here - prev - next
    });
    VoxelVolume::new(*vol.spec(), out).expect("same spec")
}

fn convolve_axis(data: &mut Array3<f64>, axis: usize, kernel: &[f64]) {
    let half = (kernel.len() / 2) as isize;
    let lanes = Zip::from(data.lanes_mut(Axis(axis)));
    let run = |mut lane: ndarray::ArrayViewMut1<'_, f64>| {
        let src: Vec<f64> = lane.to_vec();
        let n = src.len() as isize;
        for (i, out) in lane.iter_mut().enumerate() {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (j, w) in kernel.iter().enumerate() {
                let t = i as isize + j as isize - half;
                if t >= 0 && t < n {
                    acc += src[t as usize] * w;
                    norm += w;
                }
            }
            *out = acc / norm;
        }
    };
    #[cfg(feature = "parallel")]
    lanes.par_for_each(run);
    #[cfg(not(feature = "parallel"))]
    lanes.for_each(run);
}

/// Isotropic Gaussian blur with standard deviation `width_s` metres. Near the
/// borders the truncated kernel is renormalised over the in-grid taps. Axes
/// whose pitch exceeds `width_s` are left untouched.
pub fn gaussian_blur(vol: &VoxelVolume, width_s: f64) -> Result<VoxelVolume> {
    if !(width_s > 0.0) || !width_s.is_finite() {
        return Err(NlosError::invalid("width_s must be positive"));
    }
    let mut data = vol.values().clone();
    for (axis, pitch) in vol.spec().pitch().iter().enumerate() {
        let sigma = width_s / pitch;
        if sigma < 1.0 {
            log::warn!(
                "LoG width {width_s} m is below the voxel pitch {pitch} m on axis {axis}; no smoothing applied there"
            );
            continue;
        }
        convolve_axis(&mut data, axis, &gaussian_kernel(sigma));
    }
    VoxelVolume::new(*vol.spec(), data)
}

/// Laplacian of Gaussian (linear, signed): Gaussian blur then depth Laplacian.
pub fn log_filter_signed(vol: &VoxelVolume, width_s: f64) -> Result<VoxelVolume> {
    Ok(depth_laplacian_signed(&gaussian_blur(vol, width_s)?))
}

/// Depth Laplacian with negative lobes clamped to zero.
pub fn laplacian_filter(vol: &VoxelVolume) -> VoxelVolume {
    depth_laplacian_signed(vol).map(|v| v.max(0.0))
}

/// Laplacian of Gaussian with negative lobes clamped to zero.
pub fn log_filter(vol: &VoxelVolume, width_s: f64) -> Result<VoxelVolume> {
    Ok(log_filter_signed(vol, width_s)?.map(|v| v.max(0.0)))
}
