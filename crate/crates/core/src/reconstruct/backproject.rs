use ndarray::Array3;

use crate::error::{NlosError, Result};
use crate::geometry::{Apertures, Vec3, SPEED_OF_LIGHT};
use crate::par;
use crate::transient::{sample_linear, splat_linear, TimingSpec, TransientCube};
use crate::volume::{VolumeSpec, VoxelVolume};

/// Unfiltered backprojection: every voxel gathers `H(x_l, x_s, t_lv + t_sv)`
/// over all laser/sensor pairs, interpolating linearly in time. With
/// `distance_weights` each term is scaled by `1 / (d_lv · d_sv)`.
pub fn backproject(cube: &TransientCube, spec: &VolumeSpec, distance_weights: bool) -> VoxelVolume {
    let values = backproject_data(cube.values(), &cube.apertures(), cube.timing(), spec, distance_weights)
        .expect("cube shape is consistent with its topology");
    VoxelVolume::new(*spec, values).expect("backprojection of finite data is finite")
}

/// Backprojection of raw (possibly signed) series laid out like a cube's values.
pub fn backproject_data(
    data: &Array3<f64>,
    ap: &Apertures,
    timing: &TimingSpec,
    spec: &VolumeSpec,
    distance_weights: bool,
) -> Result<Array3<f64>> {
    let (n_l, n_s, n_bins) = data.dim();
    if n_l != ap.n_lasers() || n_s != ap.n_sensors() || n_bins != timing.n_bins() {
        return Err(NlosError::ShapeMismatch("data does not match apertures/timing".into()));
    }
    let data = data.as_standard_layout();
    let data = data.as_slice().expect("standard layout");
    let inv_bin = 1.0 / timing.bin_width();
    let t0 = timing.t_start();
    let lasers: &[Vec3] = if ap.confocal { &ap.sensors } else { &ap.lasers };
    let nz = spec.dims()[2];

    let mut out = Array3::<f64>::zeros(spec.shape());
    par::for_each_chunk_mut(out.as_slice_mut().expect("contiguous"), nz, |col, column| {
        let (i, j, _) = spec.unflatten(col * nz);
        let mut d_l = vec![0.0; lasers.len()];
        let mut d_s = vec![0.0; n_s];
        for (k, voxel) in column.iter_mut().enumerate() {
            let xv = spec.voxel_center(i, j, k);
            for (d, p) in d_s.iter_mut().zip(&ap.sensors) {
                *d = p.distance(xv);
            }
            let mut acc = 0.0;
            if ap.confocal {
                for (s, &d) in d_s.iter().enumerate() {
                    let x = ((d + d) / SPEED_OF_LIGHT - t0) * inv_bin;
                    let h = sample_linear(&data[s * n_bins..(s + 1) * n_bins], x);
                    acc += if distance_weights { h / (d * d) } else { h };
                }
            } else {
                for (d, p) in d_l.iter_mut().zip(lasers) {
                    *d = p.distance(xv);
                }
                for (l, &dl) in d_l.iter().enumerate() {
                    for (s, &ds) in d_s.iter().enumerate() {
                        let x = ((dl + ds) / SPEED_OF_LIGHT - t0) * inv_bin;
                        let base = (l * n_s + s) * n_bins;
                        let h = sample_linear(&data[base..base + n_bins], x);
                        acc += if distance_weights { h / (dl * ds) } else { h };
                    }
                }
            }
            *voxel = acc;
        }
    });
    Ok(out)
}

/// Forward operator matched to [`backproject`] with unit weights: each voxel
/// value is splatted onto every series at its path time using the same
/// linear interpolation, so `⟨A f, h⟩ = ⟨f, Aᵀ h⟩`.
pub fn forward_project(vol: &VoxelVolume, ap: &Apertures, timing: &TimingSpec) -> Array3<f64> {
    let spec = vol.spec();
    let n_bins = timing.n_bins();
    let n_s = ap.n_sensors();
    let inv_bin = 1.0 / timing.bin_width();
    let t0 = timing.t_start();
    let f = vol.values().as_standard_layout();
    let f = f.as_slice().expect("standard layout");

    let mut out = Array3::<f64>::zeros((ap.n_lasers(), n_s, n_bins));
    par::for_each_chunk_mut(out.as_slice_mut().expect("contiguous"), n_bins, |series_idx, series| {
        let (xl, xs) = ap.pair(series_idx / n_s, series_idx % n_s);
        for (flat, &value) in f.iter().enumerate() {
            if value == 0.0 {
                continue;
            }
            let (i, j, k) = spec.unflatten(flat);
            let xv = spec.voxel_center(i, j, k);
            let x = ((xl.distance(xv) + xs.distance(xv)) / SPEED_OF_LIGHT - t0) * inv_bin;
            splat_linear(series, x, value);
        }
    });
    out
}
