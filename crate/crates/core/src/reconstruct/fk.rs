//! f-k (Stolt) migration of confocal data.

use ndarray::{s, Array3};
use num_complex::Complex64;

use super::{confocal_only, finish, resample_to_spec, LocalGrid};
use crate::error::Result;
use crate::fft::{fft3, ifft3, signed_index};
use crate::geometry::{grid_point, SPEED_OF_LIGHT};
use crate::transient::TransientCube;
use crate::volume::{VolumeSpec, VoxelVolume};

/// f-k migration. Data are weighted by `(ct)³` so each series carries the
/// `1/r` amplitude of a spherical wave, zero-padded 2× on every axis, mapped
/// from temporal frequency to depth wavenumber along
/// `f = √(k_x² + k_y² + k_z²)` with linear interpolation and the `k_z / f`
/// Jacobian, and transformed back. Only `k_z > 0` is kept, so the magnitude
/// of the result is the envelope of the migrated field.
pub fn reconstruct_fk(cube: &TransientCube, spec: &VolumeSpec) -> Result<VoxelVolume> {
    if !cube.topology().is_confocal() {
        return Err(confocal_only("fk"));
    }
    let grid = cube.topology().sensor_grid();
    let relay = cube.relay();
    let timing = cube.timing();
    let (n_u, n_v, n) = (grid.n_u(), grid.n_v(), timing.n_bins());
    let (du, dv) = grid.spacing(relay);
    let dz = SPEED_OF_LIGHT * timing.bin_width() / 2.0;
    let z0 = SPEED_OF_LIGHT * timing.t_start() / 2.0;
    let shape = (2 * n_u, 2 * n_v, 2 * n);

    let mut data = Array3::<Complex64>::zeros(shape);
    let values = cube.values();
    for iv in 0..n_v {
        for iu in 0..n_u {
            let series = values.slice(s![0, grid.flat_index(iu, iv), ..]);
            for (k, h) in series.iter().enumerate() {
                let ct = SPEED_OF_LIGHT * timing.bin_time(k);
                data[[iu, iv, k]] = Complex64::new(h * ct.powi(3), 0.0);
            }
        }
    }
    fft3(&mut data);

    // Frequencies in cycles per metre on the padded grid.
    let freq = |k: usize, len: usize, step: f64| signed_index(k, len) as f64 / (len as f64 * step);
    let positive_bins = shape.2 / 2;
    let tau = std::f64::consts::TAU;
    let mut migrated = Array3::<Complex64>::zeros(shape);
    crate::par::for_each_chunk_mut(migrated.as_slice_mut().expect("contiguous"), shape.2, |col, out| {
        let (a, b) = (col / shape.1, col % shape.1);
        let kx = freq(a, shape.0, du);
        let ky = freq(b, shape.1, dv);
        let lateral2 = kx * kx + ky * ky;
        let src = data.slice(s![a, b, ..]);
        for (c, dst) in out.iter_mut().enumerate() {
            let kz = freq(c, shape.2, dz);
            if kz <= 0.0 {
                continue;
            }
            let f = (lateral2 + kz * kz).sqrt();
            let x = f * shape.2 as f64 * dz;
            let i0 = x.floor() as usize;
            if i0 + 1 >= positive_bins {
                continue;
            }
            let w = x - i0 as f64;
            let sample = src[i0] * (1.0 - w) + src[i0 + 1] * w;
            // Undo the t_start offset of the input axis and re-apply it on
            // the output depth axis.
            let phase = Complex64::from_polar(1.0, tau * z0 * (kz - f));
            *dst = sample * phase * (kz / f);
        }
    });
    ifft3(&mut migrated);

    let native = Array3::from_shape_fn((n_u, n_v, n), |(i, j, k)| migrated[[i, j, k]].norm());
    let first = relay.to_local(grid_point(&grid, relay, 0, 0)?);
    let local = LocalGrid { first: [first.0, first.1, z0], step: [du, dv, dz] };
    finish(spec, resample_to_spec(&native, local, relay, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CaptureTopology, RelayGeometry, ScanGrid, Vec3};
    use crate::transient::TimingSpec;

    #[test]
    fn zero_cube_gives_zero_volume() {
        let cube = TransientCube::zeros(
            RelayGeometry::canonical(1.0, 1.0).unwrap(),
            CaptureTopology::Confocal { grid: ScanGrid::square(4).unwrap() },
            TimingSpec::new(8e-12, 64, 6e-9, 0.0).unwrap(),
        )
        .unwrap();
        let spec = VolumeSpec::new(Vec3::new(-0.5, -0.5, 0.9), [0.25, 0.25, 0.01], [4, 4, 8]).unwrap();
        assert!(reconstruct_fk(&cube, &spec).unwrap().values().iter().all(|v| *v == 0.0));
    }
}
