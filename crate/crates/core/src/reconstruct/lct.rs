//! Light-cone transform: resample confocal data to `v = (ct/2)²`, where the
//! spherical Radon transform becomes a shift-invariant 3D convolution, then
//! invert it with a Wiener filter.

use ndarray::{s, Array3};
use num_complex::Complex64;

use super::{confocal_only, finish, resample_to_spec, LocalGrid};
use crate::error::{NlosError, Result};
use crate::fft::{fft3, ifft3};
use crate::geometry::SPEED_OF_LIGHT;
use crate::transient::{sample_linear, splat_linear, TransientCube};
use crate::volume::{VolumeSpec, VoxelVolume};

/// Spectrum of the rasterised light cone on a zero-padded
/// `(2·n_u, 2·n_v, 2·n_v_samples)` grid.
#[derive(Clone, Debug)]
pub struct LightConeKernel {
    spectrum: Array3<Complex64>,
}

impl LightConeKernel {
    /// `lateral` is the scan spacing `(du, dv)` in metres and `dv_sq` the step
    /// of the squared-depth axis in m². The cone `Δv = Δu² + Δv²` is splatted
    /// linearly along the squared-depth axis and normalised to unit mass.
    pub fn new(n_u: usize, n_v: usize, n_samples: usize, lateral: (f64, f64), dv_sq: f64) -> Result<Self> {
        if n_u == 0 || n_v == 0 || n_samples < 2 {
            return Err(NlosError::invalid("light-cone kernel needs a non-empty grid"));
        }
        if !(dv_sq > 0.0) || !(lateral.0 > 0.0) || !(lateral.1 > 0.0) {
            return Err(NlosError::invalid("light-cone kernel spacings must be positive"));
        }
        let shape = (2 * n_u, 2 * n_v, 2 * n_samples);
        let mut psf = Array3::<f64>::zeros(shape);
        let reach = |n: usize| -(n as isize - 1)..=(n as isize - 1);
        for a in reach(n_u) {
            for b in reach(n_v) {
                let r2 = (a as f64 * lateral.0).powi(2) + (b as f64 * lateral.1).powi(2);
                let ia = a.rem_euclid(shape.0 as isize) as usize;
                let ib = b.rem_euclid(shape.1 as isize) as usize;
                let mut column = psf.slice_mut(s![ia, ib, ..n_samples]);
                splat_linear(column.as_slice_mut().expect("contiguous lane"), r2 / dv_sq, 1.0);
            }
        }
        let mass = psf.sum();
        let mut spectrum = psf.mapv(|v| Complex64::new(v / mass, 0.0));
        fft3(&mut spectrum);
        Ok(LightConeKernel { spectrum })
    }

    /// Kernel matching the squared-depth resampling used for `cube`.
    pub fn for_cube(cube: &TransientCube) -> Result<Self> {
        let p = Resampling::new(cube)?;
        LightConeKernel::new(p.n_u, p.n_v, p.n, p.lateral, p.dv_sq)
    }

    pub fn spectrum(&self) -> &Array3<Complex64> {
        &self.spectrum
    }

    /// Wiener inverse `Â* / (|Â|² + 1/α)`.
    pub fn wiener(&self, alpha: f64) -> Array3<Complex64> {
        let inv_snr = 1.0 / alpha;
        self.spectrum.mapv(|a| a.conj() / (a.norm_sqr() + inv_snr))
    }
}

/// Grid parameters of the `v = (ct/2)²` resampling of a confocal cube.
struct Resampling {
    n_u: usize,
    n_v: usize,
    n: usize,
    lateral: (f64, f64),
    d0: f64,
    d1: f64,
    v0: f64,
    dv_sq: f64,
}

impl Resampling {
    fn new(cube: &TransientCube) -> Result<Self> {
        if !cube.topology().is_confocal() {
            return Err(confocal_only("lct"));
        }
        let grid = cube.topology().sensor_grid();
        let timing = cube.timing();
        let n = timing.n_bins();
        let depth = |t: f64| SPEED_OF_LIGHT * t / 2.0;
        let d0 = depth(timing.t_start());
        let d1 = depth(timing.bin_time(n - 1));
        let v0 = d0 * d0;
        Ok(Resampling {
            n_u: grid.n_u(),
            n_v: grid.n_v(),
            n,
            lateral: grid.spacing(cube.relay()),
            d0,
            d1,
            v0,
            dv_sq: (d1 * d1 - v0) / (n - 1) as f64,
        })
    }
}

/// LCT reconstruction of a confocal cube. The lateral dimensions of `spec`
/// must match the scan grid.
pub fn reconstruct_lct(cube: &TransientCube, alpha: f64, spec: &VolumeSpec) -> Result<VoxelVolume> {
    let Resampling { n_u, n_v, n, lateral, d0, d1, v0, dv_sq } = Resampling::new(cube)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(NlosError::invalid("alpha must be positive"));
    }
    if spec.dims()[0] != n_u || spec.dims()[1] != n_v {
        return Err(NlosError::invalid(format!(
            "lct volume must have {n_u}×{n_v} lateral voxels to match the scan grid"
        )));
    }
    let grid = cube.topology().sensor_grid();
    let relay = cube.relay();
    let timing = cube.timing();

    // R_t: t → v with radiometric compensation and the √v Jacobian.
    let mut work = Array3::<Complex64>::zeros((2 * n_u, 2 * n_v, 2 * n));
    let values = cube.values();
    for iv in 0..n_v {
        for iu in 0..n_u {
            let series = values.slice(s![0, grid.flat_index(iu, iv), ..]);
            let series = series.as_slice().expect("contiguous series");
            for j in 0..n {
                let v = v0 + j as f64 * dv_sq;
                if v <= 0.0 {
                    continue;
                }
                let d = v.sqrt();
                let t = 2.0 * d / SPEED_OF_LIGHT;
                let h = sample_linear(series, timing.fractional_bin(t));
                work[[iu, iv, j]] = Complex64::new(h * (2.0 * d).powi(4) / d, 0.0);
            }
        }
    }

    let kernel = LightConeKernel::new(n_u, n_v, n, lateral, dv_sq)?;
    fft3(&mut work);
    work.zip_mut_with(&kernel.wiener(alpha), |x, w| *x *= w);
    ifft3(&mut work);

    // R_z⁻¹: ρ(z) = 2z · ρ'(z²), sampled on a uniform depth grid.
    let dz = (d1 - d0) / (n - 1) as f64;
    let mut native = Array3::<f64>::zeros((n_u, n_v, n));
    let mut column = vec![0.0; n];
    for iu in 0..n_u {
        for iv in 0..n_v {
            for (j, c) in column.iter_mut().enumerate() {
                *c = work[[iu, iv, j]].re;
            }
            for k in 0..n {
                let z = d0 + k as f64 * dz;
                native[[iu, iv, k]] = 2.0 * z * sample_linear(&column, (z * z - v0) / dv_sq);
            }
        }
    }

    let first = relay.to_local(crate::geometry::grid_point(&grid, relay, 0, 0)?);
    let local = LocalGrid { first: [first.0, first.1, d0], step: [lateral.0, lateral.1, dz] };
    finish(spec, resample_to_spec(&native, local, relay, spec))
}
