use ndarray::Array3;

use crate::par;
use crate::transient::TransientCube;

/// Standard deviation of a Gaussian with the given full width at half maximum.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

/// Discrete Gaussian with standard deviation `sigma` (in samples), truncated
/// at ±4σ and normalised to unit sum. Returns `[1.0]` for `sigma == 0`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if !(sigma > 0.0) {
        return vec![1.0];
    }
    let half = (4.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-half..=half).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Convolves every time series with the detector's Gaussian timing jitter
/// (`timing.jitter_fwhm`). Zero jitter returns the cube unchanged.
pub fn apply_jitter(cube: &TransientCube) -> TransientCube {
    let timing = *cube.timing();
    let sigma_bins = fwhm_to_sigma(timing.jitter_fwhm()) / timing.bin_width();
    if timing.jitter_fwhm() == 0.0 {
        return cube.clone();
    }
    let kernel = gaussian_kernel(sigma_bins);
    let half = (kernel.len() / 2) as isize;
    let n = timing.n_bins();
    let src = cube.values().as_standard_layout();
    let src = src.as_slice().expect("standard layout");
    let mut out = Array3::<f64>::zeros(cube.values().dim());
    let dst = out.as_slice_mut().expect("fresh array is contiguous");

    par::for_each_chunk_mut(dst, n, |series_idx, series| {
        let input = &src[series_idx * n..(series_idx + 1) * n];
        for (i, &v) in input.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for (j, &w) in kernel.iter().enumerate() {
                let t = i as isize + j as isize - half;
                if t >= 0 && (t as usize) < n {
                    series[t as usize] += v * w;
                }
            }
        }
    });

    TransientCube::from_parts_unchecked(cube.relay().clone(), cube.topology().clone(), timing, out)
}
