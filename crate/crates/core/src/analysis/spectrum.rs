use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;

use crate::error::{NlosError, Result};
use crate::fft::{fft3, fftshift3};
use crate::volume::{VolumeSpec, VoxelVolume};

/// Magnitude spectrum over `(Ω_x, Ω_z)` with the zero frequency centred.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumImage {
    /// Indexed `[Ω_x, Ω_z]`.
    pub values: Array2<f64>,
    /// Frequencies of each row, cycles per metre.
    pub freq_x: Vec<f64>,
    /// Frequencies of each column, cycles per metre.
    pub freq_z: Vec<f64>,
}

/// Frequencies (cycles/m) of the centred DFT bins of an axis.
pub fn centered_frequencies(n: usize, pitch: f64) -> Vec<f64> {
    (0..n).map(|k| (k as f64 - (n / 2) as f64) / (n as f64 * pitch)).collect()
}

fn spectrum3(vol: &VoxelVolume) -> Array3<Complex64> {
    let mut data = vol.values().mapv(|v| Complex64::new(v, 0.0));
    fft3(&mut data);
    data
}

/// Averages a centred 3D magnitude over the `Ω_y` axis.
fn xz_view(magnitude: &Array3<f64>, spec: &VolumeSpec) -> SpectrumImage {
    let shifted = fftshift3(magnitude);
    let values = shifted.mean_axis(Axis(1)).expect("non-empty y axis");
    let pitch = spec.pitch();
    SpectrumImage {
        values,
        freq_x: centered_frequencies(spec.dims()[0], pitch[0]),
        freq_z: centered_frequencies(spec.dims()[2], pitch[2]),
    }
}

/// `|F(vol)|` averaged over `Ω_y`, zero frequency centred.
pub fn xz_spectrum(vol: &VoxelVolume) -> SpectrumImage {
    let mag = spectrum3(vol).mapv(|c| c.norm());
    xz_view(&mag, vol.spec())
}

/// Empirical filter `K̂ = F(f_method) F(f_bp)* / (|F(f_bp)|² + eps)`.
#[derive(Clone, Debug)]
pub struct FilterEstimate {
    /// Full 3D estimate in DFT order (not shifted).
    pub spectrum: Array3<Complex64>,
    /// `|F(f_bp)|²` in DFT order.
    pub power: Array3<f64>,
    /// Regulariser actually used.
    pub eps: f64,
    /// `|K̂|` averaged over `Ω_y`.
    pub xz: SpectrumImage,
}

impl FilterEstimate {
    /// Mask of frequencies where `|F(f_bp)|² > factor · eps`.
    pub fn band(&self, factor: f64) -> Array3<bool> {
        self.power.mapv(|p| p > factor * self.eps)
    }
}

/// Default regulariser: `1e-3 · max |F(f_bp)|²`.
pub const DEFAULT_EPS_FRACTION: f64 = 1e-3;

/// Estimates the filter that maps the unfiltered backprojection `f_bp` to
/// `f_method`. `eps = None` selects `1e-3 · max |F(f_bp)|²`.
pub fn estimate_filter_spectrum(
    f_method: &VoxelVolume,
    f_bp: &VoxelVolume,
    eps: Option<f64>,
) -> Result<FilterEstimate> {
    if f_method.spec() != f_bp.spec() {
        return Err(NlosError::ShapeMismatch("volumes must share the same VolumeSpec".into()));
    }
    let fm = spectrum3(f_method);
    let fb = spectrum3(f_bp);
    let power = fb.mapv(|c| c.norm_sqr());
    let eps = match eps {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(_) => return Err(NlosError::invalid("eps must be positive")),
        None => DEFAULT_EPS_FRACTION * power.iter().cloned().fold(0.0, f64::max),
    };
    if !(eps > 0.0) {
        return Err(NlosError::Numerical("backprojection spectrum is identically zero".into()));
    }
    let mut spectrum = fm;
    ndarray::Zip::from(&mut spectrum).and(&fb).and(&power).for_each(|k, b, p| *k = *k * b.conj() / (p + eps));
    let xz = xz_view(&spectrum.mapv(|c| c.norm()), f_bp.spec());
    Ok(FilterEstimate { spectrum, power, eps, xz })
}
