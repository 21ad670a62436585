//! Evaluation tools: image metrics, spectra, filter estimation, resolution
//! bounds and visibility prediction.

mod metrics;
mod resolution;
mod spectrum;
mod visibility;

pub use metrics::{ms_ssim, ms_ssim_with_peak, psnr, MsSsim, MS_SSIM_WEIGHTS, PSNR_CAP_DB};
pub use resolution::{depth_resolution, lateral_resolution, min_wavelength, LateralMode};
pub use spectrum::{
    centered_frequencies, estimate_filter_spectrum, xz_spectrum, FilterEstimate, SpectrumImage, DEFAULT_EPS_FRACTION,
};
pub use visibility::{predict_visibility, VisibilityReport};
