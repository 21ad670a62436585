//! Forward model: three-bounce transient rendering plus detector effects.

mod jitter;
mod noise;
mod render;

pub use jitter::{apply_jitter, fwhm_to_sigma, gaussian_kernel};
pub use noise::{add_poisson_noise, NoiseSpec};
pub use render::{simulate_impulse_response, QuadratureSpec, Rendered};
