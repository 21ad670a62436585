//! Time-of-flight non-line-of-sight imaging.
//!
//! The crate covers the whole pipeline around a relay wall:
//!
//! * [`simulate`] renders three-bounce transients of planar scenes and adds
//!   detector jitter and photon noise;
//! * [`reconstruct`] implements filtered backprojection (Laplacian and LoG),
//!   the light-cone transform, f-k migration and phasor-field reconstruction;
//! * [`analysis`] provides image metrics, spectra, empirical filter
//!   estimation, resolution bounds and a specular visibility predictor;
//! * [`io`] reads and writes cubes, volumes, images and experiment configs.
//!
//! With the default `parallel` feature the heavy kernels run on the rayon
//! pool; without it everything runs sequentially with identical results.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod fft;
pub mod filter;
pub mod geometry;
pub mod io;
mod par;
pub mod reconstruct;
pub mod scene;
pub mod simulate;
pub mod transient;
pub mod volume;

pub use error::{NlosError, Result};
pub use filter::FilterSpec;
pub use geometry::{grid_point, tof, Apertures, CaptureTopology, RelayGeometry, ScanGrid, Vec3, SPEED_OF_LIGHT};
pub use scene::{PlanarPatch, Scene};
pub use transient::{TimingSpec, TransientCube};
pub use volume::{max_intensity_projection, normalize_volume, ProjectionAxis, VolumeSpec, VoxelVolume};

/// Number of worker threads the data-parallel kernels will use.
pub fn worker_threads() -> usize {
    par::num_threads()
}
