use ndarray::Array3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{NlosError, Result};
use crate::par;
use crate::transient::TransientCube;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseFields", deny_unknown_fields)]
pub struct NoiseSpec {
    target_photons: f64,
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFields {
    target_photons: f64,
    seed: u64,
}

impl TryFrom<NoiseFields> for NoiseSpec {
    type Error = NlosError;
    fn try_from(f: NoiseFields) -> Result<Self> {
        NoiseSpec::new(f.target_photons, f.seed)
    }
}

impl NoiseSpec {
    pub fn new(target_photons: f64, seed: u64) -> Result<Self> {
        if !(target_photons > 0.0) || !target_photons.is_finite() {
            return Err(NlosError::invalid("target_photons must be positive"));
        }
        Ok(NoiseSpec { target_photons, seed })
    }

    pub fn target_photons(&self) -> f64 {
        self.target_photons
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draw for bin `index` from a generator keyed only by `(seed, index)`, so the
/// result is independent of iteration order and thread count.
fn poisson_draw(seed: u64, index: u64, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    match Poisson::new(mean) {
        Ok(p) => p.sample(&mut rng),
        Err(_) => mean.round(),
    }
}

/// Rescales the cube to `target_photons` expected counts and replaces every
/// bin with an independent Poisson draw.
pub fn add_poisson_noise(cube: &TransientCube, noise: &NoiseSpec) -> Result<TransientCube> {
    let total = cube.total();
    if !(total > 0.0) {
        return Err(NlosError::invalid("cannot add photon noise to a cube with zero mass"));
    }
    let scale = noise.target_photons / total;
    let src = cube.values().as_standard_layout();
    let src = src.as_slice().expect("standard layout");
    let mut out = Array3::<f64>::zeros(cube.values().dim());
    let seed = noise.seed;
    par::for_each_indexed_mut(out.as_slice_mut().expect("contiguous"), |i, v| {
        *v = poisson_draw(seed, i as u64, src[i] * scale);
    });
    Ok(TransientCube::from_parts_unchecked(cube.relay().clone(), cube.topology().clone(), *cube.timing(), out))
}
