use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{NlosError, Result};
use crate::geometry::{CaptureTopology, RelayGeometry, Vec3, SPEED_OF_LIGHT};
use crate::par;
use crate::scene::Scene;
use crate::transient::{splat_linear, TimingSpec, TransientCube};

/// Surface sampling density for the patch integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadratureFields", deny_unknown_fields)]
pub struct QuadratureSpec {
    max_sample_spacing: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadratureFields {
    max_sample_spacing: f64,
}

impl TryFrom<QuadratureFields> for QuadratureSpec {
    type Error = NlosError;
    fn try_from(f: QuadratureFields) -> Result<Self> {
        QuadratureSpec::new(f.max_sample_spacing)
    }
}

impl QuadratureSpec {
    pub fn new(max_sample_spacing: f64) -> Result<Self> {
        if !(max_sample_spacing > 0.0) || !max_sample_spacing.is_finite() {
            return Err(NlosError::invalid("max_sample_spacing must be positive"));
        }
        Ok(QuadratureSpec { max_sample_spacing })
    }

    pub fn max_sample_spacing(&self) -> f64 {
        self.max_sample_spacing
    }
}

/// Output of [`simulate_impulse_response`].
#[derive(Clone, Debug)]
pub struct Rendered {
    pub cube: TransientCube,
    /// Path contributions whose time of flight fell outside the recorded window.
    pub truncated: u64,
}

/// Flattened surface samples.
struct Samples {
    pos: Vec<Vec3>,
    normal: Vec<Vec3>,
    weight: Vec<f64>,
}

/// Geometric factor and one-way time for a relay point and a surface sample:
/// `cosθ_relay · cosθ_patch / d²`, zero when either side faces away.
#[inline]
fn endpoint(relay_pt: Vec3, relay_n: Vec3, pos: Vec3, n: Vec3) -> (f64, f64, f64) {
    let d_vec = pos - relay_pt;
    let d = d_vec.norm();
    let cos_relay = relay_n.dot(d_vec) / d;
    let cos_patch = -n.dot(d_vec) / d;
    let g = if cos_relay > 0.0 && cos_patch > 0.0 { cos_relay * cos_patch / (d * d) } else { 0.0 };
    (g, d / SPEED_OF_LIGHT, d)
}

/// Renders third-bounce transients of `scene` for every laser/sensor pair of
/// `topo`. Each path deposits
/// `albedo·dA · (cosθ_l cosθ_v,l / d_l²) · (cosθ_s cosθ_v,s / d_s²)`
/// at time `t_l + t_s`, split linearly between the two neighbouring bins.
pub fn simulate_impulse_response(
    scene: &Scene,
    geom: &RelayGeometry,
    topo: &CaptureTopology,
    timing: &TimingSpec,
    quad: &QuadratureSpec,
) -> Result<Rendered> {
    scene.validate(geom)?;
    topo.validate(geom)?;

    let mut samples = Samples { pos: Vec::new(), normal: Vec::new(), weight: Vec::new() };
    for patch in &scene.patches {
        for s in patch.samples(quad.max_sample_spacing) {
            samples.pos.push(s.position);
            samples.normal.push(s.normal);
            samples.weight.push(s.weight);
        }
    }

    let ap = topo.apertures(geom);
    let n_bins = timing.n_bins();
    let relay_n = geom.normal();
    let inv_bin = 1.0 / timing.bin_width();
    let t0 = timing.t_start();
    let truncated = AtomicU64::new(0);
    let degenerate = AtomicU64::new(0);

    let mut values = Array3::<f64>::zeros((ap.n_lasers(), ap.n_sensors(), n_bins));
    let flat = values.as_slice_mut().expect("fresh array is contiguous");
    let n_s = ap.n_sensors();

    par::for_each_chunk_mut(flat, n_bins, |series_idx, series| {
        let (l, s) = (series_idx / n_s, series_idx % n_s);
        let (xl, xs) = ap.pair(l, s);
        let mut dropped = 0u64;
        let mut zero_len = 0u64;
        for i in 0..samples.pos.len() {
            let (p, n) = (samples.pos[i], samples.normal[i]);
            let (g_l, t_l, d_l) = endpoint(xl, relay_n, p, n);
            let (g_s, t_s, d_s) = if ap.confocal { (g_l, t_l, d_l) } else { endpoint(xs, relay_n, p, n) };
            if d_l == 0.0 || d_s == 0.0 {
                zero_len += 1;
                continue;
            }
            let w = samples.weight[i] * (g_l * g_s);
            if w == 0.0 {
                continue;
            }
            let x = (t_l + t_s - t0) * inv_bin;
            if !(x >= 0.0 && x < n_bins as f64) {
                dropped += 1;
                continue;
            }
            splat_linear(series, x, w);
        }
        if dropped > 0 {
            truncated.fetch_add(dropped, Ordering::Relaxed);
        }
        if zero_len > 0 {
            degenerate.fetch_add(zero_len, Ordering::Relaxed);
        }
    });

    if degenerate.load(Ordering::Relaxed) > 0 {
        return Err(NlosError::invalid("surface sample coincides with a relay point (zero-length path)"));
    }
    let truncated = truncated.into_inner();
    if truncated > 0 {
        log::debug!("{truncated} path contributions fell outside the time window");
    }
    let cube = TransientCube::from_parts_unchecked(geom.clone(), topo.clone(), *timing, values);
    Ok(Rendered { cube, truncated })
}
