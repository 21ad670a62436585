//! Specular visibility of planar patches.
//!
//! Under third-bounce imaging a planar diffuse patch behaves like a mirror at
//! the imaging wavelengths: a point is recoverable only if the specular path
//! from the illumination reaches the sensed part of the wall.

use serde::Serialize;

use crate::error::{NlosError, Result};
use crate::geometry::{CaptureTopology, RelayGeometry, Vec3};
use crate::scene::PlanarPatch;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisibilityReport {
    /// Samples per patch axis (`samples × samples` lattice).
    pub samples: usize,
    /// Row-major over (height, width): index `jb · samples + ja`.
    pub visible: Vec<bool>,
    pub visible_fraction: f64,
    /// Points on the visible/invisible boundary in patch coordinates
    /// `(along tangent, along bitangent)`, metres from the patch centre.
    pub boundary: Vec<[f64; 2]>,
}

fn hits(relay: &RelayGeometry, from: Vec3, dir: Vec3) -> bool {
    match relay.intersect_ray(from, dir) {
        Some((u, v)) => u.abs() <= 0.5 * relay.extent_u() && v.abs() <= 0.5 * relay.extent_v(),
        None => false,
    }
}

/// Reflects the ray `laser → x` about `normal` and tests it against the wall.
fn specular_hit(relay: &RelayGeometry, laser: Vec3, x: Vec3, normal: Vec3) -> bool {
    let incoming = x - laser;
    if incoming.dot(normal) >= 0.0 {
        return false; // laser behind the reflecting side
    }
    let reflected = incoming - normal * (2.0 * incoming.dot(normal));
    hits(relay, x, reflected)
}

/// Predicts which parts of `patch` are recoverable from `topo`.
pub fn predict_visibility(
    patch: &PlanarPatch,
    topo: &CaptureTopology,
    relay: &RelayGeometry,
    samples: usize,
) -> Result<VisibilityReport> {
    if samples < 4 {
        return Err(NlosError::invalid("visibility needs at least 4 samples per axis"));
    }
    topo.validate(relay)?;
    let n = patch.normal();
    let lattice = patch.lattice(samples, samples);
    let lasers = match topo {
        CaptureTopology::Confocal { .. } => Vec::new(),
        CaptureTopology::SingleLaser { laser, .. } => vec![*laser],
        CaptureTopology::Exhaustive { lasers, .. } => lasers.points(relay),
    };
    let visible: Vec<bool> = lattice
        .iter()
        .map(|s| {
            if topo.is_confocal() {
                hits(relay, s.position, n)
            } else {
                lasers.iter().any(|&l| specular_hit(relay, l, s.position, n))
            }
        })
        .collect();
    let count = visible.iter().filter(|v| **v).count();

    let mut boundary = Vec::new();
    let at = |ja: usize, jb: usize| jb * samples + ja;
    let mid = |p: usize, q: usize| {
        let (a, b) = (lattice[p].local, lattice[q].local);
        [(a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0]
    };
    for jb in 0..samples {
        for ja in 0..samples {
            let here = at(ja, jb);
            if ja + 1 < samples && visible[here] != visible[at(ja + 1, jb)] {
                boundary.push(mid(here, at(ja + 1, jb)));
            }
            if jb + 1 < samples && visible[here] != visible[at(ja, jb + 1)] {
                boundary.push(mid(here, at(ja, jb + 1)));
            }
        }
    }
    Ok(VisibilityReport { samples, visible_fraction: count as f64 / visible.len() as f64, visible, boundary })
}
