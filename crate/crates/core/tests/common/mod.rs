//! Scene builders shared by the integration suites.
#![allow(dead_code)]

use nlos_core::simulate::{apply_jitter, simulate_impulse_response, QuadratureSpec};
use nlos_core::{
    CaptureTopology, PlanarPatch, RelayGeometry, ScanGrid, Scene, TimingSpec, TransientCube, Vec3, VolumeSpec,
    SPEED_OF_LIGHT,
};

pub const GAMMA: f64 = 80e-12;

pub fn confocal(n: usize) -> (RelayGeometry, CaptureTopology) {
    let relay = RelayGeometry::canonical(1.0, 1.0).unwrap();
    (relay, CaptureTopology::Confocal { grid: ScanGrid::square(n).unwrap() })
}

/// Renders `scene` and applies the detector jitter.
pub fn render(
    scene: &Scene,
    relay: &RelayGeometry,
    topo: &CaptureTopology,
    timing: &TimingSpec,
    spacing: f64,
) -> TransientCube {
    let quad = QuadratureSpec::new(spacing).unwrap();
    apply_jitter(&simulate_impulse_response(scene, relay, topo, timing, &quad).unwrap().cube)
}

/// 2 cm patch centred at `center`, `n × n` confocal scan, 4 ps × 512 bins.
pub fn point_cube(n: usize, center: Vec3) -> TransientCube {
    let (relay, topo) = confocal(n);
    let timing = TimingSpec::new(4e-12, 512, 2.0 * (center.z - 0.05) / SPEED_OF_LIGHT, GAMMA).unwrap();
    let patch = PlanarPatch::facing_wall(center, 0.02, 0.02, 1.0).unwrap();
    render(&Scene::single(patch), &relay, &topo, &timing, 0.002)
}

/// Volume whose lateral voxels coincide with an `n × n` scan of the unit wall.
pub fn scan_volume(n: usize, z0: f64, dz: f64, nz: usize) -> VolumeSpec {
    let p = 1.0 / n as f64;
    VolumeSpec::new(Vec3::new(-0.5, -0.5, z0), [p, p, dz], [n, n, nz]).unwrap()
}

/// Coplanar `size × size` patch at 1 m on an `n × n` confocal scan, 8 ps bins.
pub fn patch_cube(n: usize, size: f64) -> TransientCube {
    let (relay, topo) = confocal(n);
    let timing = TimingSpec::new(8e-12, 768, 2.0 * 0.95 / SPEED_OF_LIGHT, GAMMA).unwrap();
    let patch = PlanarPatch::facing_wall(Vec3::new(0.0, 0.0, 1.0), size, size, 1.0).unwrap();
    render(&Scene::single(patch), &relay, &topo, &timing, 0.01)
}
