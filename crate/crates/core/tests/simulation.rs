mod common;

use common::{confocal, GAMMA};
use nlos_core::simulate::{simulate_impulse_response, QuadratureSpec};
use nlos_core::{CaptureTopology, PlanarPatch, RelayGeometry, ScanGrid, Scene, TimingSpec, Vec3, SPEED_OF_LIGHT};
use proptest::prelude::*;

fn sim(
    scene: &Scene,
    relay: &RelayGeometry,
    topo: &CaptureTopology,
    timing: &TimingSpec,
    spacing: f64,
) -> ndarray::Array3<f64> {
    simulate_impulse_response(scene, relay, topo, timing, &QuadratureSpec::new(spacing).unwrap())
        .unwrap()
        .cube
        .into_values()
}

#[test]
fn disjoint_patches_add_up() {
    let (relay, topo) = confocal(6);
    let timing = TimingSpec::new(16e-12, 400, 5e-9, 0.0).unwrap();
    let a = Scene::single(PlanarPatch::facing_wall(Vec3::new(-0.3, 0.1, 1.0), 0.3, 0.2, 0.8).unwrap());
    let b = Scene::single(
        PlanarPatch::facing_wall(Vec3::new(0.3, -0.2, 1.4), 0.2, 0.4, 1.0).unwrap().rotated_about_y(0.3).unwrap(),
    );
    let both = sim(&a.union(&b), &relay, &topo, &timing, 0.02);
    let sum = sim(&a, &relay, &topo, &timing, 0.02) + sim(&b, &relay, &topo, &timing, 0.02);
    let scale = both.iter().cloned().fold(0.0, f64::max);
    for (x, y) in both.iter().zip(sum.iter()) {
        assert!((x - y).abs() <= 1e-12 * scale);
    }
}

#[test]
fn swapping_lasers_and_sensors_transposes_the_cube() {
    let relay = RelayGeometry::canonical(1.0, 1.0).unwrap();
    let timing = TimingSpec::new(16e-12, 400, 5e-9, 0.0).unwrap();
    let scene = Scene::single(PlanarPatch::facing_wall(Vec3::new(0.1, 0.0, 1.1), 0.3, 0.3, 1.0).unwrap());
    let (lasers, sensors) = (ScanGrid::new(3, 2).unwrap(), ScanGrid::new(2, 4).unwrap());
    let forward = simulate_impulse_response(
        &scene,
        &relay,
        &CaptureTopology::Exhaustive { lasers, sensors },
        &timing,
        &QuadratureSpec::new(0.03).unwrap(),
    )
    .unwrap()
    .cube;
    let swapped = sim(&scene, &relay, &CaptureTopology::Exhaustive { lasers: sensors, sensors: lasers }, &timing, 0.03);
    assert_eq!(forward.transposed().unwrap().values(), &swapped);
}

fn relative_l1(a: &ndarray::Array3<f64>, b: &ndarray::Array3<f64>) -> f64 {
    let diff: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum();
    diff / b.iter().map(|v| v.abs()).sum::<f64>()
}

#[test]
fn halving_quadrature_spacing_changes_little() {
    let (relay, topo) = confocal(16);
    let timing = TimingSpec::new(8e-12, 768, 2.0 * 0.95 / SPEED_OF_LIGHT, GAMMA).unwrap();
    let scene = Scene::single(PlanarPatch::facing_wall(Vec3::new(0.0, 0.0, 1.0), 1.0, 1.0, 1.0).unwrap());
    // Raw impulse responses need samples closer than a bin's path length to
    // stop striping; after jitter much coarser sampling is already stable.
    let change = relative_l1(&sim(&scene, &relay, &topo, &timing, 0.005), &sim(&scene, &relay, &topo, &timing, 0.0025));
    assert!(change < 0.02, "raw relative L1 change {change}");
    let jittered = |h: f64| common::render(&scene, &relay, &topo, &timing, h).into_values();
    let change = relative_l1(&jittered(0.02), &jittered(0.01));
    assert!(change < 0.02, "jittered relative L1 change {change}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn confocal_arrival_bin(z in 0.3f64..2.5, t0_frac in 0.0f64..0.8) {
        let relay = RelayGeometry::canonical(0.5, 0.5).unwrap();
        let topo = CaptureTopology::Confocal { grid: ScanGrid::square(1).unwrap() };
        let bin = 4e-12;
        let t_start = t0_frac * 2.0 * z / SPEED_OF_LIGHT;
        let n_bins = ((2.0 * z / SPEED_OF_LIGHT - t_start) / bin) as usize + 64;
        let timing = TimingSpec::new(bin, n_bins, t_start, 0.0).unwrap();
        let dot = Scene::single(PlanarPatch::facing_wall(Vec3::new(0.0, 0.0, z), 1e-4, 1e-4, 1.0).unwrap());
        let cube = sim(&dot, &relay, &topo, &timing, 1e-4);
        let series = cube.index_axis(ndarray::Axis(0), 0);
        let series = series.index_axis(ndarray::Axis(0), 0);
        let argmax = series.iter().enumerate().fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a }).0;
        let expected = ((2.0 * z / SPEED_OF_LIGHT - t_start) / bin).round() as i64;
        prop_assert!((argmax as i64 - expected).abs() <= 1, "argmax {} expected {}", argmax, expected);
    }
}
