//! End-to-end acceptance checks on simulated scenes.
//!
//! Runs as a plain binary so that every criterion prints its own line:
//! `cargo test --release --test acceptance [-- <number>...]`.

use std::path::Path;
use std::time::Instant;

use ndarray::Array3;
use nlos_core::analysis::{estimate_filter_spectrum, predict_visibility, psnr};
use nlos_core::io::{run_bench, BenchSpec, ExperimentConfig};
use nlos_core::reconstruct::{
    backproject, backproject_data, forward_project, inverse_prt, log_filter_signed, reconstruct,
    reconstruct_pf_cc_with, Illumination, LightConeKernel, Method, ReconstructionConfig,
};
use nlos_core::simulate::{add_poisson_noise, apply_jitter, simulate_impulse_response, NoiseSpec, QuadratureSpec};
use nlos_core::{
    CaptureTopology, PlanarPatch, RelayGeometry, ScanGrid, Scene, TimingSpec, TransientCube, Vec3, VolumeSpec,
    VoxelVolume, SPEED_OF_LIGHT,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMA: f64 = 80e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn methods() -> [Method; 5] {
    [
        Method::FbpLap,
        Method::FbpLog { width_s: 0.02 },
        Method::Lct { alpha: 100.0 },
        Method::Fk,
        Method::PfCc { lambda_c: 0.06, n_cycles: 4.0 },
    ]
}

fn render(
    scene: &Scene,
    relay: &RelayGeometry,
    topo: &CaptureTopology,
    timing: &TimingSpec,
    spacing: f64,
) -> TransientCube {
    let quad = QuadratureSpec::new(spacing).unwrap();
    apply_jitter(&simulate_impulse_response(scene, relay, topo, timing, &quad).unwrap().cube)
}

fn confocal(n: usize) -> (RelayGeometry, CaptureTopology) {
    let relay = RelayGeometry::canonical(1.0, 1.0).unwrap();
    (relay, CaptureTopology::Confocal { grid: ScanGrid::square(n).unwrap() })
}

/// 2 cm patch at (0, 0, 1 m) seen by an `n × n` confocal scan, 4 ps × 512 bins.
fn point_target(n: usize) -> TransientCube {
    let (relay, topo) = confocal(n);
    let timing = TimingSpec::new(4e-12, 512, 2.0 * 0.95 / SPEED_OF_LIGHT, GAMMA).unwrap();
    let patch = PlanarPatch::facing_wall(Vec3::new(0.0, 0.0, 1.0), 0.02, 0.02, 1.0).unwrap();
    render(&Scene::single(patch), &relay, &topo, &timing, 0.002)
}

fn point_volume(n_lateral: usize) -> VolumeSpec {
    let p = 1.0 / n_lateral as f64;
    VolumeSpec::new(Vec3::new(-0.5, -0.5, 0.935), [p, p, 0.002], [n_lateral, n_lateral, 64]).unwrap()
}

fn rel_l2(a: impl Iterator<Item = f64> + Clone, b: impl Iterator<Item = f64> + Clone) -> f64 {
    let num: f64 = a.clone().zip(b.clone()).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.map(|y| y * y).sum();
    (num / den).sqrt()
}

fn c1_localization() -> Outcome {
    let cube = point_target(32);
    let spec = point_volume(32);
    let target = Vec3::new(0.0, 0.0, 1.0);
    let mut pass = true;
    let mut parts = Vec::new();
    for m in methods() {
        let t = Instant::now();
        let vol = reconstruct(&cube, &ReconstructionConfig::new(m, spec)).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let p = vol.argmax_position();
        let pitch = spec.pitch();
        let off = [(p.x - target.x) / pitch[0], (p.y - target.y) / pitch[1], (p.z - target.z) / pitch[2]];
        let ok = off.iter().all(|o| o.abs() <= 1.0 + 1e-9) && secs < 60.0;
        pass &= ok;
        parts.push(format!("{} off=({:.2},{:.2},{:.2})vox {:.1}s", m.name(), off[0], off[1], off[2], secs));
    }
    outcome(pass, parts.join("; "))
}

/// Full width at half maximum of `profile` around its peak, linearly
/// interpolating the half-maximum crossings.
fn fwhm(profile: &[f64], step: f64) -> f64 {
    let (peak, max) = profile.iter().enumerate().fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    let half = max / 2.0;
    let mut lo = peak;
    while lo > 0 && profile[lo - 1] > half {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < profile.len() && profile[hi + 1] > half {
        hi += 1;
    }
    assert!(lo > 0 && hi + 1 < profile.len(), "profile does not fall to half maximum");
    let left = lo as f64 - (profile[lo] - half) / (profile[lo] - profile[lo - 1]);
    let right = hi as f64 + (profile[hi] - half) / (profile[hi] - profile[hi + 1]);
    (right - left) * step
}

fn c2_depth_resolution() -> Outcome {
    let cube = point_target(32);
    // A single voxel column through the target, sampled like the (1) grid in z.
    let z = point_volume(32);
    let spec =
        VolumeSpec::new(Vec3::new(-0.001, -0.001, z.origin().z), [0.002, 0.002, z.pitch()[2]], [1, 1, z.dims()[2]])
            .unwrap();
    let vol = backproject(&cube, &spec, true);
    let profile: Vec<f64> = vol.values().iter().copied().collect();
    let w = fwhm(&profile, spec.pitch()[2]);
    let expected = SPEED_OF_LIGHT * GAMMA / 2.0;
    let ratio = w / expected;
    outcome(
        (ratio - 1.0).abs() <= 0.35,
        format!("fwhm={:.3} cm, cγ/2={:.3} cm, ratio={ratio:.3}", w * 100.0, expected * 100.0),
    )
}

/// Two 0.5 m × 1 m patches separated by a 12 cm gap at depth `z`.
fn gap_scene(z: f64) -> Scene {
    let half = 0.06 + 0.25;
    let patch = |x: f64| PlanarPatch::facing_wall(Vec3::new(x, 0.0, z), 0.5, 1.0, 1.0).unwrap();
    Scene::new(vec![patch(-half), patch(half)])
}

/// `1 − valley/peak` of the x cross-section through the front view.
fn gap_contrast(vol: &VoxelVolume) -> f64 {
    let spec = vol.spec();
    let [nx, ny, _] = spec.dims();
    let v = vol.values();
    let mut profile = vec![0.0; nx];
    let mut rows = 0;
    for j in 0..ny {
        if spec.axis_center(1, j).abs() > 0.25 {
            continue;
        }
        rows += 1;
        for (i, p) in profile.iter_mut().enumerate() {
            *p += v.slice(ndarray::s![i, j, ..]).fold(0.0f64, |a, &b| a.max(b));
        }
    }
    profile.iter_mut().for_each(|p| *p /= rows as f64);
    let peak = profile.iter().cloned().fold(0.0, f64::max);
    let valley =
        (0..nx).filter(|&i| spec.axis_center(0, i).abs() < 0.06).map(|i| profile[i]).fold(f64::INFINITY, f64::min);
    1.0 - valley / peak
}

fn c3_lateral_scaling() -> Outcome {
    let n = 32;
    let (relay, topo) = confocal(n);
    let mut contrast = Vec::new();
    for z in [1.0, 2.0] {
        let timing = TimingSpec::new(16e-12, 512, 2.0 * (z - 0.1) / SPEED_OF_LIGHT, GAMMA).unwrap();
        let cube = render(&gap_scene(z), &relay, &topo, &timing, 0.01);
        let spec =
            VolumeSpec::new(Vec3::new(-0.5, -0.5, z - 0.1), [1.0 / 32.0, 1.0 / 32.0, 0.005], [n, n, 40]).unwrap();
        let row: Vec<f64> = methods()
            .iter()
            .map(|m| gap_contrast(&reconstruct(&cube, &ReconstructionConfig::new(*m, spec)).unwrap()))
            .collect();
        contrast.push(row);
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, m) in methods().iter().enumerate() {
        pass &= contrast[1][k] < contrast[0][k];
        parts.push(format!("{} {:.3}→{:.3}", m.name(), contrast[0][k], contrast[1][k]));
    }
    outcome(pass, parts.join("; "))
}

fn c4_photon_counts() -> Outcome {
    let (relay, topo) = confocal(32);
    let timing = TimingSpec::new(8e-12, 768, 2.0 * 0.95 / SPEED_OF_LIGHT, GAMMA).unwrap();
    let patch = PlanarPatch::facing_wall(Vec3::new(0.0, 0.0, 1.0), 1.0, 1.0, 1.0).unwrap();
    let cube = render(&Scene::single(patch), &relay, &topo, &timing, 0.01);
    let spec = VolumeSpec::new(Vec3::new(-0.5, -0.5, 0.84), [1.0 / 32.0, 1.0 / 32.0, 0.01], [32, 32, 32]).unwrap();
    let counts = [0.5e6, 2e6, 8e6, 32e6];
    let noisy: Vec<TransientCube> =
        counts.iter().map(|&p| add_poisson_noise(&cube, &NoiseSpec::new(p, 11).unwrap()).unwrap()).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [Method::Lct { alpha: 100.0 }, Method::Fk, Method::PfCc { lambda_c: 0.06, n_cycles: 4.0 }] {
        let cfg = ReconstructionConfig::new(m, spec);
        let reference = reconstruct(&cube, &cfg).unwrap();
        let db: Vec<f64> = noisy
            .iter()
            .map(|c| psnr(reconstruct(c, &cfg).unwrap().values(), reference.values(), 1.0).unwrap())
            .collect();
        pass &= db.windows(2).all(|w| w[1] >= w[0]);
        if matches!(m, Method::PfCc { .. }) {
            pass &= (db[3] - db[1]).abs() <= 1.0;
        }
        let list: Vec<String> = db.iter().map(|d| format!("{d:.2}")).collect();
        parts.push(format!("{} [{}] dB", m.name(), list.join(", ")));
    }
    outcome(pass, parts.join("; "))
}

fn c5_wiener_identity() -> Outcome {
    let kernel = LightConeKernel::for_cube(&point_target(32)).unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for a in kernel.spectrum().iter().filter(|a| a.norm() > 1e-12) {
        let lhs = a.norm_sqr() / a;
        worst = worst.max((lhs - a.conj()).norm() / a.norm());
        checked += 1;
    }
    outcome(worst <= 1e-10, format!("{checked} coefficients, worst relative error {worst:.2e}"))
}

fn c6_laplacian_phasor() -> Outcome {
    let cube = point_target(16);
    let spec = point_volume(16);
    let pf = reconstruct_pf_cc_with(&cube, Illumination::Laplacian, &spec).unwrap();
    let prt = inverse_prt(&cube, &spec).unwrap();
    let max = prt.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let err = rel_l2(pf.values().iter().copied(), prt.values().iter().map(|v| v.abs() / max));
    outcome(err <= 0.02, format!("relative L2 {:.4}", err))
}

fn c7_adjoint() -> Outcome {
    let (relay, topo) = confocal(8);
    let timing = TimingSpec::new(32e-12, 64, 2.0 * 0.9 / SPEED_OF_LIGHT, 0.0).unwrap();
    let spec = VolumeSpec::new(Vec3::new(-0.4, -0.4, 0.9), [0.1, 0.1, 0.04], [8, 8, 8]).unwrap();
    let ap = topo.apertures(&relay);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let t = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let f = VoxelVolume::new(spec, Array3::from_shape_fn(spec.shape(), |_| rng.random::<f64>())).unwrap();
        let h = Array3::from_shape_fn((1, 64, 64), |_| rng.random::<f64>());
        let af = forward_project(&f, &ap, &timing);
        let ath = backproject_data(&h, &ap, &timing, &spec, false).unwrap();
        let lhs: f64 = af.iter().zip(h.iter()).map(|(a, b)| a * b).sum();
        let rhs: f64 = f.values().iter().zip(ath.iter()).map(|(a, b)| a * b).sum();
        worst = worst.max((lhs - rhs).abs() / lhs.abs());
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(worst <= 1e-6 && secs < 5.0, format!("worst relative gap {worst:.2e}, {secs:.2}s"))
}

fn c8_filter_estimate() -> Outcome {
    let width = 0.08;
    let pitch = 0.02;
    let n = 48;
    let cube = point_target(32);
    let spec = VolumeSpec::new(Vec3::new(-0.48, -0.48, 1.0 - 0.48), [pitch; 3], [n, n, n]).unwrap();
    // A Hann taper keeps the non-periodic volume edges out of the DFT ratio.
    let hann = |i: usize| (std::f64::consts::PI * (i as f64 + 0.5) / n as f64).sin().powi(2);
    let raw = backproject(&cube, &spec, true);
    let bp = VoxelVolume::new(
        spec,
        Array3::from_shape_fn(spec.shape(), |(i, j, k)| raw.values()[[i, j, k]] * hann(i) * hann(j) * hann(k)),
    )
    .unwrap();
    let filtered = log_filter_signed(&bp, width).unwrap();
    let est = estimate_filter_spectrum(&filtered, &bp, None).unwrap();
    let band = est.band(10.0);

    // Analytic transfer: Gaussian of σ = s/pitch voxels on each axis times the
    // three-point second difference along z.
    let sigma = width / pitch;
    let (nx, ny, nz) = est.spectrum.dim();
    let freq = |k: usize, n: usize| {
        let k = k as isize;
        let n = n as isize;
        (if k > n / 2 { k - n } else { k }) as f64 / n as f64
    };
    let gauss = |f: f64| (-2.0 * (std::f64::consts::PI * sigma * f).powi(2)).exp();
    let (mut num, mut den, mut count) = (0.0, 0.0, 0usize);
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                if !band[[i, j, k]] {
                    continue;
                }
                let (fx, fy, fz) = (freq(i, nx), freq(j, ny), freq(k, nz));
                let lap = 4.0 * (std::f64::consts::PI * fz).sin().powi(2);
                let analytic = gauss(fx) * gauss(fy) * gauss(fz) * lap;
                num += (est.spectrum[[i, j, k]] - analytic).norm_sqr();
                den += analytic * analytic;
                count += 1;
            }
        }
    }
    let err = (num / den).sqrt();
    outcome(err <= 0.05, format!("relative L2 {err:.4} over {count} band coefficients"))
}

/// Spearman rank correlation with average ranks for ties.
fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(x: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        let mut r = vec![0.0; x.len()];
        let mut s = 0;
        while s < idx.len() {
            let mut e = s;
            while e + 1 < idx.len() && x[idx[e + 1]] == x[idx[s]] {
                e += 1;
            }
            for &i in &idx[s..=e] {
                r[i] = (s + e) as f64 / 2.0;
            }
            s = e + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let mean = (a.len() - 1) as f64 / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - mean) * (y - mean)).sum();
    let va: f64 = ra.iter().map(|x| (x - mean).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mean).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Mean of the normalized volume over voxels within 1.5 voxels of the patch.
fn patch_region_mean(vol: &VoxelVolume, patch: &PlanarPatch) -> f64 {
    let spec = vol.spec();
    let [nx, ny, nz] = spec.dims();
    let slack = 1.5 * spec.pitch().iter().cloned().fold(0.0, f64::max);
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let d = spec.voxel_center(i, j, k) - patch.center();
                if d.dot(patch.normal()).abs() <= slack
                    && d.dot(patch.tangent()).abs() <= patch.width() / 2.0
                    && d.dot(patch.bitangent()).abs() <= patch.height() / 2.0
                {
                    sum += vol.values()[[i, j, k]];
                    count += 1;
                }
            }
        }
    }
    sum / count as f64
}

fn c9_visibility() -> Outcome {
    let relay = RelayGeometry::canonical(2.0, 2.0).unwrap();
    let topo = CaptureTopology::SingleLaser { laser: Vec3::ZERO, sensors: ScanGrid::square(48).unwrap() };
    let base = |x: f64, z: f64| PlanarPatch::facing_wall(Vec3::new(x, 0.0, z), 0.5, 0.5, 1.0).unwrap();
    let tilt = std::f64::consts::FRAC_PI_6;
    let configs = [
        ("a", base(0.0, 1.0)),
        ("b", base(0.5, 1.0)),
        ("c", base(-0.2, 1.0).rotated_about_y(tilt).unwrap()),
        ("d", base(-0.4, 1.0).rotated_about_y(tilt).unwrap()),
        ("e", base(0.0, 1.0).rotated_about_y(tilt).unwrap()),
        ("f", base(-0.2, 1.5).rotated_about_y(tilt).unwrap()),
    ];
    let timing = TimingSpec::new(16e-12, 1024, 2.0 * 0.6 / SPEED_OF_LIGHT, GAMMA).unwrap();
    let method = Method::PfCc { lambda_c: 0.1, n_cycles: 4.0 };
    let mut predicted = Vec::new();
    let mut measured = Vec::new();
    let mut parts = Vec::new();
    for (name, patch) in &configs {
        let cube = render(&Scene::single(patch.clone()), &relay, &topo, &timing, 0.01);
        let c = patch.center();
        let spec = VolumeSpec::new(Vec3::new(c.x - 0.4, -0.4, c.z - 0.3), [0.025; 3], [32, 32, 24]).unwrap();
        let vol = reconstruct(&cube, &ReconstructionConfig::new(method, spec)).unwrap();
        let p = predict_visibility(patch, &topo, &relay, 32).unwrap().visible_fraction;
        let m = patch_region_mean(&vol, patch);
        parts.push(format!("{name}: {p:.2}/{m:.3}"));
        predicted.push(p);
        measured.push(m);
    }
    let rho = spearman(&predicted, &measured);
    outcome(rho >= 0.8, format!("ρ={rho:.3} ({})", parts.join(", ")))
}

fn bench_config() -> ExperimentConfig {
    let (relay, topo) = confocal(8);
    let patch = PlanarPatch::facing_wall(Vec3::new(0.0, 0.0, 1.0), 0.4, 0.4, 1.0).unwrap();
    let mut value = serde_json::json!({
        "scene": Scene::single(patch),
        "relay": relay,
        "topology": topo,
        "timing": TimingSpec::new(16e-12, 256, 2.0 * 0.9 / SPEED_OF_LIGHT, GAMMA).unwrap(),
        "quadrature": QuadratureSpec::new(0.02).unwrap(),
        "volume": VolumeSpec::new(Vec3::new(-0.5, -0.5, 0.9), [0.125, 0.125, 0.01], [8, 8, 20]).unwrap(),
        "seed": 99,
    });
    value["bench"] = serde_json::to_value(BenchSpec {
        methods: vec![Method::FbpLap, Method::Lct { alpha: 10.0 }, Method::PfCc { lambda_c: 0.1, n_cycles: 4.0 }],
        photon_counts: vec![1e5, 1e6],
    })
    .unwrap();
    ExperimentConfig::from_json(&value.to_string()).unwrap()
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn c10_determinism() -> Outcome {
    let cfg = bench_config();
    let runs: Vec<Vec<(String, Vec<u8>)>> = [1, 1, 3]
        .iter()
        .map(|&threads| {
            let dir = tempfile::tempdir().unwrap();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_bench(&cfg, dir.path())).unwrap();
            dir_contents(dir.path())
        })
        .collect();
    let same = runs[0] == runs[1] && runs[0] == runs[2];
    outcome(same, format!("{} files compared across 3 runs (1, 1 and 3 threads)", runs[0].len()))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "point-target localization", c1_localization),
        (2, "depth resolution", c2_depth_resolution),
        (3, "lateral resolution vs depth", c3_lateral_scaling),
        (4, "photon-count monotonicity", c4_photon_counts),
        (5, "Wiener conjugate identity", c5_wiener_identity),
        (6, "Laplacian phasor field = inverse PRT", c6_laplacian_phasor),
        (7, "adjoint", c7_adjoint),
        (8, "filter-estimation oracle", c8_filter_estimate),
        (9, "visibility vs reconstruction", c9_visibility),
        (10, "bench determinism", c10_determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} {name} [{:.1}s]: {}", t.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
