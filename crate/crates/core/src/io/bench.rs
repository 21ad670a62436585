//! Method × photon-count quality matrix.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::container::{write_cube, write_volume};
use crate::analysis::{ms_ssim, psnr};
use crate::error::{NlosError, Result};
use crate::reconstruct::reconstruct;
use crate::simulate::{add_poisson_noise, NoiseSpec};
use crate::volume::{max_intensity_projection, ProjectionAxis, VoxelVolume};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: String,
    pub photons: f64,
    pub psnr_db: f64,
    pub ms_ssim: f64,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub csv: PathBuf,
}

/// Runs the `bench` block of `cfg`, writing into `dir`:
///
/// * `cube_ref.nlos` — noiseless (jittered) measurement;
/// * `cube_<photons>.nlos` — one noisy cube per photon count;
/// * `vol_<i>_<method>_ref.nlos` and `vol_<i>_<method>_<photons>.nlos`;
/// * `bench.csv` — PSNR of each noisy volume against the noiseless
///   reconstruction of the same method, and MS-SSIM of their front (z) MIPs.
///
/// Rows are ordered by photon count, then by method. Everything is a pure
/// function of the config, so reruns are byte-identical.
pub fn run_bench(cfg: &ExperimentConfig, dir: &Path) -> Result<BenchReport> {
    let bench = cfg.bench.as_ref().ok_or_else(|| NlosError::invalid("config has no bench block"))?;
    fs::create_dir_all(dir)?;
    let mut counts = bench.photon_counts.clone();
    counts.sort_by(f64::total_cmp);

    let cube = cfg.simulate_noiseless()?;
    write_cube(dir.join("cube_ref.nlos"), &cube)?;
    let tag = |i: usize, name: &str, suffix: &str| format!("vol_{i}_{name}_{suffix}.nlos");

    let mut references: Vec<(VoxelVolume, ndarray::Array2<f64>)> = Vec::new();
    for (i, m) in bench.methods.iter().enumerate() {
        let v = reconstruct(&cube, &cfg.reconstruction(*m)?)?;
        write_volume(dir.join(tag(i, m.name(), "ref")), &v)?;
        let mip = max_intensity_projection(&v, ProjectionAxis::Z);
        references.push((v, mip));
    }

    let mut rows = Vec::new();
    for &photons in &counts {
        let noisy = add_poisson_noise(&cube, &NoiseSpec::new(photons, cfg.seed)?)?;
        let label = format!("{photons:.0}");
        write_cube(dir.join(format!("cube_{label}.nlos")), &noisy)?;
        for (i, m) in bench.methods.iter().enumerate() {
            let v = reconstruct(&noisy, &cfg.reconstruction(*m)?)?;
            write_volume(dir.join(tag(i, m.name(), &label)), &v)?;
            let (ref_vol, ref_mip) = &references[i];
            let row = BenchRow {
                method: m.name().to_string(),
                photons,
                psnr_db: psnr(v.values(), ref_vol.values(), 1.0)?,
                ms_ssim: ms_ssim(&max_intensity_projection(&v, ProjectionAxis::Z), ref_mip)?.value,
            };
            log::info!("{} @ {label}: PSNR {:.2} dB, MS-SSIM {:.4}", row.method, row.psnr_db, row.ms_ssim);
            rows.push(row);
        }
    }

    let csv_path = dir.join("bench.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_error)?;
    for row in &rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(BenchReport { rows, csv: csv_path })
}

fn csv_error(e: csv::Error) -> NlosError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => NlosError::Io(io),
        other => NlosError::Header(format!("csv: {other:?}")),
    }
}
