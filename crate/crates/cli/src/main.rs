//! `nlos` — simulate, reconstruct and evaluate non-line-of-sight captures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use nlos_core::analysis::{
    depth_resolution, estimate_filter_spectrum, lateral_resolution, min_wavelength, ms_ssim, predict_visibility, psnr,
    xz_spectrum, LateralMode, SpectrumImage,
};
use nlos_core::io::{
    read_cube, read_volume, run_bench, write_cube, write_image, write_volume, ExperimentConfig, ImageFormat,
};
use nlos_core::reconstruct::{reconstruct, Method, ReconstructionConfig};
use nlos_core::simulate::{add_poisson_noise, NoiseSpec};
use nlos_core::{max_intensity_projection, NlosError, ProjectionAxis, Result, VolumeSpec, VoxelVolume};
use serde_json::json;

#[derive(Parser)]
#[command(name = "nlos", version, about = "Time-of-flight non-line-of-sight imaging toolkit")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the transient cube described by an experiment config.
    Simulate {
        config: PathBuf,
        /// Output cube; defaults to `outputs.cube` from the config.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Add Poisson photon noise to a cube.
    Noise {
        cube: PathBuf,
        /// Expected total photon count.
        #[arg(long)]
        photons: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Reconstruct a volume from a cube.
    Reconstruct(ReconstructArgs),
    /// Maximum-intensity projection of a volume as an image.
    Project {
        volume: PathBuf,
        #[arg(long, value_enum, default_value_t = AxisArg::Z)]
        axis: AxisArg,
        /// Image path; the format follows the extension (.pfm or .pgm).
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compare two volumes; prints JSON.
    Metrics {
        a: PathBuf,
        b: PathBuf,
        /// PSNR of the volumes (dB).
        #[arg(long)]
        psnr: bool,
        /// MS-SSIM of the front (z) projections.
        #[arg(long)]
        ms_ssim: bool,
    },
    /// Ω_x–Ω_z magnitude spectrum of a volume as an image.
    Spectrum {
        volume: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Empirical filter between a method's volume and the unfiltered backprojection.
    FilterEstimate {
        method_volume: PathBuf,
        bp_volume: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Regulariser; defaults to 1e-3 of the peak backprojection power.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Resolution bounds for a detector jitter and geometry; prints JSON.
    Resolution {
        /// Detector jitter FWHM in picoseconds.
        #[arg(long = "gamma-ps", visible_alias = "gamma")]
        gamma_ps: f64,
        /// Depth of the target in metres.
        #[arg(long)]
        z: f64,
        /// Largest laser–sensor distance on the relay wall in metres.
        #[arg(long)]
        dmax: f64,
        #[arg(long, default_value = "fwhm-far")]
        mode: LateralMode,
    },
    /// Predicted visible fraction of every patch in a config; prints JSON.
    Visibility { config: PathBuf },
    /// Method × photon-count quality matrix; writes cubes, volumes and bench.csv.
    Bench {
        config: PathBuf,
        /// Output directory; defaults to `outputs.directory` from the config.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ReconstructArgs {
    cube: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// LoG width in metres (fbp-log).
    #[arg(long)]
    width_s: Option<f64>,
    /// Wiener SNR parameter (lct).
    #[arg(long)]
    alpha: Option<f64>,
    /// Central wavelength in metres (pf-cc).
    #[arg(long)]
    lambda_c: Option<f64>,
    /// Cycles per Morlet pulse (pf-cc).
    #[arg(long)]
    cycles: Option<f64>,
    /// "nx,ny,nz,dx,dy,dz,ox,oy,oz" with the origin at the minimum corner.
    #[arg(long)]
    volume: String,
    /// Skip the 1/r compensation in backprojection.
    #[arg(long)]
    no_distance_weights: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    FbpLap,
    FbpLog,
    Lct,
    Fk,
    PfCc,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    X,
    Y,
    Z,
}

fn invalid(msg: impl Into<String>) -> NlosError {
    NlosError::Invalid(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Applies `NLOS_THREADS` to the global worker pool.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("NLOS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| invalid(format!("NLOS_THREADS must be a positive integer, got {raw:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| invalid(format!("cannot size worker pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    log::info!("NLOS_THREADS={n} ignored: built without the parallel feature");
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { config, output } => simulate(&config, output),
        Command::Noise { cube, photons, seed, output } => {
            let noisy = add_poisson_noise(&read_cube(&cube)?, &NoiseSpec::new(photons, seed)?)?;
            write_cube(&output, &noisy)
        }
        Command::Reconstruct(args) => reconstruct_cmd(args),
        Command::Project { volume, axis, output } => {
            let vol = read_volume(&volume)?;
            write_image(&projection_image(&vol, axis), &output, ImageFormat::from_path(&output)?)
        }
        Command::Metrics { a, b, psnr: want_psnr, ms_ssim: want_ssim } => {
            let (a, b) = (read_volume(&a)?, read_volume(&b)?);
            if a.spec() != b.spec() {
                return Err(NlosError::ShapeMismatch("volumes have different specs".into()));
            }
            let both = !want_psnr && !want_ssim;
            let mut out = serde_json::Map::new();
            if want_psnr || both {
                out.insert("psnr_db".into(), json!(psnr(a.values(), b.values(), 1.0)?));
            }
            if want_ssim || both {
                let mip = |v: &VoxelVolume| max_intensity_projection(v, ProjectionAxis::Z);
                let m = ms_ssim(&mip(&a), &mip(&b))?;
                out.insert("ms_ssim".into(), json!(m.value));
                out.insert("ms_ssim_scales".into(), json!(m.scales));
            }
            print_json(&serde_json::Value::Object(out))
        }
        Command::Spectrum { volume, output } => {
            let img = spectrum_image(&xz_spectrum(&read_volume(&volume)?));
            write_spectrum(&img, &output)
        }
        Command::FilterEstimate { method_volume, bp_volume, output, eps } => {
            let est = estimate_filter_spectrum(&read_volume(&method_volume)?, &read_volume(&bp_volume)?, eps)?;
            log::info!("filter estimate regulariser eps = {:e}", est.eps);
            write_spectrum(&spectrum_image(&est.xz), &output)
        }
        Command::Resolution { gamma_ps, z, dmax, mode } => {
            if gamma_ps.is_nan() || gamma_ps <= 0.0 || gamma_ps.is_infinite() {
                return Err(invalid("--gamma-ps must be positive"));
            }
            let gamma = gamma_ps * 1e-12;
            print_json(&json!({
                "gamma_s": gamma,
                "z_m": z,
                "d_max_m": dmax,
                "mode": mode.to_string(),
                "delta_x_m": lateral_resolution(gamma, z, dmax, mode)?,
                "delta_z_m": depth_resolution(gamma),
                "lambda_min_m": min_wavelength(gamma),
            }))
        }
        Command::Visibility { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let mut reports = Vec::new();
            for (i, patch) in cfg.scene.patches.iter().enumerate() {
                let r = predict_visibility(patch, &cfg.topology, &cfg.relay, cfg.visibility_samples)?;
                let mut v = serde_json::to_value(&r).map_err(|e| NlosError::Numerical(e.to_string()))?;
                v["patch"] = json!(i);
                reports.push(v);
            }
            print_json(&json!({ "patches": reports }))
        }
        Command::Bench { config, output } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = match output.or_else(|| cfg.outputs.directory.as_ref().map(|d| cfg.resolve(d))) {
                Some(d) => d,
                None => return Err(invalid("bench needs -o or outputs.directory in the config")),
            };
            let report = run_bench(&cfg, &dir)?;
            println!("{}", report.csv.display());
            Ok(())
        }
    }
}

fn simulate(config: &Path, output: Option<PathBuf>) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let out = output
        .or_else(|| cfg.outputs.cube.as_ref().map(|p| cfg.resolve(p)))
        .ok_or_else(|| invalid("simulate needs -o or outputs.cube in the config"))?;
    let cube = cfg.simulate()?;
    write_cube(&out, &cube)?;
    log::info!("wrote {}", out.display());
    // A config that names a method and a volume output gets its reconstruction too.
    if let (Some(method), Some(vol_path)) = (cfg.method, cfg.outputs.volume.as_ref()) {
        let vol = reconstruct(&cube, &cfg.reconstruction(method)?)?;
        let path = cfg.resolve(vol_path);
        write_volume(&path, &vol)?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn reconstruct_cmd(a: ReconstructArgs) -> Result<()> {
    let need = |v: Option<f64>, flag: &str, method: &str| v.ok_or_else(|| invalid(format!("{method} needs {flag}")));
    let method = match a.method {
        MethodArg::FbpLap => Method::FbpLap,
        MethodArg::FbpLog => Method::FbpLog { width_s: need(a.width_s, "--width-s", "fbp-log")? },
        MethodArg::Lct => Method::Lct { alpha: need(a.alpha, "--alpha", "lct")? },
        MethodArg::Fk => Method::Fk,
        MethodArg::PfCc => Method::PfCc {
            lambda_c: need(a.lambda_c, "--lambda-c", "pf-cc")?,
            n_cycles: need(a.cycles, "--cycles", "pf-cc")?,
        },
    };
    let volume: VolumeSpec = a.volume.parse()?;
    let cfg = ReconstructionConfig { method, volume, distance_weights: !a.no_distance_weights };
    let cube = read_cube(&a.cube)?;
    write_volume(&a.output, &reconstruct(&cube, &cfg)?)
}

/// MIP oriented for display: rows run top to bottom along the vertical axis
/// (y, or z when looking along y), columns along the horizontal one.
fn projection_image(vol: &VoxelVolume, axis: AxisArg) -> Array2<f64> {
    let (proj_axis, horizontal_first) = match axis {
        AxisArg::X => (ProjectionAxis::X, false), // [y, z]: horizontal z, vertical y
        AxisArg::Y => (ProjectionAxis::Y, true),  // [x, z]: horizontal x, vertical z
        AxisArg::Z => (ProjectionAxis::Z, true),  // [x, y]: horizontal x, vertical y
    };
    let mip = max_intensity_projection(vol, proj_axis);
    let (a, b) = mip.dim();
    if horizontal_first {
        Array2::from_shape_fn((b, a), |(r, c)| mip[[c, b - 1 - r]])
    } else {
        Array2::from_shape_fn((a, b), |(r, c)| mip[[a - 1 - r, c]])
    }
}

/// Columns are Ω_x, rows Ω_z with the highest frequency at the top.
fn spectrum_image(s: &SpectrumImage) -> Array2<f64> {
    let (nx, nz) = s.values.dim();
    Array2::from_shape_fn((nz, nx), |(r, c)| s.values[[c, nz - 1 - r]])
}

/// PFM keeps raw magnitudes; PGM maps `[peak·1e-3, peak]` logarithmically
/// onto `[0, 1]`.
fn write_spectrum(img: &Array2<f64>, path: &Path) -> Result<()> {
    let format = ImageFormat::from_path(path)?;
    match format {
        ImageFormat::Pfm => write_image(img, path, format),
        ImageFormat::Pgm => {
            let peak = img.iter().cloned().fold(0.0, f64::max);
            let scaled =
                if peak > 0.0 { img.mapv(|v| (1.0 + 1e3 * v / peak).ln() / 1001f64.ln()) } else { img.clone() };
            write_image(&scaled, path, format)
        }
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| NlosError::Numerical(e.to_string()))?;
    println!("{text}");
    Ok(())
}
