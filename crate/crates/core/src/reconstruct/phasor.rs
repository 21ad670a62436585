//! Phasor-field reconstruction with a virtual confocal camera: the measured
//! series are taken to the temporal-frequency domain, weighted by a virtual
//! illumination pulse and propagated to every voxel with the
//! Rayleigh–Sommerfeld kernel `e^{iΩ(t_lv + t_sv)} / (d_lv d_sv)`.

use ndarray::Array3;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{backproject_data, finish};
use crate::error::{NlosError, Result};
use crate::geometry::{Vec3, SPEED_OF_LIGHT};
use crate::par;
use crate::simulate::fwhm_to_sigma;
use crate::transient::{TimingSpec, TransientCube};
use crate::volume::{VolumeSpec, VoxelVolume};

/// Frequencies whose Morlet envelope falls below this fraction of the peak
/// are dropped.
const ENVELOPE_CUTOFF: f64 = 1e-3;

/// Virtual illumination pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Illumination {
    /// Gaussian-windowed carrier of wavelength `lambda_c` lasting `n_cycles`
    /// periods (FWHM of the envelope).
    Morlet { lambda_c: f64, n_cycles: f64 },
    /// Pure `Ω²` weighting over every positive frequency below Nyquist — the
    /// time-domain negated second derivative.
    Laplacian,
}

impl Illumination {
    /// Selected DFT bins as `(first_bin, weights)`; bin `m` has angular
    /// frequency `2πm / (n_bins · bin_width)`.
    pub fn weights(&self, timing: &TimingSpec) -> Result<(usize, Vec<f64>)> {
        let n = timing.n_bins();
        let period = n as f64 * timing.bin_width();
        match *self {
            Illumination::Morlet { lambda_c, n_cycles } => {
                if !(lambda_c > 0.0) || !(n_cycles > 0.0) {
                    return Err(NlosError::invalid("lambda_c and n_cycles must be positive"));
                }
                if lambda_c < 2.0 * SPEED_OF_LIGHT * timing.bin_width() {
                    return Err(NlosError::invalid(format!(
                        "sub-Nyquist wavelength: lambda_c {lambda_c} m is below 2·c·bin_width = {} m",
                        2.0 * SPEED_OF_LIGHT * timing.bin_width()
                    )));
                }
                let f_c = SPEED_OF_LIGHT / lambda_c;
                let sigma_t = fwhm_to_sigma(n_cycles * lambda_c / SPEED_OF_LIGHT);
                let sigma_f = 1.0 / (std::f64::consts::TAU * sigma_t);
                let envelope = |m: usize| {
                    let f = m as f64 / period;
                    (-(f - f_c).powi(2) / (2.0 * sigma_f * sigma_f)).exp()
                };
                let bins: Vec<usize> = (1..n.div_ceil(2)).filter(|&m| envelope(m) >= ENVELOPE_CUTOFF).collect();
                match (bins.first(), bins.last()) {
                    (Some(&lo), Some(&hi)) => Ok((lo, (lo..=hi).map(envelope).collect())),
                    _ => Err(NlosError::invalid("illumination pulse has no support within the recorded band")),
                }
            }
            Illumination::Laplacian => {
                let w: Vec<f64> =
                    (1..n.div_ceil(2)).map(|m| (std::f64::consts::TAU * m as f64 / period).powi(2)).collect();
                Ok((1, w))
            }
        }
    }
}

/// PF-CC with a Morlet pulse of wavelength `lambda_c` and `n_cycles` cycles.
pub fn reconstruct_pf_cc(cube: &TransientCube, lambda_c: f64, n_cycles: f64, spec: &VolumeSpec) -> Result<VoxelVolume> {
    reconstruct_pf_cc_with(cube, Illumination::Morlet { lambda_c, n_cycles }, spec)
}

/// PF-CC with an arbitrary virtual illumination. The field is evaluated at
/// `t = 0`; the Morlet pulse reports its complex magnitude, the (real)
/// Laplacian pulse the magnitude of its real response.
pub fn reconstruct_pf_cc_with(
    cube: &TransientCube,
    illumination: Illumination,
    spec: &VolumeSpec,
) -> Result<VoxelVolume> {
    let timing = *cube.timing();
    let (first_bin, weights) = illumination.weights(&timing)?;
    let n = timing.n_bins();
    let ap = cube.apertures();
    let n_s = ap.n_sensors();
    let n_f = weights.len();

    // Weighted phasors per series, including the inverse-DFT 1/N.
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let values = cube.values().as_standard_layout();
    let values = values.as_slice().expect("standard layout");
    let n_series = ap.n_series();
    let mut phasors = vec![Complex64::new(0.0, 0.0); n_series * n_f];
    par::for_each_chunk_mut(&mut phasors, n_f, |series, out| {
        let mut buf: Vec<Complex64> =
            values[series * n..(series + 1) * n].iter().map(|&h| Complex64::new(h, 0.0)).collect();
        fft.process(&mut buf);
        for (q, dst) in out.iter_mut().enumerate() {
            *dst = buf[first_bin + q] * (weights[q] / n as f64);
        }
    });

    let window = n as f64 * timing.bin_width();
    let d_omega = std::f64::consts::TAU / window;
    let omega0 = first_bin as f64 * d_omega;
    let t0 = timing.t_start();
    let lasers: &[Vec3] = if ap.confocal { &ap.sensors } else { &ap.lasers };
    let nz = spec.dims()[2];
    let real_pulse = matches!(illumination, Illumination::Laplacian);

    let mut out = Array3::<f64>::zeros(spec.shape());
    par::for_each_chunk_mut(out.as_slice_mut().expect("contiguous"), nz, |col, column| {
        let (i, j, _) = spec.unflatten(col * nz);
        let mut d_s = vec![0.0; n_s];
        let mut d_l = vec![0.0; lasers.len()];
        for (k, voxel) in column.iter_mut().enumerate() {
            let xv = spec.voxel_center(i, j, k);
            for (d, p) in d_s.iter_mut().zip(&ap.sensors) {
                *d = p.distance(xv);
            }
            if !ap.confocal {
                for (d, p) in d_l.iter_mut().zip(lasers) {
                    *d = p.distance(xv);
                }
            }
            let mut acc = Complex64::new(0.0, 0.0);
            let mut add = |series: usize, dl: f64, ds: f64| {
                let tau = (dl + ds) / SPEED_OF_LIGHT - t0;
                if !(0.0..window).contains(&tau) {
                    return;
                }
                let coeffs = &phasors[series * n_f..(series + 1) * n_f];
                let step = Complex64::from_polar(1.0, d_omega * tau);
                let mut rot = Complex64::from_polar(1.0, omega0 * tau);
                let mut sum = Complex64::new(0.0, 0.0);
                for c in coeffs {
                    sum += c * rot;
                    rot *= step;
                }
                acc += sum / (dl * ds);
            };
            if ap.confocal {
                for (s, &d) in d_s.iter().enumerate() {
                    add(s, d, d);
                }
            } else {
                for (l, &dl) in d_l.iter().enumerate() {
                    for (s, &ds) in d_s.iter().enumerate() {
                        add(l * n_s + s, dl, ds);
                    }
                }
            }
            *voxel = if real_pulse { (2.0 * acc.re).abs() } else { acc.norm() };
        }
    });
    finish(spec, out)
}

/// Inverse planar Radon transform: negated second time difference of every
/// series followed by distance-weighted backprojection. The result is signed.
pub fn inverse_prt(cube: &TransientCube, spec: &VolumeSpec) -> Result<VoxelVolume> {
    let h = cube.values();
    let n = h.dim().2;
    let filtered = Array3::from_shape_fn(h.dim(), |(l, s, k)| {
        let prev = if k > 0 { h[[l, s, k - 1]] } else { 0.0 };
        let next = if k + 1 < n { h[[l, s, k + 1]] } else { 0.0 };
        2.0 * h[[l, s, k]] - prev - next
    });
    let values = backproject_data(&filtered, &cube.apertures(), cube.timing(), spec, true)?;
    VoxelVolume::new(*spec, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CaptureTopology, RelayGeometry, ScanGrid};

    fn timing() -> TimingSpec {
        TimingSpec::new(4e-12, 512, 6e-9, 0.0).unwrap()
    }

    #[test]
    fn morlet_band_is_centred_on_the_carrier() {
        let t = timing();
        let lambda = 0.06;
        let (first, w) = Illumination::Morlet { lambda_c: lambda, n_cycles: 4.0 }.weights(&t).unwrap();
        let peak = first + w.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let f_peak = peak as f64 / (512.0 * 4e-12);
        let bin = 1.0 / (512.0 * 4e-12);
        assert!((f_peak - SPEED_OF_LIGHT / lambda).abs() <= bin);
        assert!(w.iter().all(|&x| x >= ENVELOPE_CUTOFF));
    }

    #[test]
    fn sub_nyquist_wavelength_is_rejected() {
        let err = Illumination::Morlet { lambda_c: 0.002, n_cycles: 4.0 }.weights(&timing()).unwrap_err();
        assert!(err.to_string().contains("sub-Nyquist wavelength"));
    }

    #[test]
    fn zero_cube_gives_zero_volume() {
        let cube = TransientCube::zeros(
            RelayGeometry::canonical(1.0, 1.0).unwrap(),
            CaptureTopology::Confocal { grid: ScanGrid::square(4).unwrap() },
            timing(),
        )
        .unwrap();
        let spec = VolumeSpec::new(Vec3::new(-0.5, -0.5, 0.9), [0.25, 0.25, 0.02], [4, 4, 8]).unwrap();
        let v = reconstruct_pf_cc(&cube, 0.06, 4.0, &spec).unwrap();
        assert!(v.values().iter().all(|x| *x == 0.0));
    }
}
