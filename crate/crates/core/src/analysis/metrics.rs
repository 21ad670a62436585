use ndarray::{Array2, ArrayBase, Data, Dimension, Zip};

use crate::error::{NlosError, Result};

/// Reported PSNR when the two inputs are identical.
pub const PSNR_CAP_DB: f64 = 99.0;

/// Canonical MS-SSIM scale weights, finest scale first.
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

const WINDOW_TAPS: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;

/// Peak signal-to-noise ratio in dB, capped at [`PSNR_CAP_DB`].
pub fn psnr<S1, S2, D>(a: &ArrayBase<S1, D>, b: &ArrayBase<S2, D>, peak: f64) -> Result<f64>
where
    S1: Data<Elem = f64>,
    S2: Data<Elem = f64>,
    D: Dimension,
{
    if a.shape() != b.shape() {
        return Err(NlosError::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    if a.is_empty() {
        return Err(NlosError::invalid("psnr of empty arrays"));
    }
    let mut sse = 0.0;
    Zip::from(a).and(b).for_each(|x, y| sse += (x - y) * (x - y));
    let mse = sse / a.len() as f64;
    if !mse.is_finite() {
        return Err(NlosError::invalid("psnr inputs must be finite"));
    }
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB))
}

/// Result of [`ms_ssim`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MsSsim {
    pub value: f64,
    /// Number of dyadic scales actually used (5 for images of at least 32 px).
    pub scales: usize,
}

/// Multi-scale structural similarity of two images with dynamic range 1.
pub fn ms_ssim(a: &Array2<f64>, b: &Array2<f64>) -> Result<MsSsim> {
    ms_ssim_with_peak(a, b, 1.0)
}

/// Multi-scale SSIM (Wang et al., 2003) with an 11-tap Gaussian window
/// (σ = 1.5 px) renormalised at the borders. Negative contrast-structure
/// terms are clamped to zero before exponentiation.
pub fn ms_ssim_with_peak(a: &Array2<f64>, b: &Array2<f64>, peak: f64) -> Result<MsSsim> {
    if a.dim() != b.dim() {
        return Err(NlosError::ShapeMismatch(format!("{:?} vs {:?}", a.dim(), b.dim())));
    }
    if a.is_empty() {
        return Err(NlosError::invalid("ms-ssim of empty images"));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(NlosError::invalid("ms-ssim inputs must be finite"));
    }
    let min_dim = a.nrows().min(a.ncols());
    let scales = (min_dim.ilog2() as usize).clamp(1, MS_SSIM_WEIGHTS.len());
    let weights = &MS_SSIM_WEIGHTS[..scales];
    // The canonical weights sum to 1.0001; only truncated sets are rescaled.
    let total: f64 = if scales == MS_SSIM_WEIGHTS.len() { 1.0 } else { weights.iter().sum() };

    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let window = gaussian_window();
    let (mut x, mut y) = (a.clone(), b.clone());
    let mut value = 1.0;
    for (j, w) in weights.iter().enumerate() {
        let w = w / total;
        let (l, cs) = ssim_terms(&x, &y, &window, c1, c2);
        value *= cs.max(0.0).powf(w);
        if j + 1 == scales {
            value *= l.max(0.0).powf(w);
        } else {
            x = downsample(&x);
            y = downsample(&y);
        }
    }
    Ok(MsSsim { value, scales })
}

fn gaussian_window() -> Vec<f64> {
    let half = (WINDOW_TAPS / 2) as f64;
    let w: Vec<f64> =
        (0..WINDOW_TAPS).map(|i| (-(i as f64 - half).powi(2) / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable "same"-size Gaussian filtering with per-pixel renormalisation
/// over the taps that fall inside the image.
fn blur(img: &Array2<f64>, window: &[f64]) -> Array2<f64> {
    let half = (window.len() / 2) as isize;
    let pass = |src: &Array2<f64>, along_rows: bool| {
        let (r, c) = src.dim();
        Array2::from_shape_fn((r, c), |(i, j)| {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (t, w) in window.iter().enumerate() {
                let o = t as isize - half;
                let (ii, jj) = if along_rows { (i as isize + o, j as isize) } else { (i as isize, j as isize + o) };
                if ii >= 0 && jj >= 0 && (ii as usize) < r && (jj as usize) < c {
                    acc += w * src[[ii as usize, jj as usize]];
                    norm += w;
                }
            }
            acc / norm
        })
    };
    pass(&pass(img, true), false)
}

/// Mean luminance and contrast-structure terms of single-scale SSIM.
fn ssim_terms(x: &Array2<f64>, y: &Array2<f64>, window: &[f64], c1: f64, c2: f64) -> (f64, f64) {
    let mx = blur(x, window);
    let my = blur(y, window);
    let sxx = blur(&(x * x), window);
    let syy = blur(&(y * y), window);
    let sxy = blur(&(x * y), window);
    let (mut l_sum, mut cs_sum) = (0.0, 0.0);
    for idx in 0..x.len() {
        let (i, j) = (idx / x.ncols(), idx % x.ncols());
        let (ux, uy) = (mx[[i, j]], my[[i, j]]);
        let vx = sxx[[i, j]] - ux * ux;
        let vy = syy[[i, j]] - uy * uy;
        let cxy = sxy[[i, j]] - ux * uy;
        l_sum += (2.0 * ux * uy + c1) / (ux * ux + uy * uy + c1);
        cs_sum += (2.0 * cxy + c2) / (vx + vy + c2);
    }
    let n = x.len() as f64;
    (l_sum / n, cs_sum / n)
}

/// 2×2 box average; an odd trailing row/column is dropped.
fn downsample(img: &Array2<f64>) -> Array2<f64> {
    let (r, c) = (img.nrows() / 2, img.ncols() / 2);
    Array2::from_shape_fn((r.max(1), c.max(1)), |(i, j)| {
        let mut acc = 0.0;
        let mut n = 0.0;
        for di in 0..2 {
            for dj in 0..2 {
                if let Some(v) = img.get([2 * i + di, 2 * j + dj]) {
                    acc += v;
                    n += 1.0;
                }
            }
        }
        acc / n
    })
}
