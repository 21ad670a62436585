//! Multi-dimensional FFTs over ndarray storage, built on rustfft.

use ndarray::{Array3, Axis, Zip};
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place unnormalised 3D DFT (`e^{-i…}` kernel for forward).
pub fn fft3_inplace(data: &mut Array3<Complex64>, direction: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    for axis in 0..3 {
        let n = data.len_of(Axis(axis));
        if n <= 1 {
            continue;
        }
        let plan = planner.plan_fft(n, direction);
        let lanes = Zip::from(data.lanes_mut(Axis(axis)));
        let run = |mut lane: ndarray::ArrayViewMut1<'_, Complex64>| {
            if let Some(s) = lane.as_slice_mut() {
                plan.process(s);
            } else {
                let mut buf: Vec<Complex64> = lane.iter().copied().collect();
                plan.process(&mut buf);
                lane.iter_mut().zip(buf).for_each(|(d, s)| *d = s);
            }
        };
        #[cfg(feature = "parallel")]
        lanes.par_for_each(run);
        #[cfg(not(feature = "parallel"))]
        lanes.for_each(run);
    }
}

pub fn fft3(data: &mut Array3<Complex64>) {
    fft3_inplace(data, FftDirection::Forward);
}

/// Inverse 3D DFT including the `1/N` factor.
pub fn ifft3(data: &mut Array3<Complex64>) {
    fft3_inplace(data, FftDirection::Inverse);
    let scale = 1.0 / data.len() as f64;
    data.mapv_inplace(|v| v * scale);
}

/// Signed integer frequency index of DFT bin `k` for length `n`.
#[inline]
pub fn signed_index(k: usize, n: usize) -> isize {
    if k < n.div_ceil(2) {
        k as isize
    } else {
        k as isize - n as isize
    }
}

/// Circularly shifts each axis so the zero frequency sits at index `n / 2`.
pub fn fftshift3<T: Clone>(data: &Array3<T>) -> Array3<T> {
    let (a, b, c) = data.dim();
    Array3::from_shape_fn((a, b, c), |(i, j, k)| {
        data[[(i + a - a / 2) % a, (j + b - b / 2) % b, (k + c - c / 2) % c]].clone()
    })
}
