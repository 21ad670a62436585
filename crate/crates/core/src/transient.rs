//! Time-binned impulse responses on the relay wall.

use ndarray::{Array3, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{NlosError, Result};
use crate::geometry::{Apertures, CaptureTopology, RelayGeometry};

/// Temporal sampling of a transient measurement.
///
/// Bin `k` holds the sample at `t_start + k * bin_width`, with times measured
/// from the instant light leaves the relay wall.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimingFields", deny_unknown_fields)]
pub struct TimingSpec {
    bin_width: f64,
    n_bins: usize,
    t_start: f64,
    jitter_fwhm: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TimingFields {
    bin_width: f64,
    n_bins: usize,
    t_start: f64,
    #[serde(default)]
    jitter_fwhm: f64,
}

impl TryFrom<TimingFields> for TimingSpec {
    type Error = NlosError;
    fn try_from(f: TimingFields) -> Result<Self> {
        TimingSpec::new(f.bin_width, f.n_bins, f.t_start, f.jitter_fwhm)
    }
}

impl TimingSpec {
    pub fn new(bin_width: f64, n_bins: usize, t_start: f64, jitter_fwhm: f64) -> Result<Self> {
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(NlosError::invalid("bin_width must be positive"));
        }
        if n_bins < 2 {
            return Err(NlosError::invalid("n_bins must be at least 2"));
        }
        if !t_start.is_finite() {
            return Err(NlosError::invalid("t_start must be finite"));
        }
        if !(jitter_fwhm >= 0.0) || !jitter_fwhm.is_finite() {
            return Err(NlosError::invalid("jitter_fwhm must be non-negative"));
        }
        Ok(TimingSpec { bin_width, n_bins, t_start, jitter_fwhm })
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }
    pub fn t_start(&self) -> f64 {
        self.t_start
    }
    pub fn jitter_fwhm(&self) -> f64 {
        self.jitter_fwhm
    }

    pub fn with_jitter(mut self, jitter_fwhm: f64) -> Result<Self> {
        self.jitter_fwhm = jitter_fwhm;
        Self::new(self.bin_width, self.n_bins, self.t_start, jitter_fwhm)
    }

    #[inline]
    pub fn bin_time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.bin_width
    }

    /// Continuous bin coordinate of time `t`.
    #[inline]
    pub fn fractional_bin(&self, t: f64) -> f64 {
        (t - self.t_start) / self.bin_width
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.n_bins as f64 * self.bin_width
    }
}

/// Splits `weight` between the two samples bracketing fractional position `x`.
/// Portions landing outside the series are dropped.
#[inline]
pub fn splat_linear(series: &mut [f64], x: f64, weight: f64) {
    let k = x.floor();
    if !(k >= -1.0) || k >= series.len() as f64 {
        return;
    }
    let frac = x - k;
    let k = k as isize;
    if k >= 0 {
        series[k as usize] += weight * (1.0 - frac);
    }
    let k1 = (k + 1) as usize;
    if k1 < series.len() {
        series[k1] += weight * frac;
    }
}

/// Linear interpolation of `series` at fractional position `x`, treating
/// samples outside the series as zero. Exact adjoint of [`splat_linear`].
#[inline]
pub fn sample_linear(series: &[f64], x: f64) -> f64 {
    let k = x.floor();
    if !(k >= -1.0) || k >= series.len() as f64 {
        return 0.0;
    }
    let frac = x - k;
    let k = k as isize;
    let mut acc = 0.0;
    if k >= 0 {
        acc += series[k as usize] * (1.0 - frac);
    }
    let k1 = (k + 1) as usize;
    if k1 < series.len() {
        acc += series[k1] * frac;
    }
    acc
}

/// Discretised impulse response `H(x_l, x_s, t)`.
///
/// `values` is indexed `(laser, sensor, bin)`; for confocal captures the laser
/// axis has length one and sensor `s` is also the illuminated point.
#[derive(Clone, Debug, PartialEq)]
pub struct TransientCube {
    relay: RelayGeometry,
    topology: CaptureTopology,
    timing: TimingSpec,
    values: Array3<f64>,
}

impl TransientCube {
    pub fn new(
        relay: RelayGeometry,
        topology: CaptureTopology,
        timing: TimingSpec,
        values: Array3<f64>,
    ) -> Result<Self> {
        topology.validate(&relay)?;
        let expected = (topology.n_lasers(), topology.n_sensors(), timing.n_bins());
        if values.dim() != expected {
            return Err(NlosError::ShapeMismatch(format!(
                "cube values have shape {:?}, topology and timing require {:?}",
                values.dim(),
                expected
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(NlosError::invalid("transient values must be finite and non-negative"));
        }
        Ok(TransientCube { relay, topology, timing, values })
    }

    pub fn zeros(relay: RelayGeometry, topology: CaptureTopology, timing: TimingSpec) -> Result<Self> {
        let dim = (topology.n_lasers(), topology.n_sensors(), timing.n_bins());
        Self::new(relay, topology, timing, Array3::zeros(dim))
    }

    /// Builds a cube without re-checking values; callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(
        relay: RelayGeometry,
        topology: CaptureTopology,
        timing: TimingSpec,
        values: Array3<f64>,
    ) -> Self {
        debug_assert_eq!(values.dim(), (topology.n_lasers(), topology.n_sensors(), timing.n_bins()));
        TransientCube { relay, topology, timing, values }
    }

    pub fn relay(&self) -> &RelayGeometry {
        &self.relay
    }
    pub fn topology(&self) -> &CaptureTopology {
        &self.topology
    }
    pub fn timing(&self) -> &TimingSpec {
        &self.timing
    }
    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }
    pub fn into_values(self) -> Array3<f64> {
        self.values
    }

    pub fn apertures(&self) -> Apertures {
        self.topology.apertures(&self.relay)
    }

    pub fn series(&self, l: usize, s: usize) -> ArrayView1<'_, f64> {
        self.values.slice(ndarray::s![l, s, ..])
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Same cube with every value multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(NlosError::invalid("scale factor must be non-negative"));
        }
        let mut out = self.clone();
        out.values.mapv_inplace(|v| v * s);
        Ok(out)
    }

    /// Same measurement with a different timing record (values untouched).
    pub fn with_timing(&self, timing: TimingSpec) -> Result<Self> {
        if timing.n_bins() != self.timing.n_bins() {
            return Err(NlosError::ShapeMismatch("bin count differs".into()));
        }
        let mut out = self.clone();
        out.timing = timing;
        Ok(out)
    }

    /// Laser/sensor axes swapped (only meaningful for exhaustive captures).
    pub fn transposed(&self) -> Result<Self> {
        match &self.topology {
            CaptureTopology::Exhaustive { lasers, sensors } => {
                let topo = CaptureTopology::Exhaustive { lasers: *sensors, sensors: *lasers };
                let values = self.values.clone().permuted_axes([1, 0, 2]).as_standard_layout().into_owned();
                Ok(TransientCube::from_parts_unchecked(self.relay.clone(), topo, self.timing, values))
            }
            _ => Err(NlosError::Unsupported("transpose needs an exhaustive topology".into())),
        }
    }
}
