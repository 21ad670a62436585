//! Analytic resolution bounds of a transient imaging system.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NlosError, Result};
use crate::geometry::SPEED_OF_LIGHT;

/// Depth resolution `Δz ≥ cγ/2` for a detector with timing FWHM `gamma` (s).
pub fn depth_resolution(gamma: f64) -> f64 {
    SPEED_OF_LIGHT * gamma / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LateralMode {
    /// `cγ · √((D/2)² + z²) / D`, valid at any depth.
    FwhmFull,
    /// Far-field limit `cγ · z / D`.
    FwhmFar,
    /// Rayleigh criterion `1.22 · cγ · z / D`.
    Rayleigh,
}

impl FromStr for LateralMode {
    type Err = NlosError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "fwhm-full" => Ok(LateralMode::FwhmFull),
            "fwhm-far" => Ok(LateralMode::FwhmFar),
            "rayleigh" => Ok(LateralMode::Rayleigh),
            other => Err(NlosError::invalid(format!("unknown resolution mode {other:?}"))),
        }
    }
}

impl fmt::Display for LateralMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LateralMode::FwhmFull => "fwhm-full",
            LateralMode::FwhmFar => "fwhm-far",
            LateralMode::Rayleigh => "rayleigh",
        })
    }
}

/// Lateral resolution bound at depth `z` for an aperture whose largest
/// laser–sensor distance is `d_max`.
pub fn lateral_resolution(gamma: f64, z: f64, d_max: f64, mode: LateralMode) -> Result<f64> {
    if !(d_max > 0.0) || !d_max.is_finite() {
        return Err(NlosError::invalid("d_max must be positive"));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(NlosError::invalid("z must be non-negative"));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(NlosError::invalid("gamma must be non-negative"));
    }
    let cg = SPEED_OF_LIGHT * gamma;
    Ok(match mode {
        LateralMode::FwhmFull => cg * ((d_max / 2.0).powi(2) + z * z).sqrt() / d_max,
        LateralMode::FwhmFar => cg * z / d_max,
        LateralMode::Rayleigh => 1.22 * cg * z / d_max,
    })
}

/// Shortest useful virtual wavelength, `4γc`.
pub fn min_wavelength(gamma: f64) -> f64 {
    4.0 * gamma * SPEED_OF_LIGHT
}
