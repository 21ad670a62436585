use serde::{Deserialize, Serialize};

use crate::error::{NlosError, Result};

/// Method-specific filter (or virtual illumination) applied around the
/// backprojection step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterSpec {
    None,
    Laplacian,
    /// Laplacian of Gaussian; `width_s` is the Gaussian standard deviation in metres.
    Log {
        width_s: f64,
    },
    /// Wiener deconvolution with SNR parameter `alpha`.
    Wiener {
        alpha: f64,
    },
    /// Morlet virtual illumination with central wavelength `lambda_c` (metres).
    Morlet {
        lambda_c: f64,
        n_cycles: f64,
    },
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(NlosError::invalid(format!("{name} must be positive")))
            }
        };
        match *self {
            FilterSpec::None | FilterSpec::Laplacian => Ok(()),
            FilterSpec::Log { width_s } => positive("width_s", width_s),
            FilterSpec::Wiener { alpha } => positive("alpha", alpha),
            FilterSpec::Morlet { lambda_c, n_cycles } => {
                positive("lambda_c", lambda_c)?;
                positive("n_cycles", n_cycles)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_parameters() {
        assert!(FilterSpec::Log { width_s: 0.0 }.validate().is_err());
        assert!(FilterSpec::Wiener { alpha: -1.0 }.validate().is_err());
        assert!(FilterSpec::Morlet { lambda_c: 0.06, n_cycles: 0.0 }.validate().is_err());
        assert!(FilterSpec::Morlet { lambda_c: 0.06, n_cycles: 4.0 }.validate().is_ok());
        assert!(FilterSpec::Laplacian.validate().is_ok());
    }
}
