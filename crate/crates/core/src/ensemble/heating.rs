use crate::error::{Error, Result};

/// How the cloud temperature responds to ramping up the optical dimple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RampHeating {
    None,
    /// `T = T0·(1 + (factor − 1)·depth/reference_depth)`.
    AdiabaticHeuristic {
        factor: f64,
        reference_depth: f64,
    },
}

/// Temperature of the cloud after the dimple of `dimple_depth` (J, magnitude)
/// has been ramped up.
pub fn effective_temperature_after_ramp(
    t0: f64,
    dimple_depth: f64,
    mode: RampHeating,
) -> Result<f64> {
    if !(t0 > 0.0) {
        return Err(Error::invalid("temperature", "must be positive"));
    }
    match mode {
        RampHeating::None => Ok(t0),
        RampHeating::AdiabaticHeuristic {
            factor,
            reference_depth,
        } => {
            if !(factor >= 1.0) {
                return Err(Error::invalid("compression_factor", "must be at least 1"));
            }
            if !(reference_depth > 0.0) {
                return Err(Error::invalid("reference_depth", "must be positive"));
            }
            Ok(t0 * (1.0 + (factor - 1.0) * dimple_depth.abs() / reference_depth))
        }
    }
}
