use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::MziState;

pub const DEFAULT_CMRR_CEILING_DB: f64 = 52.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmrrSettings {
    /// Measurement dynamic range; perfect balance reports this value.
    pub ceiling_db: f64,
    /// Fractional amplitude modulation of the LO used as the common-mode tone.
    pub tone_depth: f64,
}

impl Default for CmrrSettings {
    fn default() -> Self {
        Self {
            ceiling_db: DEFAULT_CMRR_CEILING_DB,
            tone_depth: 0.1,
        }
    }
}

/// Common-mode rejection of the balanced pair at the MZI's current splitting ratio.
pub fn cmrr(mzi: &MziState, r1: f64, r2: f64, settings: &CmrrSettings) -> Result<f64> {
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "responsivities must be > 0, got {r1} and {r2}"
        )));
    }
    if !(settings.tone_depth > 0.0) {
        return Err(Error::InvalidParameter("tone depth must be > 0".into()));
    }
    let t = mzi.reflectivity();
    let a = settings.tone_depth;
    let diff = (a * r1 * t - a * r2 * (1.0 - t)).abs();
    let sum = a * r1 * t + a * r2 * (1.0 - t);
    if diff == 0.0 {
        return Ok(settings.ceiling_db);
    }
    Ok((20.0 * (sum / diff).log10()).min(settings.ceiling_db))
}
