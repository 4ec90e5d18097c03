use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{interp_linear, linear_to_db};

use super::bandwidth::butterworth_power_response;

/// Detector parameters used by the spectrum simulator and the characterisation reports.
///
/// `clearance_db` is tabulated on `freq_hz` at `reference_power_mw` of LO: the ratio of
/// LO-illuminated noise to dark noise, floored at 0 dB where the detector is unusable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub f3db_hz: f64,
    pub butterworth_order: u32,
    pub eta_det: f64,
    pub reference_power_mw: f64,
    pub saturation_power_mw: f64,
    pub rbw_hz: f64,
    pub responsivity_a_per_w: f64,
    /// Documentation only; the simulator works with noise powers directly.
    pub transimpedance_ohm: f64,
    pub freq_hz: Vec<f64>,
    pub clearance_db: Vec<f64>,
    pub electronic_noise_dbm: Vec<f64>,
}

/// Parametric description of a detector whose shot-noise excess follows a Butterworth response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    pub f3db_hz: f64,
    pub butterworth_order: u32,
    /// Clearance at DC and `reference_power_mw`.
    pub max_clearance_db: f64,
    pub electronic_noise_dbm: f64,
    /// Above this frequency the shot noise is lost in the electronic noise.
    pub usable_limit_hz: f64,
    pub f_max_hz: f64,
    pub rbw_hz: f64,
    pub eta_det: f64,
    pub reference_power_mw: f64,
    pub saturation_power_mw: f64,
    pub responsivity_a_per_w: f64,
    pub transimpedance_ohm: f64,
}

impl Default for DetectorParams {
    /// 1.7 GHz first-order response, 14 dB clearance at 4.36 mW LO, usable to 9.2 GHz,
    /// `eta_det = 0.88`, tabulated every 8 MHz up to 10 GHz.
    fn default() -> Self {
        Self {
            f3db_hz: 1.7e9,
            butterworth_order: 1,
            max_clearance_db: 14.0,
            electronic_noise_dbm: -75.0,
            usable_limit_hz: 9.2e9,
            f_max_hz: 10e9,
            rbw_hz: 8e6,
            eta_det: 0.88,
            reference_power_mw: 4.36,
            saturation_power_mw: 1000.0,
            responsivity_a_per_w: 1.1,
            transimpedance_ohm: 3300.0,
        }
    }
}

impl DetectorSpec {
    /// Tabulates `C(f) = 10 log10(1 + (10^(C_max/10) - 1) H(f))` with `H` the Butterworth
    /// power response, on a grid of one resolution bandwidth, and `C = 0` above the usable limit.
    pub fn from_params(p: &DetectorParams) -> Result<Self> {
        if !(p.rbw_hz > 0.0 && p.f_max_hz >= p.rbw_hz) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < rbw_hz <= f_max_hz, got {} and {}",
                p.rbw_hz, p.f_max_hz
            )));
        }
        if p.butterworth_order < 1 || !(p.f3db_hz > 0.0) || !(p.max_clearance_db >= 0.0) {
            return Err(Error::InvalidParameter(
                "need f3db_hz > 0, butterworth_order >= 1 and max_clearance_db >= 0".into(),
            ));
        }
        let n = (p.f_max_hz / p.rbw_hz).round() as usize;
        let freq_hz: Vec<f64> = (1..=n).map(|k| k as f64 * p.rbw_hz).collect();
        let excess = 10f64.powf(p.max_clearance_db / 10.0) - 1.0;
        let clearance_db = freq_hz
            .iter()
            .map(|&f| {
                if f > p.usable_limit_hz {
                    0.0
                } else {
                    linear_to_db(
                        1.0 + excess * butterworth_power_response(f, p.f3db_hz, p.butterworth_order),
                    )
                }
            })
            .collect();
        let spec = Self {
            f3db_hz: p.f3db_hz,
            butterworth_order: p.butterworth_order,
            eta_det: p.eta_det,
            reference_power_mw: p.reference_power_mw,
            saturation_power_mw: p.saturation_power_mw,
            rbw_hz: p.rbw_hz,
            responsivity_a_per_w: p.responsivity_a_per_w,
            transimpedance_ohm: p.transimpedance_ohm,
            electronic_noise_dbm: vec![p.electronic_noise_dbm; n],
            freq_hz,
            clearance_db,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn reference_device() -> Self {
        Self::from_params(&DetectorParams::default()).expect("defaults are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.f3db_hz > 0.0) {
            return bad(format!("f3db_hz must be > 0, got {}", self.f3db_hz));
        }
        if self.butterworth_order < 1 {
            return bad("butterworth_order must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.eta_det) {
            return Err(Error::InvalidEta(self.eta_det));
        }
        if !(self.reference_power_mw > 0.0 && self.saturation_power_mw > 0.0) {
            return bad("reference and saturation powers must be > 0".into());
        }
        let n = self.freq_hz.len();
        if n == 0 || self.clearance_db.len() != n || self.electronic_noise_dbm.len() != n {
            return bad("frequency, clearance and noise tables must share a nonempty grid".into());
        }
        if self.freq_hz.windows(2).any(|w| w[1] <= w[0]) {
            return bad("frequency grid must be strictly increasing".into());
        }
        if self.clearance_db.iter().any(|c| !(*c >= 0.0)) {
            return bad("clearance must be >= 0 dB".into());
        }
        Ok(())
    }

    pub fn clearance_at(&self, f: f64) -> f64 {
        interp_linear(&self.freq_hz, &self.clearance_db, f)
    }

    pub fn electronic_noise_at(&self, f: f64) -> f64 {
        interp_linear(&self.freq_hz, &self.electronic_noise_dbm, f)
    }

    pub fn max_clearance_db(&self) -> f64 {
        self.clearance_db.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_device_shape() {
        let s = DetectorSpec::reference_device();
        assert!((s.max_clearance_db() - 14.0).abs() < 1e-3);
        // the shot-noise excess is halved at the corner
        let excess = |c: f64| 10f64.powf(c / 10.0) - 1.0;
        let ratio = excess(s.clearance_at(1.7e9)) / excess(14.0);
        assert!((ratio - 0.5).abs() < 1e-3, "{ratio}");
        assert!(s.clearance_at(9.3e9) == 0.0);
        assert!(s.clearance_at(9.1e9) > 0.0);
    }

    #[test]
    fn toml_round_trip() {
        let s = DetectorSpec::reference_device();
        let back = DetectorSpec::from_toml(&s.to_toml().unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
