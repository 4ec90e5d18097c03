use crate::error::{Error, Result};
use crate::numerics::{db_to_linear, linear_to_db};

use super::{DetectorSpec, NoiseTrace};

/// Soft-knee photocurrent compression `P / (1 + P / P_sat)`.
fn compressed_power(p: f64, p_sat: f64) -> f64 {
    p / (1.0 + p / p_sat)
}

/// Output noise spectrum for `lo_power_mw` of LO and a signal with shot-noise-unit
/// variance `input_variance(f)` at each sideband frequency.
///
/// `PSD(f) = N_e(f) [1 + (10^(C(f)/10) - 1) g(P) / g(P_ref) V(f)]` with `g` the
/// soft-knee compression, so vacuum at the reference power reproduces the tabulated clearance.
pub fn simulate_output_spectrum(
    spec: &DetectorSpec,
    lo_power_mw: f64,
    input_variance: impl Fn(f64) -> f64,
    label: impl Into<String>,
) -> Result<NoiseTrace> {
    if !(lo_power_mw >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "LO power must be >= 0, got {lo_power_mw}"
        )));
    }
    let scale = compressed_power(lo_power_mw, spec.saturation_power_mw)
        / compressed_power(spec.reference_power_mw, spec.saturation_power_mw);
    let power: Vec<f64> = spec
        .freq_hz
        .iter()
        .zip(&spec.clearance_db)
        .zip(&spec.electronic_noise_dbm)
        .map(|((&f, &c), &ne)| {
            let floor = db_to_linear(ne);
            if lo_power_mw == 0.0 {
                return ne;
            }
            let shot = floor * (db_to_linear(c) - 1.0) * scale;
            linear_to_db(floor + shot * input_variance(f).max(0.0))
        })
        .collect();
    NoiseTrace::new(spec.freq_hz.clone(), power, Some(spec.rbw_hz), label)
}

/// `10 log10(P_shot / P_dark)` per frequency.
pub fn clearance_spectrum_db(shot: &NoiseTrace, dark: &NoiseTrace) -> Result<Vec<f64>> {
    shot.check_same_grid(dark)?;
    Ok(shot
        .power_dbm
        .iter()
        .zip(&dark.power_dbm)
        .map(|(s, d)| s - d)
        .collect())
}

/// Total linear power (mW) in bins with `f_lo <= f <= f_hi`.
pub fn band_power_mw(trace: &NoiseTrace, f_lo: f64, f_hi: f64) -> f64 {
    trace
        .freq_hz
        .iter()
        .zip(trace.linear_mw())
        .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
        .map(|(_, p)| p)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_power_is_the_floor() {
        let spec = DetectorSpec::reference_device();
        let t = simulate_output_spectrum(&spec, 0.0, |_| 1.0, "dark").unwrap();
        assert_eq!(t.power_dbm, spec.electronic_noise_dbm);
    }

    #[test]
    fn vacuum_at_reference_power_reproduces_clearance() {
        let spec = DetectorSpec::reference_device();
        let dark = simulate_output_spectrum(&spec, 0.0, |_| 1.0, "dark").unwrap();
        let shot = simulate_output_spectrum(&spec, spec.reference_power_mw, |_| 1.0, "shot").unwrap();
        let c = clearance_spectrum_db(&shot, &dark).unwrap();
        for (a, b) in c.iter().zip(&spec.clearance_db) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((c[0] - 14.0).abs() < 1e-3);
    }

    #[test]
    fn squeezed_input_sits_below_shot_noise() {
        let spec = DetectorSpec::reference_device();
        let p = spec.reference_power_mw;
        let shot = simulate_output_spectrum(&spec, p, |_| 1.0, "shot").unwrap();
        let sq = simulate_output_spectrum(&spec, p, |_| 0.852, "sq").unwrap();
        // closed-form mixing of shot and electronic noise at the lowest bin
        let k = db_to_linear(spec.clearance_db[0]) - 1.0;
        let want = linear_to_db((1.0 + k * 0.852) / (1.0 + k));
        assert!((sq.power_dbm[0] - shot.power_dbm[0] - want).abs() < 1e-9);
        assert!((want + 0.6657).abs() < 1e-3, "{want}");
    }

    #[test]
    fn monotone_in_power() {
        let spec = DetectorSpec::reference_device();
        let mut prev = simulate_output_spectrum(&spec, 0.0, |_| 1.0, "p").unwrap();
        for p in [0.12, 0.85, 1.58, 2.3, 3.0, 3.69, 4.36] {
            let t = simulate_output_spectrum(&spec, p, |_| 1.0, "p").unwrap();
            assert!(t.power_dbm.iter().zip(&prev.power_dbm).all(|(a, b)| a >= b));
            prev = t;
        }
        assert!(simulate_output_spectrum(&spec, -1.0, |_| 1.0, "p").is_err());
    }
}
