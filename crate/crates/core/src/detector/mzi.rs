use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LOCK_SETPOINT: f64 = 0.5;
const MAX_CROSSTALK: f64 = 0.05;
const LOCK_TOLERANCE: f64 = 1e-3;

/// Balancing interferometer. Reflectivity `R = (1 - cos(phi + pi/2)) / 2` with
/// `phi = phi_mzi + crosstalk * phi_lo`, so `phi = 0` is the 50:50 point.
/// Evaluated as the equivalent `(1 + sin phi) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MziState {
    pub phi_mzi: f64,
    pub phi_lo: f64,
    pub crosstalk: f64,
}

impl MziState {
    pub fn new(phi_mzi: f64, phi_lo: f64, crosstalk: f64) -> Result<Self> {
        if !(0.0..=MAX_CROSSTALK).contains(&crosstalk) {
            return Err(Error::InvalidParameter(format!(
                "crosstalk must lie in [0, {MAX_CROSSTALK}], got {crosstalk}"
            )));
        }
        if !phi_mzi.is_finite() || !phi_lo.is_finite() {
            return Err(Error::InvalidParameter("phases must be finite".into()));
        }
        Ok(Self {
            phi_mzi,
            phi_lo,
            crosstalk,
        })
    }

    /// State with no crosstalk whose reflectivity is `t`.
    pub fn with_reflectivity(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "reflectivity must lie in [0, 1], got {t}"
            )));
        }
        Self::new((2.0 * t - 1.0).asin(), 0.0, 0.0)
    }

    pub fn effective_phase(&self) -> f64 {
        self.phi_mzi + self.crosstalk * self.phi_lo
    }

    pub fn reflectivity(&self) -> f64 {
        0.5 * (1.0 + self.effective_phase().sin())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 0.5,
            ki: 0.05,
            kd: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LockOutcome {
    pub reflectivity: Vec<f64>,
    pub phi_mzi: Vec<f64>,
    pub control: Vec<f64>,
    /// `|R - setpoint| < 1e-3` over the final 10% of steps.
    pub locked: bool,
    /// The final 10% crosses the setpoint repeatedly with excursions above the lock tolerance.
    pub oscillating: bool,
    pub max_tail_excursion: f64,
}

impl LockOutcome {
    pub fn control_effort(&self) -> f64 {
        self.control.iter().map(|u| u.abs()).sum()
    }
}

/// Discrete-time PID on the MZI phase, one step per entry of `phi_lo`.
///
/// The error is `R - setpoint`; the derivative term acts on the measured reflectivity and
/// the controller output is applied as an increment to `phi_mzi`.
pub fn pid_lock_mzi(
    initial: MziState,
    phi_lo: &[f64],
    gains: PidGains,
    setpoint: f64,
) -> Result<LockOutcome> {
    if phi_lo.is_empty() {
        return Err(Error::InvalidParameter("need at least one step".into()));
    }
    if ![gains.kp, gains.ki, gains.kd].iter().all(|g| g.is_finite()) {
        return Err(Error::InvalidParameter("PID gains must be finite".into()));
    }
    let steps = phi_lo.len();
    let mut state = initial;
    let mut integral = 0.0;
    let mut prev = None;
    let mut reflectivity = Vec::with_capacity(steps);
    let mut phis = Vec::with_capacity(steps);
    let mut control = Vec::with_capacity(steps);
    for &lo in phi_lo {
        state.phi_lo = lo;
        let r = state.reflectivity();
        let e = r - setpoint;
        integral += e;
        let deriv = prev.map_or(0.0, |p| r - p);
        prev = Some(r);
        let u = gains.kp * e + gains.ki * integral + gains.kd * deriv;
        state.phi_mzi -= u;
        reflectivity.push(r);
        phis.push(state.phi_mzi);
        control.push(u);
    }
    let tail_len = (steps / 10).max(1);
    let tail = &reflectivity[steps - tail_len..];
    let max_tail_excursion = tail
        .iter()
        .map(|r| (r - setpoint).abs())
        .fold(0.0, f64::max);
    let locked = max_tail_excursion < LOCK_TOLERANCE;
    let crossings = tail
        .windows(2)
        .filter(|w| (w[0] - setpoint).signum() != (w[1] - setpoint).signum())
        .count();
    Ok(LockOutcome {
        reflectivity,
        phi_mzi: phis,
        control,
        locked,
        oscillating: !locked && crossings >= 2,
        max_tail_excursion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn origin_is_balanced() {
        let s = MziState::new(0.0, 0.0, 0.0).unwrap();
        assert!((s.reflectivity() - 0.5).abs() < 1e-15);
        assert!((MziState::new(FRAC_PI_2, 0.0, 0.0).unwrap().reflectivity() - 1.0).abs() < 1e-15);
        let t = MziState::with_reflectivity(0.3).unwrap();
        assert!((t.reflectivity() - 0.3).abs() < 1e-12);
        assert!(MziState::new(0.0, 0.0, 0.06).is_err());
    }

    #[test]
    fn no_disturbance_no_effort() {
        let s = MziState::new(0.0, 0.0, 0.0).unwrap();
        let out = pid_lock_mzi(s, &vec![0.0; 1000], PidGains::default(), LOCK_SETPOINT).unwrap();
        assert!(out.locked);
        assert_eq!(out.control_effort(), 0.0);
    }

    #[test]
    fn locks_against_crosstalk_ramp() {
        let n = 10_000;
        let lo: Vec<f64> = (0..n).map(|k| 20.0 * PI * k as f64 / n as f64).collect();
        let s = MziState::new(0.3, 0.0, 0.009).unwrap();
        let out = pid_lock_mzi(s, &lo, PidGains::default(), LOCK_SETPOINT).unwrap();
        assert!(out.locked, "{}", out.max_tail_excursion);
        assert!(!out.oscillating);
    }

    #[test]
    fn aggressive_gains_oscillate() {
        let n = 10_000;
        let lo: Vec<f64> = (0..n).map(|k| 20.0 * PI * k as f64 / n as f64).collect();
        let s = MziState::new(0.3, 0.0, 0.009).unwrap();
        let g = PidGains {
            kp: 10.0,
            ki: 5.0,
            kd: 0.0,
        };
        let out = pid_lock_mzi(s, &lo, g, LOCK_SETPOINT).unwrap();
        assert!(!out.locked);
        assert!(out.oscillating);
        assert!(out.reflectivity.iter().all(|r| (0.0..=1.0).contains(r)));
    }
}
