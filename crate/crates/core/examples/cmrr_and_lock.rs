//! Common-mode rejection across the MZI splitting ratio, then a PID lock to balance.

use std::f64::consts::PI;

use homodyne::detector::{cmrr, pid_lock_mzi, CmrrSettings, MziState, PidGains, LOCK_SETPOINT};

fn main() -> homodyne::Result<()> {
    let settings = CmrrSettings::default();
    for t in [0.3, 0.45, 0.49, 0.5, 0.51, 0.55, 0.7] {
        let m = MziState::with_reflectivity(t)?;
        println!("R = {t:.2}: CMRR {:.2} dB", cmrr(&m, 1.1, 1.089, &settings)?);
    }

    let steps = 10_000;
    let lo: Vec<f64> = (0..steps).map(|k| 20.0 * PI * k as f64 / steps as f64).collect();
    let start = MziState::new(0.3, 0.0, 0.009)?;
    for gains in [
        PidGains::default(),
        PidGains {
            kp: 10.0,
            ki: 5.0,
            kd: 0.0,
        },
    ] {
        let out = pid_lock_mzi(start, &lo, gains, LOCK_SETPOINT)?;
        println!(
            "Kp {} Ki {}: locked {}, oscillating {}, final R {:.6}, tail excursion {:.2e}",
            gains.kp,
            gains.ki,
            out.locked,
            out.oscillating,
            out.reflectivity[steps - 1],
            out.max_tail_excursion
        );
    }
    Ok(())
}
