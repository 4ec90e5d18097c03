//! Butterworth fit of a simulated shot-noise spectrum, with the order chosen by AIC.

use homodyne::detector::{
    clearance_spectrum_db, fit_butterworth, simulate_output_spectrum, DetectorParams, DetectorSpec,
    OrderSelection,
};

fn main() -> homodyne::Result<()> {
    for order in [1, 2, 3] {
        let spec = DetectorSpec::from_params(&DetectorParams {
            butterworth_order: order,
            ..DetectorParams::default()
        })?;
        let dark = simulate_output_spectrum(&spec, 0.0, |_| 1.0, "dark")?;
        let shot = simulate_output_spectrum(&spec, spec.reference_power_mw, |_| 1.0, "shot")?;
        let clearance = clearance_spectrum_db(&shot, &dark)?;
        let fit = fit_butterworth(&shot, &dark, OrderSelection::Aic { max: 5 })?;
        println!(
            "generated n={order}: fitted n={} f3db {:.4} GHz (+- {:.1e} Hz) from {} bins, peak clearance {:.2} dB",
            fit.order,
            fit.f3db_hz / 1e9,
            fit.f3db_stderr_hz.unwrap_or(f64::NAN),
            fit.n_points,
            clearance.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        );
    }
    Ok(())
}
