//! Phase-scan tomography: simulate a scan, reconstruct by maximum likelihood,
//! and compare with the generating state.

use homodyne::quadrature::LossySqueezedVacuum;
use homodyne::tomography::{
    fidelity, reconstruct_from_scan, simulate_scan, MleOptions, PhaseCalibration, PovmSpec,
    WignerSettings,
};
use homodyne::{FockDim, SqueezeParams};

fn main() -> homodyne::Result<()> {
    let truth = LossySqueezedVacuum::new(0.28, SqueezeParams::new(0.375, 0.0)?)?;
    let calibration = PhaseCalibration::affine(0.0, 0.7);
    let records = simulate_scan(truth, calibration, 5.0, 1000, 1e5, 200_000, 42)?;

    let spec = PovmSpec::default();
    let out = reconstruct_from_scan(
        &records,
        None,
        &spec,
        MleOptions::default(),
        WignerSettings::default(),
        |it, ll, delta| {
            if it % 100 == 0 {
                eprintln!("{it},{ll:.9e},{delta:.2e}");
            }
        },
    )?;
    let r = &out.report;
    println!("{} iterations, converged {}, monotone {}", r.iterations, r.converged, r.likelihood_monotone);
    for w in &r.warnings {
        println!("warning: {w}");
    }
    println!(
        "fitted calibration: offset {:.3} rad, {:.3} rad/V",
        out.calibration.offset_rad, out.calibration.linear_rad_per_v
    );
    println!("bins span +-{:.3} (internal units)", out.bin_half_width);
    println!("fidelity {:.5}", fidelity(&r.rho, &truth.density_matrix(FockDim::new(spec.cutoff)?)?)?);
    println!("Wigner axis ratio {:.4}", out.wigner.contour.axis_ratio());
    Ok(())
}
