//! Seeded quadrature samples from the closed-form Gaussian and the Fock-basis samplers.

use homodyne::quadrature::{sample_quadratures, LossySqueezedVacuum, PhaseSchedule, QuadratureSource};
use homodyne::{FockDim, SqueezeParams};

fn variance_at(samples: &[homodyne::quadrature::QuadratureSample], theta: f64) -> f64 {
    let xs: Vec<f64> = samples
        .iter()
        .filter(|s| (s.theta - theta).abs() < 1e-12)
        .map(|s| s.x)
        .collect();
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

fn main() -> homodyne::Result<()> {
    let state = LossySqueezedVacuum::new(0.28, SqueezeParams::new(0.375, 0.0)?)?;
    let rho = state.density_matrix(FockDim::new(10)?)?;
    let schedule = PhaseSchedule::Uniform { n_phases: 2 };

    let gauss = sample_quadratures(QuadratureSource::Gaussian(state), &schedule, 200_000, 1)?;
    let fock = sample_quadratures(QuadratureSource::State(&rho), &schedule, 200_000, 1)?;
    let half_pi = std::f64::consts::FRAC_PI_2;
    println!("          V(0)     V(pi/2)   (shot-noise units)");
    println!("model     {:.4}   {:.4}", state.variance(0.0), state.variance(half_pi));
    println!("gaussian  {:.4}   {:.4}", variance_at(&gauss, 0.0), variance_at(&gauss, half_pi));
    println!("fock      {:.4}   {:.4}", variance_at(&fock, 0.0), variance_at(&fock, half_pi));
    Ok(())
}
