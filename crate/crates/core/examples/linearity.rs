//! Noise power against LO power, with the saturated tail trimmed.

use homodyne::detector::linearity_fit;

fn main() -> homodyne::Result<()> {
    let dark = 0.04;
    let powers: Vec<f64> = (1..=20).map(|k| 0.3 * k as f64).collect();
    let variances: Vec<f64> = powers
        .iter()
        .map(|&p| {
            let comp = if p > 4.6 { 1.0 / (1.0 + p / 20.0) } else { 1.0 };
            dark + 0.1 * p * comp
        })
        .collect();
    let fit = linearity_fit(&powers, &variances, dark)?;
    println!("slope {:.4} +- {:.1e} from {} points", fit.slope, fit.slope_stderr, fit.n_used);
    for (p, s) in powers.iter().zip(&fit.saturated) {
        if *s {
            println!("  {p:.1} mW saturated");
        }
    }
    if let Some(c) = fit.max_clearance_db {
        println!("largest unsaturated clearance {c:.2} dB");
    }
    Ok(())
}
