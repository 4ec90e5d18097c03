//! Fit efficiency and pump coefficient to noisy squeezing / anti-squeezing pairs,
//! then infer the squeezing at the source.

use homodyne::squeezing::{variance_law, fit_variance_law, loss_correct, FitOptions, VariancePair};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> homodyne::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noise = Normal::new(0.0, 0.01).expect("valid sigma");
    let pairs: Vec<VariancePair> = [5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 72.7]
        .iter()
        .map(|&p| {
            let v = variance_law(0.28, 0.044, p)?;
            Ok(VariancePair {
                v_max: v.v_max * (1.0 + noise.sample(&mut rng)),
                v_min: v.v_min * (1.0 + noise.sample(&mut rng)),
                p_shg_mw: p,
            })
        })
        .collect::<homodyne::Result<_>>()?;
    for p in &pairs {
        println!(
            "{:>5.1} mW  anti-squeezing {:+.3} dB  squeezing {:+.3} dB",
            p.p_shg_mw,
            p.anti_squeezing_db(),
            p.squeezing_db()
        );
    }

    let fit = fit_variance_law(&pairs, FitOptions::default())?;
    println!("eta {:.4} +- {:.4}, mu {:.5} +- {:.5}", fit.eta_hat, fit.eta_stderr, fit.mu_hat, fit.mu_stderr);
    let at_max = variance_law(fit.eta_hat, fit.mu_hat, 72.7)?;
    let src = loss_correct(at_max.v_min, fit.eta_hat)?;
    println!("measured {:.3} dB -> {:.3} dB at the source", at_max.squeezing_db(), src.squeezing_db);
    Ok(())
}
