//! Squeezed vacuum in a truncated Fock basis, before and after loss.

use homodyne::fock::{apply_loss, quadrature_moments, squeezed_vacuum};
use homodyne::{FockDim, SqueezeParams};

fn main() -> homodyne::Result<()> {
    let dim = FockDim::new(30)?;
    let pure = squeezed_vacuum(dim, SqueezeParams::new(0.375, 0.0)?)?;
    let lossy = apply_loss(&pure, 0.28)?;

    for (name, rho) in [("pure", &pure), ("eta = 0.28", &lossy)] {
        let (_, v_min) = quadrature_moments(rho, 0.0);
        let (_, v_max) = quadrature_moments(rho, std::f64::consts::FRAC_PI_2);
        println!(
            "{name:<11} V_min {v_min:.4}  V_max {v_max:.4}  product {:.4}  leakage {:.1e}",
            v_min * v_max,
            rho.leakage()
        );
    }
    let pops = lossy.populations();
    println!("photon-number distribution after loss:");
    for (n, p) in pops.iter().take(6).enumerate() {
        println!("  P({n}) = {p:.5}");
    }
    Ok(())
}
