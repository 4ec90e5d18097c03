//! Wigner function of a lossy squeezed vacuum and its 1/e contour.
//!
//! Writes `wigner.csv` to the directory given as the first argument (default: current).

use std::path::PathBuf;

use homodyne::quadrature::LossySqueezedVacuum;
use homodyne::wigner::{vacuum_contour_level, wigner, GridSpec};
use homodyne::{FockDim, SqueezeParams};

fn main() -> homodyne::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_default();
    let state = LossySqueezedVacuum::new(0.28, SqueezeParams::new(0.375, 0.0)?)?;
    let rho = state.density_matrix(FockDim::new(12)?)?;
    let grid = wigner(&rho, GridSpec::covering(&rho, 4.0, 0.05));

    let c = grid.contour;
    println!("grid {} x {}, integral {:.6}", grid.x_axis.len(), grid.p_axis.len(), grid.integral());
    println!("1/e contour: semi-axes {:.4} / {:.4}, ratio {:.4}", c.semi_major, c.semi_minor, c.axis_ratio());
    println!("state level {:.4}, vacuum level {:.4}", c.level, vacuum_contour_level());
    println!(
        "expected ratio sqrt(V_max/V_min) = {:.4}",
        (state.variance(std::f64::consts::FRAC_PI_2) / state.variance(0.0)).sqrt()
    );

    let path = out.join("wigner.csv");
    grid.write_csv(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    println!("wrote {}", path.display());
    Ok(())
}
