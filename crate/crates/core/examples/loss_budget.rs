//! Overall detection efficiency of the squeezing setup, stage by stage.

use homodyne::detector::{budget_product, clearance_to_efficiency, LossBudget};

fn main() -> homodyne::Result<()> {
    let report = budget_product(&LossBudget::reference_total())?;
    for (label, t, cum) in &report.cumulative {
        println!("{label:<42} {t:>6.3}  cumulative {cum:.4}");
    }
    println!("total efficiency {:.4}", report.total);

    for c in [6.0, 10.0, 14.0, 20.0] {
        println!("{c:>4} dB clearance -> efficiency {:.4}", clearance_to_efficiency(c)?);
    }
    Ok(())
}
