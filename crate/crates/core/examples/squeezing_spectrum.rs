//! Squeezing versus sideband frequency with electronic-noise subtraction and masking.

use homodyne::detector::{clearance_to_efficiency, DetectorSpec};
use homodyne::numerics::db_to_linear;
use homodyne::squeezing::{simulate_squeezing_traces, squeezing_vs_frequency};

fn main() -> homodyne::Result<()> {
    let spec = DetectorSpec::reference_device();
    let peak = clearance_to_efficiency(spec.max_clearance_db())?;
    let eta = |f: f64| 0.292 * clearance_to_efficiency(spec.clearance_at(f)).unwrap_or(0.0) / peak;
    let [dark, shot, sq] = simulate_squeezing_traces(&spec, 4.36, db_to_linear(-3.26), eta)?;

    let spectrum = squeezing_vs_frequency(&sq, &shot, &dark, &[(4.28e9, 4.30e9)])?;
    for ghz in [0.1, 1.0, 1.7, 3.0, 5.0, 8.0, 9.0, 9.5] {
        let p = spectrum
            .points
            .iter()
            .min_by(|a, b| (a.freq_hz - ghz * 1e9).abs().total_cmp(&(b.freq_hz - ghz * 1e9).abs()))
            .expect("non-empty grid");
        match (p.squeezing_db, p.mask) {
            (Some(s), _) => println!("{:>6.3} GHz  {s:+.3} dB", p.freq_hz / 1e9),
            (None, m) => println!("{:>6.3} GHz  masked ({m:?})", p.freq_hz / 1e9),
        }
    }
    println!(
        "mean over DC-1.7 GHz {:+.3} dB, {} bins masked",
        spectrum.mean_db(0.0, 1.7e9).unwrap_or(f64::NAN),
        spectrum.masked_count()
    );
    Ok(())
}
