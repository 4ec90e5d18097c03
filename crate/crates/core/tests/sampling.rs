use homodyne::fock::{vacuum_state, DensityMatrix};
use homodyne::povm::{build_povm, uniform_edges, uniform_phases};
use homodyne::quadrature::{sample_quadratures, LossySqueezedVacuum, PhaseSchedule, QuadratureSource};
use homodyne::tomography::{bin_samples, fidelity, mle_reconstruct, MleOptions};
use homodyne::{FockDim, SqueezeParams};

/// Upper 0.1% point of chi-square with `k` degrees of freedom (Wilson-Hilferty).
fn chi2_critical(k: f64) -> f64 {
    let z = 3.090_232;
    let a = 2.0 / (9.0 * k);
    k * (1.0 - a + z * a.sqrt()).powi(3)
}

fn chi2(rho: &DensityMatrix, source: QuadratureSource<'_>, seed: u64) -> (f64, f64) {
    let povm = build_povm(rho.dim(), &uniform_edges(3.0, 24), &uniform_phases(6)).unwrap();
    let n = 120_000;
    let samples = sample_quadratures(source, &PhaseSchedule::Uniform { n_phases: 6 }, n, seed).unwrap();
    let data = bin_samples(&samples, &povm).unwrap();
    let per_phase = (n / 6) as f64;
    let mut stat = 0.0;
    let mut cells = 0;
    for j in 0..povm.n_elements() {
        let expected = per_phase * povm.probability(rho, j);
        if expected >= 5.0 {
            stat += (data.counts[j] as f64 - expected).powi(2) / expected;
            cells += 1;
        }
    }
    // one constraint per phase
    (stat, chi2_critical((cells - 6) as f64))
}

#[test]
fn vacuum_samples_follow_born_rule() {
    let dim = FockDim::new(6).unwrap();
    let vac = vacuum_state(dim);
    let (stat, crit) = chi2(&vac, QuadratureSource::State(&vac), 3);
    assert!(stat < crit, "chi2 {stat} >= {crit}");
    let gauss = LossySqueezedVacuum::new(1.0, SqueezeParams::new(0.0, 0.0).unwrap()).unwrap();
    let (stat, crit) = chi2(&vac, QuadratureSource::Gaussian(gauss), 4);
    assert!(stat < crit, "chi2 {stat} >= {crit}");
}

#[test]
fn fock_sampler_matches_squeezed_state() {
    let state = LossySqueezedVacuum::new(0.6, SqueezeParams::new(0.4, 0.2).unwrap()).unwrap();
    let rho = state.density_matrix(FockDim::new(14).unwrap()).unwrap();
    let (stat, crit) = chi2(&rho, QuadratureSource::State(&rho), 5);
    assert!(stat < crit, "chi2 {stat} >= {crit}");
}

#[test]
fn samples_do_not_depend_on_thread_count() {
    let state = LossySqueezedVacuum::new(0.28, SqueezeParams::new(0.375, 0.0).unwrap()).unwrap();
    let draw = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                sample_quadratures(
                    QuadratureSource::Gaussian(state),
                    &PhaseSchedule::Uniform { n_phases: 36 },
                    200_000,
                    17,
                )
                .unwrap()
            })
    };
    let a = draw(1);
    let b = draw(5);
    assert!(a.iter().zip(&b).all(|(x, y)| x.x.to_bits() == y.x.to_bits() && x.theta == y.theta));
}

#[test]
fn mle_recovers_fock_sampled_state() {
    let dim = FockDim::new(6).unwrap();
    let state = LossySqueezedVacuum::new(0.5, SqueezeParams::new(0.3, 0.0).unwrap()).unwrap();
    let rho = state.density_matrix(dim).unwrap();
    let samples = sample_quadratures(
        QuadratureSource::State(&rho),
        &PhaseSchedule::Uniform { n_phases: 24 },
        300_000,
        8,
    )
    .unwrap();
    let povm = build_povm(dim, &uniform_edges(4.0, 60), &uniform_phases(24)).unwrap();
    let data = bin_samples(&samples, &povm).unwrap();
    let report = mle_reconstruct(&data, &povm, MleOptions::default()).unwrap();
    assert!(report.likelihood_monotone);
    let f = fidelity(&report.rho, &rho).unwrap();
    assert!(f > 0.99, "fidelity {f}");
}
