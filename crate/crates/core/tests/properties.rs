use std::f64::consts::PI;

use homodyne::detector::{budget_product, cmrr, CmrrSettings, LossBudget, MziState};
use homodyne::fock::{apply_loss, quadrature_moments, squeezed_vacuum, squeezed_vacuum_amplitudes};
use homodyne::povm::{build_povm, uniform_edges, uniform_phases};
use homodyne::quadrature::{QuadUnits, QuadratureSample};
use homodyne::squeezing::{variance_law, fit_variance_law, loss_correct, FitOptions, VariancePair};
use homodyne::tomography::bin_samples;
use homodyne::{FockDim, SqueezeParams};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn squeeze_generator_oracle(r: f64, theta: f64, len: usize) -> Vec<Complex64> {
    let d = 80;
    let a = DMatrix::<Complex64>::from_fn(d, d, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let ad = a.adjoint();
    let xi = Complex64::from_polar(r, 2.0 * theta);
    let gen = (&a * &a * xi.conj() - &ad * &ad * xi) * Complex64::new(0.5, 0.0);
    let u = gen.exp();
    (0..len).map(|n| u[(n, 0)]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_channels_compose(r in 0.0..0.6f64, th in 0.0..PI, a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let dim = FockDim::new(24).unwrap();
        let rho = squeezed_vacuum(dim, SqueezeParams::new(r, th).unwrap()).unwrap();
        let two_step = apply_loss(&apply_loss(&rho, a).unwrap(), b).unwrap();
        let one_step = apply_loss(&rho, a * b).unwrap();
        prop_assert!(max_diff(two_step.elements(), one_step.elements()) < 1e-12);
    }

    #[test]
    fn loss_preserves_trace_and_positivity(r in 0.0..0.6f64, eta in 0.0..=1.0f64) {
        let dim = FockDim::new(20).unwrap();
        let rho = apply_loss(&squeezed_vacuum(dim, SqueezeParams::new(r, 0.3).unwrap()).unwrap(), eta).unwrap();
        let full = squeezed_vacuum(dim, SqueezeParams::new(r, 0.3).unwrap()).unwrap();
        prop_assert!((rho.trace() - full.trace()).abs() < 1e-12);
        prop_assert!(rho.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn squeezing_angle_is_pi_periodic(r in 0.0..0.8f64, th in 0.0..PI, probe in 0.0..PI) {
        let dim = FockDim::new(30).unwrap();
        let a = squeezed_vacuum(dim, SqueezeParams::new(r, th).unwrap()).unwrap();
        let b = squeezed_vacuum(dim, SqueezeParams::new(r, th + PI).unwrap()).unwrap();
        prop_assert!(max_diff(a.elements(), b.elements()) < 1e-12);
        let (_, v1) = quadrature_moments(&a, probe);
        let (_, v2) = quadrature_moments(&a, probe + PI);
        prop_assert!((v1 - v2).abs() < 1e-12);
    }

    #[test]
    fn amplitudes_match_dense_exponential(r in 0.0..0.8f64, th in 0.0..PI) {
        let sq = SqueezeParams::new(r, th).unwrap();
        let closed = squeezed_vacuum_amplitudes(sq, 16);
        let oracle = squeeze_generator_oracle(r, th, 16);
        for (c, o) in closed.iter().zip(&oracle) {
            prop_assert!((c - o).norm() < 1e-10, "{c} vs {o}");
        }
    }

    #[test]
    fn variance_law_inverts_and_respects_uncertainty(eta in 0.01..=1.0f64, mu in 0.0..0.1f64, p in 0.0..100.0f64) {
        let v = variance_law(eta, mu, p).unwrap();
        let s = mu * p.sqrt();
        let back = loss_correct(v.v_min, eta).unwrap().source_variance;
        prop_assert!((back - (-2.0 * s).exp()).abs() < 1e-12);
        prop_assert!(v.v_max * v.v_min >= 1.0 - 1e-12);
        prop_assert!(v.v_min >= 1.0 - eta - 1e-15);
    }

    #[test]
    fn budget_is_order_invariant(ts in prop::collection::vec(0.01..=1.0f64, 1..8), seed in any::<u64>()) {
        let mut shuffled = ts.clone();
        let n = shuffled.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = budget_product(&LossBudget::from_stages(ts.iter().map(|t| ("s", *t))).unwrap()).unwrap();
        let b = budget_product(&LossBudget::from_stages(shuffled.iter().map(|t| ("s", *t))).unwrap()).unwrap();
        prop_assert!((a.total - b.total).abs() <= 1e-15 * a.total.max(1e-300) * n as f64);
    }

    #[test]
    fn cmrr_ignores_common_responsivity_scale(t in 0.0..=1.0f64, r1 in 0.5..1.5f64, r2 in 0.5..1.5f64, k in 0.1..10.0f64) {
        let s = CmrrSettings::default();
        let m = MziState::with_reflectivity(t).unwrap();
        let a = cmrr(&m, r1, r2, &s).unwrap();
        let b = cmrr(&m, k * r1, k * r2, &s).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn cmrr_symmetric_under_port_swap(t in 0.0..=1.0f64, r1 in 0.5..1.5f64, r2 in 0.5..1.5f64) {
        let s = CmrrSettings::default();
        let a = cmrr(&MziState::with_reflectivity(t).unwrap(), r1, r2, &s).unwrap();
        let b = cmrr(&MziState::with_reflectivity(1.0 - t).unwrap(), r2, r1, &s).unwrap();
        prop_assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn binning_ignores_sample_order(xs in prop::collection::vec((0usize..4, -4.0..4.0f64), 1..300), rot in 0usize..300) {
        let povm = build_povm(FockDim::new(4).unwrap(), &uniform_edges(3.0, 12), &uniform_phases(4)).unwrap();
        let phases = uniform_phases(4);
        let samples: Vec<QuadratureSample> = xs
            .iter()
            .map(|&(k, x)| QuadratureSample::new(phases[k], x, QuadUnits::ShotNoise).unwrap())
            .collect();
        let mut moved = samples.clone();
        let n = moved.len();
        moved.rotate_left(rot % n);
        moved.reverse();
        let a = bin_samples(&samples, &povm).unwrap();
        let b = bin_samples(&moved, &povm).unwrap();
        prop_assert_eq!(&a.counts, &b.counts);
        prop_assert_eq!(a.total(), n as u64);
    }
}

#[test]
fn noiseless_fit_recovers_truth() {
    let pairs: Vec<VariancePair> = [5.0, 20.0, 40.0, 72.7]
        .iter()
        .map(|&p| variance_law(0.28, 0.044, p).unwrap())
        .collect();
    let f = fit_variance_law(&pairs, FitOptions::default()).unwrap();
    assert!((f.eta_hat - 0.28).abs() < 1e-8);
    assert!((f.mu_hat - 0.044).abs() < 1e-8);
}
