//! Binned homodyne POVMs on a truncated Fock space.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockDim};
use crate::numerics::{ln_factorials, PanelRule};
use crate::quadrature::fock_wavefunctions;

/// Quadratures beyond this magnitude (internal units) carry no weight for any cutoff we build.
const INTEGRATION_LIMIT: f64 = 20.0;

/// Projectors `Pi(theta, bin) = int_bin |x_theta><x_theta| dx` for every (phase, bin) pair.
///
/// Bins are `(-inf, e_0), [e_0, e_1), ..., [e_last, +inf)`, so there are
/// `edges.len() + 1` of them per phase. Edges are in internal units.
#[derive(Clone, Debug)]
pub struct HomodynePovm {
    dim: FockDim,
    edges: Vec<f64>,
    phases: Vec<f64>,
    /// Row-major `d x d` blocks, indexed by `phase * n_bins + bin`.
    elements: Vec<Complex64>,
    /// Overlap integrals `int_bin psi_m psi_n`, indexed by bin.
    overlaps: Vec<Vec<f64>>,
    completeness_residual: f64,
}

impl HomodynePovm {
    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn n_elements(&self) -> usize {
        self.phases.len() * self.n_bins()
    }

    /// Largest deviation of `sum_bins Pi` from the identity over all phases.
    pub fn completeness_residual(&self) -> f64 {
        self.completeness_residual
    }

    /// Flat index of the `(phase, bin)` element.
    pub fn index(&self, phase: usize, bin: usize) -> usize {
        phase * self.n_bins() + bin
    }

    /// Row-major `d x d` block of element `j`.
    pub fn element(&self, j: usize) -> &[Complex64] {
        let dd = self.dim.cutoff() * self.dim.cutoff();
        &self.elements[j * dd..(j + 1) * dd]
    }

    pub fn element_matrix(&self, j: usize) -> nalgebra::DMatrix<Complex64> {
        let d = self.dim.cutoff();
        nalgebra::DMatrix::from_row_slice(d, d, self.element(j))
    }

    /// Bin index of an internal-unit quadrature value.
    pub fn bin_of(&self, x: f64) -> usize {
        self.edges.partition_point(|&e| e <= x)
    }

    /// `Tr(rho Pi_j)`.
    pub fn probability(&self, rho: &DensityMatrix, j: usize) -> f64 {
        trace_product(&rho.to_row_major(), self.element(j), self.dim.cutoff())
    }

    /// Folds a detection efficiency into the measurement operators (adjoint pure-loss map),
    /// so reconstruction estimates the state before that loss.
    ///
    /// Experimental: loss inversion amplifies statistical noise.
    pub fn with_detection_efficiency(&self, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) || eta == 0.0 {
            return Err(Error::InvalidEta(eta));
        }
        let d = self.dim.cutoff();
        let lnf = ln_factorials(d + 1);
        let ln_binom = |n: usize, k: usize| lnf[n] - lnf[k] - lnf[n - k];
        let se = eta.sqrt();
        let loss = 1.0 - eta;
        let mut elements = Vec::with_capacity(self.elements.len());
        for j in 0..self.n_elements() {
            let src = self.element(j);
            for a in 0..d {
                for b in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..=a.min(b) {
                        let (m, n) = (a - k, b - k);
                        let w = (0.5 * (ln_binom(a, k) + ln_binom(b, k))).exp()
                            * se.powi((m + n) as i32)
                            * loss.powi(k as i32);
                        acc += src[m * d + n] * w;
                    }
                    elements.push(acc);
                }
            }
        }
        let mut out = Self {
            elements,
            ..self.clone()
        };
        out.completeness_residual = out.measure_completeness();
        Ok(out)
    }

    fn measure_completeness(&self) -> f64 {
        let d = self.dim.cutoff();
        let nb = self.n_bins();
        let mut worst: f64 = 0.0;
        for p in 0..self.phases.len() {
            let mut sum = vec![Complex64::new(0.0, 0.0); d * d];
            for b in 0..nb {
                for (s, e) in sum.iter_mut().zip(self.element(self.index(p, b))) {
                    *s += e;
                }
            }
            for m in 0..d {
                for n in 0..d {
                    let target = if m == n { 1.0 } else { 0.0 };
                    worst = worst.max((sum[m * d + n] - target).norm());
                }
            }
        }
        worst
    }
}

/// `Tr(A B)` for row-major square blocks.
pub(crate) fn trace_product(a: &[Complex64], b: &[Complex64], d: usize) -> f64 {
    let mut acc = 0.0;
    for m in 0..d {
        for n in 0..d {
            let x = a[m * d + n];
            let y = b[n * d + m];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Builds the binned POVM. `edges` must be strictly increasing (internal units).
pub fn build_povm(dim: FockDim, edges: &[f64], phases: &[f64]) -> Result<HomodynePovm> {
    if edges.windows(2).any(|w| w[1] <= w[0]) || edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidParameter(
            "bin edges must be finite and strictly increasing".into(),
        ));
    }
    if phases.is_empty() || phases.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter("need at least one finite phase".into()));
    }
    let d = dim.cutoff();
    let mut bounds = Vec::with_capacity(edges.len() + 2);
    bounds.push(-INTEGRATION_LIMIT);
    bounds.extend(edges.iter().map(|e| e.clamp(-INTEGRATION_LIMIT, INTEGRATION_LIMIT)));
    bounds.push(INTEGRATION_LIMIT);

    let mut psi = vec![0.0; d];
    let overlaps: Vec<Vec<f64>> = bounds
        .windows(2)
        .map(|w| {
            let mut acc = vec![0.0; d * d];
            if w[1] > w[0] {
                let rule = PanelRule::new(w[0], w[1], 0.125, 10);
                for (x, wt) in rule.points.iter().zip(&rule.weights) {
                    fock_wavefunctions(*x, &mut psi);
                    for m in 0..d {
                        for n in m..d {
                            acc[m * d + n] += wt * psi[m] * psi[n];
                        }
                    }
                }
                for m in 0..d {
                    for n in 0..m {
                        acc[m * d + n] = acc[n * d + m];
                    }
                }
            }
            acc
        })
        .collect();

    let mut elements = Vec::with_capacity(phases.len() * overlaps.len() * d * d);
    for &theta in phases {
        let rot: Vec<Complex64> = (0..d)
            .map(|m| Complex64::from_polar(1.0, m as f64 * theta))
            .collect();
        for ov in &overlaps {
            for m in 0..d {
                for n in 0..d {
                    elements.push(rot[m] * rot[n].conj() * ov[m * d + n]);
                }
            }
        }
    }
    let mut povm = HomodynePovm {
        dim,
        edges: edges.to_vec(),
        phases: phases.to_vec(),
        elements,
        overlaps,
        completeness_residual: 0.0,
    };
    povm.completeness_residual = povm.measure_completeness();
    if povm.completeness_residual > 1e-4 {
        return Err(Error::IncompletePovm {
            residual: povm.completeness_residual,
        });
    }
    Ok(povm)
}

impl HomodynePovm {
    /// Overlap integrals `int_bin psi_m psi_n` of bin `b` (row-major).
    pub fn overlap(&self, bin: usize) -> &[f64] {
        &self.overlaps[bin]
    }
}

/// `n` uniform bins over `[-half_width, half_width]`, returned as `n + 1` edges.
pub fn uniform_edges(half_width: f64, n_bins: usize) -> Vec<f64> {
    crate::numerics::linspace(-half_width, half_width, n_bins + 1)
}

/// `n` equally spaced phases over `[0, pi)`.
pub fn uniform_phases(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| std::f64::consts::PI * k as f64 / n as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{squeezed_vacuum, vacuum_state, SqueezeParams};
    use crate::quadrature::{fock_wavefunction, quadrature_density};

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
        }
        s * h / 3.0
    }

    #[test]
    fn single_bin_is_identity() {
        let dim = FockDim::new(8).unwrap();
        let povm = build_povm(dim, &[], &[0.0, 1.0]).unwrap();
        assert_eq!(povm.n_bins(), 1);
        let m = povm.element_matrix(povm.index(1, 0));
        let id = nalgebra::DMatrix::<Complex64>::identity(8, 8);
        assert!((m - id).iter().all(|z| z.norm() < 1e-8));
    }

    #[test]
    fn vacuum_half_line_probability() {
        let dim = FockDim::new(6).unwrap();
        let povm = build_povm(dim, &[0.0], &[0.0, 0.9, 2.0]).unwrap();
        let vac = vacuum_state(dim);
        for p in 0..3 {
            let prob = povm.probability(&vac, povm.index(p, 1));
            assert!((prob - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn off_diagonal_overlap_matches_oracle() {
        let dim = FockDim::new(2).unwrap();
        let povm = build_povm(dim, &[0.0], &[0.0]).unwrap();
        let oracle = simpson(
            |x| fock_wavefunction(0, x) * fock_wavefunction(1, x),
            0.0,
            14.0,
            20000,
        );
        let el = povm.element(povm.index(0, 1));
        assert!((el[1].re - oracle).abs() < 1e-8);
        assert!((oracle - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn completeness_with_many_bins() {
        let dim = FockDim::FIVE_PHOTON;
        let povm = build_povm(dim, &uniform_edges(3.0, 101), &uniform_phases(60)).unwrap();
        assert!(povm.completeness_residual() < 1e-6);
        assert_eq!(povm.n_bins(), 103);
    }

    #[test]
    fn probabilities_match_density_integrals() {
        let dim = FockDim::new(10).unwrap();
        let rho = squeezed_vacuum(dim, SqueezeParams::new(0.3, 0.4).unwrap()).unwrap();
        let edges = [-0.5, 0.2, 1.0];
        let povm = build_povm(dim, &edges, &[0.7]).unwrap();
        let dens = quadrature_density(&rho, 0.7);
        let want = simpson(|x| dens.eval(x), 0.2, 1.0, 2000);
        let got = povm.probability(&rho, povm.index(0, 2));
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn efficiency_corrected_povm_stays_complete() {
        let dim = FockDim::new(6).unwrap();
        let povm = build_povm(dim, &uniform_edges(3.0, 20), &uniform_phases(4)).unwrap();
        let corrected = povm.with_detection_efficiency(0.8).unwrap();
        assert!(corrected.completeness_residual() < 1e-6);
        assert!(povm.with_detection_efficiency(0.0).is_err());
    }

    #[test]
    fn rejects_unsorted_edges() {
        let dim = FockDim::new(3).unwrap();
        assert!(build_povm(dim, &[1.0, 0.0], &[0.0]).is_err());
        assert!(build_povm(dim, &[0.0], &[]).is_err());
    }
}
