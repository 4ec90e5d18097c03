//! Maximum-likelihood state reconstruction from binned homodyne data.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockDim};
use crate::povm::{build_povm, trace_product, uniform_edges, uniform_phases, HomodynePovm};
use crate::quadrature::{
    sample_quadratures, LossySqueezedVacuum, PhaseSchedule, QuadUnits, QuadratureSample,
    QuadratureSource, Waveform,
};
use crate::wigner::{vacuum_contour_level, wigner, GridSpec, WignerGrid};

/// Floor applied to predicted bin probabilities that vanish where counts were observed.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// POVM elements per work unit when accumulating `R`. Fixed so the reduction order never
/// depends on the thread count.
const R_CHUNK: usize = 256;

/// Histogram of samples on a POVM's `(phase, bin)` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedData {
    pub phases: Vec<f64>,
    /// Internal units.
    pub edges: Vec<f64>,
    /// Phase-major: `counts[phase * n_bins + bin]`.
    pub counts: Vec<u64>,
}

impl BinnedData {
    pub fn empty(povm: &HomodynePovm) -> Self {
        Self {
            phases: povm.phases().to_vec(),
            edges: povm.edges().to_vec(),
            counts: vec![0; povm.n_elements()],
        }
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn phase_counts(&self, phase: usize) -> &[u64] {
        let nb = self.n_bins();
        &self.counts[phase * nb..(phase + 1) * nb]
    }

    fn check_matches(&self, povm: &HomodynePovm) -> Result<()> {
        if self.phases.len() != povm.phases().len() || self.edges.len() != povm.edges().len() {
            return Err(Error::GridMismatch(format!(
                "data has {} phases x {} bins, POVM has {} x {}",
                self.phases.len(),
                self.n_bins(),
                povm.phases().len(),
                povm.n_bins()
            )));
        }
        Ok(())
    }
}

/// Nearest grid phase for `theta`, using `x_{theta + pi} = -x_theta`.
/// Returns `(index, distance, flip)`.
fn snap_phase(phases: &[f64], theta: f64) -> (usize, f64, bool) {
    let mut best = (0, f64::INFINITY, false);
    for (k, &phi) in phases.iter().enumerate() {
        let shifts = ((theta - phi) / PI).round();
        let dist = (theta - phi - shifts * PI).abs();
        if dist < best.1 {
            best = (k, dist, (shifts as i64).rem_euclid(2) == 1);
        }
    }
    best
}

/// Assigns each sample to its nearest POVM phase (modulo pi, mirroring `x` for odd shifts)
/// and to the bin containing its quadrature value.
///
/// The snap distance may not exceed `pi / (2 n_phases)`.
pub fn bin_samples(samples: &[QuadratureSample], povm: &HomodynePovm) -> Result<BinnedData> {
    let phases = povm.phases();
    let bound = FRAC_PI_2 / phases.len() as f64;
    let nb = povm.n_bins();
    let mut data = BinnedData::empty(povm);
    let partials: Vec<Result<Vec<u64>>> = samples
        .par_chunks(1 << 16)
        .map(|chunk| {
            let mut counts = vec![0u64; data.counts.len()];
            for s in chunk {
                let (k, dist, flip) = snap_phase(phases, s.theta);
                if dist > bound + 1e-12 {
                    return Err(Error::PhaseGridTooCoarse {
                        phase: s.theta,
                        distance: dist,
                        bound,
                    });
                }
                let x = if flip { -s.x_internal() } else { s.x_internal() };
                counts[k * nb + povm.bin_of(x)] += 1;
            }
            Ok(counts)
        })
        .collect();
    for p in partials {
        for (c, v) in data.counts.iter_mut().zip(p?) {
            *c += v;
        }
    }
    Ok(data)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    /// Stop once the largest elementwise change of `rho` falls below this.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_iters: 2000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MleReport {
    pub rho: DensityMatrix,
    pub iterations: usize,
    /// Mean log-likelihood per sample, `sum_j f_j ln p_j`, for every iterate from the start state.
    pub log_likelihood: Vec<f64>,
    pub final_delta: f64,
    pub converged: bool,
    /// Whether the log-likelihood never dropped by more than 1e-10 between iterates.
    pub likelihood_monotone: bool,
    pub n_samples: u64,
    pub seed: Option<u64>,
    pub warnings: Vec<String>,
}

impl MleReport {
    pub fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                delta: self.final_delta,
            })
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn mle_reconstruct(
    data: &BinnedData,
    povm: &HomodynePovm,
    opts: MleOptions,
) -> Result<MleReport> {
    mle_reconstruct_with_progress(data, povm, opts, |_, _, _| {})
}

/// `rho <- N[R rho R]` from the maximally mixed state, with
/// `R = sum_j (f_j / p_j) Pi_j`. `progress(iteration, loglik, delta)` is called after every step.
pub fn mle_reconstruct_with_progress(
    data: &BinnedData,
    povm: &HomodynePovm,
    opts: MleOptions,
    mut progress: impl FnMut(usize, f64, f64),
) -> Result<MleReport> {
    data.check_matches(povm)?;
    let total = data.total();
    if total == 0 {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    if povm.completeness_residual() > 1e-4 {
        return Err(Error::IncompletePovm {
            residual: povm.completeness_residual(),
        });
    }
    let dim = povm.dim();
    let d = dim.cutoff();
    let observed: Vec<(usize, f64)> = data
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(j, &c)| (j, c as f64 / total as f64))
        .collect();

    let mut rho = DensityMatrix::maximally_mixed(dim).into_elements();
    let mut warnings = Vec::new();
    let mut floored_events = 0usize;
    let mut trajectory = Vec::new();
    let mut monotone = true;
    let mut delta = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        let rm = row_major(&rho);
        let (r_op, loglik, floored) = accumulate_r(&rm, povm, &observed, d);
        if floored > 0 {
            floored_events += 1;
            if floored_events == 1 {
                log::warn!("{floored} observed bins had p_j below {PROBABILITY_FLOOR:e}; floored");
            }
        }
        if let Some(&prev) = trajectory.last() {
            if loglik < prev - 1e-10 {
                monotone = false;
            }
        }
        trajectory.push(loglik);

        let r_mat = DMatrix::from_row_slice(d, d, &r_op);
        let mut next = &r_mat * &rho * &r_mat;
        next = (&next + next.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = next.trace().re;
        next /= Complex64::new(tr, 0.0);
        delta = (&next - &rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
        rho = next;
        iterations += 1;
        progress(iterations, loglik, delta);
        if delta < opts.tolerance {
            converged = true;
            break;
        }
    }
    let rm = row_major(&rho);
    let (_, loglik, _) = accumulate_r(&rm, povm, &observed, d);
    if let Some(&prev) = trajectory.last() {
        if loglik < prev - 1e-10 {
            monotone = false;
        }
    }
    trajectory.push(loglik);
    if floored_events > 0 {
        warnings.push(format!(
            "zero-probability bins with counts: p_j floored at {PROBABILITY_FLOOR:e} in {floored_events} iterations"
        ));
    }
    if !converged {
        warnings.push(format!(
            "not converged after {iterations} iterations (max |delta rho| = {delta:.3e})"
        ));
    }
    Ok(MleReport {
        rho: DensityMatrix::from_matrix(rho)?,
        iterations,
        log_likelihood: trajectory,
        final_delta: delta,
        converged,
        likelihood_monotone: monotone,
        n_samples: total,
        seed: None,
        warnings,
    })
}

fn row_major(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let d = m.nrows();
    (0..d * d).map(|k| m[(k / d, k % d)]).collect()
}

/// Returns `(R row-major, sum f ln p, number of floored probabilities)`.
fn accumulate_r(
    rho: &[Complex64],
    povm: &HomodynePovm,
    observed: &[(usize, f64)],
    d: usize,
) -> (Vec<Complex64>, f64, usize) {
    let partials: Vec<(Vec<Complex64>, f64, usize)> = observed
        .par_chunks(R_CHUNK)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); d * d];
            let mut ll = 0.0;
            let mut floored = 0;
            for &(j, f) in chunk {
                let el = povm.element(j);
                let mut p = trace_product(rho, el, d);
                if p < PROBABILITY_FLOOR {
                    p = PROBABILITY_FLOOR;
                    floored += 1;
                }
                ll += f * p.ln();
                let w = f / p;
                for (a, e) in acc.iter_mut().zip(el) {
                    *a += e * w;
                }
            }
            (acc, ll, floored)
        })
        .collect();
    let mut r = vec![Complex64::new(0.0, 0.0); d * d];
    let mut ll = 0.0;
    let mut floored = 0;
    for (acc, l, f) in partials {
        for (a, b) in r.iter_mut().zip(acc) {
            *a += b;
        }
        ll += l;
        floored += f;
    }
    (r, ll, floored)
}

fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = m.clone().symmetric_eigen();
    let vals = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    );
    &eig.eigenvectors * vals * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.cutoff() != sigma.cutoff() {
        return Err(Error::DimensionMismatch(rho.cutoff(), sigma.cutoff()));
    }
    let s = hermitian_sqrt(rho.elements());
    let mut inner = &s * sigma.elements() * &s;
    inner = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
    let ev = inner.symmetric_eigenvalues();
    // rounding leaves ~1e-17 eigenvalues whose square roots would dominate the error
    let cut = 1e-14 * ev.iter().copied().fold(0.0, f64::max);
    let tr: f64 = ev.iter().filter(|&&l| l > cut).map(|l| l.sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// One time-tagged homodyne sample taken while the LO phase actuator is driven.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub t_s: f64,
    pub voltage_v: f64,
    /// Shot-noise units.
    pub x: f64,
}

/// Drive voltage to optical phase: `phi(V) = offset + linear V + quadratic V^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCalibration {
    pub offset_rad: f64,
    pub linear_rad_per_v: f64,
    pub quadratic_rad_per_v2: f64,
}

impl PhaseCalibration {
    pub fn affine(offset_rad: f64, linear_rad_per_v: f64) -> Self {
        Self {
            offset_rad,
            linear_rad_per_v,
            quadratic_rad_per_v2: 0.0,
        }
    }

    pub fn phase(&self, v: f64) -> f64 {
        self.offset_rad + self.linear_rad_per_v * v + self.quadratic_rad_per_v2 * v * v
    }

    /// Affine calibration from the variance-versus-voltage pattern: `V(phi)` is
    /// `A + B cos 2(phi - phi_0)`, so the gain is found by scanning the period and the
    /// offset puts the variance minimum at `phi = 0`. The sign of the gain is not observable.
    pub fn fit_from_extrema(records: &[ScanRecord], n_bins: usize) -> Result<Self> {
        let (vmin, vmax) = records.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, r| {
            (a.0.min(r.voltage_v), a.1.max(r.voltage_v))
        });
        let span = vmax - vmin;
        if records.len() < 2 * n_bins || !(span > 0.0) || n_bins < 8 {
            return Err(Error::Underdetermined(
                "drive voltage does not vary; cannot calibrate phase".into(),
            ));
        }
        let mut sum = vec![0.0; n_bins];
        let mut sq = vec![0.0; n_bins];
        let mut cnt = vec![0usize; n_bins];
        for r in records {
            let b = (((r.voltage_v - vmin) / span) * n_bins as f64).min(n_bins as f64 - 1.0) as usize;
            sum[b] += r.x;
            sq[b] += r.x * r.x;
            cnt[b] += 1;
        }
        let pts: Vec<(f64, f64)> = (0..n_bins)
            .filter(|&b| cnt[b] > 1)
            .map(|b| {
                let n = cnt[b] as f64;
                let mean = sum[b] / n;
                let v = vmin + span * (b as f64 + 0.5) / n_bins as f64;
                (v, sq[b] / n - mean * mean)
            })
            .collect();
        if pts.len() < 8 {
            return Err(Error::InsufficientPoints {
                needed: 8,
                got: pts.len(),
            });
        }
        // least squares of variance against {1, cos 2bV, sin 2bV} for a trial gain b
        let fit = |b: f64| {
            let mut ata = nalgebra::Matrix3::<f64>::zeros();
            let mut aty = nalgebra::Vector3::<f64>::zeros();
            for &(v, y) in &pts {
                let row = nalgebra::Vector3::new(1.0, (2.0 * b * v).cos(), (2.0 * b * v).sin());
                ata += row * row.transpose();
                aty += row * y;
            }
            let c = ata.try_inverse().map(|inv| inv * aty)?;
            let rss: f64 = pts
                .iter()
                .map(|&(v, y)| {
                    (y - c[0] - c[1] * (2.0 * b * v).cos() - c[2] * (2.0 * b * v).sin()).powi(2)
                })
                .sum();
            Some((rss, c))
        };
        let b_lo = PI / (4.0 * span);
        let b_hi = 8.0 * PI / span;
        let mut best = (f64::INFINITY, b_lo);
        let steps = 4000;
        for k in 0..=steps {
            let b = b_lo + (b_hi - b_lo) * k as f64 / steps as f64;
            if let Some((rss, _)) = fit(b) {
                if rss < best.0 {
                    best = (rss, b);
                }
            }
        }
        let mut h = (b_hi - b_lo) / steps as f64;
        let mut b = best.1;
        for _ in 0..60 {
            for cand in [b - h, b + h] {
                if let Some((rss, _)) = fit(cand) {
                    if rss < best.0 {
                        best = (rss, cand);
                    }
                }
            }
            b = best.1;
            h *= 0.5;
        }
        let (_, c) = fit(b).ok_or_else(|| Error::FitDiverged("calibration fit singular".into()))?;
        // variance minimum where cos(2bV - psi) = -1, psi = atan2(c2, c1)
        let psi = c[2].atan2(c[1]);
        let v_at_min = (psi + PI) / (2.0 * b);
        Ok(Self::affine(-b * v_at_min, b))
    }
}

pub fn write_scan_csv<W: Write>(mut w: W, records: &[ScanRecord]) -> Result<()> {
    writeln!(w, "t_s,voltage_v,x_shotnoise")?;
    for r in records {
        writeln!(w, "{:e},{:e},{:e}", r.t_s, r.voltage_v, r.x)?;
    }
    Ok(())
}

pub fn read_scan_csv<R: BufRead>(r: R, path: &str) -> Result<Vec<ScanRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut out = Vec::new();
    let mut header_seen = false;
    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if !header_seen {
            if t != "t_s,voltage_v,x_shotnoise" {
                return Err(err(lineno, format!("expected header 't_s,voltage_v,x_shotnoise', got '{t}'")));
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = t.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(err(lineno, format!("expected 3 fields, got {}", f.len())));
        }
        let mut vals = [0.0f64; 3];
        for (v, s) in vals.iter_mut().zip(&f) {
            *v = s
                .parse()
                .map_err(|e| err(lineno, format!("bad number '{s}': {e}")))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("non-finite value '{s}'")));
            }
        }
        out.push(ScanRecord {
            t_s: vals[0],
            voltage_v: vals[1],
            x: vals[2],
        });
    }
    if !header_seen {
        return Err(err(1, "empty file, expected header".into()));
    }
    Ok(out)
}

/// Triangle-wave phase scan of a lossy squeezed vacuum.
///
/// The drive sweeps `[0, v_max]` and back once per `period` samples, sampled at `sample_rate_hz`.
pub fn simulate_scan(
    state: LossySqueezedVacuum,
    calibration: PhaseCalibration,
    v_max: f64,
    period: usize,
    sample_rate_hz: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<ScanRecord>> {
    if period == 0 || !(sample_rate_hz > 0.0) {
        return Err(Error::InvalidParameter("period and sample rate must be > 0".into()));
    }
    let voltage = |i: usize| v_max * Waveform::Triangle.value((i % period) as f64 / period as f64);
    let phases: Vec<f64> = (0..period).map(|i| calibration.phase(voltage(i))).collect();
    let samples = sample_quadratures(
        QuadratureSource::Gaussian(state),
        &PhaseSchedule::Fixed { phases },
        count,
        seed,
    )?;
    Ok(samples
        .iter()
        .enumerate()
        .map(|(i, s)| ScanRecord {
            t_s: i as f64 / sample_rate_hz,
            voltage_v: voltage(i),
            x: s.x,
        })
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanReconstruction {
    pub report: MleReport,
    pub wigner: WignerGrid,
    pub calibration: PhaseCalibration,
    /// Internal units.
    pub bin_half_width: f64,
    /// 1/e levels of the reconstructed state and of vacuum, for overlays.
    pub state_contour_level: f64,
    pub vacuum_contour_level: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerSettings {
    pub n_sigma: f64,
    pub step: f64,
}

impl Default for WignerSettings {
    fn default() -> Self {
        Self {
            n_sigma: 4.0,
            step: 0.05,
        }
    }
}

/// Measurement grid for reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmSpec {
    pub cutoff: usize,
    /// Uniform bins inside `[-half_width, half_width]`; two overflow bins are added.
    pub n_bins: usize,
    pub n_phases: usize,
    /// Internal units. `None` uses [`HALF_WIDTH_SIGMAS`] times the largest per-phase
    /// standard deviation of the data.
    pub half_width: Option<f64>,
    /// Fold this detection efficiency into the POVM (experimental).
    pub detection_efficiency: Option<f64>,
}

pub const HALF_WIDTH_SIGMAS: f64 = 5.0;

impl Default for PovmSpec {
    fn default() -> Self {
        Self {
            cutoff: 6,
            n_bins: 101,
            n_phases: 60,
            half_width: None,
            detection_efficiency: None,
        }
    }
}

impl PovmSpec {
    pub fn half_width_for(&self, samples: &[QuadratureSample]) -> f64 {
        self.half_width
            .unwrap_or_else(|| HALF_WIDTH_SIGMAS * max_phase_sigma(samples, self.n_phases))
    }

    pub fn build(&self, samples: &[QuadratureSample]) -> Result<HomodynePovm> {
        let h = self.half_width_for(samples);
        let povm = build_povm(
            FockDim::new(self.cutoff)?,
            &uniform_edges(h, self.n_bins),
            &uniform_phases(self.n_phases),
        )?;
        match self.detection_efficiency {
            Some(eta) => povm.with_detection_efficiency(eta),
            None => Ok(povm),
        }
    }
}

/// Largest standard deviation (internal units) among the samples snapped to each of
/// `n_phases` uniform phases; the vacuum value when no phase has two samples.
pub fn max_phase_sigma(samples: &[QuadratureSample], n_phases: usize) -> f64 {
    let phases = uniform_phases(n_phases.max(1));
    let mut acc = vec![(0usize, 0.0f64, 0.0f64); phases.len()];
    for s in samples {
        let (k, _, flip) = snap_phase(&phases, s.theta);
        let x = if flip { -s.x_internal() } else { s.x_internal() };
        let a = &mut acc[k];
        a.0 += 1;
        a.1 += x;
        a.2 += x * x;
    }
    acc.iter()
        .filter(|a| a.0 >= 2)
        .map(|&(n, sum, sq)| {
            let n = n as f64;
            ((sq - sum * sum / n) / (n - 1.0)).max(0.0).sqrt()
        })
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
        .unwrap_or(std::f64::consts::FRAC_1_SQRT_2)
}

/// Phase-tagged samples from scan records, fitting the calibration from variance
/// extrema when none is given. Returns the calibration used and any warnings.
pub fn calibrate_scan(
    records: &[ScanRecord],
    calibration: Option<PhaseCalibration>,
) -> Result<(PhaseCalibration, Vec<QuadratureSample>, Vec<String>)> {
    let mut warnings = Vec::new();
    let calibration = match calibration {
        Some(c) => c,
        None => match PhaseCalibration::fit_from_extrema(records, 64) {
            Ok(c) => {
                warnings.push(
                    "phase calibration fitted from variance extrema; gain sign is not observable"
                        .to_string(),
                );
                c
            }
            Err(Error::Underdetermined(m)) => {
                warnings.push(format!("underdetermined: {m}; using zero phase"));
                PhaseCalibration::affine(0.0, 0.0)
            }
            Err(e) => return Err(e),
        },
    };
    let samples: Vec<QuadratureSample> = records
        .iter()
        .map(|r| QuadratureSample::new(calibration.phase(r.voltage_v), r.x, QuadUnits::ShotNoise))
        .collect::<Result<_>>()?;
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, s| {
        (a.0.min(s.theta), a.1.max(s.theta))
    });
    if samples.is_empty() || hi - lo < 1e-9 {
        let msg = "underdetermined: single LO phase, off-diagonal phase information is missing";
        log::warn!("{msg}");
        warnings.push(msg.to_string());
    }
    Ok((calibration, samples, warnings))
}

/// Calibrates phases (unless `calibration` is given), bins, reconstructs, and tabulates the Wigner function.
pub fn reconstruct_from_scan(
    records: &[ScanRecord],
    calibration: Option<PhaseCalibration>,
    povm_spec: &PovmSpec,
    opts: MleOptions,
    grid: WignerSettings,
    progress: impl FnMut(usize, f64, f64),
) -> Result<ScanReconstruction> {
    let (calibration, samples, warnings) = calibrate_scan(records, calibration)?;
    let povm = povm_spec.build(&samples)?;
    let data = bin_samples(&samples, &povm)?;
    let mut report = mle_reconstruct_with_progress(&data, &povm, opts, progress)?;
    report.warnings.splice(0..0, warnings);
    let wg = wigner(&report.rho, GridSpec::covering(&report.rho, grid.n_sigma, grid.step));
    Ok(ScanReconstruction {
        state_contour_level: wg.contour.level,
        vacuum_contour_level: vacuum_contour_level(),
        bin_half_width: povm.edges().last().copied().unwrap_or(0.0),
        report,
        wigner: wg,
        calibration,
    })
}

/// True state for a lossy squeezed vacuum at `dim`, for fidelity checks.
pub fn reference_state(state: &LossySqueezedVacuum, dim: FockDim) -> Result<DensityMatrix> {
    state.density_matrix(dim)
}
