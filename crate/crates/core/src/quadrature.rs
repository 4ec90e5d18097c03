//! Homodyne quadrature statistics: Fock wavefunctions, marginal densities,
//! and seeded sampling of phase-tagged quadrature values.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    self, apply_loss, shot_noise_amplitude_scale, squeezed_vacuum, DensityMatrix, FockDim,
    SqueezeParams,
};
use crate::numerics::linspace;
use crate::rng::{domain, substream};

/// Units a quadrature value is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadUnits {
    /// Vacuum variance 1.
    ShotNoise,
    /// Vacuum variance 1/2 (internal convention).
    VacuumHalf,
}

impl QuadUnits {
    /// Column name used in sample files.
    pub fn column(self) -> &'static str {
        match self {
            QuadUnits::ShotNoise => "x_shotnoise",
            QuadUnits::VacuumHalf => "x_vac_half",
        }
    }
}

/// One homodyne outcome: LO phase and quadrature value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub theta: f64,
    pub x: f64,
    pub units: QuadUnits,
}

impl QuadratureSample {
    pub fn new(theta: f64, x: f64, units: QuadUnits) -> Result<Self> {
        if !theta.is_finite() || !x.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite quadrature sample ({theta}, {x})"
            )));
        }
        Ok(Self { theta, x, units })
    }

    /// Quadrature value in the internal (vacuum variance 1/2) convention.
    pub fn x_internal(&self) -> f64 {
        match self.units {
            QuadUnits::VacuumHalf => self.x,
            QuadUnits::ShotNoise => self.x / shot_noise_amplitude_scale(),
        }
    }

    pub fn to_units(&self, units: QuadUnits) -> Self {
        let x = match units {
            QuadUnits::VacuumHalf => self.x_internal(),
            QuadUnits::ShotNoise => self.x_internal() * shot_noise_amplitude_scale(),
        };
        Self {
            theta: self.theta,
            x,
            units,
        }
    }
}

/// Harmonic-oscillator eigenfunction `psi_n(x)` (internal units).
pub fn fock_wavefunction(n: usize, x: f64) -> f64 {
    let mut buf = vec![0.0; n + 1];
    fock_wavefunctions(x, &mut buf);
    buf[n]
}

/// Fills `out[n] = psi_n(x)` for `n = 0..out.len()` by the three-term recurrence.
pub fn fock_wavefunctions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for n in 2..out.len() {
        let nf = n as f64;
        out[n] = (2.0 / nf).sqrt() * x * out[n - 1] - ((nf - 1.0) / nf).sqrt() * out[n - 2];
    }
}

/// Marginal density `p(x | theta)` of a state, internal units.
#[derive(Clone, Debug)]
pub struct QuadratureDensity {
    elements: Vec<Complex64>,
    cutoff: usize,
}

impl QuadratureDensity {
    pub fn eval(&self, x: f64) -> f64 {
        let d = self.cutoff;
        let mut psi = vec![0.0; d];
        fock_wavefunctions(x, &mut psi);
        let mut acc = 0.0;
        for m in 0..d {
            acc += self.elements[m * d + m].re * psi[m] * psi[m];
            for n in (m + 1)..d {
                acc += 2.0 * self.elements[m * d + n].re * psi[m] * psi[n];
            }
        }
        acc.max(0.0)
    }
}

/// `p(x|theta) = sum_mn rho_mn exp(i(n-m)theta) psi_m(x) psi_n(x)`.
pub fn quadrature_density(rho: &DensityMatrix, theta: f64) -> QuadratureDensity {
    let d = rho.cutoff();
    let mut elements = Vec::with_capacity(d * d);
    for m in 0..d {
        for n in 0..d {
            let phase = Complex64::from_polar(1.0, (n as f64 - m as f64) * theta);
            elements.push(rho.get(m, n) * phase);
        }
    }
    QuadratureDensity {
        elements,
        cutoff: d,
    }
}

/// Squeezed vacuum after a pure-loss channel; a zero-mean Gaussian state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossySqueezedVacuum {
    pub eta: f64,
    pub squeeze: SqueezeParams,
}

impl LossySqueezedVacuum {
    pub fn new(eta: f64, squeeze: SqueezeParams) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidEta(eta));
        }
        Ok(Self { eta, squeeze })
    }

    /// Shot-noise-unit variance along `theta`.
    pub fn variance(&self, theta: f64) -> f64 {
        let r = self.squeeze.r();
        let phi = theta - self.squeeze.theta_sq();
        let (s, c) = phi.sin_cos();
        self.eta * ((-2.0 * r).exp() * c * c + (2.0 * r).exp() * s * s) + (1.0 - self.eta)
    }

    /// Fock-basis state built at the working cutoff and truncated to `dim`.
    pub fn density_matrix(&self, dim: FockDim) -> Result<DensityMatrix> {
        let work = FockDim::new(dim.cutoff().max(fock::WORKING_CUTOFF))?;
        let pure = squeezed_vacuum(work, self.squeeze)?;
        apply_loss(&pure, self.eta)?.truncate(dim)
    }
}

/// Shape of a periodic phase scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Sawtooth,
    Triangle,
}

impl Waveform {
    /// Normalised waveform value in `[0, 1]` at fractional period position `u`.
    pub fn value(self, u: f64) -> f64 {
        let u = u.rem_euclid(1.0);
        match self {
            Waveform::Sawtooth => u,
            Waveform::Triangle => 1.0 - (2.0 * u - 1.0).abs(),
        }
    }
}

/// Which LO phase each sample is taken at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PhaseSchedule {
    /// Round-robin over `n_phases` equally spaced phases in `[0, pi)`.
    Uniform { n_phases: usize },
    /// Periodic drive sweeping `[phase_min, phase_max]` once per `period` samples.
    Scan {
        waveform: Waveform,
        period: usize,
        phase_min: f64,
        phase_max: f64,
    },
    /// Cycles through the listed phases.
    Fixed { phases: Vec<f64> },
}

impl PhaseSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            PhaseSchedule::Uniform { n_phases } => *n_phases >= 1,
            PhaseSchedule::Scan {
                period,
                phase_min,
                phase_max,
                ..
            } => *period >= 1 && phase_min.is_finite() && phase_max.is_finite(),
            PhaseSchedule::Fixed { phases } => {
                !phases.is_empty() && phases.iter().all(|p| p.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad phase schedule {self:?}")))
        }
    }

    /// Phase of sample `i`.
    pub fn phase(&self, i: usize) -> f64 {
        match self {
            PhaseSchedule::Uniform { n_phases } => PI * (i % n_phases) as f64 / *n_phases as f64,
            PhaseSchedule::Scan {
                waveform,
                period,
                phase_min,
                phase_max,
            } => {
                let u = (i % period) as f64 / *period as f64;
                phase_min + (phase_max - phase_min) * waveform.value(u)
            }
            PhaseSchedule::Fixed { phases } => phases[i % phases.len()],
        }
    }
}

/// What to draw quadratures from.
#[derive(Clone, Copy, Debug)]
pub enum QuadratureSource<'a> {
    /// Arbitrary state, sampled by inverse CDF on a dense tabulation.
    State(&'a DensityMatrix),
    /// Closed-form Gaussian fast path.
    Gaussian(LossySqueezedVacuum),
}

/// Half-width of the inverse-CDF tabulation, internal units.
pub const CDF_HALF_WIDTH: f64 = 10.0;
/// Number of tabulation points.
pub const CDF_POINTS: usize = 20001;
/// Samples per seeded substream.
pub const SAMPLE_CHUNK: usize = 1 << 16;

/// Cumulative distributions for every phase, stored as Fourier components in theta.
struct CdfTable {
    grid: Vec<f64>,
    /// `cum[i * orders + d]` = trapezoid integral of `g_d` up to grid point `i`.
    cum: Vec<Complex64>,
    orders: usize,
}

impl CdfTable {
    fn new(rho: &DensityMatrix) -> Self {
        let d = rho.cutoff();
        let grid = linspace(-CDF_HALF_WIDTH, CDF_HALF_WIDTH, CDF_POINTS);
        let h = grid[1] - grid[0];
        let g_at = |x: f64| {
            let mut psi = vec![0.0; d];
            fock_wavefunctions(x, &mut psi);
            (0..d)
                .map(|k| {
                    (0..d - k)
                        .map(|m| rho.get(m, m + k) * (psi[m] * psi[m + k]))
                        .sum::<Complex64>()
                })
                .collect::<Vec<_>>()
        };
        let g: Vec<Vec<Complex64>> = grid.par_iter().map(|&x| g_at(x)).collect();
        let mut cum = vec![Complex64::new(0.0, 0.0); grid.len() * d];
        for i in 1..grid.len() {
            for k in 0..d {
                cum[i * d + k] = cum[(i - 1) * d + k] + (g[i - 1][k] + g[i][k]) * (0.5 * h);
            }
        }
        Self {
            grid,
            cum,
            orders: d,
        }
    }

    fn cdf(&self, i: usize, phases: &[Complex64]) -> f64 {
        let row = &self.cum[i * self.orders..(i + 1) * self.orders];
        let mut acc = row[0].re;
        for k in 1..self.orders {
            acc += 2.0 * (row[k] * phases[k]).re;
        }
        acc
    }

    /// Internal-unit quadrature with CDF equal to `u` at phase `theta`.
    fn invert(&self, theta: f64, u: f64) -> f64 {
        let phases: Vec<Complex64> = (0..self.orders)
            .map(|k| Complex64::from_polar(1.0, k as f64 * theta))
            .collect();
        let last = self.grid.len() - 1;
        let total = self.cdf(last, &phases);
        let target = u * total;
        let (mut lo, mut hi) = (0usize, last);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf(mid, &phases) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c_lo = self.cdf(lo, &phases);
        let c_hi = self.cdf(hi, &phases);
        let t = if c_hi > c_lo {
            ((target - c_lo) / (c_hi - c_lo)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        self.grid[lo] + t * (self.grid[hi] - self.grid[lo])
    }
}

/// Draws `count` phase-tagged quadratures, returned in shot-noise units.
///
/// Samples are produced in chunks of [`SAMPLE_CHUNK`], each from its own
/// substream of `seed`, so the output is independent of the thread count.
pub fn sample_quadratures(
    source: QuadratureSource<'_>,
    schedule: &PhaseSchedule,
    count: usize,
    seed: u64,
) -> Result<Vec<QuadratureSample>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    schedule.validate()?;
    let table = match source {
        QuadratureSource::State(rho) => Some(CdfTable::new(rho)),
        QuadratureSource::Gaussian(_) => None,
    };
    let scale = shot_noise_amplitude_scale();
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    let out: Vec<Vec<QuadratureSample>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, domain::QUADRATURE_SAMPLES, c as u64);
            let start = c * SAMPLE_CHUNK;
            let end = (start + SAMPLE_CHUNK).min(count);
            (start..end)
                .map(|i| {
                    let theta = schedule.phase(i);
                    let x = match (&source, &table) {
                        (QuadratureSource::Gaussian(g), _) => {
                            let z: f64 = rng.sample(StandardNormal);
                            g.variance(theta).sqrt() * z
                        }
                        (QuadratureSource::State(_), Some(t)) => {
                            let u: f64 = rng.random();
                            t.invert(theta, u) * scale
                        }
                        _ => unreachable!("table exists for state sources"),
                    };
                    QuadratureSample {
                        theta,
                        x,
                        units: QuadUnits::ShotNoise,
                    }
                })
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Writes samples as CSV with header `theta_rad,<units column>`.
pub fn write_samples_csv<W: Write>(
    mut w: W,
    samples: &[QuadratureSample],
    units: QuadUnits,
) -> Result<()> {
    writeln!(w, "theta_rad,{}", units.column())?;
    for s in samples {
        let s = s.to_units(units);
        writeln!(w, "{:e},{:e}", s.theta, s.x)?;
    }
    Ok(())
}

/// Reads a sample CSV; values are converted to internal units.
pub fn read_samples_csv<R: BufRead>(r: R, path: &str) -> Result<Vec<QuadratureSample>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(parse_err(1, "empty file, expected header".into())),
    };
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let units = match cols.as_slice() {
        ["theta_rad", "x_shotnoise"] => QuadUnits::ShotNoise,
        ["theta_rad", "x_vac_half"] => QuadUnits::VacuumHalf,
        _ => {
            return Err(parse_err(
                1,
                format!("expected header 'theta_rad,x_shotnoise' or 'theta_rad,x_vac_half', got '{header}'"),
            ))
        }
    };
    let mut out = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut fields = t.split(',');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(lineno, format!("expected 2 fields, got '{t}'")));
        };
        let theta: f64 = a
            .trim()
            .parse()
            .map_err(|e| parse_err(lineno, format!("bad theta '{a}': {e}")))?;
        let x: f64 = b
            .trim()
            .parse()
            .map_err(|e| parse_err(lineno, format!("bad quadrature '{b}': {e}")))?;
        let s = QuadratureSample::new(theta, x, units)
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        out.push(s.to_units(QuadUnits::VacuumHalf));
    }
    Ok(out)
}

pub fn read_samples_file(path: &Path) -> Result<Vec<QuadratureSample>> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::MissingInput(format!("{}: {e}", path.display())))?;
    read_samples_csv(std::io::BufReader::new(f), &path.display().to_string())
}

impl fmt::Display for QuadUnits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::vacuum_state;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + h * i as f64;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn wavefunction_values() {
        assert!((fock_wavefunction(0, 0.0) - PI.powf(-0.25)).abs() < 1e-15);
        assert!((fock_wavefunction(0, 0.0) - 0.7511255444649425).abs() < 1e-15);
        assert_eq!(fock_wavefunction(1, 0.0), 0.0);
        // H_3(x) = 8x^3 - 12x, norm 1/sqrt(2^3 3! sqrt(pi))
        let x: f64 = 0.8;
        let h3 = 8.0 * x.powi(3) - 12.0 * x;
        let want = h3 * (-x * x / 2.0).exp() / (48.0 * PI.sqrt()).sqrt();
        assert!((fock_wavefunction(3, x) - want).abs() < 1e-14);
    }

    #[test]
    fn wavefunction_normalised() {
        let norm = simpson(|x| fock_wavefunction(3, x).powi(2), -12.0, 12.0, 4000);
        assert!((norm - 1.0).abs() < 1e-8);
        let overlap = simpson(
            |x| fock_wavefunction(3, x) * fock_wavefunction(5, x),
            -12.0,
            12.0,
            4000,
        );
        assert!(overlap.abs() < 1e-8);
    }

    #[test]
    fn vacuum_density_is_half_variance_gaussian() {
        let p = quadrature_density(&vacuum_state(FockDim::new(6).unwrap()), 1.3);
        for x in [-2.0f64, -0.3, 0.0, 1.7] {
            let want = (-x * x).exp() / PI.sqrt();
            assert!((p.eval(x) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn lossy_squeezed_density_matches_closed_form_variance() {
        let src = LossySqueezedVacuum::new(0.28, SqueezeParams::new(0.375, 0.0).unwrap()).unwrap();
        let rho = src.density_matrix(FockDim::new(40).unwrap()).unwrap();
        let p = quadrature_density(&rho, 0.0);
        let v = simpson(|x| x * x * p.eval(x), -10.0, 10.0, 4000);
        let norm = simpson(|x| p.eval(x), -10.0, 10.0, 4000);
        assert!((norm - 1.0).abs() < 1e-3);
        assert!((v - 0.852 / 2.0).abs() < 1e-3, "{v}");
        assert!((v - src.variance(0.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn schedules() {
        let u = PhaseSchedule::Uniform { n_phases: 4 };
        assert_eq!(u.phase(0), 0.0);
        assert!((u.phase(5) - PI / 4.0).abs() < 1e-15);
        let tri = PhaseSchedule::Scan {
            waveform: Waveform::Triangle,
            period: 100,
            phase_min: 0.0,
            phase_max: 2.0,
        };
        assert_eq!(tri.phase(0), 0.0);
        assert!((tri.phase(50) - 2.0).abs() < 1e-15);
        assert!((tri.phase(75) - 1.0).abs() < 1e-15);
        assert!(PhaseSchedule::Fixed { phases: vec![] }.validate().is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let rho = vacuum_state(FockDim::new(4).unwrap());
        let sched = PhaseSchedule::Uniform { n_phases: 8 };
        let a = sample_quadratures(QuadratureSource::State(&rho), &sched, 70_000, 11).unwrap();
        let b = sample_quadratures(QuadratureSource::State(&rho), &sched, 70_000, 11).unwrap();
        let c = sample_quadratures(QuadratureSource::State(&rho), &sched, 70_000, 12).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| p.x.to_bits() == q.x.to_bits()));
        assert_ne!(a[0].x, c[0].x);
        assert!(sample_quadratures(QuadratureSource::State(&rho), &sched, 0, 1).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let samples = vec![
            QuadratureSample::new(0.5, 1.0, QuadUnits::ShotNoise).unwrap(),
            QuadratureSample::new(1.5, -0.25, QuadUnits::ShotNoise).unwrap(),
        ];
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &samples, QuadUnits::ShotNoise).unwrap();
        let back = read_samples_csv(buf.as_slice(), "mem").unwrap();
        assert_eq!(back[0].units, QuadUnits::VacuumHalf);
        assert!((back[0].x - 1.0 / 2f64.sqrt()).abs() < 1e-15);

        let bad = "theta_rad,x_shotnoise\n0.1,0.2\n0.3,oops\n";
        match read_samples_csv(bad.as_bytes(), "bad.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(read_samples_csv("x,y\n".as_bytes(), "h.csv").is_err());
    }
}
