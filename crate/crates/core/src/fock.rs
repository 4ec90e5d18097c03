//! Truncated Fock-space states.
//!
//! Phase-space convention used throughout the crate: `hbar = 1`,
//! `x = (a + a^dag)/sqrt(2)`, so the vacuum quadrature variance is 1/2.
//! Variances handed to callers are in shot-noise units (vacuum = 1); the
//! conversion factor is [`SHOT_NOISE_VARIANCE_SCALE`] and is applied nowhere
//! else.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ln_factorials;

/// Ratio between shot-noise-unit variances and internal (vacuum variance 1/2) variances.
pub const SHOT_NOISE_VARIANCE_SCALE: f64 = 2.0;

/// Cutoff used when generating synthetic states before truncating to the requested size.
pub const WORKING_CUTOFF: usize = 40;

/// Internal variance -> shot-noise variance.
pub fn to_shot_noise_variance(v: f64) -> f64 {
    v * SHOT_NOISE_VARIANCE_SCALE
}

/// Shot-noise variance -> internal variance.
pub fn from_shot_noise_variance(v: f64) -> f64 {
    v / SHOT_NOISE_VARIANCE_SCALE
}

/// Amplitude scale between the two conventions (`x_sn = x_int * sqrt(2)`).
pub fn shot_noise_amplitude_scale() -> f64 {
    SHOT_NOISE_VARIANCE_SCALE.sqrt()
}

/// Number of Fock levels kept; photon numbers `0..cutoff`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct FockDim(usize);

impl FockDim {
    /// Five-photon truncation (levels 0..=5) used for reconstruction.
    pub const FIVE_PHOTON: FockDim = FockDim(6);

    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::InvalidParameter(format!(
                "Fock cutoff must be >= 2, got {cutoff}"
            )));
        }
        Ok(Self(cutoff))
    }

    pub fn cutoff(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for FockDim {
    type Error = Error;
    fn try_from(v: usize) -> Result<Self> {
        FockDim::new(v)
    }
}

impl From<FockDim> for usize {
    fn from(d: FockDim) -> usize {
        d.0
    }
}

/// Squeezing magnitude and the LO phase of minimum variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    r: f64,
    theta_sq: f64,
}

impl SqueezeParams {
    /// `theta_sq` is wrapped into `[0, 2pi)`.
    pub fn new(r: f64, theta_sq: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "squeezing parameter must be finite and >= 0, got {r}"
            )));
        }
        if !theta_sq.is_finite() {
            return Err(Error::InvalidParameter("squeezing angle must be finite".into()));
        }
        Ok(Self {
            r,
            theta_sq: theta_sq.rem_euclid(2.0 * PI),
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta_sq(&self) -> f64 {
        self.theta_sq
    }
}

/// Density operator on a truncated Fock space.
///
/// `leakage` is the norm lost when the state was truncated, before renormalisation.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim: FockDim,
    elements: DMatrix<Complex64>,
    leakage: f64,
}

impl DensityMatrix {
    /// Wraps a square complex matrix. No validity checks beyond shape; see [`DensityMatrix::validate`].
    pub fn from_matrix(elements: DMatrix<Complex64>) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch(elements.nrows(), elements.ncols()));
        }
        let dim = FockDim::new(elements.nrows())?;
        Ok(Self {
            dim,
            elements,
            leakage: 0.0,
        })
    }

    /// `|psi><psi|` for the given Fock amplitudes (not renormalised).
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let n = amplitudes.len();
        let dim = FockDim::new(n)?;
        let elements = DMatrix::from_fn(n, n, |m, k| amplitudes[m] * amplitudes[k].conj());
        Ok(Self {
            dim,
            elements,
            leakage: 0.0,
        })
    }

    pub fn fock_state(dim: FockDim, n: usize) -> Result<Self> {
        if n >= dim.cutoff() {
            return Err(Error::InvalidParameter(format!(
                "Fock state |{n}> does not fit in cutoff {}",
                dim.cutoff()
            )));
        }
        let mut elements = DMatrix::zeros(dim.cutoff(), dim.cutoff());
        elements[(n, n)] = Complex64::new(1.0, 0.0);
        Ok(Self {
            dim,
            elements,
            leakage: 0.0,
        })
    }

    /// `I / cutoff`.
    pub fn maximally_mixed(dim: FockDim) -> Self {
        let d = dim.cutoff();
        let elements = DMatrix::from_diagonal_element(d, d, Complex64::new(1.0 / d as f64, 0.0));
        Self {
            dim,
            elements,
            leakage: 0.0,
        }
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.dim.cutoff()
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn into_elements(self) -> DMatrix<Complex64> {
        self.elements
    }

    /// Elements in row-major order (`[m * d + n] = rho_mn`).
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let d = self.cutoff();
        let mut out = Vec::with_capacity(d * d);
        for m in 0..d {
            for n in 0..d {
                out.push(self.elements[(m, n)]);
            }
        }
        out
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.elements[(m, n)]
    }

    /// Norm discarded by truncation, recorded before renormalisation.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn trace(&self) -> f64 {
        self.elements.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.elements.diagonal().iter().map(|z| z.re).collect()
    }

    /// Largest `|rho_mn - conj(rho_nm)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.cutoff();
        let mut worst: f64 = 0.0;
        for m in 0..d {
            for n in m..d {
                worst = worst.max((self.elements[(m, n)] - self.elements[(n, m)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = self.hermitian_part();
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    fn hermitian_part(&self) -> DMatrix<Complex64> {
        (&self.elements + self.elements.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// Symmetrises in place: `rho <- (rho + rho^dag)/2`.
    pub fn hermitise(&mut self) {
        self.elements = self.hermitian_part();
    }

    /// Rescales to unit trace.
    pub fn renormalise(&mut self) {
        let t = self.trace();
        if t > 0.0 {
            self.elements /= Complex64::new(t, 0.0);
        }
    }

    /// Checks Hermiticity (1e-12), positivity (min eigenvalue >= -1e-10) and trace within
    /// `[1 - leakage - 1e-12, 1 + 1e-12]`.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_residual();
        if herm > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "density matrix not Hermitian (residual {herm:.3e})"
            )));
        }
        let t = self.trace();
        if t > 1.0 + 1e-12 || t < 1.0 - self.leakage - 1e-12 {
            return Err(Error::InvalidParameter(format!("density matrix trace {t}")));
        }
        let lmin = self.min_eigenvalue();
        if lmin < -1e-10 {
            return Err(Error::InvalidParameter(format!(
                "density matrix not positive semidefinite (min eigenvalue {lmin:.3e})"
            )));
        }
        Ok(())
    }

    /// Keeps levels `0..dim`, renormalises, and records the discarded norm as leakage.
    pub fn truncate(&self, dim: FockDim) -> Result<Self> {
        let d = dim.cutoff();
        if d > self.cutoff() {
            return Err(Error::DimensionMismatch(d, self.cutoff()));
        }
        let block = self.elements.view((0, 0), (d, d)).into_owned();
        let total = self.trace();
        let kept: f64 = block.diagonal().iter().map(|z| z.re).sum();
        let mut out = Self {
            dim,
            elements: block,
            leakage: 0.0,
        };
        out.renormalise();
        out.leakage = if total > 0.0 {
            (1.0 - kept / total).max(0.0)
        } else {
            0.0
        };
        Ok(out)
    }

    /// Zero-pads into a larger space.
    pub fn embed(&self, dim: FockDim) -> Result<Self> {
        let d = dim.cutoff();
        if d < self.cutoff() {
            return Err(Error::DimensionMismatch(d, self.cutoff()));
        }
        let mut elements = DMatrix::zeros(d, d);
        elements
            .view_mut((0, 0), (self.cutoff(), self.cutoff()))
            .copy_from(&self.elements);
        Ok(Self {
            dim,
            elements,
            leakage: self.leakage,
        })
    }

    /// Phase-space rotation `U rho U^dag` with `U = exp(-i phi n)`.
    pub fn rotate(&self, phi: f64) -> Self {
        let d = self.cutoff();
        let elements = DMatrix::from_fn(d, d, |m, n| {
            self.elements[(m, n)] * Complex64::from_polar(1.0, -phi * (m as f64 - n as f64))
        });
        Self {
            dim: self.dim,
            elements,
            leakage: self.leakage,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&DensityMatrixJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: DensityMatrixJson = serde_json::from_str(s)?;
        raw.try_into()
    }
}

/// Serialised form: `{cutoff, re[][], im[][]}`, row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub cutoff: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&DensityMatrix> for DensityMatrixJson {
    fn from(rho: &DensityMatrix) -> Self {
        let d = rho.cutoff();
        let row = |m: usize, f: fn(&Complex64) -> f64| (0..d).map(|n| f(&rho.get(m, n))).collect();
        Self {
            cutoff: d,
            re: (0..d).map(|m| row(m, |z| z.re)).collect(),
            im: (0..d).map(|m| row(m, |z| z.im)).collect(),
        }
    }
}

impl TryFrom<DensityMatrixJson> for DensityMatrix {
    type Error = Error;
    fn try_from(raw: DensityMatrixJson) -> Result<Self> {
        let d = raw.cutoff;
        let shape_ok = raw.re.len() == d
            && raw.im.len() == d
            && raw.re.iter().chain(&raw.im).all(|r| r.len() == d);
        if !shape_ok {
            return Err(Error::InvalidParameter(format!(
                "density matrix JSON rows do not match cutoff {d}"
            )));
        }
        let elements = DMatrix::from_fn(d, d, |m, n| Complex64::new(raw.re[m][n], raw.im[m][n]));
        DensityMatrix::from_matrix(elements)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DensityMatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = DensityMatrixJson::deserialize(d)?;
        raw.try_into().map_err(serde::de::Error::custom)
    }
}

pub fn vacuum_state(dim: FockDim) -> DensityMatrix {
    DensityMatrix::fock_state(dim, 0).expect("cutoff >= 2 always holds level 0")
}

/// Fock amplitudes of the untruncated squeezed vacuum up to (excluding) level `len`.
///
/// Minimum quadrature variance lies along `theta = theta_sq`.
pub fn squeezed_vacuum_amplitudes(sq: SqueezeParams, len: usize) -> Vec<Complex64> {
    let mut amps = vec![Complex64::new(0.0, 0.0); len];
    if len == 0 {
        return amps;
    }
    let t = sq.r().tanh();
    let step = Complex64::from_polar(-t, 2.0 * sq.theta_sq());
    let mut c = Complex64::new(1.0 / sq.r().cosh().sqrt(), 0.0);
    amps[0] = c;
    let mut k = 1;
    while 2 * k < len {
        let kf = k as f64;
        c *= step * ((2.0 * kf - 1.0) / (2.0 * kf)).sqrt();
        amps[2 * k] = c;
        k += 1;
    }
    amps
}

/// Pure squeezed vacuum truncated to `dim` and renormalised.
///
/// Fails with [`Error::ExcessiveTruncation`] if the kept norm is below 0.99.
pub fn squeezed_vacuum(dim: FockDim, sq: SqueezeParams) -> Result<DensityMatrix> {
    let work = dim.cutoff().max(WORKING_CUTOFF);
    let amps = squeezed_vacuum_amplitudes(sq, work);
    let kept: f64 = amps[..dim.cutoff()].iter().map(|c| c.norm_sqr()).sum();
    if kept < 0.99 {
        return Err(Error::ExcessiveTruncation { trace: kept });
    }
    let full = DensityMatrix::from_pure(&amps)?;
    let mut out = full.truncate(dim)?;
    // the norm beyond the working cutoff is part of the leakage too
    out.leakage = (1.0 - kept).max(0.0);
    Ok(out)
}

/// Pure-loss (beamsplitter) channel with transmissivity `eta`, exact Kraus sum.
pub fn apply_loss(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta) || eta.is_nan() {
        return Err(Error::InvalidEta(eta));
    }
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let d = rho.cutoff();
    let lnf = ln_factorials(d + 1);
    let ln_binom = |n: usize, k: usize| lnf[n] - lnf[k] - lnf[n - k];
    let se = eta.sqrt();
    let loss = 1.0 - eta;
    let mut out = DMatrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut k = 0;
            while m + k < d && n + k < d {
                let w = (0.5 * (ln_binom(m + k, k) + ln_binom(n + k, k))).exp()
                    * se.powi((m + n) as i32)
                    * loss.powi(k as i32);
                acc += rho.get(m + k, n + k) * w;
                k += 1;
            }
            out[(m, n)] = acc;
        }
    }
    Ok(DensityMatrix {
        dim: rho.dim,
        elements: out,
        leakage: rho.leakage,
    })
}

/// `(<a>, <a^2>, <a^dag a>)` of the state.
pub fn ladder_moments(rho: &DensityMatrix) -> (Complex64, Complex64, f64) {
    let d = rho.cutoff();
    let mut a1 = Complex64::new(0.0, 0.0);
    let mut a2 = Complex64::new(0.0, 0.0);
    let mut n = 0.0;
    for m in 0..d {
        let mf = m as f64;
        n += mf * rho.get(m, m).re;
        if m >= 1 {
            a1 += rho.get(m, m - 1) * mf.sqrt();
        }
        if m >= 2 {
            a2 += rho.get(m, m - 2) * (mf * (mf - 1.0)).sqrt();
        }
    }
    (a1, a2, n)
}

/// Mean and variance of `x_theta = x cos(theta) + p sin(theta)`, in shot-noise units.
pub fn quadrature_moments(rho: &DensityMatrix, theta: f64) -> (f64, f64) {
    let (a1, a2, n) = ladder_moments(rho);
    let tr = rho.trace();
    let rot1 = Complex64::from_polar(1.0, -theta);
    let mean = std::f64::consts::SQRT_2 * (a1 * rot1).re / tr;
    let second = ((a2 * rot1 * rot1).re + n + 0.5 * tr) / tr;
    let var = second - mean * mean;
    (
        mean * shot_noise_amplitude_scale(),
        to_shot_noise_variance(var),
    )
}
