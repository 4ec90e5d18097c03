use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{levenberg_marquardt, LmOptions};

use super::NoiseTrace;

/// Bins closer to the dark level than this carry only noise and are left out of the fit.
pub const MIN_FIT_CLEARANCE_DB: f64 = 0.5;

/// `1 / (1 + (f/f_c)^(2n))`.
pub fn butterworth_power_response(f: f64, f_c: f64, order: u32) -> f64 {
    1.0 / (1.0 + (f / f_c).powi(2 * order as i32))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderSelection {
    Fixed(u32),
    /// Try orders `1..=max` and keep the lowest AIC.
    Aic { max: u32 },
}

impl Default for OrderSelection {
    fn default() -> Self {
        OrderSelection::Aic { max: 6 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ButterworthFit {
    pub f3db_hz: f64,
    pub f3db_stderr_hz: Option<f64>,
    pub order: u32,
    /// Dark-subtracted low-frequency power, mW per resolution bandwidth.
    pub gain_mw: f64,
    pub residual_norm: f64,
    pub n_points: usize,
    /// `(order, AIC)` for every order tried.
    pub aic: Vec<(u32, f64)>,
}

impl ButterworthFit {
    pub fn response(&self, f: f64) -> f64 {
        self.gain_mw * butterworth_power_response(f, self.f3db_hz, self.order)
    }
}

/// Fits `G / (1 + (f/f_c)^(2n))` to the dark-subtracted linear spectrum.
///
/// Residuals are relative, so every decade of the roll-off carries comparable weight.
/// Bins where the shot trace is less than [`MIN_FIT_CLEARANCE_DB`] above the dark trace are dropped.
pub fn fit_butterworth(
    shot: &NoiseTrace,
    dark: &NoiseTrace,
    selection: OrderSelection,
) -> Result<ButterworthFit> {
    shot.check_same_grid(dark)?;
    let (f, y): (Vec<f64>, Vec<f64>) = shot
        .freq_hz
        .iter()
        .zip(shot.linear_mw().iter().zip(dark.linear_mw()))
        .filter(|(_, (s, d))| **s >= *d * 10f64.powf(MIN_FIT_CLEARANCE_DB / 10.0))
        .map(|(&f, (s, d))| (f, s - d))
        .unzip();
    if f.len() < 4 {
        return Err(Error::InsufficientPoints {
            needed: 4,
            got: f.len(),
        });
    }
    let f_max = *f.last().unwrap();
    let head = f.len().min(3);
    let mut y0: Vec<f64> = y[..head].to_vec();
    y0.sort_by(f64::total_cmp);
    let g0 = y0[head / 2];
    let fc0 = f
        .iter()
        .zip(&y)
        .find(|(_, y)| **y < 0.5 * g0)
        .map(|(f, _)| *f)
        .ok_or_else(|| {
            Error::FitDiverged("spectrum never falls to half its low-frequency level".into())
        })?;

    let orders: Vec<u32> = match selection {
        OrderSelection::Fixed(n) if n >= 1 => vec![n],
        OrderSelection::Fixed(_) => {
            return Err(Error::InvalidParameter("Butterworth order must be >= 1".into()))
        }
        OrderSelection::Aic { max } => (1..=max.max(1)).collect(),
    };

    let n = f.len() as f64;
    let mut best: Option<(f64, ButterworthFit)> = None;
    let mut aic = Vec::new();
    let mut last_err = None;
    for &order in &orders {
        let two_n = 2.0 * order as f64;
        let model = |p: &[f64]| {
            let (g, fc) = (p[0].exp(), p[1].exp());
            let mut r = Vec::with_capacity(f.len());
            let mut j = DMatrix::zeros(f.len(), 2);
            for (i, (&fi, &yi)) in f.iter().zip(&y).enumerate() {
                let u = (fi / fc).powf(two_n);
                let m = g / (1.0 + u);
                r.push((m - yi) / yi);
                j[(i, 0)] = m / yi;
                j[(i, 1)] = m * two_n * u / (1.0 + u) / yi;
            }
            (r, j)
        };
        let out = match levenberg_marquardt(
            model,
            &[g0.ln(), fc0.ln()],
            |_| {},
            LmOptions::default(),
        ) {
            Ok(o) => o,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let rss: f64 = out.residuals.iter().map(|r| r * r).sum();
        let score = n * (rss / n).max(1e-300).ln() + 2.0 * 2.0;
        aic.push((order, score));
        let fc = out.params[1].exp();
        let fit = ButterworthFit {
            f3db_hz: fc,
            f3db_stderr_hz: out.standard_errors().map(|s| s[1] * fc),
            order,
            gain_mw: out.params[0].exp(),
            residual_norm: out.residual_norm(),
            n_points: f.len(),
            aic: Vec::new(),
        };
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, fit));
        }
    }
    let (_, mut fit) = match best {
        Some(b) => b,
        None => return Err(last_err.unwrap_or_else(|| Error::FitDiverged("no order converged".into()))),
    };
    if !(fit.f3db_hz.is_finite()) || fit.f3db_hz > 2.0 * f_max {
        return Err(Error::FitDiverged(format!(
            "fitted corner {:.3e} Hz lies beyond twice the measured span ({:.3e} Hz)",
            fit.f3db_hz, f_max
        )));
    }
    fit.aic = aic;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn traces(order: u32, fc: f64, noise: f64, seed: u64) -> (NoiseTrace, NoiseTrace) {
        let freq: Vec<f64> = (1..=600).map(|k| k as f64 * 8e6).collect();
        let dark_mw = 1e-8;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let nrm = Normal::new(0.0, noise).unwrap();
        let shot: Vec<f64> = freq
            .iter()
            .map(|&f| {
                let s = 2.5e-7 * butterworth_power_response(f, fc, order);
                dark_mw + s * (1.0 + nrm.sample(&mut rng))
            })
            .collect();
        (
            NoiseTrace::from_linear_mw(freq.clone(), &shot, Some(8e6), "shot").unwrap(),
            NoiseTrace::from_linear_mw(freq.clone(), &vec![dark_mw; freq.len()], Some(8e6), "dark")
                .unwrap(),
        )
    }

    #[test]
    fn corner_is_minus_three_db() {
        let r = butterworth_power_response(1.7e9, 1.7e9, 3);
        assert!((10.0 * r.log10() + 3.0103).abs() < 1e-4);
    }

    #[test]
    fn exact_recovery_without_noise() {
        let (s, d) = traces(2, 1.7e9, 0.0, 0);
        let fit = fit_butterworth(&s, &d, OrderSelection::default()).unwrap();
        assert_eq!(fit.order, 2);
        assert!((fit.f3db_hz / 1.7e9 - 1.0).abs() < 1e-6);
        assert!((fit.gain_mw / 2.5e-7 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn one_percent_noise_within_two_percent() {
        let (s, d) = traces(2, 1.7e9, 0.01, 7);
        let fit = fit_butterworth(&s, &d, OrderSelection::default()).unwrap();
        assert!((fit.f3db_hz / 1.7e9 - 1.0).abs() < 0.02, "{}", fit.f3db_hz);
    }

    #[test]
    fn flat_spectrum_is_rejected() {
        let (s, d) = traces(1, 1e15, 0.0, 0);
        assert!(matches!(
            fit_butterworth(&s, &d, OrderSelection::Fixed(1)),
            Err(Error::FitDiverged(_))
        ));
    }
}
