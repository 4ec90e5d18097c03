//! Squeezing and anti-squeezing versus pump power, its inversion, and squeezing
//! estimates from spectrum-analyser traces.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::detector::{simulate_output_spectrum, DetectorSpec, LossBudget, NoiseTrace};
use crate::error::{Error, Result};
use crate::lm::{levenberg_marquardt, scaled_condition_number, LmOptions};
use crate::numerics::linear_to_db;

/// Above this scaled condition number of `J^T J` the two parameters are not separately identifiable.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Pumped squeezer: `r = mu * sqrt(P_SHG)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezerSpec {
    /// mW^-1/2
    pub mu: f64,
    pub p_shg_mw: f64,
    pub source_losses: LossBudget,
}

impl SqueezerSpec {
    pub fn new(mu: f64, p_shg_mw: f64, source_losses: LossBudget) -> Result<Self> {
        let s = Self {
            mu,
            p_shg_mw,
            source_losses,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !(self.p_shg_mw >= 0.0 && self.p_shg_mw.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pump power must be >= 0, got {}",
                self.p_shg_mw
            )));
        }
        Ok(())
    }

    pub fn squeeze_parameter(&self) -> f64 {
        self.mu * self.p_shg_mw.sqrt()
    }
}

/// Extremal quadrature variances (shot-noise units) at one pump power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariancePair {
    pub v_max: f64,
    pub v_min: f64,
    pub p_shg_mw: f64,
}

impl VariancePair {
    pub fn anti_squeezing_db(&self) -> f64 {
        linear_to_db(self.v_max)
    }

    pub fn squeezing_db(&self) -> f64 {
        linear_to_db(self.v_min)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::InvalidEta(eta))
    }
}

/// `V_max/min = eta exp(+-2r) + 1 - eta` with `r = mu sqrt(p)`.
pub fn variance_law(eta_total: f64, mu: f64, p_shg_mw: f64) -> Result<VariancePair> {
    check_eta(eta_total)?;
    if !(mu >= 0.0) || !(p_shg_mw >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mu and pump power must be >= 0, got {mu} and {p_shg_mw}"
        )));
    }
    let r = mu * p_shg_mw.sqrt();
    Ok(VariancePair {
        v_max: 1.0 + eta_total * (2.0 * r).exp_m1(),
        v_min: 1.0 + eta_total * (-2.0 * r).exp_m1(),
        p_shg_mw,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Residuals `(model - V) / V`: constant relative error.
    #[default]
    Relative,
    /// Plain linear residuals.
    Uniform,
    /// Residuals in dB, for comparison with fits done on log plots.
    Decibel,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branches {
    #[default]
    Joint,
    AntiSqueezingOnly,
    SqueezingOnly,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub weighting: Weighting,
    pub branches: Branches,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub eta_hat: f64,
    pub eta_stderr: f64,
    pub mu_hat: f64,
    /// mW^-1/2
    pub mu_stderr: f64,
    pub n_points: usize,
    pub residual_norm: f64,
    pub weighting: Weighting,
    pub branches: Branches,
    pub condition_number: f64,
}

impl FitReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Closed-form `(eta, r)` from one pair: `(V_max - 1)/(1 - V_min) = exp(2r)`.
fn invert_pair(p: &VariancePair) -> Option<(f64, f64)> {
    let a = p.v_max - 1.0;
    let b = 1.0 - p.v_min;
    if a <= 0.0 || b <= 0.0 {
        return None;
    }
    let r = 0.5 * (a / b).ln();
    if r <= 0.0 {
        return None;
    }
    let eta = b / (1.0 - (-2.0 * r).exp());
    Some((eta.clamp(1e-3, 1.0), r))
}

/// Weighted least-squares estimate of `(eta_total, mu)` from variance pairs.
pub fn fit_variance_law(pairs: &[VariancePair], opts: FitOptions) -> Result<FitReport> {
    for p in pairs {
        if !(p.v_max > 0.0 && p.v_min > 0.0 && p.p_shg_mw >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variances must be > 0 and pump powers >= 0, got {p:?}"
            )));
        }
    }
    let mut powers: Vec<f64> = pairs.iter().map(|p| p.p_shg_mw).collect();
    powers.sort_by(f64::total_cmp);
    powers.dedup();
    if powers.len() <= 1 {
        return Err(Error::Underdetermined(
            "all pump powers are equal; eta and mu need data at three or more distinct powers"
                .into(),
        ));
    }
    if powers.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: powers.len(),
        });
    }

    // (pump power, sign of the exponent, measured variance)
    let mut points: Vec<(f64, f64, f64)> = Vec::new();
    for p in pairs {
        if opts.branches != Branches::SqueezingOnly {
            points.push((p.p_shg_mw, 1.0, p.v_max));
        }
        if opts.branches != Branches::AntiSqueezingOnly {
            points.push((p.p_shg_mw, -1.0, p.v_min));
        }
    }

    let x0 = pairs
        .iter()
        .filter(|p| p.p_shg_mw > 0.0)
        .max_by(|a, b| a.p_shg_mw.total_cmp(&b.p_shg_mw))
        .and_then(|p| invert_pair(p).map(|(eta, r)| [eta, r / p.p_shg_mw.sqrt()]))
        .unwrap_or([0.5, 0.05]);

    let weighting = opts.weighting;
    let model = |x: &[f64]| {
        let (eta, mu) = (x[0], x[1]);
        let mut r = Vec::with_capacity(points.len());
        let mut j = DMatrix::zeros(points.len(), 2);
        for (i, &(p, s, v)) in points.iter().enumerate() {
            let sp = p.sqrt();
            let e = (s * 2.0 * mu * sp).exp();
            let m = eta * e + 1.0 - eta;
            let dm = [e - 1.0, s * 2.0 * sp * eta * e];
            let (res, scale) = match weighting {
                Weighting::Relative => ((m - v) / v, 1.0 / v),
                Weighting::Uniform => (m - v, 1.0),
                Weighting::Decibel => (
                    10.0 * (m / v).log10(),
                    10.0 / (m * std::f64::consts::LN_10),
                ),
            };
            r.push(res);
            j[(i, 0)] = dm[0] * scale;
            j[(i, 1)] = dm[1] * scale;
        }
        (r, j)
    };
    let project = |x: &mut [f64]| {
        x[0] = x[0].clamp(0.0, 1.0);
        x[1] = x[1].max(0.0);
    };
    let out = levenberg_marquardt(model, &x0, project, LmOptions::default())?;
    let cond = scaled_condition_number(&out.normal);
    if !(cond <= CONDITION_LIMIT) {
        return Err(Error::Underdetermined(format!(
            "eta and mu are not jointly identifiable from these points (condition number {cond:.3e}); \
             add anti-squeezing data or higher pump powers"
        )));
    }
    let se = out.standard_errors().unwrap_or_else(|| vec![f64::NAN; 2]);
    Ok(FitReport {
        eta_hat: out.params[0],
        eta_stderr: se[0],
        mu_hat: out.params[1],
        mu_stderr: se[1],
        n_points: points.len(),
        residual_norm: out.residual_norm(),
        weighting,
        branches: opts.branches,
        condition_number: cond,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossCorrected {
    pub source_variance: f64,
    /// `-10 log10(V_src)`: positive for squeezing.
    pub squeezing_db: f64,
}

/// Infers the source variance behind `measured_variance` seen through efficiency `eta`.
pub fn loss_correct(measured_variance: f64, eta: f64) -> Result<LossCorrected> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidEta(eta));
    }
    if !(measured_variance > 1.0 - eta) {
        return Err(Error::Unphysical(format!(
            "measured variance {measured_variance} is at or below the loss floor 1 - eta = {}",
            1.0 - eta
        )));
    }
    let v = (measured_variance - (1.0 - eta)) / eta;
    Ok(LossCorrected {
        source_variance: v,
        squeezing_db: -linear_to_db(v),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskReason {
    SqueezedAtOrBelowDark,
    ShotAtOrBelowDark,
    Excluded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingPoint {
    pub freq_hz: f64,
    pub squeezing_db: Option<f64>,
    pub mask: Option<MaskReason>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingSpectrum {
    pub points: Vec<SqueezingPoint>,
}

impl SqueezingSpectrum {
    /// Mean of the unmasked dB values with `f_lo <= f <= f_hi`.
    pub fn mean_db(&self, f_lo: f64, f_hi: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.freq_hz >= f_lo && p.freq_hz <= f_hi)
            .filter_map(|p| p.squeezing_db)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn masked_count(&self) -> usize {
        self.points.iter().filter(|p| p.mask.is_some()).count()
    }

    /// CSV `freq_hz,squeezing_db,masked`; masked rows leave `squeezing_db` empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "freq_hz,squeezing_db,masked")?;
        for p in &self.points {
            match p.squeezing_db {
                Some(s) => writeln!(w, "{:.6e},{s:.6},0", p.freq_hz)?,
                None => writeln!(w, "{:.6e},,1", p.freq_hz)?,
            }
        }
        Ok(())
    }
}

/// `S(f) = 10 log10((P_sq - P_dark) / (P_shot - P_dark))` in linear power.
///
/// Bins inside any `exclusions` interval (Hz, inclusive), or where either difference is
/// not positive, are masked and left without a value.
pub fn squeezing_vs_frequency(
    sq: &NoiseTrace,
    shot: &NoiseTrace,
    dark: &NoiseTrace,
    exclusions: &[(f64, f64)],
) -> Result<SqueezingSpectrum> {
    sq.check_same_grid(shot)?;
    sq.check_same_grid(dark)?;
    let (s, n, d) = (sq.linear_mw(), shot.linear_mw(), dark.linear_mw());
    let points = sq
        .freq_hz
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let mask = if exclusions.iter().any(|&(a, b)| f >= a && f <= b) {
                Some(MaskReason::Excluded)
            } else if s[i] - d[i] <= 0.0 {
                Some(MaskReason::SqueezedAtOrBelowDark)
            } else if n[i] - d[i] <= 0.0 {
                Some(MaskReason::ShotAtOrBelowDark)
            } else {
                None
            };
            if let Some(m) = mask {
                log::debug!("masking {f:.4e} Hz: {m:?}");
            }
            SqueezingPoint {
                freq_hz: f,
                squeezing_db: mask
                    .is_none()
                    .then(|| linear_to_db((s[i] - d[i]) / (n[i] - d[i]))),
                mask,
            }
        })
        .collect::<Vec<_>>();
    let masked = points.iter().filter(|p| p.mask.is_some()).count();
    if masked > 0 {
        log::info!("masked {masked} of {} frequency bins", points.len());
    }
    Ok(SqueezingSpectrum { points })
}

/// Dark, shot-noise and squeezed-quadrature traces for a source variance `source_variance`
/// detected with frequency-dependent optical efficiency `eta_at(f)`.
pub fn simulate_squeezing_traces(
    detector: &DetectorSpec,
    lo_power_mw: f64,
    source_variance: f64,
    eta_at: impl Fn(f64) -> f64,
) -> Result<[NoiseTrace; 3]> {
    let dark = simulate_output_spectrum(detector, 0.0, |_| 1.0, "dark")?;
    let shot = simulate_output_spectrum(detector, lo_power_mw, |_| 1.0, "shot")?;
    let sq = simulate_output_spectrum(
        detector,
        lo_power_mw,
        |f| {
            let eta = eta_at(f);
            eta * source_variance + 1.0 - eta
        },
        "squeezed",
    )?;
    Ok([dark, shot, sq])
}

/// CSV `p_shg_mw,v_max_snu,v_min_snu` (shot-noise units).
pub fn write_pairs_csv<W: Write>(mut w: W, pairs: &[VariancePair]) -> Result<()> {
    writeln!(w, "p_shg_mw,v_max_snu,v_min_snu")?;
    for p in pairs {
        writeln!(w, "{:.6},{:.9},{:.9}", p.p_shg_mw, p.v_max, p.v_min)?;
    }
    Ok(())
}

pub fn read_pairs_csv<R: BufRead>(r: R, path: &str) -> Result<Vec<VariancePair>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut out = Vec::new();
    let mut header = false;
    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if !header {
            if t != "p_shg_mw,v_max_snu,v_min_snu" {
                return Err(err(lineno, format!("expected header 'p_shg_mw,v_max_snu,v_min_snu', got '{t}'")));
            }
            header = true;
            continue;
        }
        let f: Vec<&str> = t.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(err(lineno, format!("expected 3 fields, got {}", f.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| err(lineno, format!("bad number '{s}': {e}")))
        };
        out.push(VariancePair {
            p_shg_mw: num(f[0])?,
            v_max: num(f[1])?,
            v_min: num(f[2])?,
        });
    }
    if !header {
        return Err(err(1, "empty file, expected header".into()));
    }
    Ok(out)
}

/// Robust extrema of a variance-vs-phase scan: the `lower` and `upper` percentiles (0..100).
pub fn scan_extrema(variances: &[f64], lower: f64, upper: f64) -> Result<(f64, f64)> {
    if variances.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    if !(0.0..=100.0).contains(&lower) || !(lower..=100.0).contains(&upper) {
        return Err(Error::InvalidParameter(format!(
            "percentiles must satisfy 0 <= lower <= upper <= 100, got {lower} and {upper}"
        )));
    }
    let mut v = variances.to_vec();
    v.sort_by(f64::total_cmp);
    let pct = |q: f64| {
        let pos = q / 100.0 * (v.len() - 1) as f64;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if i + 1 < v.len() {
            v[i] * (1.0 - frac) + v[i + 1] * frac
        } else {
            v[i]
        }
    };
    Ok((pct(lower), pct(upper)))
}

/// One point of a zero-span variance-versus-LO-phase trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceScanPoint {
    pub p_shg_mw: f64,
    pub theta_rad: f64,
    /// Shot-noise units.
    pub variance: f64,
}

/// Noise-free trace `V(theta) = V_min cos^2 theta + V_max sin^2 theta` over one full LO period.
pub fn variance_scan(pair: &VariancePair, n_points: usize) -> Vec<VarianceScanPoint> {
    (0..n_points)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n_points as f64;
            let (s, c) = theta.sin_cos();
            VarianceScanPoint {
                p_shg_mw: pair.p_shg_mw,
                theta_rad: theta,
                variance: pair.v_min * c * c + pair.v_max * s * s,
            }
        })
        .collect()
}

/// One variance pair per distinct pump power, from the `lower`/`upper` percentiles of
/// that power's trace. Pairs are returned in increasing pump power.
pub fn pairs_from_scans(points: &[VarianceScanPoint], lower: f64, upper: f64) -> Result<Vec<VariancePair>> {
    let mut powers: Vec<f64> = points.iter().map(|p| p.p_shg_mw).collect();
    powers.sort_by(f64::total_cmp);
    powers.dedup();
    powers
        .into_iter()
        .map(|p| {
            let v: Vec<f64> = points
                .iter()
                .filter(|q| q.p_shg_mw == p)
                .map(|q| q.variance)
                .collect();
            let (v_min, v_max) = scan_extrema(&v, lower, upper)?;
            Ok(VariancePair {
                v_max,
                v_min,
                p_shg_mw: p,
            })
        })
        .collect()
}

/// CSV `p_shg_mw,theta_rad,variance_snu`.
pub fn write_variance_scans_csv<W: Write>(mut w: W, points: &[VarianceScanPoint]) -> Result<()> {
    writeln!(w, "p_shg_mw,theta_rad,variance_snu")?;
    for p in points {
        writeln!(w, "{:.6},{:.9},{:.9}", p.p_shg_mw, p.theta_rad, p.variance)?;
    }
    Ok(())
}

pub fn read_variance_scans_csv<R: BufRead>(r: R, path: &str) -> Result<Vec<VarianceScanPoint>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut out = Vec::new();
    let mut header = false;
    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if !header {
            if t != "p_shg_mw,theta_rad,variance_snu" {
                return Err(err(lineno, format!("expected header 'p_shg_mw,theta_rad,variance_snu', got '{t}'")));
            }
            header = true;
            continue;
        }
        let f: Vec<&str> = t.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(err(lineno, format!("expected 3 fields, got {}", f.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| err(lineno, format!("bad number '{s}': {e}")))
        };
        out.push(VarianceScanPoint {
            p_shg_mw: num(f[0])?,
            theta_rad: num(f[1])?,
            variance: num(f[2])?,
        });
    }
    if !header {
        return Err(err(1, "empty file, expected header".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {

    #[test]
    fn percentile_pairs_from_dense_scans() {
        let truth = variance_law(0.28, 0.044, 72.7).unwrap();
        let mut pts = variance_scan(&truth, 2000);
        pts.extend(variance_scan(&variance_law(0.28, 0.044, 10.0).unwrap(), 2000));
        let pairs = pairs_from_scans(&pts, 2.0, 98.0).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].p_shg_mw, 10.0);
        let hi = pairs[1];
        // the 2% tail of a sin^2 sweep lies within ~1e-3 of the extremum
        let span = truth.v_max - truth.v_min;
        assert!((truth.v_max - hi.v_max) / span < 2e-3 && hi.v_max <= truth.v_max);
        assert!((hi.v_min - truth.v_min) / span < 2e-3 && hi.v_min >= truth.v_min);
        let raw = pairs_from_scans(&pts, 0.0, 100.0).unwrap()[1];
        assert!((raw.v_max - truth.v_max).abs() < 1e-12);

        let mut buf = Vec::new();
        write_variance_scans_csv(&mut buf, &pts[..3]).unwrap();
        let back = read_variance_scans_csv(buf.as_slice(), "s").unwrap();
        assert_eq!(back.len(), 3);
        assert!((back[1].variance - pts[1].variance).abs() < 1e-9);
        assert!(matches!(
            read_variance_scans_csv("p_shg_mw,theta_rad,variance_snu\n1,2\n".as_bytes(), "s"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
    use super::*;

    #[test]
    fn forward_limits_and_reference() {
        let p = variance_law(1.0, 0.3, 4.0).unwrap();
        assert!((p.v_max - 1.2f64.exp()).abs() < 1e-14);
        assert!((p.v_min - (-1.2f64).exp()).abs() < 1e-14);
        let z = variance_law(0.4, 0.3, 0.0).unwrap();
        assert_eq!((z.v_max, z.v_min), (1.0, 1.0));
        // eta = 0.28, r = 0.044 * sqrt(72.7) = 0.3752
        let p = variance_law(0.28, 0.044, 72.7).unwrap();
        let r = 0.044 * 72.7f64.sqrt();
        assert!((p.v_min - (0.28 * (-2.0 * r).exp() + 0.72)).abs() < 1e-14);
        assert!((p.v_min - 0.852).abs() < 1e-3);
        assert!((p.v_max - 1.312_953).abs() < 1e-6);
        assert!((p.squeezing_db() + 0.695).abs() < 2e-3);
        assert!((p.anti_squeezing_db() - 1.182_49).abs() < 1e-4);
        assert!(variance_law(1.1, 0.1, 1.0).is_err());
    }

    #[test]
    fn loss_correction() {
        let c = loss_correct(0.852, 0.28).unwrap();
        assert!((c.source_variance - 0.4714).abs() < 1e-3);
        assert!((c.squeezing_db - 3.26).abs() < 0.01);
        assert!((loss_correct(0.6, 1.0).unwrap().source_variance - 0.6).abs() < 1e-15);
        assert!(matches!(loss_correct(0.70, 0.28), Err(Error::Unphysical(_))));
        assert!(loss_correct(0.9, 0.0).is_err());
    }

    fn reference_pairs() -> Vec<VariancePair> {
        [5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 72.7]
            .iter()
            .map(|&p| variance_law(0.28, 0.044, p).unwrap())
            .collect()
    }

    #[test]
    fn exact_recovery() {
        for weighting in [Weighting::Relative, Weighting::Uniform, Weighting::Decibel] {
            let rep = fit_variance_law(
                &reference_pairs(),
                FitOptions {
                    weighting,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!((rep.eta_hat - 0.28).abs() < 1e-8, "{weighting:?} {}", rep.eta_hat);
            assert!((rep.mu_hat - 0.044).abs() < 1e-8);
            assert_eq!(rep.n_points, 16);
        }
    }

    #[test]
    fn degenerate_power_sets() {
        let same: Vec<_> = (0..5).map(|_| variance_law(0.28, 0.044, 30.0).unwrap()).collect();
        assert!(matches!(
            fit_variance_law(&same, FitOptions::default()),
            Err(Error::Underdetermined(_))
        ));
        let tiny: Vec<_> = [1e-12, 2e-12, 3e-12, 4e-12]
            .iter()
            .map(|&p| variance_law(0.28, 0.044, p).unwrap())
            .collect();
        let opts = FitOptions {
            branches: Branches::SqueezingOnly,
            ..Default::default()
        };
        assert!(matches!(fit_variance_law(&tiny, opts), Err(Error::Underdetermined(_))));
    }

    #[test]
    fn report_json_fields() {
        let rep = fit_variance_law(&reference_pairs(), FitOptions::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        for k in ["eta_hat", "eta_stderr", "mu_hat", "mu_stderr", "n_points", "residual_norm", "weighting"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["weighting"], "relative");
    }

    #[test]
    fn spectrum_identities() {
        let spec = DetectorSpec::reference_device();
        let [dark, shot, _] = simulate_squeezing_traces(&spec, 4.36, 1.0, |_| 1.0).unwrap();
        let s = squeezing_vs_frequency(&shot, &shot, &dark, &[]).unwrap();
        assert!(s.points.iter().all(|p| p.squeezing_db.is_none_or(|v| v.abs() < 1e-9)));
        // clearance reaches 0 dB at the top of the band
        assert!(s.points.last().unwrap().mask == Some(MaskReason::SqueezedAtOrBelowDark));
        let gap = squeezing_vs_frequency(&shot, &shot, &dark, &[(4.28e9, 4.30e9)]).unwrap();
        let p = gap.points.iter().find(|p| (p.freq_hz - 4.288e9).abs() < 1.0).unwrap();
        assert_eq!(p.mask, Some(MaskReason::Excluded));
        assert!(p.squeezing_db.is_none());
        let mut buf = Vec::new();
        gap.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("4.288000e9,,1"));
    }

    #[test]
    fn swap_antisymmetry() {
        let spec = DetectorSpec::reference_device();
        let [dark, shot, sq] = simulate_squeezing_traces(&spec, 4.36, 0.6, |_| 0.3).unwrap();
        let a = squeezing_vs_frequency(&sq, &shot, &dark, &[]).unwrap();
        let b = squeezing_vs_frequency(&shot, &sq, &dark, &[]).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            if let (Some(x), Some(y)) = (x.squeezing_db, y.squeezing_db) {
                assert!((x + y).abs() < 1e-9);
            }
        }
        let want = linear_to_db(0.3 * 0.6 + 0.7);
        assert!((a.points[0].squeezing_db.unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn pairs_csv_round_trip() {
        let pairs = reference_pairs();
        let mut buf = Vec::new();
        write_pairs_csv(&mut buf, &pairs).unwrap();
        let back = read_pairs_csv(buf.as_slice(), "p").unwrap();
        assert_eq!(back.len(), 8);
        assert!((back[3].v_min - pairs[3].v_min).abs() < 1e-9);
        let bad = "p_shg_mw,v_max_snu,v_min_snu\n1,2,x\n";
        assert!(matches!(read_pairs_csv(bad.as_bytes(), "p"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn percentile_extrema() {
        let v: Vec<f64> = (0..=100).map(|k| k as f64).collect();
        assert_eq!(scan_extrema(&v, 2.0, 98.0).unwrap(), (2.0, 98.0));
        let mut w = v.clone();
        w[50] = 1e6;
        let (_, hi) = scan_extrema(&w, 2.0, 98.0).unwrap();
        assert!(hi < 100.0);
    }
}
