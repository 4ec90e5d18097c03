use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linear_to_db;

const MIN_POINTS: usize = 4;
/// Departures from the linear fit smaller than this are never treated as saturation.
pub const MIN_DEVIATION_DB: f64 = 0.1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearityFit {
    /// Gradient of log10(dark-subtracted variance) against log10(LO power).
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    /// `true` where a point was trimmed as saturated.
    pub saturated: Vec<bool>,
    pub n_used: usize,
    /// Largest total-over-dark ratio among the points kept, in dB.
    pub max_clearance_db: Option<f64>,
}

struct Ols {
    slope: f64,
    intercept: f64,
    slope_stderr: f64,
    sigma: f64,
}

fn ols(x: &[f64], y: &[f64]) -> Ols {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let dof = (x.len().saturating_sub(2)).max(1) as f64;
    let s2 = rss / dof;
    Ols {
        slope,
        intercept,
        slope_stderr: (s2 / sxx).sqrt(),
        sigma: s2.sqrt(),
    }
}

/// Log-log fit of detector noise against LO power with saturated points trimmed
/// from the high-power end.
///
/// Points are sorted by power. Starting from the four lowest, the fit grows one point at a
/// time; the first point whose residual from the fit so far exceeds both 3 sigma and
/// [`MIN_DEVIATION_DB`], and every point above it, is marked saturated.
pub fn linearity_fit(lo_powers_mw: &[f64], variances: &[f64], dark: f64) -> Result<LinearityFit> {
    if lo_powers_mw.len() != variances.len() {
        return Err(Error::DimensionMismatch(lo_powers_mw.len(), variances.len()));
    }
    let mut order: Vec<usize> = (0..lo_powers_mw.len()).collect();
    order.sort_by(|&a, &b| lo_powers_mw[a].total_cmp(&lo_powers_mw[b]));
    let usable: Vec<usize> = order
        .into_iter()
        .filter(|&i| lo_powers_mw[i] > 0.0 && variances[i] - dark > 0.0)
        .collect();
    if usable.len() < MIN_POINTS {
        return Err(Error::InsufficientPoints {
            needed: MIN_POINTS,
            got: usable.len(),
        });
    }
    let lx: Vec<f64> = usable.iter().map(|&i| lo_powers_mw[i].log10()).collect();
    let ly: Vec<f64> = usable.iter().map(|&i| (variances[i] - dark).log10()).collect();

    let mut keep = MIN_POINTS;
    while keep < usable.len() {
        let fit = ols(&lx[..keep], &ly[..keep]);
        let resid = ly[keep] - fit.intercept - fit.slope * lx[keep];
        if resid.abs() > (3.0 * fit.sigma).max(MIN_DEVIATION_DB / 10.0) {
            break;
        }
        keep += 1;
    }
    let fit = ols(&lx[..keep], &ly[..keep]);
    let mut saturated = vec![false; lo_powers_mw.len()];
    for &i in &usable[keep..] {
        saturated[i] = true;
    }
    let max_clearance_db = (dark > 0.0).then(|| {
        let vmax = usable[..keep]
            .iter()
            .map(|&i| variances[i])
            .fold(f64::NEG_INFINITY, f64::max);
        linear_to_db(vmax / dark)
    });
    Ok(LinearityFit {
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        intercept: fit.intercept,
        saturated,
        n_used: keep,
        max_clearance_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn powers() -> Vec<f64> {
        (1..=20).map(|k| 0.3 * k as f64).collect()
    }

    #[test]
    fn proportional_data_has_unit_slope() {
        let p = powers();
        let v: Vec<f64> = p.iter().map(|p| 2.0 * p).collect();
        let fit = linearity_fit(&p, &v, 0.0).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-6);
        assert!(fit.saturated.iter().all(|s| !s));
        assert!(fit.max_clearance_db.is_none());
    }

    #[test]
    fn trims_exactly_the_compressed_tail() {
        let p = powers();
        let p_sat = 20.0;
        let v: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(i, &p)| if i >= 15 { p / (1.0 + p / p_sat) } else { p })
            .collect();
        let fit = linearity_fit(&p, &v, 0.0).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.01);
        let masked: Vec<usize> = (0..20).filter(|&i| fit.saturated[i]).collect();
        assert_eq!(masked, vec![15, 16, 17, 18, 19]);
    }

    #[test]
    fn mild_soft_knee_is_not_saturation() {
        let p = powers();
        let v: Vec<f64> = p.iter().map(|&p| p / (1.0 + p / 1000.0)).collect();
        let fit = linearity_fit(&p, &v, 0.0).unwrap();
        assert!(fit.saturated.iter().all(|s| !s));
        assert!((fit.slope - 1.0).abs() < 0.01);
    }

    #[test]
    fn dark_offset_cancels() {
        let p = powers();
        let v: Vec<f64> = p.iter().map(|p| 3.0 * p.powf(1.004)).collect();
        let a = linearity_fit(&p, &v, 0.0).unwrap();
        let shifted: Vec<f64> = v.iter().map(|v| v + 0.7).collect();
        let b = linearity_fit(&p, &shifted, 0.7).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            linearity_fit(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 0.0),
            Err(Error::InsufficientPoints { .. })
        ));
    }
}
