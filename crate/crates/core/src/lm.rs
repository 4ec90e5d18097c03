//! Levenberg-Marquardt for the small weighted least-squares problems in the
//! detector and squeezing fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LmOptions {
    pub max_iters: usize,
    /// Consecutive iterations without a decrease in the residual norm before giving up.
    pub stall_limit: usize,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            stall_limit: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `J^T J` at the solution.
    pub normal: DMatrix<f64>,
    pub iterations: usize,
}

impl LmOutcome {
    pub fn residual_norm(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    /// Parameter covariance `s^2 (J^T J)^-1` with `s^2 = RSS / (N - p)`.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        let n = self.residuals.len();
        let p = self.params.len();
        if n <= p {
            return None;
        }
        let rss: f64 = self.residuals.iter().map(|r| r * r).sum();
        let s2 = rss / (n - p) as f64;
        self.normal.clone().try_inverse().map(|inv| inv * s2)
    }

    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        self.covariance()
            .map(|c| (0..self.params.len()).map(|i| c[(i, i)].max(0.0).sqrt()).collect())
    }
}

/// Condition number of `J^T J` after scaling every column of `J` to unit norm.
pub fn scaled_condition_number(normal: &DMatrix<f64>) -> f64 {
    let p = normal.nrows();
    let scale: Vec<f64> = (0..p).map(|i| normal[(i, i)].max(0.0).sqrt()).collect();
    if scale.contains(&0.0) {
        return f64::INFINITY;
    }
    let scaled = DMatrix::from_fn(p, p, |i, j| normal[(i, j)] / (scale[i] * scale[j]));
    let ev = scaled.symmetric_eigenvalues();
    let max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Minimises `sum r_i(x)^2`. `model` returns residuals and the Jacobian `dr/dx`;
/// `project` maps a trial point back into the feasible set.
pub fn levenberg_marquardt<M, P>(
    mut model: M,
    x0: &[f64],
    project: P,
    opts: LmOptions,
) -> Result<LmOutcome>
where
    M: FnMut(&[f64]) -> (Vec<f64>, DMatrix<f64>),
    P: Fn(&mut [f64]),
{
    let p = x0.len();
    let mut x = x0.to_vec();
    project(&mut x);
    let (mut r, mut jac) = model(&x);
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return Err(Error::FitDiverged("non-finite residuals at the starting point".into()));
    }
    let mut lambda = 1e-3;
    let mut stall = 0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        iterations += 1;
        let jt = jac.transpose();
        let normal = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);
        let mut damped = normal.clone();
        for i in 0..p {
            damped[(i, i)] += lambda * normal[(i, i)].max(1e-300);
        }
        let step = match damped.cholesky() {
            Some(ch) => ch.solve(&(-grad)),
            None => {
                lambda *= 10.0;
                stall += 1;
                if stall >= opts.stall_limit {
                    break;
                }
                continue;
            }
        };
        let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        project(&mut trial);
        let step_norm: f64 = trial
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let x_norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (r_new, j_new) = model(&trial);
        let cost_new = sum_sq(&r_new);
        if cost_new.is_finite() && cost_new < cost {
            let rel = (cost - cost_new) / cost.max(1e-300);
            x = trial;
            r = r_new;
            jac = j_new;
            cost = cost_new;
            lambda = (lambda / 10.0).max(1e-12);
            stall = 0;
            if rel < 1e-15 || step_norm <= 1e-13 * (x_norm + 1e-13) || cost == 0.0 {
                converged = true;
                break;
            }
        } else {
            stall += 1;
            lambda = (lambda * 10.0).min(1e16);
            if step_norm <= 1e-13 * (x_norm + 1e-13) {
                converged = true;
                break;
            }
            if stall >= opts.stall_limit {
                break;
            }
        }
    }
    if !converged && stall >= opts.stall_limit {
        return Err(Error::FitDiverged(format!(
            "residual norm did not decrease over {} iterations",
            opts.stall_limit
        )));
    }
    let normal = jac.transpose() * &jac;
    Ok(LmOutcome {
        params: x,
        residuals: r,
        normal,
        iterations,
    })
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}
