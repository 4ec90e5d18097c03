//! Wigner functions on a phase-space grid.

use std::f64::consts::{E, PI};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::{from_shot_noise_variance, quadrature_moments, DensityMatrix};
use crate::numerics::{laguerre, linspace, ln_factorials};

/// Square grid `[-half_width, half_width]^2` with `points` samples per axis (internal units).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

impl GridSpec {
    /// Grid reaching `n_sigma` standard deviations of the widest quadrature of `rho`,
    /// with spacing no coarser than `step`.
    pub fn covering(rho: &DensityMatrix, n_sigma: f64, step: f64) -> Self {
        let widest = (0..36)
            .map(|k| quadrature_moments(rho, PI * k as f64 / 36.0).1)
            .fold(1.0f64, f64::max);
        let sigma = from_shot_noise_variance(widest).sqrt();
        let half_width = (n_sigma * sigma).max(1.0);
        let points = (2.0 * half_width / step).ceil() as usize + 1;
        Self { half_width, points }
    }
}

/// Wigner kernel evaluator for a fixed state.
#[derive(Clone, Debug)]
pub struct WignerFunction {
    rho: DensityMatrix,
    sqrt_fact_ratio: Vec<f64>,
}

impl WignerFunction {
    pub fn new(rho: &DensityMatrix) -> Self {
        let d = rho.cutoff();
        let lnf = ln_factorials(d + 1);
        let mut sqrt_fact_ratio = vec![0.0; d * d];
        for m in 0..d {
            for n in m..d {
                sqrt_fact_ratio[m * d + n] = (0.5 * (lnf[m] - lnf[n])).exp();
            }
        }
        Self {
            rho: rho.clone(),
            sqrt_fact_ratio,
        }
    }

    /// `W(x, p)` with vacuum `exp(-x^2 - p^2)/pi`.
    pub fn eval(&self, x: f64, p: f64) -> f64 {
        let d = self.rho.cutoff();
        let r2 = x * x + p * p;
        let arg = 2.0 * r2;
        let two_a = Complex64::new(x, p) * std::f64::consts::SQRT_2;
        let mut acc = 0.0;
        for m in 0..d {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * self.rho.get(m, m).re * laguerre(m, 0.0, arg);
            let mut pow = Complex64::new(1.0, 0.0);
            for n in (m + 1)..d {
                pow *= two_a;
                let rho_mn = self.rho.get(m, n);
                if rho_mn.norm_sqr() == 0.0 {
                    continue;
                }
                let lag = laguerre(m, (n - m) as f64, arg);
                acc += 2.0 * sign * (rho_mn * pow).re * self.sqrt_fact_ratio[m * d + n] * lag;
            }
        }
        acc * (-r2).exp() / PI
    }

    /// Radius from `(cx, cp)` along direction `phi` where `W` first falls to `level`.
    fn crossing_radius(&self, cx: f64, cp: f64, phi: f64, level: f64, r_max: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        let at = |r: f64| self.eval(cx + r * c, cp + r * s);
        let step = 0.02;
        let mut lo = 0.0;
        let mut hi = step;
        while hi < r_max && at(hi) > level {
            lo = hi;
            hi += step;
        }
        if hi >= r_max {
            return r_max;
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if at(mid) > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Semi-axes of the curve where `W` drops to `1/e` of its peak.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSummary {
    pub center_x: f64,
    pub center_p: f64,
    pub peak: f64,
    /// `peak / e`.
    pub level: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Direction of the major axis, radians in `[0, pi)`.
    pub major_angle: f64,
}

impl ContourSummary {
    pub fn axis_ratio(&self) -> f64 {
        self.semi_major / self.semi_minor
    }

    /// `1 - minor/major`; zero for a circle.
    pub fn eccentricity(&self) -> f64 {
        1.0 - self.semi_minor / self.semi_major
    }
}

/// Tabulated Wigner function plus its 1/e contour.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[i * p_axis.len() + j] = W(x_axis[i], p_axis[j])`.
    pub values: Vec<f64>,
    pub contour: ContourSummary,
}

impl WignerGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p_axis.len() + j]
    }

    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        let nx = self.x_axis.len();
        let np = self.p_axis.len();
        if nx < 2 || np < 2 {
            return 0.0;
        }
        let hx = self.x_axis[1] - self.x_axis[0];
        let hp = self.p_axis[1] - self.p_axis[0];
        let mut acc = 0.0;
        for i in 0..nx {
            let wi = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
            for j in 0..np {
                let wj = if j == 0 || j == np - 1 { 0.5 } else { 1.0 };
                acc += wi * wj * self.at(i, j);
            }
        }
        acc * hx * hp
    }

    /// `int W dp` at every `x_axis` point.
    pub fn x_marginal(&self) -> Vec<f64> {
        let np = self.p_axis.len();
        let hp = self.p_axis[1] - self.p_axis[0];
        (0..self.x_axis.len())
            .map(|i| {
                let row = &self.values[i * np..(i + 1) * np];
                let inner: f64 = row.iter().sum();
                (inner - 0.5 * (row[0] + row[np - 1])) * hp
            })
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV with columns `x_vac_half,p_vac_half,w_per_area`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x_vac_half,p_vac_half,w_per_area")?;
        for (i, x) in self.x_axis.iter().enumerate() {
            for (j, p) in self.p_axis.iter().enumerate() {
                writeln!(w, "{x:.6e},{p:.6e},{:.9e}", self.at(i, j))?;
            }
        }
        Ok(())
    }
}

/// 1/e level of the vacuum Wigner function, for overlays.
pub fn vacuum_contour_level() -> f64 {
    1.0 / (PI * E)
}

/// Contour of `rho` found by bisection along 720 rays from the grid maximum.
pub fn contour_summary(wf: &WignerFunction, center: (f64, f64), r_max: f64) -> ContourSummary {
    let (cx, cp) = center;
    let peak = wf.eval(cx, cp);
    let level = peak / E;
    let rays = 720;
    let radii: Vec<f64> = (0..rays)
        .map(|k| wf.crossing_radius(cx, cp, 2.0 * PI * k as f64 / rays as f64, level, r_max))
        .collect();
    let half = rays / 2;
    let mut major = (0.0, 0usize);
    let mut minor = (f64::INFINITY, 0usize);
    for k in 0..half {
        let diam = 0.5 * (radii[k] + radii[k + half]);
        if diam > major.0 {
            major = (diam, k);
        }
        if diam < minor.0 {
            minor = (diam, k);
        }
    }
    ContourSummary {
        center_x: cx,
        center_p: cp,
        peak,
        level,
        semi_major: major.0,
        semi_minor: minor.0,
        major_angle: PI * major.1 as f64 / half as f64,
    }
}

/// Evaluates `W = sum_mn rho_mn W_mn` on the grid and locates its 1/e contour.
pub fn wigner(rho: &DensityMatrix, grid: GridSpec) -> WignerGrid {
    let axis = linspace(-grid.half_width, grid.half_width, grid.points);
    let wf = WignerFunction::new(rho);
    let mut values = Vec::with_capacity(axis.len() * axis.len());
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &x in &axis {
        for &p in &axis {
            let w = wf.eval(x, p);
            if w > best.0 {
                best = (w, x, p);
            }
            values.push(w);
        }
    }
    let contour = contour_summary(&wf, (best.1, best.2), 2.0 * grid.half_width);
    WignerGrid {
        x_axis: axis.clone(),
        p_axis: axis,
        values,
        contour,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_loss, squeezed_vacuum, vacuum_state, FockDim, SqueezeParams};
    use crate::quadrature::quadrature_density;

    #[test]
    fn vacuum_at_origin_is_one_over_pi() {
        let wf = WignerFunction::new(&vacuum_state(FockDim::new(6).unwrap()));
        assert!((wf.eval(0.0, 0.0) - 1.0 / PI).abs() < 1e-15);
        assert!((wf.eval(0.0, 0.0) - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
    }

    #[test]
    fn vacuum_contour_is_unit_circle() {
        let g = wigner(
            &vacuum_state(FockDim::new(4).unwrap()),
            GridSpec {
                half_width: 5.0,
                points: 101,
            },
        );
        assert!((g.contour.semi_major - 1.0).abs() < 1e-6);
        assert!((g.contour.semi_minor - 1.0).abs() < 1e-6);
        assert!((g.contour.level - vacuum_contour_level()).abs() < 1e-15);
        assert!((g.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn one_photon_has_negative_origin() {
        let wf = WignerFunction::new(&DensityMatrix::fock_state(FockDim::new(3).unwrap(), 1).unwrap());
        assert!((wf.eval(0.0, 0.0) + 1.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn marginals_reproduce_quadrature_densities() {
        // superposition with nonzero mean along both quadratures pins the kernel convention
        let s = 0.5f64.sqrt();
        let amps = [
            Complex64::new(s, 0.0),
            Complex64::new(0.5, 0.5),
            Complex64::new(0.0, 0.0),
        ];
        let rho = DensityMatrix::from_pure(&amps).unwrap();
        let grid = wigner(
            &rho,
            GridSpec {
                half_width: 7.0,
                points: 281,
            },
        );
        let mx = grid.x_marginal();
        let px = quadrature_density(&rho, 0.0);
        for (i, x) in grid.x_axis.iter().enumerate() {
            assert!((mx[i] - px.eval(*x)).abs() < 1e-3, "x={x}");
        }
        // p marginal against the theta = pi/2 density
        let np = grid.p_axis.len();
        let hx = grid.x_axis[1] - grid.x_axis[0];
        let pp = quadrature_density(&rho, PI / 2.0);
        for j in (0..np).step_by(7) {
            let col: f64 = (0..grid.x_axis.len()).map(|i| grid.at(i, j)).sum::<f64>() * hx;
            assert!((col - pp.eval(grid.p_axis[j])).abs() < 1e-3);
        }
    }

    #[test]
    fn lossy_squeezed_contour_ratio() {
        let dim = FockDim::new(40).unwrap();
        let sq = squeezed_vacuum(dim, SqueezeParams::new(0.375, 0.0).unwrap()).unwrap();
        let lossy = apply_loss(&sq, 0.28).unwrap();
        let g = wigner(&lossy, GridSpec::covering(&lossy, 5.0, 0.05));
        let vmin = 0.28 * (-0.75f64).exp() + 0.72;
        let vmax = 0.28 * (0.75f64).exp() + 0.72;
        let want = (vmax / vmin).sqrt();
        assert!((g.contour.axis_ratio() / want - 1.0).abs() < 0.02);
        assert!((want - 1.242).abs() < 2e-3);
        assert!(g.min_value() >= -1e-12, "Gaussian state must be nonnegative");
        assert!((g.integral() - 1.0).abs() < 1e-3);
        // anti-squeezed direction is p
        assert!((g.contour.major_angle - PI / 2.0).abs() < 0.02);
    }
}
