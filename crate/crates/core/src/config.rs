//! Experiment configuration, read from and written to TOML.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detector::{DetectorParams, LossBudget, OrderSelection, PidGains};
use crate::error::{Error, Result};
use crate::quadrature::{PhaseSchedule, QuadUnits};
use crate::squeezing::{Branches, Weighting};
use crate::tomography::{PhaseCalibration, PovmSpec};

/// Default master seed when neither the config nor the command line gives one.
pub const DEFAULT_SEED: u64 = 20_190_101;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Run directory; the command line takes precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub inputs: Inputs,
    pub detector: DetectorParams,
    pub squeezer: SqueezerConfig,
    pub characterise: CharacteriseConfig,
    pub squeeze_scan: SqueezeScanConfig,
    pub tomography: TomographyConfig,
    pub simulate: SimulateConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            out_dir: None,
            inputs: Inputs::default(),
            detector: DetectorParams::default(),
            squeezer: SqueezerConfig::default(),
            characterise: CharacteriseConfig::default(),
            squeeze_scan: SqueezeScanConfig::default(),
            tomography: TomographyConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

/// Measured data to analyse instead of synthesising it. Relative paths are resolved
/// against the config file's directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector_spec: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shot_trace: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dark_trace: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squeezed_trace: Option<PathBuf>,
    /// CSV `lo_power_mw,variance_mw`; a row at 0 mW is the dark level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linearity: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PathBuf>,
    /// CSV `p_shg_mw,theta_rad,variance_snu`; extrema are taken per pump power.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_scans: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<PathBuf>,
}

impl Inputs {
    fn all_mut(&mut self) -> [(&'static str, &mut Option<PathBuf>); 9] {
        [
            ("detector_spec", &mut self.detector_spec),
            ("shot_trace", &mut self.shot_trace),
            ("dark_trace", &mut self.dark_trace),
            ("squeezed_trace", &mut self.squeezed_trace),
            ("linearity", &mut self.linearity),
            ("pairs", &mut self.pairs),
            ("variance_scans", &mut self.variance_scans),
            ("scan", &mut self.scan),
            ("samples", &mut self.samples),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqueezerConfig {
    /// mW^-1/2
    pub mu: f64,
    pub p_shg_mw: f64,
    pub source_losses: LossBudget,
}

impl Default for SqueezerConfig {
    fn default() -> Self {
        Self {
            mu: 0.044,
            p_shg_mw: 72.7,
            source_losses: LossBudget::reference_source(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacteriseConfig {
    /// LO powers of the synthetic spectra; the first must be 0 (dark).
    pub lo_powers_mw: Vec<f64>,
    /// Relative standard deviation of the multiplicative noise on every synthetic bin.
    pub spectrum_noise: f64,
    pub order: OrderSelection,
    /// Bins averaged before taking the maximum clearance.
    pub clearance_smoothing_bins: usize,
    pub linearity_powers_mw: Vec<f64>,
    /// Band the linearity variances are integrated over, Hz.
    pub linearity_band_hz: [f64; 2],
    /// Synthetic points above this power are compressed by `1 / (1 + P / knee)`.
    pub saturation_onset_mw: f64,
    pub saturation_knee_mw: f64,
    pub responsivities_a_per_w: [f64; 2],
    pub cmrr_reflectivities: Vec<f64>,
    pub cmrr_ceiling_db: f64,
    pub cmrr_tone_depth: f64,
    pub crosstalk: f64,
    pub pid: PidGains,
    pub lock_steps: usize,
    /// Total LO phase ramp over the lock simulation, rad.
    pub lock_lo_ramp_rad: f64,
    pub lock_initial_phi_rad: f64,
}

impl Default for CharacteriseConfig {
    fn default() -> Self {
        Self {
            lo_powers_mw: vec![0.0, 0.12, 0.85, 1.58, 2.30, 3.00, 3.69, 4.36],
            spectrum_noise: 0.01,
            order: OrderSelection::default(),
            clearance_smoothing_bins: 25,
            linearity_powers_mw: (1..=20).map(|k| 0.3 * k as f64).collect(),
            linearity_band_hz: [0.0, 1.7e9],
            saturation_onset_mw: 4.6,
            saturation_knee_mw: 20.0,
            responsivities_a_per_w: [1.1, 1.089],
            cmrr_reflectivities: vec![0.3, 0.4, 0.45, 0.49, 0.495, 0.4975, 0.5, 0.5025, 0.505, 0.51, 0.55, 0.6, 0.7, 1.0],
            cmrr_ceiling_db: crate::detector::DEFAULT_CMRR_CEILING_DB,
            cmrr_tone_depth: 0.1,
            crosstalk: 0.009,
            pid: PidGains::default(),
            lock_steps: 10_000,
            lock_lo_ramp_rad: 20.0 * PI,
            lock_initial_phi_rad: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqueezeScanConfig {
    /// Efficiency used to synthesise variance pairs.
    pub eta_total: f64,
    pub pump_powers_mw: Vec<f64>,
    /// Points per synthetic variance-versus-phase trace (one full LO period).
    pub scan_points: usize,
    /// Relative standard deviation of the multiplicative noise on each trace point.
    pub variance_noise: f64,
    /// Percentiles of each trace taken as `V_min` and `V_max`.
    pub extrema_percentiles: [f64; 2],
    pub weighting: Weighting,
    pub branches: Branches,
    /// Low-frequency efficiency used for the synthetic squeezing spectrum.
    pub spectrum_eta: f64,
    pub source_squeezing_db: f64,
    pub lo_power_mw: f64,
    pub spectrum_noise: f64,
    /// Frequency intervals (Hz) to drop from the squeezing spectrum.
    pub exclusions_hz: Vec<[f64; 2]>,
    /// Band averaged for the summary, Hz.
    pub average_band_hz: [f64; 2],
}

impl Default for SqueezeScanConfig {
    fn default() -> Self {
        Self {
            eta_total: 0.28,
            pump_powers_mw: vec![5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 72.7],
            scan_points: 500,
            variance_noise: 0.01,
            extrema_percentiles: [2.0, 98.0],
            weighting: Weighting::default(),
            branches: Branches::default(),
            spectrum_eta: 0.292,
            source_squeezing_db: 3.26,
            lo_power_mw: 4.36,
            spectrum_noise: 0.01,
            exclusions_hz: vec![[4.28e9, 4.30e9]],
            average_band_hz: [0.0, 1.7e9],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    pub cutoff: usize,
    pub n_bins: usize,
    /// Bin range `[-half_width, half_width]` in vacuum-variance-1/2 units; unset means
    /// five times the widest per-phase standard deviation of the data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub n_phases: usize,
    pub tolerance: f64,
    pub max_iters: usize,
    pub samples: usize,
    /// Synthetic state: efficiency and squeeze parameter.
    pub eta: f64,
    pub r: f64,
    pub scan_v_max: f64,
    /// Samples per drive period.
    pub scan_period: usize,
    pub sample_rate_hz: f64,
    /// Calibration used to synthesise the scan and, unless `auto_calibrate`, to analyse it.
    pub calibration: PhaseCalibration,
    pub auto_calibrate: bool,
    /// Fold a detection efficiency into the POVM (experimental).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency_correction: Option<f64>,
    pub wigner_n_sigma: f64,
    pub wigner_step: f64,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            cutoff: 6,
            n_bins: 101,
            half_width: None,
            n_phases: 60,
            tolerance: 1e-7,
            max_iters: 2000,
            samples: 1_000_000,
            eta: 0.28,
            r: 0.375,
            scan_v_max: 5.0,
            scan_period: 1000,
            sample_rate_hz: 1e5,
            calibration: PhaseCalibration::affine(0.0, 0.7),
            auto_calibrate: false,
            efficiency_correction: None,
            wigner_n_sigma: 4.0,
            wigner_step: 0.05,
        }
    }
}

impl TomographyConfig {
    pub fn povm_spec(&self) -> PovmSpec {
        PovmSpec {
            cutoff: self.cutoff,
            n_bins: self.n_bins,
            n_phases: self.n_phases,
            half_width: self.half_width,
            detection_efficiency: self.efficiency_correction,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    /// Closed-form Gaussian sampler.
    #[default]
    Gaussian,
    /// Inverse-CDF sampling of the truncated Fock-space state.
    Fock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub count: usize,
    pub eta: f64,
    pub r: f64,
    pub theta_sq: f64,
    pub source: SampleSource,
    pub cutoff: usize,
    pub schedule: PhaseSchedule,
    pub units: QuadUnits,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            count: 100_000,
            eta: 0.28,
            r: 0.375,
            theta_sq: 0.0,
            source: SampleSource::Gaussian,
            cutoff: 6,
            schedule: PhaseSchedule::Uniform { n_phases: 36 },
            units: QuadUnits::ShotNoise,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads `path`, resolves input paths relative to its directory and checks they exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::MissingInput(format!("config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for (_, p) in cfg.inputs.all_mut() {
            if let Some(rel) = p.as_mut() {
                if rel.is_relative() {
                    *rel = base.join(&*rel);
                }
            }
        }
        cfg.check_inputs_exist()?;
        Ok(cfg)
    }

    pub fn check_inputs_exist(&mut self) -> Result<()> {
        for (name, p) in self.inputs.all_mut() {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::MissingInput(format!(
                        "inputs.{name} = {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        self.squeezer.source_losses.validate()?;
        if !(self.squeezer.mu >= 0.0 && self.squeezer.p_shg_mw >= 0.0) {
            return bad("squeezer.mu and squeezer.p_shg_mw must be >= 0");
        }
        let c = &self.characterise;
        if c.lo_powers_mw.first() != Some(&0.0) || c.lo_powers_mw.len() < 2 {
            return bad("characterise.lo_powers_mw must start with 0 (dark) and include a lit power");
        }
        if !(c.spectrum_noise >= 0.0) || !(self.squeeze_scan.variance_noise >= 0.0) {
            return bad("noise levels must be >= 0");
        }
        if c.clearance_smoothing_bins == 0 || c.lock_steps == 0 {
            return bad("clearance_smoothing_bins and lock_steps must be >= 1");
        }
        let s = &self.squeeze_scan;
        let [lo, hi] = s.extrema_percentiles;
        if s.scan_points < 2 || !(0.0 <= lo && lo <= hi && hi <= 100.0) {
            return bad("squeeze_scan needs scan_points >= 2 and 0 <= extrema_percentiles[0] <= [1] <= 100");
        }
        for eta in [s.eta_total, s.spectrum_eta, self.tomography.eta, self.simulate.eta] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::InvalidEta(eta));
            }
        }
        let t = &self.tomography;
        if t.cutoff < 2 || t.n_bins < 2 || t.n_phases < 1 || t.samples == 0 || t.scan_period == 0 {
            return bad("tomography needs cutoff >= 2, n_bins >= 2, n_phases >= 1, samples >= 1, scan_period >= 1");
        }
        if !(t.half_width.is_none_or(|h| h > 0.0) && t.wigner_step > 0.0 && t.wigner_n_sigma > 0.0) {
            return bad("tomography.half_width, wigner_step and wigner_n_sigma must be > 0");
        }
        if self.simulate.count == 0 || self.simulate.cutoff < 2 {
            return bad("simulate.count must be >= 1 and simulate.cutoff >= 2");
        }
        self.simulate.schedule.validate()?;
        Ok(())
    }

    /// The config as recorded in a run directory: everything that determines the outputs.
    pub fn snapshot(&self) -> Self {
        Self {
            out_dir: None,
            ..self.clone()
        }
    }
}
