//! End-to-end commands. Each writes one run directory holding the config snapshot,
//! a log, the artifacts and `summary.json`; outputs depend only on the config and seed.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, SampleSource};
use crate::detector::{
    band_power_mw, clearance_spectrum_db, clearance_to_efficiency, cmrr, fit_butterworth,
    linearity_fit, pid_lock_mzi, simulate_output_spectrum, CmrrSettings, DetectorSpec, MziState,
    NoiseTrace, LOCK_SETPOINT,
};
use crate::error::{Error, Result};
use crate::fock::{FockDim, SqueezeParams};
use crate::numerics::{db_to_linear, linspace};
use crate::quadrature::{
    read_samples_file, sample_quadratures, write_samples_csv, LossySqueezedVacuum,
    QuadratureSource,
};
use crate::rng::{domain, substream};
use crate::squeezing::{
    variance_law, fit_variance_law, loss_correct, pairs_from_scans, read_pairs_csv,
    read_variance_scans_csv, simulate_squeezing_traces, squeezing_vs_frequency, variance_scan,
    write_pairs_csv, write_variance_scans_csv, FitOptions, VariancePair,
};
use crate::tomography::{
    bin_samples, calibrate_scan, fidelity, mle_reconstruct_with_progress, read_scan_csv,
    simulate_scan, MleOptions,
};
use crate::wigner::{vacuum_contour_level, wigner, GridSpec};

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Characterise,
    SqueezeScan,
    Tomography,
    SimulateSamples,
    /// Variance pairs from `pairs`, else from the config inputs, else synthesised.
    FitEq1 { pairs: Option<PathBuf> },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Characterise => "characterise",
            Command::SqueezeScan => "squeeze-scan",
            Command::Tomography => "tomography",
            Command::SimulateSamples => "simulate-samples",
            Command::FitEq1 { .. } => "fit-eq1",
        }
    }
}

/// Writes artifacts under one run directory and keeps a deterministic log.
pub struct RunDir {
    root: PathBuf,
    log: String,
    artifacts: Vec<String>,
    progress: bool,
}

impl RunDir {
    pub fn create(root: &Path, progress: bool) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            log: String::new(),
            artifacts: Vec::new(),
            progress,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn log(&mut self, line: impl AsRef<str>) {
        log::info!("{}", line.as_ref());
        let _ = writeln!(self.log, "{}", line.as_ref());
    }

    pub fn write_with(
        &mut self,
        rel: &str,
        f: impl FnOnce(&mut dyn Write) -> Result<()>,
    ) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        self.artifacts.push(rel.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<()> {
        self.write_with(rel, |w| Ok(w.write_all(text.as_bytes())?))
    }

    pub fn write_json(&mut self, rel: &str, value: &impl serde::Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(rel, &text)
    }

    fn finish(mut self, command: &str, seed: u64, results: Value) -> Result<PathBuf> {
        let log = std::mem::take(&mut self.log);
        self.write_text("run.log", &log)?;
        let mut artifacts = self.artifacts.clone();
        artifacts.push("summary.json".into());
        artifacts.sort();
        let summary = json!({
            "command": command,
            "seed": seed,
            "version": env!("CARGO_PKG_VERSION"),
            "artifacts": artifacts,
            "results": results,
        });
        self.write_json("summary.json", &summary)?;
        Ok(self.root.join("summary.json"))
    }
}

/// Runs `command`, writing into `out_dir`. Returns the path of `summary.json`.
pub fn run(command: &Command, cfg: &ExperimentConfig, out_dir: &Path, progress: bool) -> Result<PathBuf> {
    cfg.validate()?;
    let mut dir = RunDir::create(out_dir, progress)?;
    dir.write_text("config.toml", &cfg.snapshot().to_toml_string()?)?;
    dir.log(format!("command {} seed {}", command.name(), cfg.seed));
    let results = match command {
        Command::Characterise => cmd_characterise(cfg, &mut dir)?,
        Command::SqueezeScan => cmd_squeeze_scan(cfg, &mut dir)?,
        Command::Tomography => cmd_tomography(cfg, &mut dir)?,
        Command::SimulateSamples => cmd_simulate_samples(cfg, &mut dir)?,
        Command::FitEq1 { pairs } => cmd_fit_eq1(cfg, pairs.as_deref(), &mut dir)?,
    };
    dir.finish(command.name(), cfg.seed, results)
}

fn detector_spec(cfg: &ExperimentConfig) -> Result<DetectorSpec> {
    match &cfg.inputs.detector_spec {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::MissingInput(format!("detector spec {}: {e}", p.display())))?;
            DetectorSpec::from_toml(&text)
        }
        None => DetectorSpec::from_params(&cfg.detector),
    }
}

/// Multiplies every linear bin by `1 + noise * z`.
fn add_spectrum_noise(trace: NoiseTrace, noise: f64, seed: u64, index: u64) -> Result<NoiseTrace> {
    if noise == 0.0 {
        return Ok(trace);
    }
    let mut rng = substream(seed, domain::SPECTRUM_NOISE, index);
    let nrm = Normal::new(0.0, noise).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let lin: Vec<f64> = trace
        .linear_mw()
        .iter()
        .map(|p| p * (1.0 + nrm.sample(&mut rng)).max(1e-6))
        .collect();
    NoiseTrace::from_linear_mw(trace.freq_hz.clone(), &lin, trace.rbw_hz, trace.label.clone())
}

fn trace_name(label: &str) -> String {
    label.replace([' ', '.'], "_")
}

/// Largest value of a running mean over `window` points.
fn smoothed_max(values: &[f64], window: usize) -> f64 {
    let w = window.min(values.len()).max(1);
    values
        .windows(w)
        .map(|s| s.iter().sum::<f64>() / w as f64)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn cmd_characterise(cfg: &ExperimentConfig, dir: &mut RunDir) -> Result<Value> {
    let c = &cfg.characterise;
    let spec = detector_spec(cfg)?;
    let (shot, dark) = match (&cfg.inputs.shot_trace, &cfg.inputs.dark_trace) {
        (Some(s), Some(d)) => {
            dir.log(format!("reading traces {} and {}", s.display(), d.display()));
            (NoiseTrace::read_file(s)?.corrected(), NoiseTrace::read_file(d)?.corrected())
        }
        (Some(_), None) => return Err(Error::MissingInput("dark trace (inputs.dark_trace)".into())),
        (None, Some(_)) => return Err(Error::MissingInput("shot trace (inputs.shot_trace)".into())),
        (None, None) => {
            let mut traces = Vec::new();
            for (i, &p) in c.lo_powers_mw.iter().enumerate() {
                let t = simulate_output_spectrum(&spec, p, |_| 1.0, format!("lo {p:.2} mW"))?;
                let t = add_spectrum_noise(t, c.spectrum_noise, cfg.seed, i as u64)?;
                let name = format!("traces/{}.csv", trace_name(&t.label));
                dir.write_with(&name, |w| t.write_csv(w))?;
                traces.push(t);
            }
            dir.log(format!("synthesised {} spectra", traces.len()));
            let dark = traces.remove(0);
            (traces.pop().expect("validated: a lit power exists"), dark)
        }
    };

    let clearance = clearance_spectrum_db(&shot, &dark)?;
    dir.write_with("clearance.csv", |w| {
        writeln!(w, "freq_hz,clearance_db")?;
        for (f, cdb) in shot.freq_hz.iter().zip(&clearance) {
            writeln!(w, "{f:.6e},{cdb:.6}")?;
        }
        Ok(())
    })?;
    let max_clearance_db = smoothed_max(&clearance, c.clearance_smoothing_bins);

    let bw = fit_butterworth(&shot, &dark, c.order)?;
    dir.log(format!("butterworth: f3db {:.4e} Hz, order {}", bw.f3db_hz, bw.order));
    dir.write_json("butterworth.json", &bw)?;

    let (powers, variances, dark_var) = match &cfg.inputs.linearity {
        Some(p) => read_linearity_csv(p)?,
        None => synth_linearity(cfg, &spec)?,
    };
    let lin = linearity_fit(&powers, &variances, dark_var)?;
    dir.log(format!(
        "linearity: slope {:.5} +- {:.5}, {} points masked",
        lin.slope,
        lin.slope_stderr,
        lin.saturated.iter().filter(|s| **s).count()
    ));
    dir.write_with("linearity.csv", |w| {
        writeln!(w, "lo_power_mw,variance_mw,dark_subtracted_mw,saturated")?;
        for ((p, v), s) in powers.iter().zip(&variances).zip(&lin.saturated) {
            writeln!(w, "{p:.6},{v:.9e},{:.9e},{}", v - dark_var, u8::from(*s))?;
        }
        Ok(())
    })?;
    dir.write_json("linearity.json", &lin)?;

    let settings = CmrrSettings {
        ceiling_db: c.cmrr_ceiling_db,
        tone_depth: c.cmrr_tone_depth,
    };
    let [r1, r2] = c.responsivities_a_per_w;
    let mut cmrr_rows = Vec::new();
    for &t in &c.cmrr_reflectivities {
        let m = MziState::with_reflectivity(t)?;
        cmrr_rows.push((t, cmrr(&m, r1, r2, &settings)?));
    }
    dir.write_with("cmrr.csv", |w| {
        writeln!(w, "reflectivity,cmrr_db")?;
        for (t, v) in &cmrr_rows {
            writeln!(w, "{t:.6},{v:.6}")?;
        }
        Ok(())
    })?;

    let lo: Vec<f64> = (0..c.lock_steps)
        .map(|k| c.lock_lo_ramp_rad * k as f64 / c.lock_steps as f64)
        .collect();
    let start = MziState::new(c.lock_initial_phi_rad, 0.0, c.crosstalk)?;
    let lock = pid_lock_mzi(start, &lo, c.pid, LOCK_SETPOINT)?;
    dir.log(format!("pid lock: locked {}, oscillating {}", lock.locked, lock.oscillating));
    dir.write_with("lock.csv", |w| {
        writeln!(w, "step,phi_lo_rad,phi_mzi_rad,reflectivity")?;
        for (k, ((l, p), r)) in lo.iter().zip(&lock.phi_mzi).zip(&lock.reflectivity).enumerate() {
            writeln!(w, "{k},{l:.9},{p:.9},{r:.9}")?;
        }
        Ok(())
    })?;

    Ok(json!({
        "f3db_hz": bw.f3db_hz,
        "butterworth_order": bw.order,
        "max_clearance_db": max_clearance_db,
        "clearance_efficiency": clearance_to_efficiency(max_clearance_db)?,
        "detector_quantum_efficiency": spec.eta_det * clearance_to_efficiency(max_clearance_db)?,
        "linearity_slope": lin.slope,
        "linearity_slope_stderr": lin.slope_stderr,
        "linearity_masked": lin.saturated.iter().filter(|s| **s).count(),
        "cmrr_at_balance_db": cmrr(&MziState::with_reflectivity(0.5)?, r1, r2, &settings)?,
        "lock_locked": lock.locked,
        "lock_max_tail_excursion": lock.max_tail_excursion,
    }))
}

fn synth_linearity(cfg: &ExperimentConfig, spec: &DetectorSpec) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let c = &cfg.characterise;
    let [f_lo, f_hi] = c.linearity_band_hz;
    let dark = simulate_output_spectrum(spec, 0.0, |_| 1.0, "dark")?;
    let dark = add_spectrum_noise(dark, c.spectrum_noise, cfg.seed, 1000)?;
    let dark_var = band_power_mw(&dark, f_lo, f_hi);
    let mut variances = Vec::new();
    for (i, &p) in c.linearity_powers_mw.iter().enumerate() {
        let comp = if p > c.saturation_onset_mw {
            1.0 / (1.0 + p / c.saturation_knee_mw)
        } else {
            1.0
        };
        let t = simulate_output_spectrum(spec, p, |_| comp, "linearity")?;
        let t = add_spectrum_noise(t, c.spectrum_noise, cfg.seed, 1001 + i as u64)?;
        variances.push(band_power_mw(&t, f_lo, f_hi));
    }
    Ok((c.linearity_powers_mw.clone(), variances, dark_var))
}

fn read_linearity_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::MissingInput(format!("{}: {e}", path.display())))?;
    let name = path.display().to_string();
    let err = |line: usize, message: String| Error::Parse {
        path: name.clone(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "lo_power_mw,variance_mw" => {}
        Some((i, h)) => return Err(err(i + 1, format!("expected header 'lo_power_mw,variance_mw', got '{h}'"))),
        None => return Err(err(1, "empty file".into())),
    }
    let (mut p, mut v, mut dark) = (Vec::new(), Vec::new(), None);
    for (i, l) in lines {
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 2 {
            return Err(err(i + 1, format!("expected 2 fields, got {}", f.len())));
        }
        let a: f64 = f[0].parse().map_err(|e| err(i + 1, format!("bad power '{}': {e}", f[0])))?;
        let b: f64 = f[1].parse().map_err(|e| err(i + 1, format!("bad variance '{}': {e}", f[1])))?;
        if a == 0.0 {
            dark = Some(b);
        } else {
            p.push(a);
            v.push(b);
        }
    }
    let dark = dark.ok_or_else(|| Error::MissingInput(format!("{name}: no 0 mW (dark) row")))?;
    Ok((p, v, dark))
}

fn variance_pairs(cfg: &ExperimentConfig, override_path: Option<&Path>, dir: &mut RunDir) -> Result<Vec<VariancePair>> {
    if let Some(p) = override_path.or(cfg.inputs.pairs.as_deref()) {
        dir.log(format!("reading variance pairs from {}", p.display()));
        let f = std::fs::File::open(p)
            .map_err(|e| Error::MissingInput(format!("pairs {}: {e}", p.display())))?;
        return read_pairs_csv(std::io::BufReader::new(f), &p.display().to_string());
    }
    let s = &cfg.squeeze_scan;
    let points = match &cfg.inputs.variance_scans {
        Some(p) => {
            dir.log(format!("reading variance scans from {}", p.display()));
            let f = std::fs::File::open(p)
                .map_err(|e| Error::MissingInput(format!("variance scans {}: {e}", p.display())))?;
            read_variance_scans_csv(std::io::BufReader::new(f), &p.display().to_string())?
        }
        None => {
            let nrm = Normal::new(0.0, s.variance_noise.max(0.0))
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let mut points = Vec::new();
            for (i, &p) in s.pump_powers_mw.iter().enumerate() {
                let mut rng = substream(cfg.seed, domain::VARIANCE_NOISE, i as u64);
                let truth = variance_law(s.eta_total, cfg.squeezer.mu, p)?;
                points.extend(variance_scan(&truth, s.scan_points).into_iter().map(|mut q| {
                    q.variance *= 1.0 + nrm.sample(&mut rng);
                    q
                }));
            }
            dir.write_with("variance_scans.csv", |w| write_variance_scans_csv(w, &points))?;
            dir.log(format!(
                "synthesised {} variance scans of {} points",
                s.pump_powers_mw.len(),
                s.scan_points
            ));
            points
        }
    };
    let [lo, hi] = s.extrema_percentiles;
    let pairs = pairs_from_scans(&points, lo, hi)?;
    dir.log(format!("extrema at the {lo}th and {hi}th percentiles of {} scans", pairs.len()));
    Ok(pairs)
}

fn fit_and_correct(cfg: &ExperimentConfig, pairs: &[VariancePair], dir: &mut RunDir) -> Result<Value> {
    let s = &cfg.squeeze_scan;
    dir.write_with("pairs.csv", |w| write_pairs_csv(w, pairs))?;
    let fit = fit_variance_law(
        pairs,
        FitOptions {
            weighting: s.weighting,
            branches: s.branches,
        },
    )?;
    dir.log(format!(
        "variance law fit: eta {:.4} +- {:.4}, mu {:.5} +- {:.5}",
        fit.eta_hat, fit.eta_stderr, fit.mu_hat, fit.mu_stderr
    ));
    dir.write_json("fit.json", &fit)?;
    let p = cfg.squeezer.p_shg_mw;
    let model = variance_law(fit.eta_hat, fit.mu_hat, p)?;
    let src = loss_correct(model.v_min, fit.eta_hat)?;
    let source = json!({
        "p_shg_mw": p,
        "measured_v_min_snu": model.v_min,
        "measured_squeezing_db": -model.squeezing_db(),
        "eta_total": fit.eta_hat,
        "source_variance_snu": src.source_variance,
        "source_squeezing_db": src.squeezing_db,
    });
    dir.write_json("source.json", &source)?;
    Ok(json!({
        "eta_hat": fit.eta_hat,
        "eta_stderr": fit.eta_stderr,
        "mu_hat": fit.mu_hat,
        "mu_stderr": fit.mu_stderr,
        "source_squeezing_db": src.squeezing_db,
    }))
}

pub fn cmd_fit_eq1(cfg: &ExperimentConfig, pairs: Option<&Path>, dir: &mut RunDir) -> Result<Value> {
    let pairs = variance_pairs(cfg, pairs, dir)?;
    fit_and_correct(cfg, &pairs, dir)
}

pub fn cmd_squeeze_scan(cfg: &ExperimentConfig, dir: &mut RunDir) -> Result<Value> {
    let s = &cfg.squeeze_scan;
    let pairs = variance_pairs(cfg, None, dir)?;
    let mut results = fit_and_correct(cfg, &pairs, dir)?;

    let spec = detector_spec(cfg)?;
    let traces = match (&cfg.inputs.squeezed_trace, &cfg.inputs.shot_trace, &cfg.inputs.dark_trace) {
        (Some(q), Some(n), Some(d)) => [
            NoiseTrace::read_file(d)?.corrected(),
            NoiseTrace::read_file(n)?.corrected(),
            NoiseTrace::read_file(q)?.corrected(),
        ],
        (None, _, _) => {
            let c_max = spec.max_clearance_db();
            let eta0 = s.spectrum_eta;
            let v_src = db_to_linear(-s.source_squeezing_db);
            let rolloff = |f: f64| {
                clearance_to_efficiency(spec.clearance_at(f)).unwrap_or(0.0)
                    / clearance_to_efficiency(c_max).unwrap_or(1.0)
            };
            let [d, n, q] = simulate_squeezing_traces(&spec, s.lo_power_mw, v_src, |f| eta0 * rolloff(f))?;
            let mut out = Vec::new();
            for (i, t) in [d, n, q].into_iter().enumerate() {
                let t = add_spectrum_noise(t, s.spectrum_noise, cfg.seed, 2000 + i as u64)?;
                dir.write_with(&format!("traces/{}.csv", t.label), |w| t.write_csv(w))?;
                out.push(t);
            }
            dir.log("synthesised dark, shot and squeezed spectra");
            [out.remove(0), out.remove(0), out.remove(0)]
        }
        (Some(_), None, _) => return Err(Error::MissingInput("shot trace (inputs.shot_trace)".into())),
        (Some(_), _, None) => return Err(Error::MissingInput("dark trace (inputs.dark_trace)".into())),
    };
    let [dark, shot, sq] = traces;
    let excl: Vec<(f64, f64)> = s.exclusions_hz.iter().map(|[a, b]| (*a, *b)).collect();
    let spectrum = squeezing_vs_frequency(&sq, &shot, &dark, &excl)?;
    dir.log(format!("squeezing spectrum: {} bins masked", spectrum.masked_count()));
    dir.write_with("squeezing_spectrum.csv", |w| spectrum.write_csv(w))?;
    let [lo, hi] = s.average_band_hz;
    let mean = spectrum.mean_db(lo, hi);
    let first_masked = spectrum
        .points
        .iter()
        .find(|p| p.mask.is_some() && p.mask != Some(crate::squeezing::MaskReason::Excluded))
        .map(|p| p.freq_hz);
    if let Value::Object(m) = &mut results {
        m.insert("mean_squeezing_db".into(), json!(mean));
        m.insert("average_band_hz".into(), json!([lo, hi]));
        m.insert("masked_bins".into(), json!(spectrum.masked_count()));
        m.insert("first_noise_limited_hz".into(), json!(first_masked));
    }
    Ok(results)
}

fn mle_progress(enabled: bool) -> impl FnMut(usize, f64, f64) {
    move |it, ll, delta| {
        if enabled && (it <= 10 || it % 50 == 0) {
            eprintln!("{it},{ll:.12e},{delta:.3e}");
        }
    }
}

pub fn cmd_tomography(cfg: &ExperimentConfig, dir: &mut RunDir) -> Result<Value> {
    let t = &cfg.tomography;
    let dim = FockDim::new(t.cutoff)?;
    let opts = MleOptions {
        tolerance: t.tolerance,
        max_iters: t.max_iters,
    };
    let truth = LossySqueezedVacuum::new(t.eta, SqueezeParams::new(t.r, 0.0)?)?;
    let synthetic = cfg.inputs.scan.is_none() && cfg.inputs.samples.is_none();

    let (samples, calibration, warnings) = if let Some(p) = &cfg.inputs.samples {
        let samples = read_samples_file(p)?;
        dir.log(format!("read {} samples from {}", samples.len(), p.display()));
        (samples, None, Vec::new())
    } else {
        let records = match &cfg.inputs.scan {
            Some(p) => {
                let f = std::fs::File::open(p)
                    .map_err(|e| Error::MissingInput(format!("scan {}: {e}", p.display())))?;
                read_scan_csv(std::io::BufReader::new(f), &p.display().to_string())?
            }
            None => simulate_scan(
                truth,
                t.calibration,
                t.scan_v_max,
                t.scan_period,
                t.sample_rate_hz,
                t.samples,
                cfg.seed,
            )?,
        };
        dir.log(format!("{} scan records", records.len()));
        let (cal, samples, warnings) = calibrate_scan(&records, (!t.auto_calibrate).then_some(t.calibration))?;
        (samples, Some(serde_json::to_value(cal)?), warnings)
    };

    let spec = t.povm_spec();
    if let Some(eta) = spec.detection_efficiency {
        dir.log(format!("experimental: folding detection efficiency {eta} into the POVM"));
    }
    let povm = spec.build(&samples)?;
    let half_width = povm.edges().last().copied().unwrap_or(0.0);
    dir.log(format!(
        "binning: {} phases x {} bins over +-{half_width:.4} (+ 2 overflow bins)",
        t.n_phases, t.n_bins
    ));
    let data = bin_samples(&samples, &povm)?;
    let mut report = mle_reconstruct_with_progress(&data, &povm, opts, mle_progress(dir.progress))?;
    report.warnings.splice(0..0, warnings);
    let wg = wigner(
        &report.rho,
        GridSpec::covering(&report.rho, t.wigner_n_sigma, t.wigner_step),
    );
    report.seed = Some(cfg.seed);
    dir.log(format!(
        "mle: {} iterations, converged {}, final delta {:.3e}",
        report.iterations, report.converged, report.final_delta
    ));
    for w in &report.warnings {
        dir.log(format!("warning: {w}"));
    }
    dir.write_json("mle_report.json", &report)?;
    dir.write_with("wigner.csv", |w| wg.write_csv(w))?;

    let v_max = truth.variance(FRAC_PI_2);
    let v_min = truth.variance(0.0);
    let contour = json!({
        "state_level_per_area": wg.contour.level,
        "vacuum_level_per_area": vacuum_contour_level(),
        "semi_major_vac_half": wg.contour.semi_major,
        "semi_minor_vac_half": wg.contour.semi_minor,
        "major_angle_rad": wg.contour.major_angle,
        "axis_ratio": wg.contour.axis_ratio(),
        "vacuum_semi_axis_vac_half": 1.0,
        "model_axis_ratio": (v_max / v_min).sqrt(),
        "wigner_integral": wg.integral(),
    });
    dir.write_json("contour.json", &contour)?;

    let mut results = json!({
        "iterations": report.iterations,
        "converged": report.converged,
        "likelihood_monotone": report.likelihood_monotone,
        "axis_ratio": wg.contour.axis_ratio(),
        "model_axis_ratio": (v_max / v_min).sqrt(),
        "calibration": calibration,
        "bin_half_width": half_width,
    });
    if synthetic {
        let f = fidelity(&report.rho, &truth.density_matrix(dim)?)?;
        dir.log(format!("fidelity to the generating state {f:.6}"));
        results["fidelity"] = json!(f);
    }
    Ok(results)
}

pub fn cmd_simulate_samples(cfg: &ExperimentConfig, dir: &mut RunDir) -> Result<Value> {
    let s = &cfg.simulate;
    let state = LossySqueezedVacuum::new(s.eta, SqueezeParams::new(s.r, s.theta_sq)?)?;
    let samples = match s.source {
        SampleSource::Gaussian => {
            sample_quadratures(QuadratureSource::Gaussian(state), &s.schedule, s.count, cfg.seed)?
        }
        SampleSource::Fock => {
            let rho = state.density_matrix(FockDim::new(s.cutoff)?)?;
            sample_quadratures(QuadratureSource::State(&rho), &s.schedule, s.count, cfg.seed)?
        }
    };
    dir.write_with("samples.csv", |w| write_samples_csv(w, &samples, s.units))?;
    dir.log(format!("wrote {} samples", samples.len()));

    // per-phase sample variances against the closed form
    let mut by_phase: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
    for q in &samples {
        let e = by_phase.entry(q.theta.to_bits()).or_insert((0.0, 0.0, 0));
        e.0 += q.x;
        e.1 += q.x * q.x;
        e.2 += 1;
    }
    let mut worst: f64 = 0.0;
    for (bits, (sx, sxx, n)) in &by_phase {
        let n = *n as f64;
        if n > 1.0 {
            let var = (sxx - sx * sx / n) / (n - 1.0);
            worst = worst.max((var / state.variance(f64::from_bits(*bits)) - 1.0).abs());
        }
    }
    let phase_grid = linspace(0.0, std::f64::consts::PI, 3);
    Ok(json!({
        "count": samples.len(),
        "units": s.units.column(),
        "distinct_phases": by_phase.len(),
        "max_relative_variance_error": worst,
        "model_variance_snu": phase_grid.iter().map(|&th| state.variance(th)).collect::<Vec<_>>(),
    }))
}
