use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{db_to_linear, linear_to_db};

/// Frequency-indexed power spectrum as read from a spectrum analyser.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrace {
    pub freq_hz: Vec<f64>,
    pub power_dbm: Vec<f64>,
    pub rbw_hz: Option<f64>,
    pub label: String,
    /// Optional per-frequency dB correction (e.g. RF cable loss), added by [`NoiseTrace::corrected`].
    pub correction_db: Option<Vec<f64>>,
}

impl NoiseTrace {
    pub fn new(
        freq_hz: Vec<f64>,
        power_dbm: Vec<f64>,
        rbw_hz: Option<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let t = Self {
            freq_hz,
            power_dbm,
            rbw_hz,
            label: label.into(),
            correction_db: None,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.freq_hz.len() != self.power_dbm.len() {
            return Err(Error::InvalidParameter(format!(
                "trace '{}' has {} frequencies but {} powers",
                self.label,
                self.freq_hz.len(),
                self.power_dbm.len()
            )));
        }
        if self.freq_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "trace '{}' frequencies are not strictly increasing",
                self.label
            )));
        }
        if let Some(c) = &self.correction_db {
            if c.len() != self.freq_hz.len() {
                return Err(Error::InvalidParameter(format!(
                    "trace '{}' correction column length mismatch",
                    self.label
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.freq_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_hz.is_empty()
    }

    /// Powers in mW.
    pub fn linear_mw(&self) -> Vec<f64> {
        self.power_dbm.iter().map(|&p| db_to_linear(p)).collect()
    }

    pub fn from_linear_mw(
        freq_hz: Vec<f64>,
        power_mw: &[f64],
        rbw_hz: Option<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let dbm = power_mw.iter().map(|&p| linear_to_db(p)).collect();
        Self::new(freq_hz, dbm, rbw_hz, label)
    }

    pub fn with_correction(mut self, correction_db: Vec<f64>) -> Result<Self> {
        self.correction_db = Some(correction_db);
        self.validate()?;
        Ok(self)
    }

    /// Trace with the correction column folded into the powers.
    pub fn corrected(&self) -> Self {
        match &self.correction_db {
            None => self.clone(),
            Some(c) => Self {
                power_dbm: self.power_dbm.iter().zip(c).map(|(p, c)| p + c).collect(),
                correction_db: None,
                ..self.clone()
            },
        }
    }

    /// Errors unless `other` is sampled on the same frequencies.
    pub fn check_same_grid(&self, other: &NoiseTrace) -> Result<()> {
        let same = self.freq_hz.len() == other.freq_hz.len()
            && self
                .freq_hz
                .iter()
                .zip(&other.freq_hz)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
        if same {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "'{}' ({} points) vs '{}' ({} points)",
                self.label,
                self.freq_hz.len(),
                other.label,
                other.freq_hz.len()
            )))
        }
    }

    /// CSV with `#` metadata lines (`label=`, `rbw_hz=`) and columns
    /// `freq_hz,power_dbm[,correction_db]`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# label={}", self.label)?;
        if let Some(rbw) = self.rbw_hz {
            writeln!(w, "# rbw_hz={rbw:e}")?;
        }
        match &self.correction_db {
            None => {
                writeln!(w, "freq_hz,power_dbm")?;
                for (f, p) in self.freq_hz.iter().zip(&self.power_dbm) {
                    writeln!(w, "{f:.6e},{p:.6}")?;
                }
            }
            Some(c) => {
                writeln!(w, "freq_hz,power_dbm,correction_db")?;
                for ((f, p), c) in self.freq_hz.iter().zip(&self.power_dbm).zip(c) {
                    writeln!(w, "{f:.6e},{p:.6},{c:.6}")?;
                }
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, path: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut label = String::new();
        let mut rbw = None;
        let mut has_correction = None;
        let mut freq = Vec::new();
        let mut power = Vec::new();
        let mut corr = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(meta) = t.strip_prefix('#') {
                if let Some((k, v)) = meta.trim().split_once('=') {
                    match k.trim() {
                        "label" => label = v.trim().to_string(),
                        "rbw_hz" => {
                            rbw = Some(v.trim().parse::<f64>().map_err(|e| {
                                err(lineno, format!("bad rbw_hz '{}': {e}", v.trim()))
                            })?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if has_correction.is_none() {
                has_correction = match t {
                    "freq_hz,power_dbm" => Some(false),
                    "freq_hz,power_dbm,correction_db" => Some(true),
                    _ => {
                        return Err(err(
                            lineno,
                            format!("expected header 'freq_hz,power_dbm[,correction_db]', got '{t}'"),
                        ))
                    }
                };
                continue;
            }
            let fields: Vec<&str> = t.split(',').map(str::trim).collect();
            let want = if has_correction == Some(true) { 3 } else { 2 };
            if fields.len() != want {
                return Err(err(lineno, format!("expected {want} fields, got {}", fields.len())));
            }
            let num = |s: &str, what: &str| {
                s.parse::<f64>()
                    .map_err(|e| err(lineno, format!("bad {what} '{s}': {e}")))
            };
            freq.push(num(fields[0], "frequency")?);
            power.push(num(fields[1], "power")?);
            if want == 3 {
                corr.push(num(fields[2], "correction")?);
            }
        }
        if has_correction.is_none() {
            return Err(err(1, "missing header line".into()));
        }
        let mut trace = Self {
            freq_hz: freq,
            power_dbm: power,
            rbw_hz: rbw,
            label,
            correction_db: (has_correction == Some(true)).then_some(corr),
        };
        trace.validate().map_err(|e| err(0, e.to_string()))?;
        if trace.label.is_empty() {
            trace.label = path.to_string();
        }
        Ok(trace)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::MissingInput(format!("trace {}: {e}", path.display())))?;
        Self::read_csv(std::io::BufReader::new(f), &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_keeps_rbw_and_correction() {
        let t = NoiseTrace::new(vec![1e8, 2e8], vec![-70.0, -71.5], Some(8e6), "shot")
            .unwrap()
            .with_correction(vec![0.1, 0.2])
            .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("# rbw_hz=8e6"));
        let back = NoiseTrace::read_csv(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, t);
        let c = back.corrected();
        assert!((c.power_dbm[1] + 71.3).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(NoiseTrace::new(vec![2.0, 1.0], vec![0.0, 0.0], None, "x").is_err());
        assert!(NoiseTrace::new(vec![1.0], vec![0.0, 0.0], None, "x").is_err());
        let bad = "# rbw_hz=8e6\nfreq_hz,power_dbm\n1e8,-70\n2e8,abc\n";
        match NoiseTrace::read_csv(bad.as_bytes(), "t.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_check() {
        let a = NoiseTrace::new(vec![1.0, 2.0], vec![0.0, 0.0], None, "a").unwrap();
        let b = NoiseTrace::new(vec![1.0, 3.0], vec![0.0, 0.0], None, "b").unwrap();
        assert!(matches!(a.check_same_grid(&b), Err(Error::GridMismatch(_))));
        assert!(a.check_same_grid(&a.clone()).is_ok());
    }
}
