use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered chain of named transmissivities.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    stages: Vec<(String, f64)>,
}

impl LossBudget {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_stages<S: Into<String>>(stages: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let mut b = Self::new();
        for (label, t) in stages {
            b.push(label, t)?;
        }
        Ok(b)
    }

    pub fn push(&mut self, label: impl Into<String>, transmissivity: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(Error::InvalidEta(transmissivity));
        }
        self.stages.push((label.into(), transmissivity));
        Ok(())
    }

    /// Appends every stage of `other`.
    pub fn extend(&mut self, other: &LossBudget) {
        self.stages.extend(other.stages.iter().cloned());
    }

    /// Rechecks every stage; needed after deserialisation.
    pub fn validate(&self) -> Result<()> {
        match self.stages.iter().find(|(_, t)| !(0.0..=1.0).contains(t)) {
            Some((_, t)) => Err(Error::InvalidEta(*t)),
            None => Ok(()),
        }
    }

    pub fn stages(&self) -> &[(String, f64)] {
        &self.stages
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Source-side losses of the squeezing experiment: ridge waveguide, module-to-fibre
    /// coupling, isolator and fibre components.
    pub fn reference_source() -> Self {
        Self::from_stages([
            ("ridge waveguide", 0.83),
            ("module-fibre coupling", 0.80),
            ("isolator, polarisation control, couplers", 0.85),
        ])
        .expect("constants are in range")
    }

    /// Detector-side chain: grating coupler (-2.1 dB), photodiode/optics, shot-noise clearance.
    pub fn reference_detector() -> Self {
        Self::from_stages([
            ("grating coupler", 0.62),
            ("optics and photodiodes", 0.88),
            ("shot-noise clearance", 0.96),
        ])
        .expect("constants are in range")
    }

    /// Full chain, source then detector.
    pub fn reference_total() -> Self {
        let mut b = Self::reference_source();
        b.extend(&Self::reference_detector());
        b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub total: f64,
    /// `(label, stage transmissivity, product up to and including this stage)`.
    pub cumulative: Vec<(String, f64, f64)>,
}

/// Overall efficiency of a loss chain plus the running product for reporting.
pub fn budget_product(budget: &LossBudget) -> Result<BudgetReport> {
    if budget.is_empty() {
        return Err(Error::InvalidParameter("loss budget has no stages".into()));
    }
    let mut acc = 1.0;
    let cumulative = budget
        .stages()
        .iter()
        .map(|(label, t)| {
            acc *= t;
            (label.clone(), *t, acc)
        })
        .collect();
    Ok(BudgetReport {
        total: acc,
        cumulative,
    })
}

/// Effective efficiency of finite shot-noise clearance: the fraction of the
/// LO-illuminated noise that is vacuum noise, `1 - 10^(-C/10)`.
pub fn clearance_to_efficiency(clearance_db: f64) -> Result<f64> {
    if clearance_db.is_nan() || clearance_db < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "clearance must be >= 0 dB, got {clearance_db}"
        )));
    }
    Ok(1.0 - 10f64.powf(-clearance_db / 10.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_chain_products() {
        let total = budget_product(&LossBudget::reference_total()).unwrap();
        let direct = 0.83 * 0.80 * 0.85 * 0.62 * 0.88 * 0.96;
        assert!((total.total - direct).abs() < 1e-12);
        assert!((total.total - 0.2956).abs() < 1e-4);
        assert!((total.total / 0.292 - 1.0).abs() < 0.015);
        let det = budget_product(&LossBudget::reference_detector()).unwrap();
        assert!((det.total - 0.523776).abs() < 1e-12);
        assert!((det.total / 0.51 - 1.0).abs() < 0.03);
        assert_eq!(det.cumulative.len(), 3);
        assert!((det.cumulative[1].2 - 0.62 * 0.88).abs() < 1e-15);
    }

    #[test]
    fn unit_and_empty_budgets() {
        let one = LossBudget::from_stages([("x", 1.0)]).unwrap();
        assert_eq!(budget_product(&one).unwrap().total, 1.0);
        assert!(budget_product(&LossBudget::new()).is_err());
        assert!(LossBudget::from_stages([("bad", 1.5)]).is_err());
    }

    #[test]
    fn clearance_law() {
        assert!((clearance_to_efficiency(14.0).unwrap() - 0.9602).abs() < 1e-4);
        assert_eq!(clearance_to_efficiency(0.0).unwrap(), 0.0);
        assert_eq!(clearance_to_efficiency(f64::INFINITY).unwrap(), 1.0);
        assert!(clearance_to_efficiency(-1.0).is_err());
        // noise-power oracle: V_total = V_shot + V_elec, clearance = V_total / V_elec
        let (v_shot, v_elec) = (24.118_864_315_095_8f64, 1.0f64);
        let c = 10.0 * ((v_shot + v_elec) / v_elec).log10();
        let frac = v_shot / (v_shot + v_elec);
        assert!((clearance_to_efficiency(c).unwrap() - frac).abs() < 1e-12);
        assert!((0.88 * clearance_to_efficiency(14.0).unwrap() / 0.84 - 1.0).abs() < 0.01);
    }
}
