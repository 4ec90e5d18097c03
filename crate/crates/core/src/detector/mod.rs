//! Classical signal chain of the homodyne detector and its characterisation.

mod bandwidth;
mod budget;
mod cmrr;
mod linearity;
mod mzi;
mod spec;
mod spectrum;
mod trace;

pub use bandwidth::{butterworth_power_response, fit_butterworth, ButterworthFit, OrderSelection};
pub use budget::{budget_product, clearance_to_efficiency, BudgetReport, LossBudget};
pub use cmrr::{cmrr, CmrrSettings, DEFAULT_CMRR_CEILING_DB};
pub use linearity::{linearity_fit, LinearityFit, MIN_DEVIATION_DB};
pub use mzi::{pid_lock_mzi, LockOutcome, MziState, PidGains, LOCK_SETPOINT};
pub use spec::{DetectorParams, DetectorSpec};
pub use spectrum::{band_power_mw, clearance_spectrum_db, simulate_output_spectrum};
pub use trace::NoiseTrace;
