//! Command-line front end for the `ilsim` laser model.

pub mod config;
pub mod figures;

use serde::Serialize;

use ilsim::cavity::{detuning_to_phase, PhaseShift};
use ilsim::constants::TWO_PI;
use ilsim::gain::GainParams;
use ilsim::scenario::{Report, Scenario};
use ilsim::{Error, Result};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

/// Bad input of any kind maps to 2, failures of the numerics to 3.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::Io { .. } | Error::Parse(_) => EXIT_CONFIG,
        Error::Timeout { .. }
        | Error::Instability { .. }
        | Error::NoInversion { .. }
        | Error::PullingNotConverged { .. }
        | Error::ThresholdNotFound(_) => EXIT_SOLVER,
    }
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    #[serde(flatten)]
    pub report: Report,
    pub finesse: f64,
    /// rad/s
    pub kappa0: f64,
    /// Hz
    pub fsr: f64,
    pub gain: GainParams,
}

/// Phase from `--dphi` text or a cavity detuning in MHz.
pub fn phase_from_args(dphi: Option<&str>, detuning_mhz: Option<f64>, sc: &Scenario) -> Result<PhaseShift> {
    match (dphi, detuning_mhz) {
        (Some(_), Some(_)) => Err(Error::Config("give either --dphi or --detuning-mhz".into())),
        (Some(s), None) => s.parse().map_err(|e: Error| Error::Config(e.to_string())),
        (None, Some(d)) => detuning_to_phase(TWO_PI * d * 1e6, sc.mode()?.fsr),
        (None, None) => Ok(PhaseShift::resonant()),
    }
}

pub fn simulate(sc: &Scenario, phi: PhaseShift) -> Result<SimulateReport> {
    let mode = sc.mode()?;
    let gain = sc.gain(&mode)?;
    Ok(SimulateReport {
        report: sc.evaluate(phi)?,
        finesse: mode.finesse,
        kappa0: mode.kappa0,
        fsr: mode.fsr,
        gain,
    })
}
