//! A complete parameter snapshot and single-point evaluation.

use serde::{Deserialize, Serialize};

use crate::atomic_data::AtomicSystem;
use crate::cavity::{loss_coefficient, mode_from_geometry, photon_lifetime, CavityConfig, CavityMode, PhaseShift};
use crate::dynamics::{steady_state, CoherenceForm, ModelParams, SimState, SolverOptions, SteadyMode};
use crate::error::Result;
use crate::gain::{derive, GainParams, PumpVaporConfig};
use crate::observables::{
    linewidth_general, linewidth_homogeneous, linewidth_power_independent, output_power, pulling_selfconsistent,
    pulling_shift, spontaneous_emission_factor, LinewidthParams, PullingContext, PullingResult,
    DEFAULT_COUPLING_FRACTION,
};

/// Values that replace the derived gain chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Pins {
    pub g: Option<f64>,
    pub omega: Option<f64>,
    pub n_eff: Option<f64>,
}

impl Pins {
    /// g, Omega and N_eff as quoted for 10 mW/mm^2 and 100 C.
    pub fn reference() -> Self {
        Self {
            g: Some(1.99e5),
            omega: Some(4.30e7),
            n_eff: Some(5.71e9),
        }
    }
}

pub const COLD_TEMPERATURE: f64 = 200e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub atomic: AtomicSystem,
    pub cavity: CavityConfig,
    pub pump: PumpVaporConfig,
    pub pins: Pins,
    pub solver: SolverOptions,
    pub coherence: CoherenceForm,
    pub coupling_fraction: f64,
    /// Replaces the mirror reflectivities (both mirrors), rescaling kappa0.
    pub reflectivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub phi: f64,
    pub eta: f64,
    /// Photon lifetime, s.
    pub tau: f64,
    pub n: f64,
    pub rho: [f64; 6],
    pub rho12_i: f64,
    pub rho12_r: f64,
    /// W.
    pub p_out: f64,
    /// Spontaneous-emission pulling shift, rad/s.
    pub delta: f64,
    pub n_sp: Option<f64>,
    pub beta: f64,
    pub xi: f64,
    /// Thermal linewidth, Hz; absent without inversion.
    pub linewidth: Option<f64>,
    pub linewidth_power_independent: Option<f64>,
    /// Same steady state, cold-atom broadening, Hz.
    pub linewidth_cold: Option<f64>,
    pub residual: f64,
}

impl Scenario {
    /// Shipped configs at 10 mW/mm^2, 100 C with the chain derived end to end.
    pub fn derived() -> Self {
        Self {
            atomic: AtomicSystem::cs_default(),
            cavity: CavityConfig::reference(),
            pump: PumpVaporConfig::from_lab(10.0, 100.0),
            pins: Pins::default(),
            solver: SolverOptions::default(),
            coherence: CoherenceForm::default(),
            coupling_fraction: DEFAULT_COUPLING_FRACTION,
            reflectivity: None,
        }
    }

    /// Same, with g, Omega and N_eff pinned to the quoted values.
    pub fn reference() -> Self {
        Self {
            pins: Pins::reference(),
            ..Self::derived()
        }
    }

    pub fn mode(&self) -> Result<CavityMode> {
        let base = mode_from_geometry(&self.cavity, self.atomic.lambda_lase)?;
        match self.reflectivity {
            Some(r) => base.with_reflectivity(&self.cavity, r),
            None => Ok(base),
        }
    }

    pub fn gain(&self, mode: &CavityMode) -> Result<GainParams> {
        let mut g = derive(&self.pump, &self.atomic, mode, &self.cavity)?;
        if let Some(v) = self.pins.g {
            g.g = v;
        }
        if let Some(v) = self.pins.omega {
            g.omega = v;
        }
        if let Some(v) = self.pins.n_eff {
            g.n_eff = v;
        }
        Ok(g)
    }

    pub fn model(&self, mode: &CavityMode, gain: &GainParams, phi: PhaseShift) -> ModelParams {
        let mut p = ModelParams::new(&self.atomic, gain, loss_coefficient(mode.finesse, phi), mode.kappa0);
        p.delta_prime = self.pump.delta_prime;
        p.coherence = self.coherence;
        p
    }

    pub fn thermal_linewidth_params(&self, gain: &GainParams) -> LinewidthParams {
        LinewidthParams::thermal(&self.atomic, gain)
    }

    pub fn evaluate(&self, phi: PhaseShift) -> Result<Report> {
        let mode = self.mode()?;
        let gain = self.gain(&mode)?;
        let p = self.model(&mode, &gain, phi);
        let ss = steady_state(&p, SteadyMode::Simplified, &self.solver)?;
        Ok(self.report_for(&mode, &gain, &p, phi, &ss.state, ss.residual))
    }

    pub fn report_for(
        &self,
        mode: &CavityMode,
        gain: &GainParams,
        p: &ModelParams,
        phi: PhaseShift,
        s: &SimState,
        residual: f64,
    ) -> Report {
        let lw = self.thermal_linewidth_params(gain);
        let cold = LinewidthParams::cold(&self.atomic, gain.g, COLD_TEMPERATURE);
        let n = s.n.max(0.0);
        Report {
            phi: phi.value(),
            eta: p.eta,
            tau: photon_lifetime(p.eta, p.kappa0).unwrap_or(f64::NAN),
            n: s.n,
            rho: s.rho,
            rho12_i: s.rho12_i,
            rho12_r: s.rho12_r,
            p_out: output_power(n, p.eta, p.kappa0, self.coupling_fraction, self.atomic.omega_lase()).unwrap_or(f64::NAN),
            delta: pulling_shift(gain.gamma, mode.finesse, phi).unwrap_or(f64::NAN),
            n_sp: spontaneous_emission_factor(s).ok(),
            beta: lw.beta(n),
            xi: lw.xi(n),
            linewidth: linewidth_general(s, gain.gamma, p.kappa0, &lw, p.eta).ok(),
            linewidth_power_independent: linewidth_power_independent(s, gain.gamma, p.kappa0, &lw, p.eta).ok(),
            linewidth_cold: linewidth_homogeneous(s, cold.gamma_eg, p.kappa0, &cold, p.eta).ok(),
            residual,
        }
    }

    pub fn pulling_context(&self) -> Result<PullingContext> {
        let mode = self.mode()?;
        let gain = self.gain(&mode)?;
        Ok(PullingContext {
            params: self.model(&mode, &gain, PhaseShift::resonant()),
            gamma: gain.gamma,
            lw: self.thermal_linewidth_params(&gain),
            fsr: mode.fsr,
            finesse: mode.finesse,
            solver: self.solver,
        })
    }

    pub fn pulling(&self, phi: PhaseShift) -> Result<PullingResult> {
        pulling_selfconsistent(&self.pulling_context()?, phi)
    }
}
