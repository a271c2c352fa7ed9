//! Pump physics and velocity-selective capture: Rabi frequency, pump
//! broadening, Doppler chain, atom numbers and atom-cavity coupling.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::atomic_data::{saturation_intensity, vapor_number_density, AtomicSystem};
use crate::cavity::{CavityConfig, CavityMode};
use crate::constants::{C, EPS0, H, HBAR, KB};
use crate::error::{domain, Result};
use crate::special::erf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpVaporConfig {
    /// Pump intensity, W/m^2.
    pub intensity: f64,
    /// Pump detuning, rad/s.
    pub delta_prime: f64,
    /// Cell temperature, K.
    pub temperature: f64,
}

impl PumpVaporConfig {
    /// Lab units: mW/mm^2 and degrees C.
    pub fn from_lab(intensity_mw_mm2: f64, temp_c: f64) -> Self {
        Self {
            intensity: intensity_mw_mm2 * crate::constants::MW_PER_MM2,
            delta_prime: 0.0,
            temperature: temp_c + crate::constants::ZERO_CELSIUS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return Err(domain(format!("pump intensity must be >= 0, got {}", self.intensity)));
        }
        if !self.delta_prime.is_finite() {
            return Err(domain("pump detuning must be finite"));
        }
        vapor_number_density(self.temperature).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainParams {
    pub omega: f64,
    pub gamma2: f64,
    /// Full velocity capture width, m/s.
    pub delta_v: f64,
    pub gamma_d: f64,
    pub gamma: f64,
    pub n_atoms: f64,
    pub n_eff: f64,
    pub g: f64,
}

/// Omega = sqrt(3 lambda^3 Gamma21 I / (2 pi h c)).
pub fn rabi_frequency(intensity: f64, sys: &AtomicSystem) -> f64 {
    let lam = sys.lambda_pump;
    (3.0 * lam.powi(3) * sys.rates.g21 * intensity.max(0.0) / (2.0 * PI * H * C)).sqrt()
}

pub fn pump_broadened_width(intensity: f64, sys: &AtomicSystem) -> f64 {
    let s = intensity.max(0.0) / saturation_intensity(sys);
    sys.rates.pump_level_total() * (1.0 + s).sqrt()
}

/// (delta_v, Gamma_D, Gamma) from the pump-broadened width.
pub fn doppler_chain(gamma2: f64, sys: &AtomicSystem) -> (f64, f64, f64) {
    let dv = gamma2 / (2.0 * PI) * sys.lambda_pump;
    let gamma_d = 2.0 * PI * dv / sys.lambda_lase;
    (dv, gamma_d, sys.gamma0_lase + gamma_d)
}

/// N = n'(T) pi L_cell w0^2 / 4.
pub fn atoms_in_mode(temperature: f64, mode: &CavityMode, cfg: &CavityConfig) -> Result<f64> {
    let n = vapor_number_density(temperature)?;
    Ok(0.25 * n * PI * cfg.cell_length * mode.w0 * mode.w0)
}

fn capture_argument(delta_v: f64, temperature: f64, sys: &AtomicSystem) -> f64 {
    0.5 * delta_v * (sys.atomic_mass / (2.0 * KB * temperature)).sqrt()
}

/// Atoms with |v| <= delta_v/2 out of a Maxwell distribution.
pub fn effective_atom_number(n: f64, delta_v: f64, temperature: f64, sys: &AtomicSystem) -> f64 {
    n * erf(capture_argument(delta_v, temperature, sys))
}

/// Same as [`effective_atom_number`] by direct integration of the 1-D
/// Maxwell velocity density.
pub fn effective_atom_number_quadrature(
    n: f64,
    delta_v: f64,
    temperature: f64,
    sys: &AtomicSystem,
) -> f64 {
    let x = capture_argument(delta_v, temperature, sys);
    if x <= 0.0 {
        return 0.0;
    }
    let out = quadrature::double_exponential::integrate(|u| (-u * u).exp(), 0.0, x, 1e-15 * x);
    n * 2.0 / PI.sqrt() * out.integral
}

/// g = (mu / hbar) sqrt(hbar omega0 / (2 eps0 V_c)).
pub fn coupling_constant(sys: &AtomicSystem, mode: &CavityMode) -> f64 {
    let w = sys.omega_lase();
    sys.dipole_moment / HBAR * (HBAR * w / (2.0 * EPS0 * mode.v_c)).sqrt()
}

pub fn derive(
    pump: &PumpVaporConfig,
    sys: &AtomicSystem,
    mode: &CavityMode,
    cfg: &CavityConfig,
) -> Result<GainParams> {
    pump.validate()?;
    let omega = rabi_frequency(pump.intensity, sys);
    let gamma2 = pump_broadened_width(pump.intensity, sys);
    let (delta_v, gamma_d, gamma) = doppler_chain(gamma2, sys);
    let n_atoms = atoms_in_mode(pump.temperature, mode, cfg)?;
    let n_eff = effective_atom_number(n_atoms, delta_v, pump.temperature, sys);
    Ok(GainParams {
        omega,
        gamma2,
        delta_v,
        gamma_d,
        gamma,
        n_atoms,
        n_eff,
        g: coupling_constant(sys, mode),
    })
}
