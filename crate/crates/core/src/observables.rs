//! Quantities computed from a steady state or in closed form: output power,
//! quantum-limited linewidths, the xi coefficient and cavity pulling.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::atomic_data::AtomicSystem;
use crate::cavity::{loss_coefficient, reflectivity_for_finesse, PhaseShift};
use crate::constants::{C, HBAR, KB, TWO_PI};
use crate::dynamics::{steady_state, ModelParams, SimState, SolverOptions, SteadyMode};
use crate::error::{domain, Error, Result};
use crate::gain::GainParams;
use crate::special::xi_of_z;

pub const DEFAULT_COUPLING_FRACTION: f64 = 0.5;

/// P_out = hbar omega0 n eta kappa0 * fraction.
pub fn output_power(n: f64, eta: f64, kappa0: f64, coupling_fraction: f64, omega0: f64) -> Result<f64> {
    if !(n >= 0.0) {
        return Err(domain(format!("photon number must be >= 0, got {n}")));
    }
    if !(coupling_fraction > 0.0 && coupling_fraction <= 1.0) {
        return Err(domain(format!("coupling fraction must be in (0, 1], got {coupling_fraction}")));
    }
    Ok(HBAR * omega0 * n * eta * kappa0 * coupling_fraction)
}

pub fn xi_coefficient(alpha: f64, beta: f64) -> f64 {
    xi_of_z(beta / alpha)
}

/// n_s = Gamma_eg / (4 g^2) * Gamma_e Gamma_g / (Gamma_e + Gamma_g).
pub fn saturation_photon_number(gamma_e: f64, gamma_g: f64, gamma_eg: f64, g: f64) -> f64 {
    gamma_eg / (4.0 * g * g) * gamma_e * gamma_g / (gamma_e + gamma_g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthParams {
    pub gamma_e: f64,
    pub gamma_g: f64,
    pub gamma_eg: f64,
    pub delta_omega_d: f64,
    pub alpha: f64,
    pub n_s: f64,
}

impl LinewidthParams {
    pub fn from_doppler(sys: &AtomicSystem, g: f64, delta_omega_d: f64) -> Self {
        let (gamma_e, gamma_g, gamma_eg) = sys.lasing_rates();
        Self {
            gamma_e,
            gamma_g,
            gamma_eg,
            delta_omega_d,
            alpha: 2.0 * delta_omega_d / gamma_eg,
            n_s: saturation_photon_number(gamma_e, gamma_g, gamma_eg, g),
        }
    }

    /// Vapor cell: Doppler width of the velocity class |v| <= delta_v/2.
    pub fn thermal(sys: &AtomicSystem, gain: &GainParams) -> Self {
        let dw = 0.5 * gain.delta_v / C * sys.omega_lase();
        Self::from_doppler(sys, gain.g, dw)
    }

    /// Laser-cooled sample at `temperature` (K).
    pub fn cold(sys: &AtomicSystem, g: f64, temperature: f64) -> Self {
        let dw = sys.omega_lase() * (2.0 * KB * temperature / (sys.atomic_mass * C * C)).sqrt();
        Self::from_doppler(sys, g, dw)
    }

    pub fn beta(&self, n: f64) -> f64 {
        (1.0 + n / self.n_s).sqrt()
    }

    pub fn xi(&self, n: f64) -> f64 {
        xi_coefficient(self.alpha, self.beta(n))
    }

    fn bracket_coefficient(&self, xi: f64) -> f64 {
        ((1.0 - xi) * self.gamma_g + 2.0 * (1.0 + xi) * self.gamma_e) / (4.0 * (self.gamma_e + self.gamma_g))
    }
}

/// N_e / (N_e - N_g) with N_e, N_g from rho33, rho44.
pub fn spontaneous_emission_factor(state: &SimState) -> Result<f64> {
    let (e, g) = (state.rho[2], state.rho[3]);
    if !(e > g) {
        return Err(Error::NoInversion { rho33: e, rho44: g });
    }
    Ok(e / (e - g))
}

fn lw_inputs(state: &SimState, eta: f64) -> Result<(f64, f64)> {
    let nsp = spontaneous_emission_factor(state)?;
    if !(state.n > 0.0) {
        return Err(domain(format!("linewidth needs n > 0, got {}", state.n)));
    }
    if !(eta >= 1.0) {
        return Err(domain(format!("eta must be >= 1, got {eta}")));
    }
    Ok((state.n, nsp))
}

/// Bad-cavity linewidth with inhomogeneous broadening, Hz.
pub fn linewidth_general(state: &SimState, gamma: f64, kappa0: f64, lw: &LinewidthParams, eta: f64) -> Result<f64> {
    let (n, nsp) = lw_inputs(state, eta)?;
    let xi = lw.xi(n);
    let bracket = 1.0 / (xi * xi) + lw.bracket_coefficient(xi) / (xi * xi) * n / lw.n_s;
    Ok(gamma * gamma / (4.0 * PI * n * kappa0) * nsp * bracket / eta)
}

/// Large-n limit of [`linewidth_general`]; no explicit n dependence.
pub fn linewidth_power_independent(state: &SimState, gamma: f64, kappa0: f64, lw: &LinewidthParams, eta: f64) -> Result<f64> {
    let (n, nsp) = lw_inputs(state, eta)?;
    let xi = lw.xi(n);
    let bracket = lw.bracket_coefficient(xi) / (xi * xi) / lw.n_s;
    Ok(gamma * gamma / (4.0 * PI * kappa0) * nsp * bracket / eta)
}

/// Form valid for any Gamma'/kappa (before the bad-cavity reduction).
pub fn linewidth_any_cavity(state: &SimState, gamma: f64, kappa0: f64, lw: &LinewidthParams, eta: f64) -> Result<f64> {
    let (n, nsp) = lw_inputs(state, eta)?;
    let xi = lw.xi(n);
    let gp = gamma / xi;
    let kappa = eta * kappa0;
    let f = gp / (gp + kappa);
    Ok(kappa / (4.0 * PI * n) * f * f * nsp * (1.0 + lw.bracket_coefficient(xi) * n / lw.n_s))
}

/// Homogeneous limit (cold atoms, atomic beam); `gamma` is normally Gamma_eg.
pub fn linewidth_homogeneous(state: &SimState, gamma: f64, kappa0: f64, lw: &LinewidthParams, eta: f64) -> Result<f64> {
    let (n, nsp) = lw_inputs(state, eta)?;
    let bracket = 1.0 + lw.gamma_e / (lw.gamma_e + lw.gamma_g) * n / lw.n_s;
    Ok(gamma * gamma / (4.0 * PI * n * kappa0) * nsp * bracket / eta)
}

/// Frequency shift of spontaneous emission vs round-trip phase, rad/s.
pub fn pulling_shift(gamma: f64, finesse: f64, phi: PhaseShift) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(domain(format!("Gamma must be > 0, got {gamma}")));
    }
    Ok(pulling_shift_raw(gamma, finesse, phi.value()))
}

// sin of a wrapped phase, exact at the two symmetry points.
fn phase_sin(phi: f64) -> f64 {
    if phi == 0.0 || phi == PI {
        0.0
    } else {
        phi.sin()
    }
}

fn pulling_shift_raw(gamma: f64, finesse: f64, phi: f64) -> f64 {
    let f2 = (2.0 * finesse / PI).powi(2);
    let s = (0.5 * phi).sin();
    0.25 * gamma * f2 * phase_sin(phi) / (1.0 + f2 * s * s)
}

/// d Delta / d omega_c of the spontaneous-emission shift at resonance and
/// anti-resonance (omega_c = phi * FSR, FSR = F kappa0 / 2 pi).
pub fn pulling_slopes_spontaneous(gamma: f64, kappa0: f64, finesse: f64) -> (f64, f64) {
    let f = 2.0 * finesse / PI;
    let res = f * gamma / kappa0;
    (res, -res / (1.0 + f * f))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullingTable {
    pub resonant_stimulated: f64,
    pub antiresonant_stimulated: f64,
    pub resonant_spontaneous: f64,
    pub antiresonant_spontaneous: f64,
}

pub fn pulling_coefficient_table(gamma: f64, kappa0: f64, finesse: f64) -> Result<PullingTable> {
    if !(gamma > 0.0 && kappa0 > 0.0 && finesse > 0.0) {
        return Err(domain("pulling table needs positive Gamma, kappa0, finesse"));
    }
    let (rs, asp) = pulling_slopes_spontaneous(gamma, kappa0, finesse);
    Ok(PullingTable {
        resonant_stimulated: gamma / kappa0,
        antiresonant_stimulated: -(PI / (2.0 * finesse)).powi(2) * gamma / kappa0,
        resonant_spontaneous: rs,
        antiresonant_spontaneous: asp,
    })
}

/// Stimulated-emission shift from the Airy phase response of a cavity with
/// mirror amplitude product `r`: Delta = (Gamma_eff/kappa0) FSR (1-r)/r
/// atan2(r sin phi, 1 - r cos phi). Its slope vs omega_c is Gamma_eff/kappa0
/// at resonance and -(Gamma_eff/kappa0)(1-r)/(1+r) at anti-resonance.
pub fn stimulated_shift(gamma_eff: f64, kappa0: f64, fsr: f64, finesse: f64, phi: f64) -> f64 {
    let r = reflectivity_for_finesse(finesse);
    gamma_eff / kappa0 * fsr * (1.0 - r) / r * (r * phase_sin(phi)).atan2(1.0 - r * phi.cos())
}

/// Everything the self-consistent pulling loop needs.
#[derive(Debug, Clone, Copy)]
pub struct PullingContext {
    /// Model at resonance; eta is recomputed per phase.
    pub params: ModelParams,
    pub gamma: f64,
    pub lw: LinewidthParams,
    pub fsr: f64,
    pub finesse: f64,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullingResult {
    pub phi: f64,
    /// Self-consistent lasing shift, rad/s.
    pub delta: f64,
    /// d Delta / d omega_c by symmetric difference.
    pub slope: f64,
    pub n: f64,
    pub gamma_eff: f64,
    /// Spontaneous-emission shift at the same phase, rad/s.
    pub delta_spontaneous: f64,
    pub iterations: usize,
}

pub const PULLING_TOL: f64 = TWO_PI * 1e3;
pub const PULLING_MAX_ITER: usize = 100;
const SLOPE_STEP: f64 = 1e-3;

fn selfconsistent_shift(ctx: &PullingContext, phi: f64) -> Result<(f64, f64, f64, usize)> {
    let mut p = ctx.params;
    p.eta = loss_coefficient(ctx.finesse, PhaseShift::new(phi));
    let mut delta = 0.0;
    let mut history = Vec::new();
    for k in 0..PULLING_MAX_ITER {
        p.delta = delta;
        let n = steady_state(&p, SteadyMode::Full, &ctx.solver)?.state.n;
        let gamma_eff = ctx.gamma / ctx.lw.xi(n);
        let next = stimulated_shift(gamma_eff, p.kappa0, ctx.fsr, ctx.finesse, phi);
        history.push(next);
        if (next - delta).abs() < PULLING_TOL {
            return Ok((next, n, gamma_eff, k + 1));
        }
        delta = next;
    }
    Err(Error::PullingNotConverged { history })
}

/// Fixed point Delta = shift(Gamma_eff(n(Delta))), with Gamma_eff =
/// Gamma / xi(alpha, beta(n)) and n from the full-detuning steady state.
pub fn pulling_selfconsistent(ctx: &PullingContext, phi: PhaseShift) -> Result<PullingResult> {
    let x = phi.value();
    let (delta, n, gamma_eff, iterations) = selfconsistent_shift(ctx, x)?;
    let (dp, ..) = selfconsistent_shift(ctx, x + SLOPE_STEP)?;
    let (dm, ..) = selfconsistent_shift(ctx, x - SLOPE_STEP)?;
    // omega_c = phi * FSR
    let slope = (dp - dm) / (2.0 * SLOPE_STEP * ctx.fsr);
    Ok(PullingResult {
        phi: x,
        delta,
        slope,
        n,
        gamma_eff,
        delta_spontaneous: pulling_shift_raw(ctx.gamma, ctx.finesse, x),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic_data::AtomicSystem;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn state(n: f64, r33: f64, r44: f64) -> SimState {
        SimState {
            rho: [1.0 - r33 - r44, 0.0, r33, r44, 0.0, 0.0],
            rho12_i: 0.0,
            rho12_r: 0.0,
            n,
        }
    }

    #[test]
    fn output_power_values() {
        let w = TWO_PI * C / 1470e-9;
        let k = TWO_PI * 257e6;
        assert_eq!(output_power(0.0, 1.0, k, 0.5, w).unwrap(), 0.0);
        let p = output_power(2.70e5, 1.0, k, 0.5, w).unwrap();
        assert!(rel(p, 29.5e-6) < 0.01, "{p:e}");
        assert!(rel(output_power(5.4e5, 1.0, k, 0.5, w).unwrap(), 2.0 * p) < 1e-14);
        assert!(output_power(1.0, 1.0, k, 0.0, w).is_err());
        assert!(output_power(-1.0, 1.0, k, 0.5, w).is_err());
    }

    #[test]
    fn any_cavity_form_reduces_to_bad_cavity() {
        let sys = AtomicSystem::cs_default();
        let lw = LinewidthParams::from_doppler(&sys, 1.99e5, 0.5 * 4.54 * sys.lasing_rates().2);
        let (gamma, k0) = (TWO_PI * 10.04e6, TWO_PI * 257e6);
        for (n, eta) in [(2.85e5, 1.0), (5.77e4, 4.8192), (50.0, 2.0)] {
            let s = state(n, 0.3, 0.1);
            let m4 = linewidth_any_cavity(&s, gamma, k0, &lw, eta).unwrap();
            let m6 = linewidth_general(&s, gamma, k0, &lw, eta).unwrap();
            let (gp, k) = (gamma / lw.xi(n), eta * k0);
            assert!(rel(m4 / m6, (k / (gp + k)).powi(2)) < 1e-12);
            if eta > 4.0 {
                assert!(rel(m4, m6) < 0.05);
            }
        }
    }

    #[test]
    fn xi_pinned() {
        let x = xi_coefficient(4.54, 8.27);
        assert!(rel(x, 0.814_296_198_567_577_5) < 1e-12);
    }

    #[test]
    fn saturation_photons() {
        let sys = AtomicSystem::cs_default();
        let lw = LinewidthParams::from_doppler(&sys, 1.99e5, 25.9e6);
        assert!(rel(lw.n_s, 819.0) < 0.01, "{}", lw.n_s);
        assert!(rel(lw.alpha, 4.54) < 0.01, "{}", lw.alpha);
    }

    #[test]
    fn cold_doppler_width() {
        let sys = AtomicSystem::cs_default();
        let lw = LinewidthParams::cold(&sys, 1.99e5, 200e-6);
        assert!(rel(lw.delta_omega_d, TWO_PI * 0.1e6) < 0.1, "{}", lw.delta_omega_d / TWO_PI);
    }

    #[test]
    fn no_inversion_is_an_error() {
        let sys = AtomicSystem::cs_default();
        let lw = LinewidthParams::from_doppler(&sys, 1.99e5, 25.9e6);
        let s = state(1e5, 0.02, 0.03);
        assert!(matches!(
            linewidth_general(&s, 6.3e7, 1.6e9, &lw, 1.0),
            Err(Error::NoInversion { .. })
        ));
    }

    #[test]
    fn eta_factor_isolated() {
        let sys = AtomicSystem::cs_default();
        let lw = LinewidthParams::from_doppler(&sys, 1.99e5, 25.9e6);
        let s = state(2.8e5, 0.056, 0.025);
        let a = linewidth_general(&s, 6.3e7, 1.6e9, &lw, 1.0).unwrap();
        let b = linewidth_general(&s, 6.3e7, 1.6e9, &lw, 4.82).unwrap();
        assert!(rel(b, a / 4.82) < 1e-14);
        let a = linewidth_power_independent(&s, 6.3e7, 1.6e9, &lw, 1.0).unwrap();
        let b = linewidth_power_independent(&s, 6.3e7, 1.6e9, &lw, 3.0).unwrap();
        assert!(rel(b, a / 3.0) < 1e-14);
    }

    #[test]
    fn large_n_limits() {
        let sys = AtomicSystem::cs_default();
        let lw = LinewidthParams::from_doppler(&sys, 1.99e5, 25.9e6);
        let s = state(1e9, 0.056, 0.025);
        let a = linewidth_general(&s, 6.3e7, 1.6e9, &lw, 1.0).unwrap();
        let b = linewidth_power_independent(&s, 6.3e7, 1.6e9, &lw, 1.0).unwrap();
        assert!(rel(a, b) < 1e-3);
        let c = linewidth_homogeneous(&s, 6.3e7, 1.6e9, &lw, 1.0).unwrap();
        let d = linewidth_homogeneous(&state(1e10, 0.056, 0.025), 6.3e7, 1.6e9, &lw, 1.0).unwrap();
        assert!(rel(c, d) < 1e-4);
    }

    #[test]
    fn homogeneous_limit_of_general_form() {
        let sys = AtomicSystem::cs_default();
        let lw = LinewidthParams::cold(&sys, 1.99e5, 1e-9);
        let s = state(2.8e5, 0.056, 0.025);
        let geg = lw.gamma_eg;
        let a = linewidth_general(&s, geg, 1.6e9, &lw, 1.0).unwrap();
        let b = linewidth_homogeneous(&s, geg, 1.6e9, &lw, 1.0).unwrap();
        assert!(rel(a, b) < 1e-6);
    }

    #[test]
    fn pulling_shift_zeros_and_signs() {
        let g = TWO_PI * 10.04e6;
        assert_eq!(pulling_shift(g, 3.07, PhaseShift::resonant()).unwrap(), 0.0);
        assert_eq!(pulling_shift(g, 3.07, PhaseShift::anti_resonant()).unwrap(), 0.0);
        assert!(pulling_shift(g, 3.07, PhaseShift::new(1.0)).unwrap() > 0.0);
        assert!(pulling_shift(g, 3.07, PhaseShift::new(4.0)).unwrap() < 0.0);
        assert!(pulling_shift(-1.0, 3.07, PhaseShift::new(1.0)).is_err());
    }

    #[test]
    fn spontaneous_slopes_match_numerical_derivative() {
        let (g, k, f) = (TWO_PI * 10.04e6, TWO_PI * 257e6, 3.07);
        let fsr = f * k / TWO_PI;
        let (res, anti) = pulling_slopes_spontaneous(g, k, f);
        assert!((res - 0.0763).abs() < 1e-3);
        assert!((anti + 0.0158).abs() < 1e-3);
        let h = 1e-6;
        let num = |x: f64| (pulling_shift_raw(g, f, x + h) - pulling_shift_raw(g, f, x - h)) / (2.0 * h * fsr);
        assert!(rel(num(0.0), res) < 1e-8);
        assert!(rel(num(PI), anti) < 1e-8);
    }

    #[test]
    fn table_values() {
        let t = pulling_coefficient_table(TWO_PI * 10.04e6, TWO_PI * 257e6, 3.07).unwrap();
        assert!((t.resonant_stimulated - 0.039).abs() < 5e-4);
        assert!((t.antiresonant_stimulated + 0.0102).abs() < 5e-5);
        let far = pulling_coefficient_table(1.0, 10.0, 1e6).unwrap();
        assert!(far.antiresonant_stimulated.abs() < 1e-12);
    }

    #[test]
    fn stimulated_shift_slopes() {
        let (g, k, f) = (TWO_PI * 10.04e6, TWO_PI * 257e6, 3.07);
        let fsr = f * k / TWO_PI;
        let r = reflectivity_for_finesse(f);
        let h = 1e-6;
        let d = |x: f64| (stimulated_shift(g, k, fsr, f, x + h) - stimulated_shift(g, k, fsr, f, x - h)) / (2.0 * h * fsr);
        assert!(rel(d(0.0), g / k) < 1e-8);
        assert!(rel(d(PI), -g / k * (1.0 - r) / (1.0 + r)) < 1e-8);
        assert_eq!(stimulated_shift(g, k, fsr, f, 0.0), 0.0);
        assert_eq!(stimulated_shift(g, k, fsr, f, PI), 0.0);
    }
}
