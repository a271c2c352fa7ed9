//! Six-level density-matrix rate equations with the intracavity photon
//! number, and their steady state.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::atomic_data::{AtomicSystem, DecayRates, LEVELS};
use crate::error::{Error, Result};
use crate::gain::GainParams;
use crate::integrator::{numeric_jacobian, Integrator, Method, Stats, StepError, Tolerance};

pub const DIM: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    /// rho_11 .. rho_66
    pub rho: [f64; 6],
    pub rho12_i: f64,
    pub rho12_r: f64,
    pub n: f64,
}

impl SimState {
    /// All atoms in the ground state, empty cavity.
    pub fn vacuum() -> Self {
        let mut rho = [0.0; 6];
        rho[0] = 1.0;
        Self {
            rho,
            rho12_i: 0.0,
            rho12_r: 0.0,
            n: 0.0,
        }
    }

    pub fn to_array(&self) -> [f64; DIM] {
        let r = &self.rho;
        [r[0], r[1], r[2], r[3], r[4], r[5], self.rho12_i, self.rho12_r, self.n]
    }

    pub fn from_array(a: &[f64; DIM]) -> Self {
        Self {
            rho: [a[0], a[1], a[2], a[3], a[4], a[5]],
            rho12_i: a[6],
            rho12_r: a[7],
            n: a[8],
        }
    }

    pub fn trace(&self) -> f64 {
        self.rho.iter().sum()
    }

    /// rho33 - rho44 on the lasing transition.
    pub fn inversion(&self) -> f64 {
        self.rho[2] - self.rho[3]
    }
}

/// Source term of the pump coherence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceForm {
    /// Omega/2 (rho11 - rho22)
    #[default]
    PopulationDifference,
    /// Omega/2 (rho11 - rho12^I), as printed in the source equations
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub rates: DecayRates,
    pub omega: f64,
    pub g: f64,
    pub n_eff: f64,
    pub eta: f64,
    pub kappa0: f64,
    /// Lasing detuning omega - omega0, rad/s.
    pub delta: f64,
    /// Pump detuning, rad/s.
    pub delta_prime: f64,
    pub tau_cyc: f64,
    pub t_int: f64,
    pub coherence: CoherenceForm,
}

impl ModelParams {
    pub fn new(sys: &AtomicSystem, gain: &GainParams, eta: f64, kappa0: f64) -> Self {
        Self {
            rates: sys.rates,
            omega: gain.omega,
            g: gain.g,
            n_eff: gain.n_eff,
            eta,
            kappa0,
            delta: 0.0,
            delta_prime: 0.0,
            tau_cyc: sys.tau_cyc,
            t_int: sys.t_int,
            coherence: CoherenceForm::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 1.0) {
            return Err(Error::Domain(format!("eta must be >= 1, got {}", self.eta)));
        }
        if !(self.tau_cyc > 0.0 && self.t_int > 0.0) {
            return Err(Error::Domain("tau_cyc and t_int must be > 0".into()));
        }
        let vals = [self.omega, self.g, self.n_eff, self.kappa0, self.delta, self.delta_prime];
        if vals.iter().any(|v| !v.is_finite()) || self.omega < 0.0 || self.n_eff < 0.0 || !(self.kappa0 > 0.0) {
            return Err(Error::Domain("model parameters must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Rate scale used to make population residuals dimensionless.
    pub fn rate_scale(&self) -> f64 {
        self.rates.sum() + self.omega + 1.0 / self.tau_cyc
    }
}

/// Generalized Rabi factor 4g^2(n+1)/W^2 * sin^2(W t / 2), W^2 = Delta^2 + 4g^2(n+1).
pub fn rabi_factor(n: f64, g: f64, delta: f64, t: f64) -> f64 {
    let c = 4.0 * g * g * (n + 1.0);
    let w2 = delta * delta + c;
    if w2 == 0.0 {
        return 0.0;
    }
    let s = (0.5 * w2.sqrt() * t).sin();
    c / w2 * s * s
}

pub fn derivatives(s: &SimState, p: &ModelParams) -> SimState {
    SimState::from_array(&rhs(&s.to_array(), p))
}

fn rhs(y: &[f64; DIM], p: &ModelParams) -> [f64; DIM] {
    let r = &p.rates;
    let [r11, r22, r33, r44, r55, r66, ri, rr, n] = *y;
    let stim = (r33 - r44) / p.tau_cyc * rabi_factor(n, p.g, p.delta, p.tau_cyc);
    let gain = p.n_eff * (r33 - r44) / p.tau_cyc * rabi_factor(n, p.g, p.delta, p.t_int);
    let source = match p.coherence {
        CoherenceForm::PopulationDifference => r11 - r22,
        CoherenceForm::Literal => r11 - ri,
    };
    [
        -p.omega * ri + r.g21 * r22 + r.g41 * r44 + r.g61 * r66,
        p.omega * ri - (r.g21 + r.g23 + r.g25) * r22,
        r.g23 * r22 - (r.g34 + r.g36) * r33 - stim,
        r.g34 * r33 + r.g54 * r55 - r.g41 * r44 + stim,
        r.g25 * r22 - (r.g54 + r.g56) * r55,
        r.g36 * r33 + r.g56 * r55 - r.g61 * r66,
        0.5 * p.omega * source + rr * p.delta_prime - 0.5 * r.g21 * ri,
        -ri * p.delta_prime - 0.5 * r.g21 * rr,
        gain - p.eta * p.kappa0 * n,
    ]
}

/// Population/coherence part and photon part of the dimensionless residual.
pub fn residual_parts(y: &[f64; DIM], dy: &[f64; DIM], p: &ModelParams) -> (f64, f64) {
    let pop = dy[..8].iter().fold(0.0f64, |m, v| m.max(v.abs())) / p.rate_scale();
    let photon = dy[8].abs() / (p.eta * p.kappa0 * y[8].abs().max(1.0));
    (pop, photon)
}

pub fn residual(s: &SimState, p: &ModelParams) -> f64 {
    let y = s.to_array();
    let (a, b) = residual_parts(&y, &rhs(&y, p), p);
    a.max(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual target (dimensionless, see [`residual`]).
    pub tol: f64,
    /// Give up after this much simulated time, s.
    pub t_max: f64,
    /// Residual below which a Newton polish is attempted.
    pub polish_below: f64,
    pub rtol: f64,
    /// Lowest population tolerated on the way to steady state. The exact
    /// trajectory of these equations dips below zero (pump coherence damped
    /// at Gamma21/2 only), so the transient bound is looser than `tol`; the
    /// converged state is held to `-tol`.
    pub transient_floor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            t_max: 1e-2,
            polish_below: 1e-6,
            rtol: 1e-7,
            transient_floor: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub state: SimState,
    pub residual: f64,
    /// Simulated time when the solve stopped, s.
    pub t: f64,
    pub stats: Stats,
    pub stiff_switch: bool,
    pub newton_iterations: u32,
}

const NEWTON_MAX: u32 = 40;
/// A polished root must stay this close (relative n) to the trajectory.
const POLISH_MAX_JUMP: f64 = 1e-2;

fn check_state(y: &[f64; DIM], t: f64, floor: f64) -> Result<()> {
    let tol = floor;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Instability {
            t,
            what: "non-finite state".into(),
        });
    }
    for (i, v) in y[..6].iter().enumerate() {
        if *v < -tol {
            return Err(Error::Instability {
                t,
                what: format!("rho{}{} = {v:e} < 0", i + 1, i + 1),
            });
        }
    }
    if y[8] < -tol {
        return Err(Error::Instability {
            t,
            what: format!("n = {:e} < 0", y[8]),
        });
    }
    Ok(())
}

/// Newton iteration on the steady-state equations with the rho11 row
/// replaced by the trace condition.
pub fn newton_polish(p: &ModelParams, y0: &[f64; DIM], tol: f64) -> Option<([f64; DIM], u32)> {
    let f = |y: &[f64; DIM]| rhs(y, p);
    let system = |y: &[f64; DIM]| {
        let mut v = f(y);
        v[0] = y[..6].iter().sum::<f64>() - 1.0;
        v
    };
    let merit = |y: &[f64; DIM], v: &[f64; DIM]| {
        let scale = p.rate_scale();
        let mut m = v[0].abs();
        for x in &v[1..8] {
            m = m.max(x.abs() / scale);
        }
        m.max(v[8].abs() / (p.eta * p.kappa0 * y[8].abs().max(1.0)))
    };
    let mut y = *y0;
    let mut fy = system(&y);
    let mut m = merit(&y, &fy);
    for it in 0..NEWTON_MAX {
        let res = {
            let dy = f(&y);
            let (a, b) = residual_parts(&y, &dy, p);
            a.max(b)
        };
        if res < tol && fy[0].abs() < tol {
            return Some((y, it));
        }
        let mut scale = [1.0; DIM];
        scale[8] = y[8].abs().max(1.0);
        let jac: DMatrix<f64> = numeric_jacobian(&system, &y, &fy, &scale);
        let step = jac.lu().solve(&DVector::from_column_slice(&fy))?;
        let mut lambda = 1.0;
        loop {
            let mut yn = y;
            for i in 0..DIM {
                yn[i] -= lambda * step[i];
            }
            let fn_ = system(&yn);
            let mn = merit(&yn, &fn_);
            if mn.is_finite() && mn < m {
                y = yn;
                fy = fn_;
                m = mn;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-4 {
                return None;
            }
        }
    }
    None
}

/// Integrate from `init` until the dimensionless residual drops below
/// `opts.tol`, finishing with a Newton polish once close.
pub fn integrate_to_steady_state(p: &ModelParams, init: &SimState, opts: &SolverOptions) -> Result<SteadyState> {
    p.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tol must be > 0, got {}", opts.tol)));
    }
    let y0 = init.to_array();
    check_state(&y0, 0.0, opts.tol)?;
    let mut atol = [1e-13; DIM];
    atol[8] = 1e-7;
    let tolerance = Tolerance { rtol: opts.rtol, atol };
    let mut it = Integrator::new(|y: &[f64; DIM]| rhs(y, p), y0, 1e-12, tolerance, Method::Dopri5);
    let mut polish_at = opts.polish_below.max(opts.tol);
    loop {
        let (a, b) = residual_parts(&it.y, it.derivative(), p);
        let res = a.max(b);
        if res < opts.tol {
            check_state(&it.y, it.t, opts.tol)?;
            return Ok(SteadyState {
                state: SimState::from_array(&it.y),
                residual: res,
                t: it.t,
                stats: it.stats,
                stiff_switch: it.switched,
                newton_iterations: 0,
            });
        }
        if res < polish_at {
            if let Some((y, k)) = newton_polish(p, &it.y, opts.tol) {
                let jump = (y[8] - it.y[8]).abs() / it.y[8].abs().max(1.0);
                if jump < POLISH_MAX_JUMP && check_state(&y, it.t, opts.tol).is_ok() {
                    let s = SimState::from_array(&y);
                    return Ok(SteadyState {
                        residual: residual(&s, p),
                        state: s,
                        t: it.t,
                        stats: it.stats,
                        stiff_switch: it.switched,
                        newton_iterations: k,
                    });
                }
            }
            polish_at = (res * 0.1).max(opts.tol);
        }
        if it.t >= opts.t_max {
            return Err(Error::Timeout {
                t: it.t,
                residual: res,
                last: Box::new(SimState::from_array(&it.y)),
            });
        }
        it.step().map_err(|e| match e {
            StepError::StepTooSmall { t, h } => Error::Instability {
                t,
                what: format!("step size underflow (h = {h:e})"),
            },
            StepError::NonFinite { t } => Error::Instability {
                t,
                what: "non-finite derivative".into(),
            },
            StepError::Singular { t } => Error::Instability {
                t,
                what: "singular iteration matrix".into(),
            },
        })?;
        check_state(&it.y, it.t, opts.transient_floor)?;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteadyMode {
    /// Lasing detuning forced to zero.
    Simplified,
    /// Uses the detuning carried by the parameters.
    Full,
}

pub fn steady_state(p: &ModelParams, mode: SteadyMode, opts: &SolverOptions) -> Result<SteadyState> {
    let mut q = *p;
    if mode == SteadyMode::Simplified {
        q.delta = 0.0;
    }
    integrate_to_steady_state(&q, &SimState::vacuum(), opts)
}

pub fn steady_state_photon_number(p: &ModelParams, mode: SteadyMode) -> Result<f64> {
    steady_state(p, mode, &SolverOptions::default()).map(|s| s.state.n)
}

/// Steady-state level populations keyed by level label.
pub fn population_snapshot(p: &ModelParams) -> Result<Vec<(&'static str, f64)>> {
    let s = steady_state(p, SteadyMode::Full, &SolverOptions::default())?;
    Ok(LEVELS.iter().copied().zip(s.state.rho).collect())
}
