//! Cs level scheme, decay rates, vapor density and pump saturation intensity.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{C, H, KB, TORR};
use crate::error::{domain, Error, Result};

pub const LEVELS: [&str; 6] = ["6S1/2", "7P1/2", "7S1/2", "6P3/2", "5D3/2", "6P1/2"];

/// Transition keys "ij" that the density-matrix system reads.
pub const RATE_KEYS: [&str; 10] = ["21", "23", "24", "25", "34", "36", "41", "54", "56", "61"];

/// Decay rates in s^-1. Every rate the dynamics needs is a named field, so
/// there is no lookup that can silently fall back to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    pub g21: f64,
    pub g23: f64,
    pub g24: f64,
    pub g25: f64,
    pub g34: f64,
    pub g36: f64,
    pub g41: f64,
    pub g54: f64,
    pub g56: f64,
    pub g61: f64,
}

impl DecayRates {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        Some(match (i, j) {
            (2, 1) => self.g21,
            (2, 3) => self.g23,
            (2, 4) => self.g24,
            (2, 5) => self.g25,
            (3, 4) => self.g34,
            (3, 6) => self.g36,
            (4, 1) => self.g41,
            (5, 4) => self.g54,
            (5, 6) => self.g56,
            (6, 1) => self.g61,
            _ => return None,
        })
    }

    fn from_map(map: &BTreeMap<String, f64>) -> Result<Self> {
        for k in map.keys() {
            if !RATE_KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown decay rate key \"{k}\"")));
            }
        }
        let get = |k: &str| -> Result<f64> {
            map.get(k)
                .copied()
                .ok_or_else(|| Error::Config(format!("missing decay rate \"{k}\"")))
        };
        Ok(Self {
            g21: get("21")?,
            g23: get("23")?,
            g24: get("24")?,
            g25: get("25")?,
            g34: get("34")?,
            g36: get("36")?,
            g41: get("41")?,
            g54: get("54")?,
            g56: get("56")?,
            g61: get("61")?,
        })
    }

    fn to_map(self) -> BTreeMap<String, f64> {
        RATE_KEYS
            .iter()
            .map(|k| {
                let (i, j) = (k.as_bytes()[0] - b'0', k.as_bytes()[1] - b'0');
                (k.to_string(), self.get(i as usize, j as usize).unwrap())
            })
            .collect()
    }

    fn all(&self) -> [f64; 10] {
        [
            self.g21, self.g23, self.g24, self.g25, self.g34, self.g36, self.g41, self.g54,
            self.g56, self.g61,
        ]
    }

    /// Total decay out of the pumped level |2>, as used for pump saturation.
    pub fn pump_level_total(&self) -> f64 {
        self.g21 + self.g23 + self.g24
    }

    /// Sum of every rate; a scale for dimensionless residuals.
    pub fn sum(&self) -> f64 {
        self.all().iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicSystem {
    pub version: u32,
    pub rates: DecayRates,
    /// Pump wavelength (6S1/2 - 7P1/2), m.
    pub lambda_pump: f64,
    /// Lasing wavelength (7S1/2 - 6P3/2), m.
    pub lambda_lase: f64,
    /// Natural decay rate of the lasing transition, s^-1.
    pub gamma0_lase: f64,
    pub dipole_moment: f64,
    pub atomic_mass: f64,
    pub tau_cyc: f64,
    pub t_int: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wavelengths {
    pump: f64,
    lase: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct AtomicFile {
    #[serde(default)]
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    decay_rates: BTreeMap<String, f64>,
    wavelengths_nm: Wavelengths,
    gamma0_MHz_over_2pi: f64,
    #[serde(rename = "dipole_moment_Cm")]
    dipole_moment_cm: f64,
    mass_kg: f64,
    tau_cyc_us: f64,
    t_int_ns: f64,
}

pub const DEFAULT_CONFIG: &str = include_str!("../configs/cs_default.json");
pub const LITERAL_CONFIG: &str = include_str!("../configs/cs_literal.json");

impl AtomicSystem {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: AtomicFile =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("atomic config: {e}")))?;
        let sys = AtomicSystem {
            version: f.version,
            rates: DecayRates::from_map(&f.decay_rates)?,
            lambda_pump: f.wavelengths_nm.pump * 1e-9,
            lambda_lase: f.wavelengths_nm.lase * 1e-9,
            gamma0_lase: 2.0 * PI * f.gamma0_MHz_over_2pi * 1e6,
            dipole_moment: f.dipole_moment_cm,
            atomic_mass: f.mass_kg,
            tau_cyc: f.tau_cyc_us * 1e-6,
            t_int: f.t_int_ns * 1e-9,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn to_json(&self) -> String {
        let f = AtomicFile {
            version: self.version,
            description: None,
            decay_rates: self.rates.to_map(),
            wavelengths_nm: Wavelengths {
                pump: self.lambda_pump * 1e9,
                lase: self.lambda_lase * 1e9,
            },
            gamma0_MHz_over_2pi: self.gamma0_lase / (2.0 * PI) / 1e6,
            dipole_moment_cm: self.dipole_moment,
            mass_kg: self.atomic_mass,
            tau_cyc_us: self.tau_cyc * 1e6,
            t_int_ns: self.t_int * 1e9,
        };
        serde_json::to_string_pretty(&f).expect("serializable")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    /// Shipped defaults (`cs_default.json`).
    pub fn cs_default() -> Self {
        Self::from_json(DEFAULT_CONFIG).expect("shipped config parses")
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        for (k, v) in RATE_KEYS.iter().zip(self.rates.all()) {
            if !pos(v) {
                return Err(Error::Config(format!("decay rate {k} must be > 0, got {v}")));
            }
        }
        let named = [
            ("wavelengths_nm.pump", self.lambda_pump),
            ("wavelengths_nm.lase", self.lambda_lase),
            ("gamma0", self.gamma0_lase),
            ("dipole_moment_Cm", self.dipole_moment),
            ("mass_kg", self.atomic_mass),
            ("tau_cyc_us", self.tau_cyc),
            ("t_int_ns", self.t_int),
        ];
        for (k, v) in named {
            if !pos(v) {
                return Err(Error::Config(format!("{k} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Lasing angular frequency, rad/s.
    pub fn omega_lase(&self) -> f64 {
        2.0 * PI * C / self.lambda_lase
    }

    /// Cycle time from the rate formula 1/Omega + 1/(G23+G25) + 1/(G34+G36) + 1/G41.
    pub fn tau_cyc_from_rates(&self, omega: f64) -> f64 {
        let r = &self.rates;
        1.0 / omega + 1.0 / (r.g23 + r.g25) + 1.0 / (r.g34 + r.g36) + 1.0 / r.g41
    }

    /// Upper/lower lasing-level population decay rates and the polarization
    /// decay rate (Gamma_e, Gamma_g, Gamma_eg).
    pub fn lasing_rates(&self) -> (f64, f64, f64) {
        let r = &self.rates;
        (r.g34 + r.g36, r.g41, r.g34)
    }
}

pub const VAPOR_T_MIN: f64 = 273.0;
pub const VAPOR_T_MAX: f64 = 500.0;
const CALIBRATION_T: f64 = 373.15;
const CALIBRATION_DENSITY: f64 = 1.57e19;

// liquid Cs: log10(P/torr) = 2.881 + 4.165 - 3830/T
fn antoine_density(t: f64) -> f64 {
    let p_torr = 10f64.powf(2.881 + 4.165 - 3830.0 / t);
    p_torr * TORR / (KB * t)
}

/// Factor that pins density(100 C) to the reference value.
pub fn vapor_calibration() -> f64 {
    CALIBRATION_DENSITY / antoine_density(CALIBRATION_T)
}

/// Saturated Cs vapor number density in m^-3.
pub fn vapor_number_density(t: f64) -> Result<f64> {
    if !(t > VAPOR_T_MIN && t < VAPOR_T_MAX) {
        return Err(domain(format!(
            "vapor temperature {t} K outside ({VAPOR_T_MIN}, {VAPOR_T_MAX}) K"
        )));
    }
    Ok(vapor_calibration() * antoine_density(t))
}

/// Pump saturation intensity pi h c Gamma / (3 lambda^3), W/m^2.
pub fn saturation_intensity(sys: &AtomicSystem) -> f64 {
    let lam = sys.lambda_pump;
    PI * H * C * sys.rates.pump_level_total() / (3.0 * lam * lam * lam)
}
