//! Run configuration: which configs to load and what to override.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ilsim::atomic_data::AtomicSystem;
use ilsim::cavity::CavityConfig;
use ilsim::constants::{MW_PER_MM2, TWO_PI, ZERO_CELSIUS};
use ilsim::scenario::{Pins, Scenario};
use ilsim::{Error, Result};

pub const CONFIG_DIR_ENV: &str = "ILSIM_CONFIG_DIR";
pub const ATOMIC_FILE: &str = "cs_default.json";
pub const CAVITY_FILE: &str = "cavity_default.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainMode {
    /// g, Omega, N_eff at the quoted 10 mW/mm^2, 100 C values.
    #[default]
    Pinned,
    /// Everything from the pump/vapor chain.
    Derived,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct PumpOverrides {
    pub intensity_mW_mm2: Option<f64>,
    pub temp_C: Option<f64>,
    pub detuning_MHz: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub tol: Option<f64>,
    pub rtol: Option<f64>,
    pub t_max_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub atomic: Option<PathBuf>,
    #[serde(default)]
    pub cavity: Option<PathBuf>,
    #[serde(default)]
    pub pump: PumpOverrides,
    #[serde(default)]
    pub gain: GainMode,
    #[serde(default)]
    pub solver: SolverOverrides,
    #[serde(default)]
    pub coupling_fraction: Option<f64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Runs never draw random numbers; only `true` is accepted.
    #[serde(default = "yes")]
    pub deterministic: bool,
}

fn yes() -> bool {
    true
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            atomic: None,
            cavity: None,
            pump: PumpOverrides::default(),
            gain: GainMode::default(),
            solver: SolverOverrides::default(),
            coupling_fraction: None,
            out_dir: None,
            deterministic: true,
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(cfg_err(format!("{name} must be > 0, got {x}"))),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| cfg_err(format!("run config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Reads a run config; relative paths inside resolve against its folder.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut c = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut c.atomic, &mut c.cavity, &mut c.out_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.deterministic {
            return Err(cfg_err("deterministic must be true"));
        }
        positive("solver.tol", self.solver.tol)?;
        positive("solver.rtol", self.solver.rtol)?;
        positive("solver.t_max_s", self.solver.t_max_s)?;
        if let Some(x) = self.pump.intensity_mW_mm2 {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(cfg_err(format!("pump intensity must be >= 0, got {x}")));
            }
        }
        for (name, v) in [("pump.temp_C", self.pump.temp_C), ("pump.detuning_MHz", self.pump.detuning_MHz)] {
            if v.is_some_and(|x| !x.is_finite()) {
                return Err(cfg_err(format!("{name} must be finite")));
            }
        }
        if let Some(f) = self.coupling_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(cfg_err(format!("coupling_fraction must be in (0, 1], got {f}")));
            }
        }
        Ok(())
    }

    /// Builds the scenario. Config files come from this run config, then
    /// from `config_dir`, then the shipped defaults.
    pub fn scenario(&self, config_dir: Option<&Path>) -> Result<Scenario> {
        let pick = |own: &Option<PathBuf>, name: &str| -> Option<PathBuf> {
            own.clone().or_else(|| config_dir.map(|d| d.join(name)).filter(|p| p.exists()))
        };
        let mut sc = match self.gain {
            GainMode::Pinned => Scenario::reference(),
            GainMode::Derived => Scenario::derived(),
        };
        if let Some(p) = pick(&self.atomic, ATOMIC_FILE) {
            sc.atomic = AtomicSystem::load(&p)?;
        }
        if let Some(p) = pick(&self.cavity, CAVITY_FILE) {
            sc.cavity = CavityConfig::load(&p)?;
        }
        if let Some(i) = self.pump.intensity_mW_mm2 {
            sc.pump.intensity = i * MW_PER_MM2;
        }
        if let Some(t) = self.pump.temp_C {
            sc.pump.temperature = t + ZERO_CELSIUS;
        }
        if let Some(d) = self.pump.detuning_MHz {
            sc.pump.delta_prime = TWO_PI * d * 1e6;
        }
        if self.gain == GainMode::Pinned && (self.pump.intensity_mW_mm2.is_some() || self.pump.temp_C.is_some()) {
            // the pinned values belong to one pump/vapor point
            sc.pins = Pins {
                g: sc.pins.g,
                ..Pins::default()
            };
        }
        if let Some(v) = self.solver.tol {
            sc.solver.tol = v;
        }
        if let Some(v) = self.solver.rtol {
            sc.solver.rtol = v;
        }
        if let Some(v) = self.solver.t_max_s {
            sc.solver.t_max = v;
        }
        if let Some(f) = self.coupling_fraction {
            sc.coupling_fraction = f;
        }
        sc.pump.validate()?;
        Ok(sc)
    }
}
