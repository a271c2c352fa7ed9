//! Passive resonator: Gaussian mode of a plano-concave cavity, emission
//! enhancement/inhibition, loss coefficient and phase bookkeeping.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::{C, TWO_PI};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CavityConfig {
    /// Mirror spacing, m.
    pub length: f64,
    /// Radius of curvature of the concave mirror, m.
    pub radius: f64,
    pub r1: f64,
    pub r2: f64,
    /// Vapor-cell length, m.
    pub cell_length: f64,
    /// Measured kappa0 in rad/s; replaces the value derived from the mirrors.
    pub kappa0_override: Option<f64>,
    pub finesse_override: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct CavityFile {
    L_mm: f64,
    r_mm: f64,
    R1: f64,
    R2: f64,
    L_cell_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa0_MHz_over_2pi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    finesse_override: Option<f64>,
}

pub const DEFAULT_CONFIG: &str = include_str!("../configs/cavity_default.json");

impl CavityConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: CavityFile =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("cavity config: {e}")))?;
        let cfg = CavityConfig {
            length: f.L_mm * 1e-3,
            radius: f.r_mm * 1e-3,
            r1: f.R1,
            r2: f.R2,
            cell_length: f.L_cell_mm * 1e-3,
            kappa0_override: f.kappa0_MHz_over_2pi.map(|k| TWO_PI * k * 1e6),
            finesse_override: f.finesse_override,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let f = CavityFile {
            L_mm: self.length * 1e3,
            r_mm: self.radius * 1e3,
            R1: self.r1,
            R2: self.r2,
            L_cell_mm: self.cell_length * 1e3,
            kappa0_MHz_over_2pi: self.kappa0_override.map(|k| k / TWO_PI / 1e6),
            finesse_override: self.finesse_override,
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

    pub fn reference() -> Self {
        Self::from_json(DEFAULT_CONFIG).expect("shipped config parses")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad(format!("L must be > 0, got {}", self.length));
        }
        if !(self.radius > self.length && self.radius.is_finite()) {
            return bad(format!(
                "unstable resonator: need 0 < L < r (L = {}, r = {})",
                self.length, self.radius
            ));
        }
        for (name, r) in [("R1", self.r1), ("R2", self.r2)] {
            if !(r > 0.0 && r < 1.0) {
                return bad(format!("{name} must be in (0, 1), got {r}"));
            }
        }
        if !(self.cell_length > 0.0 && self.cell_length <= self.length) {
            return bad(format!(
                "L_cell must be in (0, L], got {}",
                self.cell_length
            ));
        }
        if let Some(k) = self.kappa0_override {
            if !(k > 0.0 && k.is_finite()) {
                return bad(format!("kappa0 override must be > 0, got {k}"));
            }
        }
        if let Some(f) = self.finesse_override {
            if !(f > 0.0 && f.is_finite()) {
                return bad(format!("finesse override must be > 0, got {f}"));
            }
        }
        Ok(())
    }

    /// Geometric-mean mirror reflectivity.
    pub fn mean_reflectivity(&self) -> f64 {
        (self.r1 * self.r2).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityMode {
    /// Spot radius on the concave mirror, m.
    pub w_s1: f64,
    /// Spot radius on the plane mirror (the waist), m.
    pub w_s2: f64,
    pub w0: f64,
    /// Equivalent mode volume, m^3.
    pub v_c: f64,
    /// Free spectral range, Hz.
    pub fsr: f64,
    /// Resonant dissipation rate in use, rad/s.
    pub kappa0: f64,
    /// Dissipation rate from mirror loss and round-trip time, rad/s.
    pub kappa0_mirrors: f64,
    /// FSR / (kappa0 / 2 pi), or the override.
    pub finesse: f64,
    /// pi sqrt(R) / (1 - R) with R the geometric-mean reflectivity.
    pub finesse_reflectivity: f64,
}

pub fn mode_from_geometry(cfg: &CavityConfig, wavelength: f64) -> Result<CavityMode> {
    cfg.validate().map_err(|e| domain(e.to_string()))?;
    let l = cfg.length;
    let g = 1.0 - l / cfg.radius;
    if !(g > 0.0 && g < 1.0) {
        return Err(domain(format!("unstable resonator, g = {g}")));
    }
    let z_r = (l * (cfg.radius - l)).sqrt();
    let waist = (wavelength * z_r / PI).sqrt();
    let w_curved = waist * (1.0 + (l / z_r).powi(2)).sqrt();
    let w0 = 0.5 * (w_curved + waist);
    let v_c = 0.25 * l * PI * w0 * w0;
    let fsr = C / (2.0 * l);
    let kappa0_mirrors = -(cfg.r1 * cfg.r2).ln() * fsr;
    let kappa0 = cfg.kappa0_override.unwrap_or(kappa0_mirrors);
    let finesse = cfg
        .finesse_override
        .unwrap_or(fsr / (kappa0 / TWO_PI));
    let r = cfg.mean_reflectivity();
    Ok(CavityMode {
        w_s1: w_curved,
        w_s2: waist,
        w0,
        v_c,
        fsr,
        kappa0,
        kappa0_mirrors,
        finesse,
        finesse_reflectivity: PI * r.sqrt() / (1.0 - r),
    })
}

impl CavityMode {
    /// Same cavity with both mirrors replaced by reflectivity `r`. kappa0 is
    /// scaled by the ratio of round-trip log losses, keeping any measured
    /// calibration; finesse follows from FSR/kappa0.
    pub fn with_reflectivity(&self, cfg: &CavityConfig, r: f64) -> Result<CavityMode> {
        if !(r > 0.0 && r < 1.0) {
            return Err(domain(format!("reflectivity must be in (0, 1), got {r}")));
        }
        let scale = (r * r).ln() / (cfg.r1 * cfg.r2).ln();
        let kappa0 = self.kappa0 * scale;
        Ok(CavityMode {
            kappa0,
            kappa0_mirrors: self.kappa0_mirrors * scale,
            finesse: self.fsr / (kappa0 / TWO_PI),
            finesse_reflectivity: PI * r.sqrt() / (1.0 - r),
            ..*self
        })
    }
}

/// Round-trip phase of the intracavity field. The value is kept in [0, 2 pi)
/// together with the number of whole turns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShift {
    delta_phi: f64,
    winding: i64,
}

impl PhaseShift {
    pub fn new(rad: f64) -> Self {
        let turns = (rad / TWO_PI).floor();
        let mut d = rad - turns * TWO_PI;
        let mut w = turns as i64;
        if d >= TWO_PI {
            d -= TWO_PI;
            w += 1;
        }
        if d < 0.0 {
            d += TWO_PI;
            w -= 1;
        }
        Self {
            delta_phi: d,
            winding: w,
        }
    }

    pub fn resonant() -> Self {
        Self::new(0.0)
    }

    pub fn anti_resonant() -> Self {
        Self::new(PI)
    }

    /// Phase reduced to [0, 2 pi).
    pub fn value(&self) -> f64 {
        self.delta_phi
    }

    pub fn winding(&self) -> i64 {
        self.winding
    }

    /// Unwrapped phase.
    pub fn total(&self) -> f64 {
        self.winding as f64 * TWO_PI + self.delta_phi
    }

    pub fn is_resonant(&self, tol: f64) -> bool {
        self.delta_phi <= tol || TWO_PI - self.delta_phi <= tol
    }

    pub fn is_anti_resonant(&self, tol: f64) -> bool {
        (self.delta_phi - PI).abs() <= tol
    }
}

impl fmt::Display for PhaseShift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.total())
    }
}

/// Accepts radians ("1.2") or multiples of pi ("pi", "-pi", "0.5pi",
/// "3*pi/4", "pi/2").
impl FromStr for PhaseShift {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::Parse(format!("invalid phase \"{s}\""));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(err());
        }
        let lower = t.to_ascii_lowercase();
        let v = if let Some(pos) = lower.find("pi") {
            let head = &lower[..pos];
            let tail = &lower[pos + 2..];
            let head = head.strip_suffix('*').unwrap_or(head);
            let coef = match head {
                "" | "+" => 1.0,
                "-" => -1.0,
                h => parse_plain(h).ok_or_else(err)?,
            };
            let div = match tail {
                "" => 1.0,
                t => {
                    let d = t.strip_prefix('/').ok_or_else(err)?;
                    let d = parse_plain(d).ok_or_else(err)?;
                    if d == 0.0 {
                        return Err(err());
                    }
                    d
                }
            };
            coef * PI / div
        } else {
            parse_plain(&lower).ok_or_else(err)?
        };
        if !v.is_finite() || v.abs() > 1e12 {
            return Err(err());
        }
        Ok(PhaseShift::new(v))
    }
}

fn parse_plain(s: &str) -> Option<f64> {
    // f64::from_str also takes "inf"/"nan", which are not phases
    if !s
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e'))
    {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Power emitted into the cavity relative to free space,
/// (1 - R^2) / (1 + R^2 - 2 R cos dphi).
pub fn emission_ratio(r: f64, phi: PhaseShift) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(domain(format!("reflectivity must be in [0, 1), got {r}")));
    }
    let c = phi.value().cos();
    Ok((1.0 - r * r) / (1.0 + r * r - 2.0 * r * c))
}

/// eta = 1 + (2F/pi)^2 sin^2(dphi/2).
pub fn loss_coefficient(finesse: f64, phi: PhaseShift) -> f64 {
    let f = 2.0 * finesse / PI;
    let s = (0.5 * phi.value()).sin();
    1.0 + f * f * s * s
}

pub fn eta_max(finesse: f64) -> f64 {
    let f = 2.0 * finesse / PI;
    1.0 + f * f
}

/// tau = 1 / (eta kappa0).
pub fn photon_lifetime(eta: f64, kappa0: f64) -> Result<f64> {
    if !(eta >= 1.0) || !(kappa0 > 0.0) {
        return Err(domain(format!(
            "photon lifetime needs eta >= 1 and kappa0 > 0 (eta = {eta}, kappa0 = {kappa0})"
        )));
    }
    Ok(1.0 / (eta * kappa0))
}

/// Cavity detuning omega_c - omega_0 (rad/s) to round-trip phase; one FSR
/// maps to 2 pi.
pub fn detuning_to_phase(detuning: f64, fsr: f64) -> Result<PhaseShift> {
    if !(fsr > 0.0) {
        return Err(domain(format!("FSR must be > 0, got {fsr}")));
    }
    Ok(PhaseShift::new(detuning / fsr))
}

pub fn phase_to_detuning(phi: f64, fsr: f64) -> f64 {
    phi * fsr
}

/// Inverse of F = pi sqrt(R) / (1 - R).
pub fn reflectivity_for_finesse(finesse: f64) -> f64 {
    // sqrt(R) solves F x^2 + pi x - F = 0
    let x = (-PI + (PI * PI + 4.0 * finesse * finesse).sqrt()) / (2.0 * finesse);
    x * x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn default_mode() -> CavityMode {
        mode_from_geometry(&CavityConfig::reference(), 1470e-9).unwrap()
    }

    #[test]
    fn reference_geometry() {
        let m = default_mode();
        assert!(rel(m.w_s1, 0.429e-3) < 0.01, "{}", m.w_s1);
        assert!(rel(m.w_s2, 0.337e-3) < 0.01, "{}", m.w_s2);
        assert!(rel(m.v_c, 21.89e-9) < 0.01, "{}", m.v_c);
        assert!(rel(m.fsr, 789e6) < 1e-3);
        assert!(rel(m.kappa0, TWO_PI * 257e6) < 0.02);
        assert!((m.finesse - 3.07).abs() < 0.02, "{}", m.finesse);
        assert!(rel(m.finesse, m.fsr / (m.kappa0 / TWO_PI)) < 1e-9);
    }

    #[test]
    fn mirror_derived_kappa_and_reflectivity_finesse() {
        let m = default_mode();
        assert!(rel(m.kappa0_mirrors, TWO_PI * 267.1e6) < 0.01);
        assert!(rel(m.finesse_reflectivity, 2.81) < 0.01);
    }

    #[test]
    fn reflectivity_finesse_matches_fsr_finesse_near_unity() {
        let mut cfg = CavityConfig::reference();
        cfg.kappa0_override = None;
        for r in [0.99, 0.995, 0.999] {
            cfg.r1 = r;
            cfg.r2 = r;
            let m = mode_from_geometry(&cfg, 1470e-9).unwrap();
            assert!(rel(m.finesse, m.finesse_reflectivity) < 0.05);
        }
    }

    #[test]
    fn lossless_limit() {
        let mut cfg = CavityConfig::reference();
        cfg.kappa0_override = None;
        cfg.r1 = 1.0 - 1e-9;
        cfg.r2 = 1.0 - 1e-9;
        let m = mode_from_geometry(&cfg, 1470e-9).unwrap();
        assert!(m.kappa0 < 2.0);
        assert!(m.finesse > 1e9);
    }

    #[test]
    fn unstable_geometry_rejected() {
        let mut cfg = CavityConfig::reference();
        cfg.radius = 0.1;
        assert!(matches!(
            mode_from_geometry(&cfg, 1470e-9),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn scale_consistency_with_mirror_kappa() {
        let mut cfg = CavityConfig::reference();
        cfg.kappa0_override = None;
        let a = mode_from_geometry(&cfg, 1470e-9).unwrap();
        let mut cfg2 = cfg.clone();
        cfg2.length *= 2.0;
        cfg2.radius *= 2.0;
        cfg2.cell_length *= 2.0;
        let b = mode_from_geometry(&cfg2, 1470e-9).unwrap();
        assert!(rel(1.0 / b.fsr, 2.0 / a.fsr) < 1e-12);
        assert!(rel(b.finesse, a.finesse) < 1e-9);
        assert_eq!(a, mode_from_geometry(&cfg, 1470e-9).unwrap());
    }

    #[test]
    fn emission_ratio_values() {
        let r = 0.345;
        let e0 = emission_ratio(r, PhaseShift::resonant()).unwrap();
        assert!(rel(e0, (1.0 + r) / (1.0 - r)) < 1e-14);
        assert!(rel(e0, 2.053) < 1e-3);
        let ep = emission_ratio(r, PhaseShift::anti_resonant()).unwrap();
        assert!(rel(ep, (1.0 - r) / (1.0 + r)) < 1e-14);
        assert!(rel(ep, 0.487) < 1e-3);
        assert_eq!(emission_ratio(0.0, PhaseShift::new(1.3)).unwrap(), 1.0);
        assert!(emission_ratio(1.0, PhaseShift::resonant()).is_err());
    }

    #[test]
    fn loss_coefficient_values() {
        assert_eq!(loss_coefficient(3.07, PhaseShift::new(4.0 * PI)), 1.0);
        assert!((loss_coefficient(3.07, PhaseShift::anti_resonant()) - 4.820).abs() < 1e-3);
        assert!((loss_coefficient(3.07, PhaseShift::new(PI / 2.0)) - 2.910).abs() < 1e-3);
    }

    #[test]
    fn lifetimes() {
        let k = TWO_PI * 257e6;
        assert!(rel(photon_lifetime(1.0, k).unwrap(), 619e-12) < 1e-3);
        assert!(rel(photon_lifetime(4.820, k).unwrap(), 128.5e-12) < 1e-3);
        assert!(rel(photon_lifetime(1.0, 2.0 * k).unwrap(), 309.7e-12) < 1e-3);
        assert!(photon_lifetime(0.5, k).is_err());
    }

    #[test]
    fn detuning_mapping() {
        let fsr = 789e6;
        let p = detuning_to_phase(TWO_PI * fsr, fsr).unwrap();
        assert_eq!(p.winding(), 1);
        assert!(p.value().abs() < 1e-12);
        let p = detuning_to_phase(PI * fsr, fsr).unwrap();
        assert!((p.value() - PI).abs() < 1e-12);
        let p = detuning_to_phase(TWO_PI * 197.25e6, fsr).unwrap();
        assert!((p.value() - PI / 2.0).abs() < 1e-12);
        assert!(detuning_to_phase(1.0, 0.0).is_err());
    }

    #[test]
    fn phase_parse() {
        let cases = [
            ("pi", PI),
            ("0.5pi", 0.5 * PI),
            ("pi/2", PI / 2.0),
            ("3*pi/4", 0.75 * PI),
            ("1.2", 1.2),
            ("2pi", TWO_PI),
            ("-pi/2", -PI / 2.0),
            (" 0 ", 0.0),
        ];
        for (s, v) in cases {
            let p: PhaseShift = s.parse().unwrap();
            assert!((p.total() - v).abs() < 1e-12, "{s}");
        }
        for s in ["", "p", "pi/", "pi/0", "x*pi", "inf", "nan", "pi pi", "1e400"] {
            assert!(s.parse::<PhaseShift>().is_err(), "{s}");
        }
    }

    #[test]
    fn phase_wrapping() {
        let p = PhaseShift::new(-0.1);
        assert_eq!(p.winding(), -1);
        assert!((p.value() - (TWO_PI - 0.1)).abs() < 1e-12);
        assert!(PhaseShift::new(TWO_PI * 3.0).is_resonant(1e-9));
        assert!(PhaseShift::new(PI * 5.0).is_anti_resonant(1e-9));
    }

    #[test]
    fn reflectivity_finesse_inverse() {
        for f in [0.5, 2.81, 3.07, 100.0] {
            let r = reflectivity_for_finesse(f);
            assert!(rel(PI * r.sqrt() / (1.0 - r), f) < 1e-12);
        }
        assert!((reflectivity_for_finesse(3.07) - 0.37410).abs() < 1e-4);
    }

    #[test]
    fn reflectivity_rescaling() {
        let cfg = CavityConfig::reference();
        let m = mode_from_geometry(&cfg, 1470e-9).unwrap();
        let same = m.with_reflectivity(&cfg, 0.345).unwrap();
        assert!(rel(same.kappa0, m.kappa0) < 1e-12);
        let hi = m.with_reflectivity(&cfg, 0.80).unwrap();
        assert!(hi.kappa0 < m.kappa0);
        assert!(hi.finesse > m.finesse);
    }
}
