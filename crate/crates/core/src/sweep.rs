//! One-dimensional parameter sweeps, threshold extraction and record I/O.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomic_data::vapor_number_density;
use crate::cavity::PhaseShift;
use crate::constants::{MW_PER_MM2, ZERO_CELSIUS};
use crate::dynamics::{steady_state, SteadyMode};
use crate::error::{domain, Error, Result};
use crate::observables::{pulling_selfconsistent, pulling_shift};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Round-trip phase, rad.
    DeltaPhi,
    /// mW/mm^2.
    PumpIntensity,
    /// Degrees C.
    CellTemperature,
    /// Both mirrors.
    Reflectivity,
}

impl SweepVariable {
    pub fn unit(&self) -> &'static str {
        match self {
            Self::DeltaPhi => "rad",
            Self::PumpIntensity => "mW/mm^2",
            Self::CellTemperature => "degC",
            Self::Reflectivity => "1",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::DeltaPhi => "delta_phi",
            Self::PumpIntensity => "pump_intensity",
            Self::CellTemperature => "cell_temperature",
            Self::Reflectivity => "reflectivity",
        }
    }

    fn check(&self, x: f64) -> Result<()> {
        let ok = match self {
            Self::DeltaPhi => x.is_finite(),
            Self::PumpIntensity => x >= 0.0 && x.is_finite(),
            Self::CellTemperature => vapor_number_density(x + ZERO_CELSIUS).is_ok(),
            Self::Reflectivity => x > 0.0 && x < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(domain(format!("{} = {x} is outside its domain", self.name())))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeffMode {
    /// Keep the scenario's N_eff (pinned, or derived at its base point).
    Fixed,
    /// Rederive N_eff from the swept intensity or temperature.
    Recomputed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PullingOutput {
    /// Closed-form spontaneous-emission shift.
    Spontaneous,
    /// Self-consistent stimulated shift and its slope (slow).
    SelfConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl SweepRange {
    pub fn new(lo: f64, hi: f64, count: usize) -> Self {
        Self { lo, hi, count }
    }

    pub fn points(&self) -> Vec<f64> {
        let m = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.hi } else { self.lo + (self.hi - self.lo) * i as f64 / m })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub range: SweepRange,
    pub scenario: Scenario,
    /// Phase used when the phase is not the swept variable.
    pub phi: PhaseShift,
    pub neff_mode: NeffMode,
    pub steady_mode: SteadyMode,
    pub pulling: PullingOutput,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, range: SweepRange, scenario: Scenario) -> Self {
        Self {
            variable,
            range,
            scenario,
            phi: PhaseShift::resonant(),
            neff_mode: NeffMode::Recomputed,
            steady_mode: SteadyMode::Simplified,
            pulling: PullingOutput::Spontaneous,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.range;
        if r.count < 2 {
            return Err(domain(format!("sweep needs at least 2 points, got {}", r.count)));
        }
        if !(r.lo < r.hi) {
            return Err(domain(format!("empty sweep range [{}, {}]", r.lo, r.hi)));
        }
        self.variable.check(r.lo)?;
        self.variable.check(r.hi)
    }

    /// Scenario and phase for one grid value.
    pub fn point(&self, x: f64) -> Result<(Scenario, PhaseShift)> {
        let mut sc = self.scenario.clone();
        let mut phi = self.phi;
        let fixed_neff = |sc: &Scenario| -> Result<f64> {
            let mode = sc.mode()?;
            Ok(sc.gain(&mode)?.n_eff)
        };
        match self.variable {
            SweepVariable::DeltaPhi => phi = PhaseShift::new(x),
            SweepVariable::Reflectivity => sc.reflectivity = Some(x),
            SweepVariable::PumpIntensity | SweepVariable::CellTemperature => {
                if self.neff_mode == NeffMode::Fixed {
                    sc.pins.n_eff = Some(fixed_neff(&sc)?);
                } else {
                    sc.pins.n_eff = None;
                }
                if self.variable == SweepVariable::PumpIntensity {
                    sc.pins.omega = None;
                    sc.pump.intensity = x * MW_PER_MM2;
                } else {
                    sc.pump.temperature = x + ZERO_CELSIUS;
                }
            }
        }
        Ok((sc, phi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub x: f64,
    pub eta: Option<f64>,
    /// s
    pub tau: Option<f64>,
    pub n: Option<f64>,
    pub rho11: Option<f64>,
    pub rho22: Option<f64>,
    pub rho33: Option<f64>,
    pub rho44: Option<f64>,
    pub rho55: Option<f64>,
    pub rho66: Option<f64>,
    /// W
    pub p_out: Option<f64>,
    /// rad/s
    pub delta: Option<f64>,
    /// d omega / d omega_c
    pub slope: Option<f64>,
    /// Closed-form spontaneous-emission shift, rad/s.
    pub delta_spontaneous: Option<f64>,
    /// Hz
    pub linewidth: Option<f64>,
    /// Hz
    pub linewidth_cold: Option<f64>,
    pub n_sp: Option<f64>,
    pub converged: bool,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

impl SweepRecord {
    fn failed(x: f64, err: &Error) -> Self {
        let residual = match err {
            Error::Timeout { residual, .. } => Some(*residual),
            _ => None,
        };
        Self {
            x,
            eta: None,
            tau: None,
            n: None,
            rho11: None,
            rho22: None,
            rho33: None,
            rho44: None,
            rho55: None,
            rho66: None,
            p_out: None,
            delta: None,
            slope: None,
            delta_spontaneous: None,
            linewidth: None,
            linewidth_cold: None,
            n_sp: None,
            converged: false,
            residual,
            error: Some(err.to_string()),
        }
    }
}

pub const COLUMNS: [(&str, &str); 20] = [
    ("x", "see variable"),
    ("eta", "1"),
    ("tau", "s"),
    ("n", "1"),
    ("rho11", "1"),
    ("rho22", "1"),
    ("rho33", "1"),
    ("rho44", "1"),
    ("rho55", "1"),
    ("rho66", "1"),
    ("p_out", "W"),
    ("delta", "rad/s"),
    ("slope", "1"),
    ("delta_spontaneous", "rad/s"),
    ("linewidth", "Hz"),
    ("linewidth_cold", "Hz"),
    ("n_sp", "1"),
    ("converged", "bool"),
    ("residual", "1"),
    ("error", "text"),
];

fn evaluate_point(spec: &SweepSpec, x: f64) -> Result<SweepRecord> {
    let (sc, phi) = spec.point(x)?;
    let mode = sc.mode()?;
    let gain = sc.gain(&mode)?;
    let mut p = sc.model(&mode, &gain, phi);
    let spont = pulling_shift(gain.gamma, mode.finesse, phi)?;
    let (delta, slope) = match spec.pulling {
        PullingOutput::Spontaneous => (spont, None),
        PullingOutput::SelfConsistent => {
            let r = pulling_selfconsistent(&sc.pulling_context()?, phi)?;
            (r.delta, Some(r.slope))
        }
    };
    p.delta = delta;
    let ss = steady_state(&p, spec.steady_mode, &sc.solver)?;
    let rep = sc.report_for(&mode, &gain, &p, phi, &ss.state, ss.residual);
    let [r1, r2, r3, r4, r5, r6] = rep.rho;
    Ok(SweepRecord {
        x,
        eta: Some(rep.eta),
        tau: Some(rep.tau),
        n: Some(rep.n),
        rho11: Some(r1),
        rho22: Some(r2),
        rho33: Some(r3),
        rho44: Some(r4),
        rho55: Some(r5),
        rho66: Some(r6),
        p_out: Some(rep.p_out),
        delta: Some(delta),
        slope,
        delta_spontaneous: Some(spont),
        linewidth: rep.linewidth,
        linewidth_cold: rep.linewidth_cold,
        n_sp: rep.n_sp,
        converged: ss.residual < sc.solver.tol,
        residual: Some(ss.residual),
        error: None,
    })
}

/// One steady-state solve per grid point on `workers` threads (0 = rayon
/// default). Output is in grid order whatever the worker count; failed points
/// are kept with `converged = false`.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let xs = spec.range.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        xs.par_iter()
            .map(|&x| evaluate_point(spec, x).unwrap_or_else(|e| SweepRecord::failed(x, &e)))
            .collect()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// Where P_out jumps from spontaneous level to lasing, in the swept
    /// variable's units.
    pub value: f64,
    /// First lasing point on the coarse grid.
    pub knee: f64,
    /// Zero intercept of a line through the upper half of a window one
    /// coarse step either side of the threshold. Diagnostic only: above
    /// threshold P_out climbs in plateaus, so this depends on the window.
    pub intercept: Option<f64>,
    pub bisections: usize,
}

pub const REFINE_COUNT: usize = 21;
pub const BISECT_MAX: usize = 40;

/// Index of the first point after the largest step in ln P_out. Zero-power
/// points (no pump) are skipped. The lasing branch itself hops between
/// roots, so curvature on a linear scale does not single out threshold.
pub fn knee_index(records: &[SweepRecord]) -> Result<usize> {
    let pts: Vec<(usize, f64)> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.converged)
        .filter_map(|(i, r)| r.p_out.filter(|p| *p > 0.0).map(|p| (i, p.ln())))
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for w in pts.windows(2) {
        let step = w[1].1 - w[0].1;
        if best.is_none_or(|(_, v)| step > v) {
            best = Some((w[1].0, step));
        }
    }
    match best {
        Some((i, step)) if step > KNEE_MIN_LOG_STEP => Ok(i),
        _ => Err(Error::ThresholdNotFound("no jump in P_out over the sweep range".into())),
    }
}

/// Smallest jump in ln P_out between neighbouring grid points that counts
/// as the lasing onset (a factor of 10).
pub const KNEE_MIN_LOG_STEP: f64 = std::f64::consts::LN_10;

/// Least-squares line through the upper half (by x) of the converged
/// points; returns (intercept on the x axis, slope, points used).
pub fn upper_branch_intercept(records: &[SweepRecord]) -> Result<(f64, f64, usize)> {
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.converged)
        .filter_map(|r| r.p_out.map(|p| (r.x, p)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lo, hi) = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return Err(Error::ThresholdNotFound("no converged points".into())),
    };
    let mid = 0.5 * (lo + hi);
    let upper: Vec<_> = pts.into_iter().filter(|p| p.0 >= mid).collect();
    if upper.len() < 2 {
        return Err(Error::ThresholdNotFound("too few points above the midpoint".into()));
    }
    let m = upper.len() as f64;
    let mx = upper.iter().map(|p| p.0).sum::<f64>() / m;
    let my = upper.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = upper.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = upper.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::ThresholdNotFound(format!("upper branch not rising (slope {slope:e})")));
    }
    Ok((mx - my / slope, slope, upper.len()))
}

fn log_power(spec: &SweepSpec, x: f64) -> Option<f64> {
    evaluate_point(spec, x)
        .ok()
        .filter(|r| r.converged)
        .and_then(|r| r.p_out)
        .filter(|p| *p > 0.0)
        .map(f64::ln)
}

/// Coarse sweep to find the knee, then bisection of the bracketing grid
/// interval: a midpoint counts as lasing when ln P_out is past the middle
/// of the bracket's two values.
pub fn find_threshold(spec: &SweepSpec, workers: usize) -> Result<Threshold> {
    if !matches!(spec.variable, SweepVariable::PumpIntensity | SweepVariable::CellTemperature) {
        return Err(domain("threshold needs an intensity or temperature sweep"));
    }
    let coarse = run_sweep(spec, workers)?;
    let k = knee_index(&coarse)?;
    let h = (spec.range.hi - spec.range.lo) / (spec.range.count - 1) as f64;
    let (mut a, mut b) = (coarse[k - 1].x, coarse[k].x);
    let lp = |r: &SweepRecord| r.p_out.filter(|p| *p > 0.0).map(f64::ln);
    let (mut la, lb) = match (lp(&coarse[k - 1]), lp(&coarse[k])) {
        (Some(x), Some(y)) => (x, y),
        (None, Some(y)) => (y - KNEE_MIN_LOG_STEP, y),
        _ => return Err(Error::ThresholdNotFound("knee without lasing power".into())),
    };
    let mut bisections = 0;
    while bisections < BISECT_MAX && b - a > 1e-6 * h {
        let mid = 0.5 * (a + b);
        let Some(lm) = log_power(spec, mid) else {
            return Err(Error::ThresholdNotFound(format!("solve failed at {mid}")));
        };
        if lm > 0.5 * (la + lb) {
            b = mid;
        } else {
            a = mid;
            la = lm;
        }
        bisections += 1;
    }
    let value = 0.5 * (a + b);
    let mut window = spec.clone();
    window.range = SweepRange::new((value - h).max(spec.range.lo), value + h, REFINE_COUNT);
    let intercept = run_sweep(&window, workers)
        .ok()
        .and_then(|r| upper_branch_intercept(&r).ok())
        .map(|(x0, ..)| x0);
    Ok(Threshold {
        value,
        knee: coarse[k].x,
        intercept,
        bisections,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Jsonl => "jsonl",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            _ => Err(Error::Config(format!("unknown format {s:?} (csv, jsonl)"))),
        }
    }
}

pub fn to_csv(records: &[SweepRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    if records.is_empty() {
        w.write_record(COLUMNS.iter().map(|c| c.0)).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn to_jsonl(records: &[SweepRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Parse(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().ne(COLUMNS.iter().map(|c| c.0)) {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    rd.deserialize()
        .map(|r| r.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

pub fn parse_jsonl(text: &str) -> Result<Vec<SweepRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1))))
        .collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn schema_path(path: &Path) -> PathBuf {
    path.with_extension("schema.json")
}

pub fn schema_json(variable: SweepVariable, format: Format) -> String {
    let cols: Vec<_> = COLUMNS
        .iter()
        .map(|(name, unit)| {
            let unit = if *name == "x" { variable.unit() } else { unit };
            serde_json::json!({ "name": name, "unit": unit })
        })
        .collect();
    let v = serde_json::json!({
        "format": format.extension(),
        "variable": variable.name(),
        "columns": cols,
    });
    serde_json::to_string_pretty(&v).expect("static schema serializes") + "\n"
}

/// Writes the records and a `*.schema.json` sidecar next to them.
pub fn export(records: &[SweepRecord], variable: SweepVariable, path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv(records)?,
        Format::Jsonl => to_jsonl(records)?,
    };
    write(path, &text)?;
    write(&schema_path(path), &schema_json(variable, format))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rec(x: f64, p: f64) -> SweepRecord {
        SweepRecord {
            x,
            eta: Some(1.0),
            tau: Some(6.2e-10),
            n: Some(p * 1e10),
            rho11: Some(0.5),
            rho22: Some(0.1),
            rho33: Some(0.05),
            rho44: Some(0.02),
            rho55: Some(0.03),
            rho66: Some(0.3),
            p_out: Some(p),
            delta: Some(0.0),
            slope: None,
            delta_spontaneous: Some(0.0),
            linewidth: Some(171.8),
            linewidth_cold: None,
            n_sp: Some(1.82),
            converged: true,
            residual: Some(3e-12),
            error: None,
        }
    }

    #[test]
    fn grid_endpoints() {
        let p = SweepRange::new(0.0, 2.0 * PI, 7).points();
        assert_eq!(p.len(), 7);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[6], 2.0 * PI);
    }

    #[test]
    fn validation() {
        let mk = |v, lo, hi, n| SweepSpec::new(v, SweepRange::new(lo, hi, n), Scenario::reference());
        assert!(mk(SweepVariable::DeltaPhi, 1.0, 1.0, 5).validate().is_err());
        assert!(mk(SweepVariable::DeltaPhi, 0.0, 1.0, 1).validate().is_err());
        assert!(mk(SweepVariable::Reflectivity, 0.3, 1.0, 3).validate().is_err());
        assert!(mk(SweepVariable::PumpIntensity, -1.0, 1.0, 3).validate().is_err());
        assert!(mk(SweepVariable::CellTemperature, 20.0, 400.0, 3).validate().is_err());
        assert!(mk(SweepVariable::CellTemperature, 20.0, 150.0, 3).validate().is_ok());
    }

    #[test]
    fn csv_shape_and_round_trip() {
        let mut rs = vec![rec(0.1, 1e-6), rec(0.2, 2e-6), rec(0.3, 3e-6)];
        rs[1].linewidth = None;
        rs[2] = SweepRecord::failed(0.3, &Error::Domain("bad, \"quoted\"".into()));
        let text = to_csv(&rs).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(to_csv(&rs).unwrap(), text);
        assert_eq!(parse_csv(&text).unwrap(), rs);
        let j = to_jsonl(&rs).unwrap();
        assert_eq!(parse_jsonl(&j).unwrap(), rs);
    }

    #[test]
    fn empty_csv_has_header() {
        let t = to_csv(&[]).unwrap();
        assert_eq!(t.lines().count(), 1);
        assert!(parse_csv(&t).unwrap().is_empty());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_csv("a,b\n1,2\n").is_err());
        assert!(parse_jsonl("{\"x\": 1}\n").is_err());
        assert!(parse_jsonl("not json").is_err());
    }

    #[test]
    fn export_writes_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        export(&[rec(0.0, 1.0)], SweepVariable::PumpIntensity, &path, Format::Csv).unwrap();
        let schema: serde_json::Value = serde_json::from_str(&fs::read_to_string(schema_path(&path)).unwrap()).unwrap();
        assert_eq!(schema["columns"][0]["unit"], "mW/mm^2");
        assert_eq!(schema["columns"].as_array().unwrap().len(), COLUMNS.len());
        let bad = dir.path().join("missing/a.csv");
        assert!(matches!(
            export(&[], SweepVariable::DeltaPhi, &bad, Format::Csv),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn knee_and_intercept_on_a_hinge() {
        let rs: Vec<_> = (0..21)
            .map(|i| {
                let x = i as f64 * 0.5;
                rec(x, (2.0 * (x - 3.2)).max(0.0) + 1e-9)
            })
            .collect();
        assert_eq!(rs[knee_index(&rs).unwrap()].x, 3.5);
        let (x0, s, m) = upper_branch_intercept(&rs).unwrap();
        assert!((x0 - 3.2).abs() < 1e-8);
        assert!((s - 2.0).abs() < 1e-10);
        assert_eq!(m, 11);
    }

    #[test]
    fn no_threshold_in_a_straight_line() {
        let rs: Vec<_> = (1..10).map(|i| rec(i as f64, i as f64)).collect();
        assert!(matches!(knee_index(&rs), Err(Error::ThresholdNotFound(_))));
        let flat: Vec<_> = (0..10).map(|i| rec(i as f64, 0.0)).collect();
        assert!(upper_branch_intercept(&flat).is_err());
    }

    #[test]
    fn phase_sweep_is_symmetric() {
        let spec = SweepSpec::new(SweepVariable::DeltaPhi, SweepRange::new(0.0, 2.0 * PI, 9), Scenario::reference());
        let rs = run_sweep(&spec, 2).unwrap();
        let n: Vec<f64> = rs.iter().map(|r| r.n.unwrap()).collect();
        assert!(rs.iter().all(|r| r.converged));
        let imax = n.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let imin = n.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(imax == 0 || imax == 8);
        assert_eq!(imin, 4);
        for i in 1..4 {
            assert!(((n[i] - n[8 - i]) / n[i]).abs() < 1e-6, "{} {}", n[i], n[8 - i]);
        }
    }
}
