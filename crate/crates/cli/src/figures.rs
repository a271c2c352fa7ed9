//! Datasets behind each figure and table.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use ilsim::cavity::PhaseShift;
use ilsim::constants::{MW_PER_MM2, ZERO_CELSIUS};
use ilsim::dynamics::SteadyMode;
use ilsim::gain::{derive, PumpVaporConfig};
use ilsim::observables::pulling_coefficient_table;
use ilsim::scenario::{Pins, Scenario};
use ilsim::sweep::{
    export, find_threshold, run_sweep, schema_path, Format, NeffMode, PullingOutput, SweepRange, SweepRecord,
    SweepSpec, SweepVariable, Threshold,
};
use ilsim::{Error, Result};

pub const FIGURES: [&str; 10] = [
    "fig2a", "fig2b", "fig2c", "fig3b", "expfig1", "expfig2", "expfig3", "expfig4", "expfig5", "table1",
];

pub const PHASE_POINTS: usize = 61;
pub const FIG3B_TEMPS_C: [f64; 3] = [100.0, 110.0, 120.0];
pub const TABLE1_TEMP_C: f64 = 120.0;

/// SHA-256 over everything that determines a run's numbers.
pub fn config_hash(sc: &Scenario) -> String {
    let text = format!(
        "{}\n{}\n{}\n{}\n{}\n{:?}\n{}\n{:?}",
        sc.atomic.to_json(),
        sc.cavity.to_json(),
        serde_json::to_string(&sc.pump).expect("serializable"),
        serde_json::to_string(&sc.pins).expect("serializable"),
        serde_json::to_string(&sc.solver).expect("serializable"),
        sc.coherence,
        sc.coupling_fraction,
        sc.reflectivity,
    );
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    figure: &'a str,
    config_hash: String,
    tol: f64,
    rtol: f64,
    t_max_s: f64,
    files: Vec<FileEntry>,
}

pub struct FigureRun<'a> {
    name: &'a str,
    dir: &'a Path,
    workers: usize,
    format: Format,
    base: Scenario,
    files: Vec<PathBuf>,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

impl<'a> FigureRun<'a> {
    /// `base` supplies the atomic/cavity configs and solver settings; each
    /// figure then fixes its own pump point and gain mode.
    pub fn new(name: &'a str, base: &Scenario, dir: &'a Path, workers: usize, format: Format) -> Self {
        let mut base = base.clone();
        base.pump = PumpVaporConfig {
            delta_prime: base.pump.delta_prime,
            ..PumpVaporConfig::from_lab(10.0, 100.0)
        };
        base.reflectivity = None;
        Self {
            name,
            dir,
            workers,
            format,
            base,
            files: Vec::new(),
        }
    }

    fn pinned(&self) -> Scenario {
        Scenario {
            pins: Pins::reference(),
            ..self.base.clone()
        }
    }

    fn derived(&self) -> Scenario {
        Scenario {
            pins: Pins::default(),
            ..self.base.clone()
        }
    }

    fn text(&mut self, file: &str, body: &str) -> Result<()> {
        let path = self.dir.join(file);
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn records(&mut self, stem: &str, variable: SweepVariable, recs: &[SweepRecord]) -> Result<()> {
        let path = self.dir.join(format!("{stem}.{}", self.format.extension()));
        export(recs, variable, &path, self.format)?;
        self.files.push(schema_path(&path));
        self.files.push(path);
        Ok(())
    }

    fn sweep(&self, spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
        run_sweep(spec, self.workers)
    }

    fn phase_spec(&self, sc: Scenario) -> SweepSpec {
        SweepSpec::new(SweepVariable::DeltaPhi, SweepRange::new(0.0, 2.0 * PI, PHASE_POINTS), sc)
    }

    pub fn run(mut self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(self.dir).map_err(|e| io_err(self.dir, e))?;
        match self.name {
            "fig2a" => {
                let mut spec = self.phase_spec(self.pinned());
                spec.range.count = 121;
                let r = self.sweep(&spec)?;
                self.records("fig2a", SweepVariable::DeltaPhi, &r)?;
            }
            "fig2b" => self.threshold_figure("fig2b", SweepVariable::PumpIntensity, SweepRange::new(0.0, 10.0, 41))?,
            "fig2c" => self.threshold_figure("fig2c", SweepVariable::CellTemperature, SweepRange::new(40.0, 130.0, 37))?,
            "fig3b" => {
                for t in FIG3B_TEMPS_C {
                    let mut sc = self.derived();
                    sc.pump.temperature = t + ZERO_CELSIUS;
                    let mut spec = SweepSpec::new(SweepVariable::DeltaPhi, SweepRange::new(-PI, PI, 25), sc);
                    spec.pulling = PullingOutput::SelfConsistent;
                    spec.steady_mode = SteadyMode::Full;
                    let r = self.sweep(&spec)?;
                    self.records(&format!("fig3b_T{t:.0}"), SweepVariable::DeltaPhi, &r)?;
                }
            }
            "expfig1" => {
                let r = self.sweep(&self.phase_spec(self.pinned()))?;
                self.records("expfig1", SweepVariable::DeltaPhi, &r)?;
            }
            "expfig2" => {
                let simple = self.sweep(&self.phase_spec(self.pinned()))?;
                let mut spec = self.phase_spec(self.pinned());
                spec.steady_mode = SteadyMode::Full;
                let full = self.sweep(&spec)?;
                let mut out = String::from("delta_phi,n_zero_detuning,n_full_detuning,difference\n");
                for (a, b) in simple.iter().zip(&full) {
                    let (na, nb) = (a.n.unwrap_or(f64::NAN), b.n.unwrap_or(f64::NAN));
                    let _ = writeln!(out, "{},{},{},{}", a.x, na, nb, na - nb);
                }
                self.text("expfig2.csv", &out)?;
            }
            "expfig3" => self.expfig3()?,
            "expfig4" => {
                for r in [0.345, 0.80] {
                    let mut sc = self.pinned();
                    sc.reflectivity = Some(r);
                    let recs = self.sweep(&self.phase_spec(sc))?;
                    self.records(&format!("expfig4_R{r:.3}"), SweepVariable::DeltaPhi, &recs)?;
                }
                let mut spec = SweepSpec::new(SweepVariable::Reflectivity, SweepRange::new(0.30, 0.95, 27), self.pinned());
                spec.phi = PhaseShift::anti_resonant();
                let recs = self.sweep(&spec)?;
                self.records("expfig4_reflectivity", SweepVariable::Reflectivity, &recs)?;
            }
            "expfig5" => {
                let r = self.sweep(&self.phase_spec(self.pinned()))?;
                self.records("expfig5", SweepVariable::DeltaPhi, &r)?;
            }
            "table1" => self.table1()?,
            other => {
                return Err(Error::Config(format!(
                    "unknown figure {other:?}; valid names: {}",
                    FIGURES.join(", ")
                )))
            }
        }
        self.manifest()
    }

    fn threshold_figure(&mut self, stem: &str, variable: SweepVariable, range: SweepRange) -> Result<()> {
        let mut rows = String::from("phase,threshold,knee,intercept\n");
        for (label, phi) in [("resonant", PhaseShift::resonant()), ("antiresonant", PhaseShift::anti_resonant())] {
            let mut spec = SweepSpec::new(variable, range, self.derived());
            spec.phi = phi;
            spec.neff_mode = NeffMode::Recomputed;
            let r = self.sweep(&spec)?;
            self.records(&format!("{stem}_{label}"), variable, &r)?;
            match find_threshold(&spec, self.workers) {
                Ok(Threshold { value, knee, intercept, .. }) => {
                    let ic = intercept.map(|v| v.to_string()).unwrap_or_default();
                    let _ = writeln!(rows, "{label},{value},{knee},{ic}");
                }
                Err(Error::ThresholdNotFound(_)) => {
                    let _ = writeln!(rows, "{label},,,");
                }
                Err(e) => return Err(e),
            }
        }
        self.text(&format!("{stem}_thresholds.csv"), &rows)
    }

    fn expfig3(&mut self) -> Result<()> {
        let sc = self.derived();
        let mode = sc.mode()?;
        let mut a = String::from("intensity_mw_mm2,n_eff,omega\n");
        for i in 0..=40 {
            let x = 0.5 * i as f64;
            let mut pump = sc.pump;
            pump.intensity = x * MW_PER_MM2;
            let g = derive(&pump, &sc.atomic, &mode, &sc.cavity)?;
            let _ = writeln!(a, "{x},{},{}", g.n_eff, g.omega);
        }
        self.text("expfig3a.csv", &a)?;
        let mut b = String::from("temperature_c,n_atoms,n_eff\n");
        for i in 0..=36 {
            let t = 40.0 + 2.5 * i as f64;
            let mut pump = sc.pump;
            pump.temperature = t + ZERO_CELSIUS;
            let g = derive(&pump, &sc.atomic, &mode, &sc.cavity)?;
            let _ = writeln!(b, "{t},{},{}", g.n_atoms, g.n_eff);
        }
        self.text("expfig3b.csv", &b)
    }

    fn table1(&mut self) -> Result<()> {
        let mut sc = self.derived();
        let mode = sc.mode()?;
        let gain = sc.gain(&mode)?;
        let t = pulling_coefficient_table(gain.gamma, mode.kappa0, mode.finesse)?;
        sc.pump.temperature = TABLE1_TEMP_C + ZERO_CELSIUS;
        let res = sc.pulling(PhaseShift::resonant())?;
        let anti = sc.pulling(PhaseShift::anti_resonant())?;
        let mut out = String::from("quantity,resonant,antiresonant,reference_resonant,reference_antiresonant\n");
        let _ = writeln!(out, "stimulated_formula,{},{},0.039,-0.012", t.resonant_stimulated, t.antiresonant_stimulated);
        let _ = writeln!(out, "spontaneous_slope,{},{},,", t.resonant_spontaneous, t.antiresonant_spontaneous);
        let _ = writeln!(out, "selfconsistent_{TABLE1_TEMP_C:.0}C,{},{},0.040,-0.019", res.slope, anti.slope);
        self.text("table1.csv", &out)
    }

    fn manifest(mut self) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        for p in &self.files {
            let bytes = fs::read(p).map_err(|e| io_err(p, e))?;
            files.push(FileEntry {
                name: p.file_name().expect("file path").to_string_lossy().into_owned(),
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
        let m = Manifest {
            figure: self.name,
            config_hash: config_hash(&self.base),
            tol: self.base.solver.tol,
            rtol: self.base.solver.rtol,
            t_max_s: self.base.solver.t_max,
            files,
        };
        let path = self.dir.join(format!("{}.manifest.json", self.name));
        let body = serde_json::to_string_pretty(&m).expect("serializable") + "\n";
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        self.files.push(path);
        Ok(self.files)
    }
}

pub fn run_figure(name: &str, base: &Scenario, dir: &Path, workers: usize, format: Format) -> Result<Vec<PathBuf>> {
    if !FIGURES.contains(&name) {
        return Err(Error::Config(format!(
            "unknown figure {name:?}; valid names: {}",
            FIGURES.join(", ")
        )));
    }
    FigureRun::new(name, base, dir, workers, format).run()
}
