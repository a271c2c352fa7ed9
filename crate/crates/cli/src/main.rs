use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ilsim::dynamics::SteadyMode;
use ilsim::sweep::{
    export, find_threshold, run_sweep, to_csv, to_jsonl, Format, NeffMode, PullingOutput, SweepRange, SweepSpec,
    SweepVariable,
};
use ilsim::{Error, Result};
use ilsim_cli::config::{RunConfig, CONFIG_DIR_ENV};
use ilsim_cli::figures::{run_figure, FIGURES};
use ilsim_cli::{exit_code, phase_from_args, simulate, EXIT_OK};

/// Steady states, sweeps and figure datasets for a Cs laser in a tunable
/// (resonant to anti-resonant) cavity. Inputs are in lab units: mW/mm^2,
/// degrees C, MHz.
#[derive(Parser)]
#[command(name = "ilsim", version)]
struct Cli {
    /// Run config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Folder holding cs_default.json / cavity_default.json.
    #[arg(long, global = true, env = CONFIG_DIR_ENV)]
    config_dir: Option<PathBuf>,
    /// Steady-state residual target.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Pump intensity; switches g/Omega/N_eff to the derived chain.
    #[arg(long = "intensity-mw-mm2", global = true)]
    intensity: Option<f64>,
    /// Cell temperature; switches g/Omega/N_eff to the derived chain.
    #[arg(long = "temp-c", global = true, allow_hyphen_values = true)]
    temp_c: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[arg(long, global = true, default_value = "csv", value_parser = parse_format)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariableArg {
    DeltaPhi,
    PumpIntensity,
    CellTemperature,
    Reflectivity,
}

impl From<VariableArg> for SweepVariable {
    fn from(v: VariableArg) -> Self {
        match v {
            VariableArg::DeltaPhi => Self::DeltaPhi,
            VariableArg::PumpIntensity => Self::PumpIntensity,
            VariableArg::CellTemperature => Self::CellTemperature,
            VariableArg::Reflectivity => Self::Reflectivity,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// One steady state, printed as JSON.
    Simulate {
        /// Round-trip phase: radians or pi multiples ("pi", "0.5pi", "pi/2").
        #[arg(long, allow_hyphen_values = true)]
        dphi: Option<String>,
        /// Cavity detuning from the atomic line.
        #[arg(long = "detuning-mhz", allow_hyphen_values = true)]
        detuning_mhz: Option<f64>,
    },
    /// One-dimensional sweep.
    Sweep {
        #[arg(long, value_enum)]
        variable: VariableArg,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 41)]
        count: usize,
        /// Phase for non-phase sweeps.
        #[arg(long, allow_hyphen_values = true)]
        dphi: Option<String>,
        /// Keep N_eff fixed instead of rederiving it per point.
        #[arg(long)]
        fixed_neff: bool,
        /// Put the pulling shift into the steady-state equations.
        #[arg(long)]
        full_detuning: bool,
        /// Self-consistent stimulated pulling (slow).
        #[arg(long)]
        selfconsistent: bool,
        /// Print the threshold instead of the records.
        #[arg(long)]
        threshold: bool,
        /// Output file (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dataset behind a figure or table.
    Figure {
        /// One of fig2a fig2b fig2c fig3b expfig1..expfig5 table1.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn run(cli: Cli) -> Result<()> {
    let mut rc = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.tol.is_some() {
        rc.solver.tol = cli.tol;
    }
    if cli.intensity.is_some() {
        rc.pump.intensity_mW_mm2 = cli.intensity;
    }
    if cli.temp_c.is_some() {
        rc.pump.temp_C = cli.temp_c;
    }
    rc.validate()?;
    let sc = rc.scenario(cli.config_dir.as_deref())?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let emit = |out: &mut dyn Write, text: &str| {
        out.write_all(text.as_bytes()).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        })
    };
    match cli.cmd {
        Cmd::Simulate { dphi, detuning_mhz } => {
            let phi = phase_from_args(dphi.as_deref(), detuning_mhz, &sc)?;
            let rep = simulate(&sc, phi)?;
            emit(&mut out, &(serde_json::to_string_pretty(&rep).expect("serializable") + "\n"))?;
        }
        Cmd::Sweep {
            variable,
            lo,
            hi,
            count,
            dphi,
            fixed_neff,
            full_detuning,
            selfconsistent,
            threshold,
            out: path,
        } => {
            let variable = SweepVariable::from(variable);
            let mut spec = SweepSpec::new(variable, SweepRange::new(lo, hi, count), sc.clone());
            spec.phi = phase_from_args(dphi.as_deref(), None, &sc)?;
            if fixed_neff {
                spec.neff_mode = NeffMode::Fixed;
            }
            if full_detuning {
                spec.steady_mode = SteadyMode::Full;
            }
            if selfconsistent {
                spec.pulling = PullingOutput::SelfConsistent;
            }
            if threshold {
                let t = find_threshold(&spec, cli.workers)?;
                emit(&mut out, &(serde_json::to_string_pretty(&t).expect("serializable") + "\n"))?;
                return Ok(());
            }
            let recs = run_sweep(&spec, cli.workers)?;
            match path {
                Some(p) => export(&recs, variable, &p, cli.format)?,
                None => {
                    let text = match cli.format {
                        Format::Csv => to_csv(&recs)?,
                        Format::Jsonl => to_jsonl(&recs)?,
                    };
                    emit(&mut out, &text)?;
                }
            }
        }
        Cmd::Figure { name, out: dir } => {
            if !FIGURES.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "unknown figure {name:?}; valid names: {}",
                    FIGURES.join(", ")
                )));
            }
            let dir = dir.or(rc.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            for f in run_figure(&name, &sc, &dir, cli.workers, cli.format)? {
                emit(&mut out, &format!("{}\n", f.display()))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("ilsim: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
