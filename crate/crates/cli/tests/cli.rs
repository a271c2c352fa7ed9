use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ilsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ilsim"))
        .args(args)
        .env_remove("ILSIM_CONFIG_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn simulate_resonant_and_anti_resonant() {
    let r = json(&ilsim(&["simulate", "--dphi", "0"]));
    assert_eq!(r["eta"].as_f64().unwrap(), 1.0);
    let n = r["n"].as_f64().unwrap();
    assert!((n / 2.70e5 - 1.0).abs() < 0.15, "{n}");
    let a = json(&ilsim(&["simulate", "--dphi", "pi"]));
    assert!((a["eta"].as_f64().unwrap() - 4.820).abs() < 1e-3);
    for key in ["tau", "p_out", "linewidth", "delta", "rho"] {
        assert!(!a[key].is_null(), "{key}");
    }
}

#[test]
fn detuning_half_fsr_is_anti_resonant() {
    let r = json(&ilsim(&["simulate", "--detuning-mhz", "394.46376052631579"]));
    assert!((r["eta"].as_f64().unwrap() - 4.8192).abs() < 1e-3);
    let r = json(&ilsim(&["simulate", "--detuning-mhz", "-788.927521052631"]));
    assert!((r["eta"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn pump_override_uses_the_derived_chain() {
    let r = json(&ilsim(&["simulate", "--intensity-mw-mm2", "10", "--temp-c", "100"]));
    let n_eff = r["gain"]["n_eff"].as_f64().unwrap();
    assert!(n_eff != 5.71e9 && (n_eff / 5.71e9 - 1.0).abs() < 0.02);
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.json");
    fs::write(&p, "{\"solver\": {\"tol\": -1}}").unwrap();
    let out = ilsim(&["--config", p.to_str().unwrap(), "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    fs::write(&p, "{not json").unwrap();
    assert_eq!(ilsim(&["--config", p.to_str().unwrap(), "simulate"]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(ilsim(&["--config", missing.to_str().unwrap(), "simulate"]).status.code(), Some(2));
}

#[test]
fn bad_atomic_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cs_default.json"), "{\"decay_rates\": {}}").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ilsim"))
        .args(["simulate"])
        .env("ILSIM_CONFIG_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_phase_exits_2() {
    assert_eq!(ilsim(&["simulate", "--dphi", "banana"]).status.code(), Some(2));
    assert_eq!(ilsim(&["simulate", "--dphi", "0", "--detuning-mhz", "1"]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.json");
    fs::write(&p, "{\"solver\": {\"t_max_s\": 1e-9}}").unwrap();
    let out = ilsim(&["--config", p.to_str().unwrap(), "simulate"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_figure_lists_names() {
    let out = ilsim(&["figure", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["fig2a", "expfig5", "table1"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn table1_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let out = ilsim(&["figure", "table1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("table1.csv"));
    let v = |r: usize, c: usize| rows[r][c].parse::<f64>().unwrap();
    assert!((v(0, 1) - 0.039).abs() < 5e-4);
    assert!((v(0, 2) + 0.0102).abs() < 5e-5);
    assert!((v(1, 1) - 0.0763).abs() < 1e-3);
    assert!((v(1, 2) + 0.0158).abs() < 1e-3);
    assert!(v(2, 1) > 0.035 && v(2, 1) < 0.045);
    assert!(v(2, 2) < 0.0);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table1.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn expfig2_difference_vanishes_at_symmetry_points() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ilsim(&["figure", "expfig2", "--out", dir.path().to_str().unwrap()]).status.success());
    let rows = csv_rows(&dir.path().join("expfig2.csv"));
    let mid = rows.len() / 2;
    for i in [0, mid, rows.len() - 1] {
        let n: f64 = rows[i][1].parse().unwrap();
        let d: f64 = rows[i][3].parse().unwrap();
        assert!(d.abs() <= 1e-8 * n, "row {i}: {d}");
    }
    assert!(rows[1][3].parse::<f64>().unwrap().abs() > 0.0);
}

#[test]
fn expfig5_linewidth_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ilsim(&["figure", "expfig5", "--out", dir.path().to_str().unwrap()]).status.success());
    let text = fs::read_to_string(dir.path().join("expfig5.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let get = |r: &Vec<&str>, c: &str| r[col(c)].parse::<f64>().unwrap();
    let (res, anti) = (&rows[0], &rows[rows.len() / 2]);
    assert!((get(res, "linewidth") / 150.0 - 1.0).abs() < 0.20);
    assert!((get(anti, "linewidth") / 43.0 - 1.0).abs() < 0.20);
    assert!((get(res, "linewidth_cold") / 4.74 - 1.0).abs() < 0.15);
    assert!((get(anti, "linewidth_cold") / 1.01 - 1.0).abs() < 0.15);
}

#[test]
fn figures_are_byte_identical_across_runs_and_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, w) in [(&a, "1"), (&b, "3")] {
        let out = ilsim(&["figure", "fig2a", "--workers", w, "--out", dir.path().to_str().unwrap()]);
        assert!(out.status.success());
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 3);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn every_figure_name_is_accepted() {
    // full runs of the slow ones are covered above; here only dispatch
    for name in ["expfig3", "table1"] {
        let dir = tempfile::tempdir().unwrap();
        let out = ilsim(&["figure", name, "--out", dir.path().to_str().unwrap()]);
        assert!(out.status.success(), "{name}");
        assert!(dir.path().join(format!("{name}.manifest.json")).exists());
    }
    let listed = String::from_utf8_lossy(&ilsim(&["figure", "x"]).stderr).to_string();
    for name in [
        "fig2a", "fig2b", "fig2c", "fig3b", "expfig1", "expfig2", "expfig3", "expfig4", "expfig5", "table1",
    ] {
        assert!(listed.contains(name));
    }
}

#[test]
fn sweep_to_stdout_and_file() {
    let out = ilsim(&["sweep", "--variable", "delta-phi", "--lo", "0", "--hi", "3.141592653589793", "--count", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.jsonl");
    let out = ilsim(&[
        "sweep", "--variable", "reflectivity", "--lo", "0.3", "--hi", "0.5", "--count", "2", "--format", "jsonl",
        "--out", p.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&p).unwrap().lines().count(), 2);
    assert!(dir.path().join("s.schema.json").exists());
    assert_eq!(
        ilsim(&["sweep", "--variable", "delta-phi", "--lo", "1", "--hi", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn sweep_threshold_json() {
    let out = ilsim(&[
        "sweep", "--variable", "cell-temperature", "--lo", "40", "--hi", "130", "--count", "37", "--dphi", "pi",
        "--threshold",
    ]);
    let t = json(&out);
    let v = t["value"].as_f64().unwrap();
    assert!((v - 94.5).abs() < 5.0, "{v}");
}
