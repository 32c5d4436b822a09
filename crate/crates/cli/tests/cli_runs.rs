use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hartree-lab"))
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process was not signalled")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const QUICK_GROUND_STATE: &str = "\
[grid]
dim = 1
half_width = 8.0
points = 64

[model]
s = 0.7
m = 0.0
gamma = 0.5
mass = 1.0
potential = { kind = \"harmonic\" }

[ground_state]
residual_tol = 1e-8
max_iters = 20000
";

#[test]
fn malformed_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad_toml = dir.path().join("bad.toml");
    fs::write(&bad_toml, "grid = \"not a table\"").unwrap();
    let out_dir = dir.path().join("out");

    let output = bin()
        .args(["ground-state", "--config"])
        .arg(&bad_toml)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&output), 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("error"));

    // Well formed file, parameters outside the admissible range.
    let bad_gamma = dir.path().join("bad_gamma.toml");
    fs::write(&bad_gamma, QUICK_GROUND_STATE.replace("gamma = 0.5", "gamma = 3.0")).unwrap();
    let output = bin()
        .args(["ground-state", "--config"])
        .arg(&bad_gamma)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&output), 2);

    let missing = dir.path().join("missing.toml");
    let output = bin()
        .args(["ground-state", "--config"])
        .arg(&missing)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&output), 2);
}

#[test]
fn ground_state_writes_the_advertised_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, QUICK_GROUND_STATE).unwrap();
    let out_dir = dir.path().join("out");

    let output = bin()
        .args(["ground-state", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));

    for name in [
        "config.echo.toml",
        "ground_state.frh1",
        "minimizing_trace.csv",
        "summary.json",
    ] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["command"], "ground-state");
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["subcritical"], true);
    assert!((summary["mass"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!(summary["residual"].as_f64().unwrap() < 1e-8);

    let trace = fs::read_to_string(out_dir.join("minimizing_trace.csv")).unwrap();
    assert!(trace.starts_with("iter,energy,sigma_norm,mass\n"));
    assert!(trace.lines().count() > 2);
}

#[test]
fn failed_solves_exit_with_the_solver_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        QUICK_GROUND_STATE.replace("max_iters = 20000", "max_iters = 1"),
    )
    .unwrap();
    let out_dir = dir.path().join("out");

    let output = bin()
        .args(["ground-state", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&output), 3);
    // Artifacts still land on disk so the failure can be inspected.
    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["converged"], false);
}

#[test]
fn seed_override_is_echoed_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, QUICK_GROUND_STATE).unwrap();
    let out_dir = dir.path().join("out");

    let output = bin()
        .args(["ground-state", "--seed", "42", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0);
    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["seed"], 42);
    let echo = fs::read_to_string(out_dir.join("config.echo.toml")).unwrap();
    assert!(echo.contains("seed = 42"));
}

#[test]
fn reverse_evolution_returns_to_the_start() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "{QUICK_GROUND_STATE}
[initial]
kind = \"gaussian\"
width = 1.0

[evolve]
dt = 1e-2
t_final = 0.1
monitor_stride = 1
reverse = true
"
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");

    let output = bin()
        .args(["evolve", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));

    for name in [
        "final.frh1",
        "returned.frh1",
        "conservation.csv",
        "conservation_back.csv",
    ] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["steps"], 10);
    assert!(summary["round_trip_defect"].as_f64().unwrap() < 1e-12);
    assert!(summary["max_relative_mass_drift"].as_f64().unwrap() < 1e-13);

    let conservation = fs::read_to_string(out_dir.join("conservation.csv")).unwrap();
    assert!(conservation.starts_with("time,mass,energy\n"));
    // Initial sample, ten steps, monitored every step.
    assert_eq!(conservation.lines().count(), 12);
}

#[test]
fn stability_run_reports_the_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "{QUICK_GROUND_STATE}
[evolve]
dt = 1e-2
t_final = 0.5
monitor_stride = 10

[perturbation]
delta = 1e-3
mode = \"random\"
"
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");

    let output = bin()
        .args(["stability", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));

    let summary = read_json(&out_dir.join("summary.json"));
    // s = 0.7 in one dimension sits outside the s < N/2 window.
    assert_eq!(summary["in_hypothesis"], false);
    assert_eq!(summary["delta"], 1e-3);
    let initial = summary["initial_distance"].as_f64().unwrap();
    let max = summary["max_distance"].as_f64().unwrap();
    assert!(initial > 0.0 && max >= initial);

    let report = read_json(&out_dir.join("report.json"));
    assert!(!report["orbit_distance"].as_array().unwrap().is_empty());
    let csv = fs::read_to_string(out_dir.join("stability.csv")).unwrap();
    assert!(csv.starts_with("time,orbit_distance,mass,energy\n"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, QUICK_GROUND_STATE).unwrap();

    let mut artifacts: Vec<Vec<u8>> = Vec::new();
    for out_name in ["a", "b"] {
        let out_dir = dir.path().join(out_name);
        let output = bin()
            .args(["ground-state", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_eq!(code(&output), 0);
        for name in ["ground_state.frh1", "summary.json", "minimizing_trace.csv"] {
            artifacts.push(fs::read(out_dir.join(name)).unwrap());
        }
    }
    assert_eq!(artifacts[0], artifacts[3], "snapshot bytes differ");
    assert_eq!(artifacts[1], artifacts[4], "summary bytes differ");
    assert_eq!(artifacts[2], artifacts[5], "trace bytes differ");
}

#[test]
fn sweep_fans_out_and_collects() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("first.toml"), QUICK_GROUND_STATE).unwrap();
    fs::write(
        dir.path().join("second.toml"),
        QUICK_GROUND_STATE.replace("s = 0.7", "s = 0.5"),
    )
    .unwrap();
    let sweep = dir.path().join("sweep.toml");
    fs::write(
        &sweep,
        "command = \"ground-state\"\nconfigs = [\"first.toml\", \"second.toml\"]\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");

    let output = bin()
        .args(["sweep", "--config"])
        .arg(&sweep)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));

    for job in ["first", "second"] {
        assert!(out_dir.join(job).join("summary.json").exists());
    }
    let summary = read_json(&out_dir.join("sweep_summary.json"));
    let jobs = summary.as_array().unwrap();
    assert_eq!(jobs.len(), 2);
    assert!(jobs.iter().all(|j| j["exit"] == 0));

    // A sweep whose jobs fail reports the worst exit code itself.
    fs::write(
        dir.path().join("first.toml"),
        QUICK_GROUND_STATE.replace("max_iters = 20000", "max_iters = 1"),
    )
    .unwrap();
    let output = bin()
        .args(["sweep", "--config"])
        .arg(&sweep)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&output), 3);
}

#[test]
fn verify_passes_and_flags_injected_faults() {
    let output = bin().arg("verify").output().unwrap();
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));

    let output = bin().args(["verify", "--corrupt-kernel"]).output().unwrap();
    assert_eq!(code(&output), 1);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("FAIL"));
}

#[test]
fn zero_step_evolution_is_a_passthrough() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "{QUICK_GROUND_STATE}
[initial]
kind = \"gaussian\"
width = 1.3

[evolve]
dt = 1e-2
t_final = 0.0
monitor_stride = 1
"
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let output = bin()
        .args(["evolve", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["steps"], 0);
    assert_eq!(
        summary["initial_mass"].as_f64().unwrap(),
        summary["final_mass"].as_f64().unwrap()
    );

    // The snapshot written by a zero step run reloads as a valid initial
    // state for a second run on the same grid.
    let second = dir.path().join("second.toml");
    fs::write(
        &second,
        format!(
            "{QUICK_GROUND_STATE}
[initial]
kind = \"snapshot\"
path = \"{}\"

[evolve]
dt = 1e-2
t_final = 0.0
monitor_stride = 1
",
            out_dir.join("final.frh1").display()
        ),
    )
    .unwrap();
    let out_dir2 = dir.path().join("out2");
    let output = bin()
        .args(["evolve", "--config"])
        .arg(&second)
        .arg("--out")
        .arg(&out_dir2)
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    assert_eq!(
        fs::read(out_dir.join("final.frh1")).unwrap(),
        fs::read(out_dir2.join("final.frh1")).unwrap(),
        "snapshot bytes changed across a zero step round trip"
    );
}
