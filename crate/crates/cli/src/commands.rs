use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hartree_lab::{
    energy, evolve, evolve_backward, read_snapshot, run_stability_experiment,
    run_verification_suite, solve_ground_state, write_snapshot, ConservationTrace,
    EnergyBreakdown, FaultInjection, FieldState, GroundStateResult, Model, StabilityReport,
};

use crate::config::{echo_config, ConfigError, RunConfig};

fn prepare_dir(config: &RunConfig, out_override: Option<&Path>) -> Result<PathBuf> {
    let dir = match (out_override, &config.output_dir) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(d)) => d.clone(),
        (None, None) => bail!("no output directory: set output_dir in the config or pass --out"),
    };
    fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    echo_config(config, &dir)?;
    Ok(dir)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).context("cannot serialize summary")?;
    fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn write_csv(dir: &Path, name: &str, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let path = dir.join(name);
    let file = fs::File::create(&path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{header}")?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

fn conservation_rows(trace: &ConservationTrace) -> Vec<Vec<f64>> {
    trace
        .times
        .iter()
        .zip(&trace.mass_values)
        .zip(&trace.energy_values)
        .map(|((t, m), e)| vec![*t, *m, *e])
        .collect()
}

#[derive(Serialize)]
struct GroundStateSummary {
    command: &'static str,
    seed: u64,
    converged: bool,
    iters: usize,
    residual: f64,
    omega: f64,
    energy: EnergyBreakdown,
    mass: f64,
    subcritical: bool,
}

pub fn cmd_ground_state(config: &RunConfig, out: Option<&Path>) -> Result<()> {
    let dir = prepare_dir(config, out)?;
    let model = config.build_model()?;
    let gs_config = config.ground_state_config()?;
    let result = solve_ground_state(&model, &gs_config)?;
    persist_ground_state(&dir, config, &model, &result)?;
    println!(
        "ground state: energy {:.12} omega {:.12} residual {:.3e} after {} iterations ({})",
        result.energy.total,
        result.omega,
        result.residual,
        result.iters,
        if result.converged { "converged" } else { "not converged" },
    );
    if !result.converged {
        bail!(hartree_lab::Error::NotConverged {
            iters: result.iters,
            residual: result.residual,
        });
    }
    Ok(())
}

fn persist_ground_state(
    dir: &Path,
    config: &RunConfig,
    model: &Model,
    result: &GroundStateResult,
) -> Result<()> {
    write_snapshot(dir.join("ground_state.frh1"), &result.field)?;
    let rows: Vec<Vec<f64>> = result
        .trace
        .iter()
        .enumerate()
        .map(|(i, p)| vec![i as f64, p.energy, p.sigma_norm, p.mass])
        .collect();
    write_csv(dir, "minimizing_trace.csv", "iter,energy,sigma_norm,mass", &rows)?;
    let summary = GroundStateSummary {
        command: "ground-state",
        seed: config.seed,
        converged: result.converged,
        iters: result.iters,
        residual: result.residual,
        omega: result.omega,
        energy: result.energy,
        mass: result.field.mass(),
        subcritical: model.is_subcritical(),
    };
    write_json(dir, "summary.json", &summary)
}

#[derive(Serialize)]
struct EvolveSummary {
    command: &'static str,
    seed: u64,
    steps: usize,
    dt: f64,
    t_final: f64,
    initial_mass: f64,
    final_mass: f64,
    final_energy: f64,
    max_relative_mass_drift: f64,
    max_relative_energy_drift: f64,
    /// Max pointwise defect after integrating back to t = 0; only present
    /// for reverse runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    round_trip_defect: Option<f64>,
}

fn initial_state(config: &RunConfig, model: &Model, dir: &Path) -> Result<FieldState> {
    let grid = *model.grid();
    let section = config.initial.as_ref();
    let kind = section.map_or("ground-state", |s| s.kind.as_str());
    match kind {
        "ground-state" => {
            let gs_config = config.ground_state_config()?;
            let result = solve_ground_state(model, &gs_config)?;
            if !result.converged {
                bail!(hartree_lab::Error::NotConverged {
                    iters: result.iters,
                    residual: result.residual,
                });
            }
            write_snapshot(dir.join("ground_state.frh1"), &result.field)?;
            Ok(result.field)
        }
        "gaussian" => {
            let s = section.expect("kind string came from this section");
            let mass = s.mass.unwrap_or(config.model.mass);
            Ok(FieldState::gaussian(grid, s.width, mass)?)
        }
        "zero" => Ok(FieldState::zeros(grid)),
        "snapshot" => {
            let s = section.expect("kind string came from this section");
            let Some(path) = s.path.clone() else {
                return Err(ConfigError("kind = \"snapshot\" needs path".into()).into());
            };
            let field = read_snapshot(&path)?;
            if field.grid() != &grid {
                bail!(hartree_lab::Error::GridMismatch(format!(
                    "snapshot {} does not match the configured grid",
                    path.display()
                )));
            }
            Ok(field)
        }
        other => Err(ConfigError(format!(
            "unknown initial state kind {other:?} (expected ground-state, gaussian, zero or snapshot)"
        ))
        .into()),
    }
}

pub fn cmd_evolve(config: &RunConfig, out: Option<&Path>) -> Result<()> {
    let dir = prepare_dir(config, out)?;
    let model = config.build_model()?;
    let (evolve_config, reverse) = config.evolve_config()?;
    let u0 = initial_state(config, &model, &dir)?;
    let initial_mass = u0.mass();
    let (final_state, trace) = evolve(&model, &u0, &evolve_config)?;
    write_snapshot(dir.join("final.frh1"), &final_state)?;
    write_csv(
        &dir,
        "conservation.csv",
        "time,mass,energy",
        &conservation_rows(&trace),
    )?;
    let round_trip_defect = if reverse {
        let (returned, back_trace) = evolve_backward(&model, &final_state, &evolve_config)?;
        write_snapshot(dir.join("returned.frh1"), &returned)?;
        write_csv(
            &dir,
            "conservation_back.csv",
            "time,mass,energy",
            &conservation_rows(&back_trace),
        )?;
        let defect = returned
            .values()
            .iter()
            .zip(u0.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        Some(defect)
    } else {
        None
    };
    let summary = EvolveSummary {
        command: "evolve",
        seed: config.seed,
        steps: evolve_config.steps(),
        dt: evolve_config.dt,
        t_final: evolve_config.t_final,
        initial_mass,
        final_mass: final_state.mass(),
        final_energy: energy(&model, &final_state)?.total,
        max_relative_mass_drift: trace.max_relative_mass_drift(),
        max_relative_energy_drift: trace.max_relative_energy_drift(),
        round_trip_defect,
    };
    write_json(&dir, "summary.json", &summary)?;
    println!(
        "evolve: {} steps of dt {} mass drift {:.3e} energy drift {:.3e}",
        summary.steps, summary.dt, summary.max_relative_mass_drift, summary.max_relative_energy_drift,
    );
    if let Some(defect) = round_trip_defect {
        println!("evolve: round trip defect {defect:.3e}");
    }
    Ok(())
}

#[derive(Serialize)]
struct StabilitySummary {
    command: &'static str,
    seed: u64,
    in_hypothesis: bool,
    omega: f64,
    ground_energy: f64,
    initial_distance: f64,
    max_distance: f64,
    final_distance: f64,
    delta: Option<f64>,
}

pub fn cmd_stability(config: &RunConfig, out: Option<&Path>) -> Result<()> {
    let dir = prepare_dir(config, out)?;
    let model = config.build_model()?;
    let gs_config = config.ground_state_config()?;
    let (evolve_config, _) = config.evolve_config()?;
    let perturbation = config.perturbation_spec(model.grid().dim())?;
    let report =
        run_stability_experiment(&model, &gs_config, perturbation.as_ref(), &evolve_config)?;
    persist_stability(&dir, config, &report)?;
    println!(
        "stability: initial distance {:.3e} max {:.3e} over t in [0, {}] (in hypothesis: {})",
        report.initial_distance, report.max_distance, evolve_config.t_final, report.in_hypothesis,
    );
    Ok(())
}

fn persist_stability(dir: &Path, config: &RunConfig, report: &StabilityReport) -> Result<()> {
    let rows: Vec<Vec<f64>> = report
        .times
        .iter()
        .zip(&report.orbit_distance)
        .zip(&report.mass_trace)
        .zip(&report.energy_trace)
        .map(|(((t, d), m), e)| vec![*t, *d, *m, *e])
        .collect();
    write_csv(
        dir,
        "stability.csv",
        "time,orbit_distance,mass,energy",
        &rows,
    )?;
    write_json(dir, "report.json", report)?;
    let summary = StabilitySummary {
        command: "stability",
        seed: config.seed,
        in_hypothesis: report.in_hypothesis,
        omega: report.omega,
        ground_energy: report.ground_energy,
        initial_distance: report.initial_distance,
        max_distance: report.max_distance,
        final_distance: *report.orbit_distance.last().unwrap_or(&0.0),
        delta: report.perturbation.as_ref().map(|p| p.delta),
    };
    write_json(dir, "summary.json", &summary)
}

pub fn cmd_verify(
    config: &RunConfig,
    out: Option<&Path>,
    corrupt_kernel: bool,
) -> Result<()> {
    let model = config.build_model()?;
    let fault = if corrupt_kernel {
        FaultInjection::KernelGammaMismatch
    } else {
        FaultInjection::None
    };
    let report = run_verification_suite(&model, config.seed, fault)?;
    print!("{}", report.render_table());
    if let Some(dir) = out
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
    {
        fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        echo_config(config, &dir)?;
        write_json(&dir, "verify.json", &report)?;
    }
    if !report.all_passed() {
        bail!("verification suite failed");
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Subcommand to run for every job: "ground-state", "evolve" or
    /// "stability".
    pub command: String,
    pub configs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct JobOutcome {
    config: PathBuf,
    dir: PathBuf,
    exit: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn load_sweep(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read sweep file {}", path.display()))?;
    let mut sweep: SweepConfig = toml::from_str(&text)
        .with_context(|| format!("cannot parse sweep file {}", path.display()))?;
    if sweep.configs.is_empty() {
        bail!("sweep file lists no configs");
    }
    if !matches!(sweep.command.as_str(), "ground-state" | "evolve" | "stability") {
        bail!(
            "unknown sweep command {:?} (expected ground-state, evolve or stability)",
            sweep.command
        );
    }
    // Relative job paths count from the sweep file, not the working
    // directory, so a sweep can sit next to the configs it lists.
    if let Some(parent) = path.parent() {
        for config in &mut sweep.configs {
            if config.is_relative() {
                *config = parent.join(&config);
            }
        }
    }
    Ok(sweep)
}

pub fn cmd_sweep(sweep_path: &Path, out: &Path, jobs: usize) -> Result<i32> {
    let sweep = load_sweep(sweep_path)
        .map_err(|e| anyhow::Error::from(ConfigError(format!("{e:#}"))))?;
    let run_job = |job_config: &Path| -> JobOutcome {
        let stem = job_config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "job".into());
        let dir = out.join(stem);
        let outcome = RunConfig::load(job_config).and_then(|config| {
            match sweep.command.as_str() {
                "ground-state" => cmd_ground_state(&config, Some(&dir)),
                "evolve" => cmd_evolve(&config, Some(&dir)),
                "stability" => cmd_stability(&config, Some(&dir)),
                _ => unreachable!("sweep command validated at load"),
            }
        });
        let (exit, error) = match outcome {
            Ok(()) => (0, None),
            Err(e) => (crate::exit_code_for(&e), Some(format!("{e:#}"))),
        };
        JobOutcome {
            config: job_config.to_path_buf(),
            dir,
            exit,
            error,
        }
    };
    let outcomes: Vec<JobOutcome> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .context("cannot build worker pool")?;
        pool.install(|| {
            use rayon::prelude::*;
            sweep.configs.par_iter().map(|c| run_job(c)).collect()
        })
    } else {
        sweep.configs.iter().map(|c| run_job(c)).collect()
    };
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    write_json(out, "sweep_summary.json", &outcomes)?;
    let mut worst = 0;
    for outcome in &outcomes {
        println!(
            "sweep job {} -> {} (exit {})",
            outcome.config.display(),
            outcome.dir.display(),
            outcome.exit,
        );
        worst = worst.max(outcome.exit);
    }
    Ok(worst)
}
