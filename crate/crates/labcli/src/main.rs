//! Command-line entry point for the QAOA / quantum-annealing laboratory.
//!
//! Subcommands cover the full pipeline: `gen` random instances, `optimize`
//! circuits, `fit` output distributions, export `trajectory` tables, `anneal`
//! along continuous schedules, orchestrate a full `ensemble`, aggregate with
//! `report`, and draw measurement `sample`s.
//!
//! Exit codes: 0 on success, 1 when an ensemble exceeds the 5% failure
//! budget, 2 on configuration or usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qaoa_lab::annealer::{default_steps, run_anneal, Integrator};
use qaoa_lab::ensemble::{run_ensemble, EnsembleConfig, Row};
use qaoa_lab::optimizer::{optimize_next, optimize_p1, OptimizeConfig};
use qaoa_lab::problems::{sample_qubo, table_for_instance, QuboInstance};
use qaoa_lab::records::{
    read_json, write_json, AnnealManifest, FidelityChecks, FitRecordFile,
    InstanceFile, ResultFile, ScheduleFile,
};
use qaoa_lab::report::{
    betas_csv, collapse_csv, report_scaling, resources_csv,
    run_convergence_experiment, trajectory_csv,
};
use qaoa_lab::sampling::{format_bitstring, sample_bitstrings};
use qaoa_lab::simulator::run_qaoa;
use qaoa_lab::thermofit::{fit_bimodal, FitConfig};
use qaoa_lab::trajectory::{cumulative_path, fit_circle};

/// Worker-count override; takes precedence over config files.
const WORKERS_ENV: &str = "QAOA_LAB_WORKERS";

#[derive(Parser)]
#[command(name = "labcli", version, about = "QAOA / quantum-annealing laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a random QUBO instance and write it as JSON.
    Gen(GenArgs),
    /// Optimize a layered circuit on an instance (warm-started in depth).
    Optimize(OptimizeArgs),
    /// Fit the output distribution of an optimization result.
    Fit(FitArgs),
    /// Export trajectory tables (and optionally the circle fit) from results.
    Trajectory(TrajectoryArgs),
    /// Integrate the continuous annealing dynamics along a schedule file.
    Anneal(AnnealArgs),
    /// Run a full seeded ensemble from a JSON config.
    Ensemble(EnsembleArgs),
    /// Aggregate persisted ensemble rows into report tables.
    Report(ReportArgs),
    /// Draw measurement samples from an optimized circuit.
    Sample(SampleArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Qubit count (2..=24).
    #[arg(long)]
    n: usize,
    /// RNG seed.
    #[arg(long)]
    seed: u64,
    /// Output path for the instance JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Instance JSON produced by `gen`.
    #[arg(long)]
    instance: PathBuf,
    /// Layer count.
    #[arg(long)]
    p: usize,
    /// Refinement attempts per depth (warm start plus perturbed restarts).
    #[arg(long, default_value_t = 2)]
    restarts: usize,
    /// Optimizer seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Result JSON produced by `optimize`.
    #[arg(long)]
    result: PathBuf,
    /// Instance JSON the result refers to.
    #[arg(long)]
    instance: PathBuf,
    /// Output path (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrajectoryArgs {
    /// Result JSON files.
    #[arg(long, num_args = 1.., required = true)]
    results: Vec<PathBuf>,
    /// Also fit the universal circle over the pooled trajectories.
    #[arg(long, default_value_t = false)]
    fit_circle: bool,
    /// Output path for the CSV (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Export the first result's path as a continuous schedule JSON, ready
    /// for `anneal --schedule`.
    #[arg(long)]
    schedule_out: Option<PathBuf>,
}

#[derive(Args)]
struct AnnealArgs {
    /// Continuous schedule JSON (knot list plus interpolant tag).
    #[arg(long)]
    schedule: PathBuf,
    /// Integration steps (0 selects the guard-based default).
    #[arg(long, default_value_t = 0)]
    steps: usize,
    /// Integrator: rk4 or trotter.
    #[arg(long, default_value = "trotter")]
    integrator: String,
    /// Instance JSON defining the diagonal Hamiltonian.
    #[arg(long)]
    instance: PathBuf,
    /// Output path for the run manifest (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also fit the endpoint distribution and append it to the manifest.
    #[arg(long, default_value_t = false)]
    fit: bool,
}

#[derive(Args)]
struct EnsembleArgs {
    /// Ensemble config JSON.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Rows file (JSON lines) from an ensemble run.
    #[arg(long)]
    rows: PathBuf,
    /// Report kind: betas, resources, collapse, or convergence.
    #[arg(long)]
    kind: String,
    /// Output path (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Instance JSON (convergence only).
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Target depth m (convergence only).
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Source depths k (convergence only).
    #[arg(long, value_delimiter = ',', default_values_t = vec![5, 10, 20])]
    k_list: Vec<usize>,
    /// Integration steps for the annealing panel (0 = default).
    #[arg(long, default_value_t = 0)]
    steps: usize,
    /// Depth whose trajectory defines the continuous schedule (convergence).
    #[arg(long, default_value_t = 30)]
    p_traj: usize,
}

#[derive(Args)]
struct SampleArgs {
    /// Result JSON produced by `optimize`.
    #[arg(long)]
    result: PathBuf,
    /// Number of measurement shots.
    #[arg(long)]
    shots: usize,
    /// Sampling seed.
    #[arg(long)]
    seed: u64,
    /// Instance JSON the result refers to.
    #[arg(long)]
    instance: PathBuf,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_instance(path: &Path) -> Result<QuboInstance> {
    let file: InstanceFile = read_json(path)
        .with_context(|| format!("reading instance {}", path.display()))?;
    Ok(file.to_instance()?)
}

fn optimize_chain(
    q: &QuboInstance,
    p: usize,
    cfg: &OptimizeConfig,
) -> Result<(qaoa_lab::optimizer::OptimResult, u64)> {
    let t = table_for_instance(q)?;
    let mut res = optimize_p1(&t, cfg);
    let mut evals = res.evals;
    for depth in 2..=p {
        res = optimize_next(&t, &res.schedule, depth, cfg);
        evals += res.evals;
    }
    Ok((res, evals))
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Gen(args) => {
            let q = sample_qubo(args.n, args.seed)?;
            write_json(&args.out, &InstanceFile::from_instance(&q))?;
            eprintln!("wrote {} ({})", args.out.display(), q.instance_id());
        }
        Cmd::Optimize(args) => {
            let q = load_instance(&args.instance)?;
            let cfg = OptimizeConfig {
                restarts: args.restarts,
                seed: args.seed,
                ..OptimizeConfig::default()
            };
            let (res, evals) = optimize_chain(&q, args.p, &cfg)?;
            let record = ResultFile {
                instance_id: q.instance_id().to_string(),
                p: args.p,
                gamma: res.schedule.gamma().to_vec(),
                theta: res.schedule.theta().to_vec(),
                value: res.value,
                ground_overlap: res.ground_overlap,
                evals,
                seed: args.seed,
                n: q.n(),
            };
            match &args.out {
                Some(path) => write_json(path, &record)?,
                None => println!("{}", serde_json::to_string_pretty(&record)?),
            }
        }
        Cmd::Fit(args) => {
            let q = load_instance(&args.instance)?;
            let result: ResultFile = read_json(&args.result)?;
            let t = table_for_instance(&q)?;
            let state = run_qaoa(&t, &result.schedule()?)?;
            let fit = fit_bimodal(&state.probabilities(), &t, &FitConfig::default())?;
            let record = FitRecordFile::new(&result.instance_id, result.p, &fit);
            match &args.out {
                Some(path) => write_json(path, &record)?,
                None => println!("{}", serde_json::to_string_pretty(&record)?),
            }
        }
        Cmd::Trajectory(args) => {
            let mut entries = Vec::new();
            let mut paths = Vec::new();
            for path in &args.results {
                let result: ResultFile = read_json(path)
                    .with_context(|| format!("reading result {}", path.display()))?;
                let schedule = result.schedule()?;
                paths.push(cumulative_path(&schedule));
                entries.push((result.instance_id.clone(), result.n, schedule));
            }
            let mut csv = trajectory_csv(&entries)?;
            if args.fit_circle {
                let refs: Vec<&qaoa_lab::trajectory::TrajectoryPath> =
                    paths.iter().collect();
                let fit = fit_circle(&refs)?;
                csv.push_str(&format!(
                    "# circle fit: epsilon={} rms_residual={} points={}\n",
                    fit.epsilon, fit.rms_residual, fit.points
                ));
            }
            if let Some(schedule_path) = &args.schedule_out {
                let knots = qaoa_lab::trajectory::sanitized_knots(&paths[0], 1e-3)?;
                let cs = qaoa_lab::trajectory::ContinuousSchedule::from_knots(
                    &knots,
                    qaoa_lab::trajectory::InterpKind::MonotoneCubic,
                )?;
                write_json(schedule_path, &ScheduleFile::from_schedule(&cs))?;
            }
            emit(args.out.as_deref(), &csv)?;
        }
        Cmd::Anneal(args) => {
            let q = load_instance(&args.instance)?;
            let t = table_for_instance(&q)?;
            let schedule_file: ScheduleFile = read_json(&args.schedule)?;
            let cs = schedule_file.to_schedule()?;
            let integrator: Integrator = args.integrator.parse()?;
            let steps = if args.steps == 0 {
                default_steps(&t, &cs)
            } else {
                args.steps
            };
            let anneal = run_anneal(&t, &cs, steps, integrator)?;
            let manifest = AnnealManifest {
                instance_id: q.instance_id().to_string(),
                schedule_ref: args.schedule.display().to_string(),
                steps,
                integrator,
                final_norm: anneal.final_state.norm_sqr().sqrt(),
                fidelity_checks: FidelityChecks {
                    norm_drift: anneal.norm_drift,
                    max_step_phase: anneal.max_step_phase,
                },
            };
            let mut text = serde_json::to_string_pretty(&manifest)?;
            text.push('\n');
            if args.fit {
                let fit = fit_bimodal(
                    &anneal.final_state.probabilities(),
                    &t,
                    &FitConfig::default(),
                )?;
                let record = FitRecordFile::new(q.instance_id(), 0, &fit);
                text.push_str(&serde_json::to_string_pretty(&record)?);
                text.push('\n');
            }
            emit(args.out.as_deref(), &text)?;
        }
        Cmd::Ensemble(args) => {
            let mut config: EnsembleConfig = read_json(&args.config)
                .with_context(|| format!("reading config {}", args.config.display()))?;
            if let Ok(workers) = std::env::var(WORKERS_ENV) {
                config.workers = workers
                    .parse()
                    .with_context(|| format!("parsing {WORKERS_ENV}={workers}"))?;
            }
            init_workers(config.workers);
            let report = run_ensemble(&config)?;
            eprintln!(
                "ensemble complete: {} rows, {}/{} items failed, rows at {}",
                report.rows.len(),
                report.failed,
                report.attempted,
                report.rows_path.display()
            );
            if report.excessive_failures() {
                return Ok(1);
            }
        }
        Cmd::Report(args) => {
            let rows = load_rows(&args.rows)?;
            let text = match args.kind.as_str() {
                "betas" => betas_csv(&report_scaling(&rows)?),
                "resources" => resources_csv(&report_scaling(&rows)?),
                "collapse" => collapse_csv(&report_scaling(&rows)?),
                "convergence" => {
                    let instance = args.instance.as_deref().ok_or_else(|| {
                        anyhow::anyhow!("--instance is required for kind=convergence")
                    })?;
                    let q = load_instance(instance)?;
                    let report = run_convergence_experiment(
                        &q,
                        args.m,
                        &args.k_list,
                        args.steps,
                        &OptimizeConfig::default(),
                        &FitConfig::default(),
                        args.p_traj,
                    )?;
                    report.csv()
                }
                other => bail!("unknown report kind {other:?}"),
            };
            emit(args.out.as_deref(), &text)?;
        }
        Cmd::Sample(args) => {
            let q = load_instance(&args.instance)?;
            let result: ResultFile = read_json(&args.result)?;
            let t = table_for_instance(&q)?;
            let state = run_qaoa(&t, &result.schedule()?)?;
            let draws =
                sample_bitstrings(&state.probabilities(), args.shots, args.seed)?;
            let mut out = String::with_capacity(draws.len() * (q.n() + 1));
            for z in draws {
                out.push_str(&format_bitstring(z, q.n()));
                out.push('\n');
            }
            print!("{out}");
        }
    }
    Ok(0)
}

#[cfg(feature = "parallel")]
fn init_workers(workers: usize) {
    if workers > 0 {
        // Ignore failure: the global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_workers(_workers: usize) {}

fn load_rows(path: &Path) -> Result<Vec<Row>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading rows {}", path.display()))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(line)
            .with_context(|| format!("parsing row {} of {}", idx + 1, path.display()))?;
        rows.push(row);
    }
    Ok(rows)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            // Configuration and input errors exit 2.
            ExitCode::from(2)
        }
    }
}
