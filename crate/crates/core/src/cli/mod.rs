//! Command-line front end. [`run`] maps every outcome to an exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Error;
use crate::handeye::{self, HandEyeDataset, Model};
use crate::posegraph::{self, parse_graph, parse_poses, serialize_graph, serialize_poses};
use crate::selftest;
use crate::solver::{write_history_csv, SolveReport, SolverConfig, DEFAULT_MU_MIN};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Overrides `--seed` when set.
pub const SEED_ENV: &str = "DQOPT_SEED";

#[derive(Debug, Parser)]
#[command(name = "dqopt", version, about = "Dual quaternion optimization: hand-eye calibration and pose graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic hand-eye dataset as JSON.
    GenHandeye(GenHandeye),
    /// Solve a hand-eye dataset and write a report.
    SolveHandeye(SolveHandeye),
    /// Write a synthetic pose graph in the VERTEX/EDGE text format.
    GenPgo(GenPgo),
    /// Solve a pose graph and write a report.
    SolvePgo(SolvePgo),
    /// Run the built-in property suites.
    Selftest(Selftest),
    /// Summarize a report written by a solve command.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct GenHandeye {
    #[arg(long)]
    model: Model,
    #[arg(long, default_value_t = 5)]
    motions: usize,
    #[arg(long, default_value_t = 0.0)]
    noise_rot: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_trans: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenPgo {
    #[arg(long, default_value_t = 10)]
    vertices: usize,
    #[arg(long, default_value_t = 3)]
    loop_closures: usize,
    #[arg(long, default_value_t = 0.0)]
    noise_rot: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_trans: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the ground-truth poses as VERTEX records.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = SolverConfig::default().restarts)]
    restarts: usize,
    #[arg(long, default_value_t = SolverConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SolverConfig::default().tol_grad)]
    tol_grad: f64,
    #[arg(long, default_value_t = SolverConfig::default().tol_feas)]
    tol_feas: f64,
    #[arg(long, default_value_t = SolverConfig::default().tau_l)]
    tau_l: f64,
    #[arg(long, default_value_t = SolverConfig::default().tau_rel)]
    tau_rel: f64,
    #[arg(long, default_value_t = DEFAULT_MU_MIN)]
    mu_min: f64,
    #[arg(long, default_value_t = SolverConfig::default().max_outer)]
    max_outer: usize,
    #[arg(long, default_value_t = SolverConfig::default().max_inner)]
    max_inner: usize,
    #[arg(long, default_value_t = SolverConfig::default().threads)]
    threads: usize,
    /// Per-iteration history as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveHandeye {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct SolvePgo {
    #[arg(long = "in")]
    input: PathBuf,
    /// Ground-truth poses as VERTEX records, for per-vertex errors.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct Selftest {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

/// Resolved settings of a pose-graph generator run, echoed into its output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgoGeneratorConfig {
    pub vertices: usize,
    pub loop_closures: usize,
    pub noise_rot: f64,
    pub noise_trans: f64,
    pub seed: u64,
}

/// File written by the solve commands.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOutput<R> {
    pub command: String,
    pub input: String,
    pub config: SolverConfig,
    pub report: R,
}

/// Failure of a command, already classified by exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible { .. } | Error::MaxIterations { .. } | Error::DegenerateConstraintGradients(_) => EXIT_SOLVER,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Run the command line `args` (program name first) with `seed_env` as the
/// value of [`SEED_ENV`]. Returns the exit code.
pub fn run(args: Vec<OsString>, seed_env: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let seed_override = match seed_env.map(|s| s.trim().parse::<u64>().map_err(|_| s)).transpose() {
        Ok(s) => s,
        Err(s) => {
            let _ = writeln!(err, "error: {SEED_ENV}={s:?} is not an unsigned integer");
            return EXIT_USAGE;
        }
    };
    let result = match cli.command {
        Command::GenHandeye(a) => gen_handeye(a, seed_override, out),
        Command::SolveHandeye(a) => solve_handeye(a, seed_override, out, err),
        Command::GenPgo(a) => gen_pgo(a, seed_override, out),
        Command::SolvePgo(a) => solve_pgo(a, seed_override, out, err),
        Command::Selftest(a) => run_selftest(a, seed_override, out),
        Command::Report(a) => report(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// [`run`] with the process arguments, environment and standard streams.
pub fn main_exit_code() -> i32 {
    let seed_env = std::env::var(SEED_ENV).ok();
    run(std::env::args_os().collect(), seed_env, &mut std::io::stdout(), &mut std::io::stderr())
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: Option<&Path>, text: &str, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| usage(e.to_string())),
    }
}

fn echo(out: &mut dyn Write, command: &str, config: &impl Serialize) {
    let json = serde_json::to_string(config).expect("configs serialize");
    let _ = writeln!(out, "{command} config {json}");
}

fn gen_handeye(a: GenHandeye, seed_override: Option<u64>, out: &mut dyn Write) -> CmdResult {
    let seed = seed_override.unwrap_or(a.seed);
    let d = handeye::generate_synthetic(a.model, a.motions, a.noise_rot, a.noise_trans, seed)?;
    if a.out.is_some() {
        echo(out, "gen-handeye", &(d.model, d.generator));
    }
    write_text(a.out.as_deref(), &d.to_json(), out)?;
    Ok(EXIT_OK)
}

fn gen_pgo(a: GenPgo, seed_override: Option<u64>, out: &mut dyn Write) -> CmdResult {
    let cfg = PgoGeneratorConfig {
        vertices: a.vertices,
        loop_closures: a.loop_closures,
        noise_rot: a.noise_rot,
        noise_trans: a.noise_trans,
        seed: seed_override.unwrap_or(a.seed),
    };
    let g = posegraph::generate_cycle_graph(cfg.vertices, cfg.loop_closures, cfg.noise_rot, cfg.noise_trans, cfg.seed)?;
    let header = format!("# generator {}\n", serde_json::to_string(&cfg).expect("configs serialize"));
    if a.out.is_some() {
        echo(out, "gen-pgo", &cfg);
    }
    write_text(a.out.as_deref(), &format!("{header}{}", serialize_graph(&g)), out)?;
    if let Some(path) = a.truth.as_deref() {
        let truth = g.truth.as_deref().expect("generated graphs carry truth");
        write_text(Some(path), &format!("{header}{}", serialize_poses(truth)), out)?;
    }
    Ok(EXIT_OK)
}

fn solver_config(a: &SolverArgs, seed_override: Option<u64>) -> std::result::Result<SolverConfig, Failure> {
    let cfg = SolverConfig {
        restarts: a.restarts,
        seed: seed_override.unwrap_or(a.seed),
        tol_grad: a.tol_grad,
        tol_feas: a.tol_feas,
        tau_l: a.tau_l,
        tau_rel: a.tau_rel,
        max_outer: a.max_outer,
        max_inner: a.max_inner,
        threads: a.threads,
        ..SolverConfig::default()
    };
    if !(a.mu_min > 0.0 && a.mu_min.is_finite()) {
        return Err(usage(format!("invalid configuration: mu_min must be positive, got {}", a.mu_min)));
    }
    let cfg = cfg.with_mu_min(a.mu_min);
    cfg.validate()?;
    Ok(cfg)
}

/// Write the report and CSV, print a summary and pick the exit code.
fn finish<R: Serialize>(
    output: SolveOutput<R>,
    solve: &SolveReport,
    a: &SolverArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    if let Some(path) = a.csv.as_deref() {
        let file = fs::File::create(path).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
        write_history_csv(&solve.history, std::io::BufWriter::new(file)).map_err(|e| usage(e.to_string()))?;
    }
    let json = serde_json::to_string_pretty(&output).expect("reports serialize") + "\n";
    if a.out.is_some() {
        echo(out, &output.command, &output.config);
        let _ = writeln!(
            out,
            "stage1_value {:e} stage2_value {:e} kkt {:e} {:e} feasibility {:e} converged {}",
            solve.stage1_value,
            solve.stage2_value,
            solve.kkt_residual.stage1,
            solve.kkt_residual.stage2,
            solve.feasibility.max(),
            solve.converged
        );
    }
    write_text(a.out.as_deref(), &json, out)?;
    if solve.converged {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(err, "error: solver stopped before meeting the tolerances; the best point found was written");
        Ok(EXIT_SOLVER)
    }
}

fn solve_handeye(a: SolveHandeye, seed_override: Option<u64>, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let cfg = solver_config(&a.solver, seed_override)?;
    let d = HandEyeDataset::from_json(&read(&a.input)?)?;
    let report = handeye::solve(&d, &cfg)?;
    for w in &report.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if let (Some(e), true) = (&report.errors, a.solver.out.is_some()) {
        let _ = writeln!(out, "rotation_error {:e} translation_error {:e}", e.max_rotation(), e.max_translation());
    }
    let solve = report.solve.clone();
    let output = SolveOutput { command: "solve-handeye".into(), input: a.input.display().to_string(), config: cfg, report };
    finish(output, &solve, &a.solver, out, err)
}

fn solve_pgo(a: SolvePgo, seed_override: Option<u64>, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let cfg = solver_config(&a.solver, seed_override)?;
    let mut g = parse_graph(&read(&a.input)?)?;
    if let Some(path) = a.truth.as_deref() {
        g = g.with_truth(parse_poses(&read(path)?)?)?;
    }
    let report = posegraph::solve(&g, &cfg)?;
    if let (Some(r), Some(t), true) = (report.max_rotation_error, report.max_translation_error, a.solver.out.is_some()) {
        let _ = writeln!(out, "rotation_error {r:e} translation_error {t:e}");
    }
    let solve = report.solve.clone();
    let output = SolveOutput { command: "solve-pgo".into(), input: a.input.display().to_string(), config: cfg, report };
    finish(output, &solve, &a.solver, out, err)
}

fn run_selftest(a: Selftest, seed_override: Option<u64>, out: &mut dyn Write) -> CmdResult {
    let seed = seed_override.unwrap_or(a.seed);
    echo(out, "selftest", &serde_json::json!({ "seed": seed }));
    let results = selftest::run_all(seed);
    let (mut passed, mut failed) = (0, 0);
    for r in &results {
        let _ = writeln!(out, "{}: {} passed, {} failed", r.name, r.passed, r.failed);
        passed += r.passed;
        failed += r.failed;
    }
    let _ = writeln!(out, "total: {passed} passed, {failed} failed");
    Ok(if failed == 0 { EXIT_OK } else { EXIT_SOLVER })
}

fn report(a: ReportArgs, out: &mut dyn Write) -> CmdResult {
    let v: Value = serde_json::from_str(&read(&a.input)?).map_err(|e| usage(format!("{}: {e}", a.input.display())))?;
    let r = v.get("report").ok_or_else(|| usage(format!("{}: not a solve report", a.input.display())))?;
    let _ = writeln!(out, "command {}", v["command"].as_str().unwrap_or("?"));
    let _ = writeln!(out, "input {}", v["input"].as_str().unwrap_or("?"));
    if let Some(m) = r.get("model").and_then(Value::as_str) {
        let _ = writeln!(out, "model {m}");
    }
    for key in ["stage1_value", "stage2_value", "converged", "label", "restart_index", "tau_band"] {
        if let Some(x) = r.get(key) {
            let _ = writeln!(out, "{key} {x}");
        }
    }
    for key in ["kkt_residual", "iterations", "mu_final"] {
        if let Some(x) = r.get(key) {
            let _ = writeln!(out, "{key} stage1 {} stage2 {}", x["stage1"], x["stage2"]);
        }
    }
    if let Some(errors) = r.get("errors") {
        let _ = writeln!(out, "errors {errors}");
    }
    for key in ["max_rotation_error", "max_translation_error"] {
        if let Some(x) = r.get(key) {
            let _ = writeln!(out, "{key} {x}");
        }
    }
    if let Some(w) = r.get("warnings").and_then(Value::as_array) {
        for w in w {
            let _ = writeln!(out, "warning {}", w.as_str().unwrap_or(""));
        }
    }
    Ok(EXIT_OK)
}
