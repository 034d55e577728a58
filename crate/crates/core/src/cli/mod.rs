//! Command line front end.
//!
//! Exit codes: 0 on success, 1 for validation and parse errors, 2 for
//! numerical failures, 3 for I/O errors.

pub mod config;
pub mod demo;
pub mod experiment;
pub mod io;
pub mod svg;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::dmp::{Dmp, PerturbationField, Vector};
use crate::error::{Error, ErrorKind, Result};
use crate::metrics::compare_with_goal;

use config::{BuiltinDemo, DemoSource, DmpParams, ExperimentConfig, MetricsFile, ObstacleFile};

#[derive(Debug, Parser)]
#[command(
    name = "dmp-avoid",
    version,
    about = "Movement primitives with obstacle-avoidance perturbations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a primitive from a demonstration and write the model as JSON
    Learn(LearnArgs),
    /// Integrate a learned model and write the trajectory as CSV
    Rollout(RolloutArgs),
    /// Run an experiment described by a JSON config
    Experiment(ExperimentArgs),
    /// Compare an adapted trajectory CSV against a reference CSV
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    /// Demonstration CSV
    #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
    pub demo: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub builtin: Option<BuiltinDemo>,
    /// Learning parameters (JSON)
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Sampling step of the builtin demo
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    /// Model JSON written by `learn`
    pub model: PathBuf,
    /// Trajectory CSV; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Comma-separated goal, e.g. `3.14159,0.5`
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub goal: Option<Vec<f64>>,
    /// Comma-separated start
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub start: Option<Vec<f64>>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Defaults to three times tau
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Obstacles to avoid (JSON)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave the generation time out of SVG files
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub reference: PathBuf,
    pub adapted: PathBuf,
    /// Obstacles and goal (JSON)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report JSON; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Validation => 1,
        ErrorKind::Numerical => 2,
        ErrorKind::Io => 3,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.kind())
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Learn(a) => learn(a).map(|_| 0),
        Command::Rollout(a) => rollout(a).map(|_| 0),
        Command::Experiment(a) => experiment(a),
        Command::Metrics(a) => metrics(a).map(|_| 0),
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    io::parse_json(&io::read_to_string(path)?, &path.display().to_string())
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => io::write(path, contents),
        None => std::io::stdout()
            .lock()
            .write_all(contents.as_bytes())
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn learn(a: LearnArgs) -> Result<()> {
    let mut params: DmpParams = match &a.config {
        Some(p) => load_json(p)?,
        None => DmpParams::default(),
    };
    if let Some(dt) = a.dt {
        params.dt = dt;
    }
    let config = params.learn_config()?;
    let source = match (&a.demo, a.builtin) {
        (Some(p), _) => DemoSource::File(p.clone()),
        (None, Some(b)) => DemoSource::Builtin(b),
        (None, None) => unreachable!("clap requires a demo"),
    };
    let demo = source.load(Path::new(""), params.dt)?;
    let dmp = Dmp::learn(&demo, &config)?;
    io::write_model(&a.out, &dmp)
}

fn parse_point(name: &str, values: Option<Vec<f64>>, fallback: Vector) -> Result<Vector> {
    match values {
        Some(v) if v.iter().any(|x| !x.is_finite()) => {
            Err(Error::invalid(format!("{name} must be finite")))
        }
        Some(v) => Ok(Vector::from_vec(v)),
        None => Ok(fallback),
    }
}

fn rollout(a: RolloutArgs) -> Result<()> {
    let mut dmp = io::read_model(&a.model)?;
    let field = match &a.config {
        Some(p) => Some(load_json::<ObstacleFile>(p)?.field()?),
        None => None,
    };
    if let Some(tau) = a.tau {
        dmp = dmp.with_tau(tau)?;
    }
    let start = parse_point("start", a.start, dmp.start())?;
    let goal = parse_point("goal", a.goal, dmp.goal())?;
    let params = DmpParams {
        dt: a.dt.unwrap_or(crate::dmp::DEFAULT_DT),
        horizon: a.horizon,
        ..DmpParams::default()
    };
    let config = params.rollout_config(dmp.tau())?;
    let tr = dmp.rollout(
        &start,
        &goal,
        &config,
        field.as_ref().map(|f| f as &dyn PerturbationField),
    )?;
    emit(a.out.as_deref(), &io::trajectory_to_csv(&tr))
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("at unix time {secs}")
}

fn experiment(a: ExperimentArgs) -> Result<i32> {
    let config = ExperimentConfig::load(&a.config)?;
    let base = a.config.parent().unwrap_or(Path::new("")).to_path_buf();
    let plan = config.plan(&base)?;
    let out = match (&a.out, &config.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => PathBuf::from(config.kind.name()),
    };
    let stamp = (!a.no_timestamp).then(timestamp);
    let outputs = experiment::execute(&plan, config.kind, &out, stamp.as_deref())?;
    for f in &outputs.files {
        println!("{}", f.display());
    }
    match experiment::failure_kind(&outputs) {
        None => Ok(0),
        Some(kind) => {
            for (name, _) in &outputs.failures {
                eprintln!(
                    "error: {name} failed, see {}",
                    out.join("report.json").display()
                );
            }
            Ok(exit_code(kind))
        }
    }
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let file: MetricsFile = match &a.config {
        Some(p) => load_json(p)?,
        None => MetricsFile::default(),
    };
    let reference = io::read_trajectory(&a.reference)?;
    let adapted = io::read_trajectory(&a.adapted)?;
    let goal = parse_point("goal", file.goal, reference.last_position().clone())?;
    let obstacles: Vec<_> = file.obstacles.iter().map(|g| g.truth()).collect();
    let report = compare_with_goal(&reference, &adapted, &obstacles, &goal)?;
    emit(a.out.as_deref(), &io::to_json(&report))
}
