//! Argument parsing and the subcommand handlers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use aoi_core::{aoi_single_source_mg1, simulate, QueueConfig, ServiceDistribution};
use clap::{Args, Parser, Subcommand};

use crate::compare::{compare_columns, methods_in, write_summaries, Gate};
use crate::config::{parse_service, Method, SimSettings, SweepSpec, PRESETS};
use crate::error::CliError;
use crate::sweep::{self, read_rows, run_sweep, timed_row, write_rows, Row, SweepOptions};

#[derive(Debug, Parser)]
#[command(
    name = "aoi",
    version,
    about = "Average age of information of a tagged source in an FCFS single-server queue",
    after_help = "Exit codes: 0 ok, 1 usage or invalid input, 2 numeric failure, 3 tolerance gate failed."
)]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact age for exponential service.
    ExactMm1(PointArgs),
    /// The three closed-form approximations for general service.
    Approx(PointArgs),
    /// Exact age of a lone source with general service.
    SingleMg1(PointArgs),
    /// Discrete-event simulation of one point.
    Simulate(SimulateArgs),
    /// Evaluate methods over a rate grid and write one CSV row per point and method.
    Sweep(SweepArgs),
    /// Error statistics between methods of one or two sweep tables.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Experiment file supplying service and rates; flags below override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Arrival rate of the tagged source.
    #[arg(long)]
    pub lambda1: Option<f64>,

    /// Total arrival rate of the other sources.
    #[arg(long)]
    pub lambda2: Option<f64>,

    /// Exponential service with this rate.
    #[arg(long, conflicts_with = "service")]
    pub mu: Option<f64>,

    /// Service law as a TOML inline table, e.g. '{kind = "gamma", shape = 2.0, rate = 2.0}'.
    #[arg(long, value_name = "TABLE")]
    pub service: Option<String>,

    /// Write CSV here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Leave runtime_ms empty.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub seed: Option<u64>,

    /// Arrivals per replication, over all sources.
    #[arg(long)]
    pub events: Option<u64>,

    #[arg(long)]
    pub replications: Option<usize>,

    /// Fraction of arrivals discarded at the start of each replication.
    #[arg(long)]
    pub warmup: Option<f64>,
}

impl SimArgs {
    fn apply(&self, mut s: SimSettings) -> SimSettings {
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.events {
            s.events = v;
        }
        if let Some(v) = self.replications {
            s.replications = v;
        }
        if let Some(v) = self.warmup {
            s.warmup = v;
        }
        s
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub point: PointArgs,

    #[command(flatten)]
    pub sim: SimArgs,

    /// Per-packet CSV trace of the first replication.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["config", "preset"]))]
pub struct SweepArgs {
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Bundled experiment.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS.iter().map(|p| p.0)))]
    pub preset: Option<String>,

    /// Replace the method list, e.g. approx1,simulate.
    #[arg(long, value_delimiter = ',', value_enum)]
    pub methods: Option<Vec<Method>>,

    #[command(flatten)]
    pub sim: SimArgs,

    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Leave runtime_ms empty so the output is reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Candidate table, then optionally a reference table.
    #[arg(required = true, num_args = 1..=2, value_name = "CSV")]
    pub files: Vec<PathBuf>,

    /// Reference method. Defaults to `simulate` with one table and to the
    /// same method with two.
    #[arg(long)]
    pub reference: Option<String>,

    /// Methods to assess, comma separated. Defaults to all but the reference.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,

    /// Fail with exit code 3 if any max relative error exceeds this.
    #[arg(long)]
    pub tol: Option<f64>,

    /// Fail with exit code 3 if any `value - reference` falls below this.
    #[arg(long, allow_hyphen_values = true)]
    pub min_diff: Option<f64>,

    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| {
            CliError::Io {
                path: p.to_path_buf(),
                source,
            }
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// A single `(λ₁, λ₂, service)` resolved from a file and flags.
struct Point {
    lambda1: f64,
    lambda2: f64,
    service: ServiceDistribution,
    sim: SimSettings,
}

impl PointArgs {
    fn resolve(&self) -> Result<Point, CliError> {
        let file = self
            .config
            .as_deref()
            .map(SweepSpec::from_path)
            .transpose()?;
        let single = |v: &[f64], name: &str| -> Result<f64, CliError> {
            match v {
                [x] => Ok(*x),
                _ => Err(CliError::Usage(format!(
                    "{name} has {} values in the config; pass --{name} or use `aoi sweep`",
                    v.len()
                ))),
            }
        };
        let lambda1 = match (self.lambda1, &file) {
            (Some(v), _) => v,
            (None, Some(f)) => single(&f.lambda1, "lambda1")?,
            (None, None) => return Err(CliError::Usage("--lambda1 is required".into())),
        };
        let lambda2 = match (self.lambda2, &file) {
            (Some(v), _) => v,
            (None, Some(f)) => single(&f.lambda2, "lambda2")?,
            (None, None) => 0.0,
        };
        let service = if let Some(s) = &self.service {
            parse_service(s)?
        } else if let Some(mu) = self.mu {
            ServiceDistribution::exponential(mu)?
        } else if let Some(f) = &file {
            f.service.clone()
        } else {
            return Err(CliError::Usage("give --mu, --service or --config".into()));
        };
        Ok(Point {
            lambda1,
            lambda2,
            service,
            sim: file.map(|f| f.sim).unwrap_or_default(),
        })
    }
}

/// Analytic rows fail the command on the first error.
fn analytic_rows(args: &PointArgs, methods: &[Method]) -> Result<(), CliError> {
    let p = args.resolve()?;
    let mut rows = Vec::new();
    for &m in methods {
        let mut err = None;
        let row = timed_row(p.lambda1, p.lambda2, m.as_str(), !args.no_timing, || {
            sweep::evaluate(m, p.lambda1, p.lambda2, &p.service, &p.sim)
                .inspect_err(|e| err = Some(e.clone()))
        });
        if let Some(e) = err {
            return Err(e.into());
        }
        rows.push(row);
    }
    write_rows(&rows, output(args.out.as_deref())?)
}

fn single_mg1(args: &PointArgs) -> Result<(), CliError> {
    let p = args.resolve()?;
    if p.lambda2 != 0.0 {
        return Err(CliError::Usage(format!(
            "single-mg1 models one source; got lambda2={}",
            p.lambda2
        )));
    }
    let mut err = None;
    let row = timed_row(p.lambda1, 0.0, "single_mg1", !args.no_timing, || {
        aoi_single_source_mg1(p.lambda1, &p.service)
            .map(|v| (v, None))
            .inspect_err(|e| err = Some(e.clone()))
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    write_rows(&[row], output(args.out.as_deref())?)
}

fn simulate_point(args: &SimulateArgs) -> Result<(), CliError> {
    let p = args.point.resolve()?;
    let sim = args.sim.apply(p.sim);
    let cfg = QueueConfig::with_any_load(p.lambda1, p.lambda2, p.service)?;
    let spec = sweep::sim_spec(&cfg, &sim)?;
    if let Some(path) = &args.trace {
        let f = File::create(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        aoi_core::sim::write_trace(&spec, 0, BufWriter::new(f))?;
    }
    let start = std::time::Instant::now();
    let report = simulate(&spec)?;
    let runtime_ms = (!args.point.no_timing).then(|| start.elapsed().as_secs_f64() * 1e3);
    let tagged = &report.sources[0];
    let mut rows = Vec::new();
    let mut push = |method: &str, est: Option<aoi_core::Estimate>| {
        if let Some(e) = est {
            rows.push(Row {
                lambda1: p.lambda1,
                lambda2: p.lambda2,
                method: method.to_string(),
                value: Some(e.mean),
                std_error: Some(e.std_error),
                runtime_ms,
                status: sweep::STATUS_OK.to_string(),
            });
        }
    };
    push("simulate", tagged.aoi.as_ref().map(|a| a.estimate()));
    push("simulate_delay", tagged.mean_delay);
    push("simulate_wait", Some(report.mean_wait));
    write_rows(&rows, output(args.point.out.as_deref())?)
}

fn sweep_cmd(args: &SweepArgs) -> Result<(), CliError> {
    let mut spec = match (&args.config, &args.preset) {
        (Some(path), _) => SweepSpec::from_path(path)?,
        (None, Some(name)) => SweepSpec::preset(name)?,
        (None, None) => unreachable!("clap requires --config or --preset"),
    };
    if let Some(m) = &args.methods {
        spec.methods = m.clone();
    }
    spec.sim = args.sim.apply(spec.sim);
    let rows = run_sweep(
        &spec,
        SweepOptions {
            timing: !args.no_timing,
        },
    )?;
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        log::warn!(
            "{failed} of {} rows have no value; see the status column",
            rows.len()
        );
    }
    let out = args.out.as_deref().or(spec.output.as_deref());
    write_rows(&rows, output(out)?)
}

fn read_table(path: &Path) -> Result<Vec<Row>, CliError> {
    let f = File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_rows(io::BufReader::new(f), &path.display().to_string())
}

fn compare_cmd(args: &CompareArgs) -> Result<(), CliError> {
    let candidates = read_table(&args.files[0])?;
    let references = match args.files.get(1) {
        Some(p) => read_table(p)?,
        None => candidates.clone(),
    };
    let two_files = args.files.len() == 2;
    let fixed_reference = args
        .reference
        .clone()
        .or_else(|| (!two_files).then(|| "simulate".to_string()));
    let methods = match &args.methods {
        Some(m) if m.is_empty() => return Err(CliError::Usage("--methods is empty".into())),
        Some(m) => m.clone(),
        None => methods_in(&candidates)
            .into_iter()
            .filter(|m| two_files || Some(m) != fixed_reference.as_ref())
            .collect(),
    };
    if methods.is_empty() {
        return Err(CliError::Usage("nothing to compare".into()));
    }
    let summaries = methods
        .iter()
        .map(|m| {
            let reference = fixed_reference.as_deref().unwrap_or(m);
            compare_columns(&candidates, m, &references, reference)
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_summaries(&summaries, output(args.out.as_deref())?)?;
    let gate = Gate {
        max_rel_error: args.tol,
        min_diff: args.min_diff,
    };
    let violations = gate.violations(&summaries);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::ToleranceExceeded(violations.join("; ")))
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::ExactMm1(a) => analytic_rows(a, &[Method::ExactMm1]),
        Command::Approx(a) => {
            analytic_rows(a, &[Method::Approx1, Method::Approx2, Method::Approx3])
        }
        Command::SingleMg1(a) => single_mg1(a),
        Command::Simulate(a) => simulate_point(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Compare(a) => compare_cmd(a),
    }
}
