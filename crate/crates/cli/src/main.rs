use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use adiabound::bounds::{audit_inequality, audit_inequality_running, InequalityAudit};
use adiabound::experiments::{load_matrix_pair, min_run_time, sweep, Model, PathSpec, SearchRange, SweepConfig};
use adiabound::propagator::{read_samples_csv, Sample};
use adiabound::{build_full, propagate, Error, GroverInstance, PropagatorConfig};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "adiabound", version, about = "Necessary run-time bounds for adiabatic evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the necessary run-time bound for a model and allowance.
    Bound {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        json: bool,
    },
    /// Propagate once and write the trajectory as CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Trajectory CSV destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for the minimal run time along a schedule.
    MinTime {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "linear", value_parser = parse_schedule)]
        schedule: PathSpec,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        t_lo: f64,
        #[arg(long, default_value_t = 10.0)]
        t_hi: f64,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Write the accepted trajectory to this CSV file.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run a sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config's CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit the fidelity-overlap inequality on a saved or fresh trajectory.
    Audit {
        /// Saved trajectory CSV. Needs `--delta-v` or a model.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        delta_v: Option<f64>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_schedule)]
        schedule: Option<PathSpec>,
        #[arg(long)]
        tf: Option<f64>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Use the running integral up to each sample instead of the full run time.
        #[arg(long)]
        running: bool,
        /// Per-sample audit records as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
#[group(skip)]
struct ModelArgs {
    /// Grover search over N items.
    #[arg(long, group = "model")]
    grover_n: Option<u64>,
    /// Marked item of the Grover model (1-based).
    #[arg(long, default_value_t = 1)]
    marked: u64,
    /// JSON file with `dim`, `h0`, `h1`.
    #[arg(long, group = "model")]
    matrix_pair: Option<PathBuf>,
}

impl ModelArgs {
    fn given(&self) -> bool {
        self.grover_n.is_some() || self.matrix_pair.is_some()
    }

    fn build(&self) -> std::result::Result<Model, Failure> {
        match (self.grover_n, &self.matrix_pair) {
            (Some(n), None) => Ok(Model::Grover(GroverInstance::new(n, self.marked)?)),
            (None, Some(p)) => Ok(Model::Pair(load_matrix_pair(p)?)),
            _ => Err(Failure::Usage("exactly one of --grover-n or --matrix-pair is required".into())),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "linear", value_parser = parse_schedule)]
    schedule: PathSpec,
    #[arg(long)]
    tf: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Propagate Grover in the full N-dimensional space instead of the 2D reduction.
    #[arg(long)]
    full: bool,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(Error::Json(e))
    }
}

type Outcome = std::result::Result<(), Failure>;

fn parse_schedule(s: &str) -> std::result::Result<PathSpec, String> {
    let (kind, arg) = match s.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (s, None),
    };
    let number = |a: Option<&str>| -> std::result::Result<f64, String> {
        a.ok_or_else(|| format!("schedule `{kind}` needs a parameter, e.g. `{kind}:2`"))?
            .parse::<f64>()
            .map_err(|e| format!("bad schedule parameter: {e}"))
    };
    match kind {
        "linear" => Ok(PathSpec::Linear),
        "power" => Ok(PathSpec::Power { exponent: number(arg)? }),
        "tanh" | "tanh-ramp" => Ok(PathSpec::TanhRamp { steepness: number(arg)? }),
        "local-adiabatic" => Ok(PathSpec::LocalAdiabatic),
        "tabulated" => match arg {
            Some(f) if !f.is_empty() => Ok(PathSpec::Tabulated { file: f.into() }),
            _ => Err("schedule `tabulated` needs a file, e.g. `tabulated:table.csv`".into()),
        },
        other => Err(format!(
            "unknown schedule `{other}` (expected linear, power:P, tanh:K, local-adiabatic or tabulated:FILE)"
        )),
    }
}

fn path_for(spec: &PathSpec, model: &Model) -> std::result::Result<adiabound::Path, Failure> {
    if matches!(spec, PathSpec::LocalAdiabatic) && !matches!(model, Model::Grover(_)) {
        return Err(Failure::Usage("the local-adiabatic schedule needs a Grover model".into()));
    }
    Ok(spec.to_path(model.dim())?)
}

fn writer(out: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_bound(model: &Model, epsilon: f64, json: bool) -> Outcome {
    let r = model.bound_report(epsilon)?;
    if json {
        let v = json!({
            "delta_v": r.delta_v,
            "c_final": r.c_final,
            "epsilon": r.epsilon,
            "t_f_lower": r.t_f_lower,
            "vacuous": r.is_vacuous(),
        });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!("t_f_lower {}", r.t_f_lower);
        println!("vacuous {}", r.is_vacuous());
        println!("delta_v {}", r.delta_v);
        println!("c_final {}", r.c_final);
        println!("epsilon {}", r.epsilon);
    }
    Ok(())
}

fn cmd_simulate(model: &Model, run: &RunArgs, out: Option<&PathBuf>) -> Outcome {
    let schedule = path_for(&run.schedule, model)?.at_run_time(run.tf)?;
    let cfg = PropagatorConfig::default().with_samples(run.samples);
    let tr = match (model, run.full) {
        (Model::Grover(g), true) => propagate(&build_full(g)?, &schedule, &cfg)?,
        _ => model.propagate(&schedule, &cfg)?,
    };
    let mut w = writer(out)?;
    tr.write_csv(&mut w)?;
    w.flush()?;
    log::info!(
        "F(1) = {}, C(1) = {}, max norm deviation {:.3e}, step {:.3e}, step-halving change {:?}",
        tr.final_fidelity(),
        tr.final_overlap(),
        tr.max_norm_deviation(),
        tr.step,
        tr.convergence_change
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_min_time(
    model: &Model,
    schedule: &PathSpec,
    epsilon: f64,
    range: SearchRange,
    samples: usize,
    trajectory: Option<&PathBuf>,
    json: bool,
) -> Outcome {
    let path = path_for(schedule, model)?;
    let found = min_run_time(&path, model, epsilon, &range, &PropagatorConfig::default().with_samples(samples))?;
    let bound = model.bound_report(epsilon)?.t_f_lower;
    let slack = if bound > 0.0 { found.t_f / bound } else { f64::INFINITY };
    if let (Some(p), Some(tr)) = (trajectory, &found.trajectory) {
        let mut w = writer(Some(p))?;
        tr.write_csv(&mut w)?;
        w.flush()?;
    }
    if json {
        let v = json!({
            "N": model.dim(),
            "epsilon": epsilon,
            "schedule": schedule.label(),
            "t_f_min": found.t_f,
            "lower_bound": bound,
            "slack_ratio": if slack.is_finite() { json!(slack) } else { json!(null) },
            "final_fidelity": found.final_fidelity(),
            "verified": found.verified,
            "evaluations": found.evaluations,
            "min_time_definition": adiabound::experiments::MIN_TIME_DEFINITION,
        });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!("t_f_min {}", found.t_f);
        println!("lower_bound {bound}");
        println!("slack_ratio {slack}");
        println!("final_fidelity {}", found.final_fidelity());
        println!("verified {}", found.verified);
        println!("evaluations {}", found.evaluations);
    }
    Ok(())
}

fn cmd_sweep(config: &PathBuf, workers: Option<usize>, out: Option<&PathBuf>) -> Outcome {
    let mut cfg = SweepConfig::from_json_file(config)?;
    if let Some(w) = workers {
        cfg.workers = w;
    }
    if let Some(o) = out {
        cfg.csv_out = Some(o.clone());
    }
    let summary = sweep(&cfg)?;
    let mut w = writer(cfg.csv_out.as_ref())?;
    summary.write_csv(&mut w)?;
    w.flush()?;
    if let Some(p) = &cfg.json_out {
        let mut w = writer(Some(p))?;
        summary.write_json(&mut w)?;
        w.flush()?;
    }
    for r in summary.records.iter().filter(|r| !r.error.is_empty()) {
        log::warn!("N={} epsilon={}: {}", r.n, r.epsilon, r.error);
    }
    for (eps, fit) in &summary.fits {
        log::info!("epsilon {eps}: t_f ~ N^{:.4} (± {:.4})", fit.exponent, fit.std_error);
    }
    Ok(())
}

struct AuditInput<'a> {
    trajectory: Option<&'a PathBuf>,
    delta_v: Option<f64>,
    model: Option<Model>,
    schedule: Option<&'a PathSpec>,
    tf: Option<f64>,
    samples: usize,
}

fn cmd_audit(input: AuditInput, running: bool, out: Option<&PathBuf>, json: bool) -> Outcome {
    let samples: Vec<Sample> = match (input.trajectory, &input.model) {
        (Some(p), _) => read_samples_csv(File::open(p)?)?,
        (None, Some(model)) => {
            let tf = input.tf.ok_or_else(|| Failure::Usage("a fresh audit needs --tf".into()))?;
            let spec = input.schedule.cloned().unwrap_or(PathSpec::Linear);
            let schedule = path_for(&spec, model)?.at_run_time(tf)?;
            model.propagate(&schedule, &PropagatorConfig::default().with_samples(input.samples))?.samples
        }
        (None, None) => return Err(Failure::Usage("audit needs --trajectory or a model".into())),
    };
    let delta_v = match (input.delta_v, &input.model) {
        (Some(d), _) => d,
        (None, Some(m)) => m.delta_v()?,
        (None, None) => return Err(Failure::Usage("auditing a saved trajectory needs --delta-v or a model".into())),
    };
    let audit: InequalityAudit =
        if running { audit_inequality_running(&samples, delta_v) } else { audit_inequality(&samples, delta_v) };

    if let Some(p) = out {
        let mut w = writer(Some(p))?;
        writeln!(w, "lambda,lhs,rhs,residual")?;
        for r in &audit.records {
            writeln!(w, "{},{},{},{}", r.lambda, r.lhs, r.rhs, r.residual)?;
        }
        w.flush()?;
    }
    let tightest = audit.tightest().map(|r| r.lambda);
    if json {
        let v = json!({
            "delta_v": delta_v,
            "samples": audit.records.len(),
            "min_residual": audit.min_residual,
            "tightest_lambda": tightest,
            "violated": audit.is_violated(),
            "running": running,
        });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!("min_residual {}", audit.min_residual);
        if let Some(l) = tightest {
            println!("tightest_lambda {l}");
        }
        println!("violated {}", audit.is_violated());
    }
    if audit.is_violated() {
        return Err(Failure::Core(Error::NumericalConsistency(format!(
            "inequality violated: min residual {:.3e}",
            audit.min_residual
        ))));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Bound { model, epsilon, json } => {
            cmd_bound(&model.build()?, epsilon, json)
        }
        Command::Simulate { model, run, out } => {
            cmd_simulate(&model.build()?, &run, out.as_ref())
        }
        Command::MinTime { model, schedule, epsilon, t_lo, t_hi, tolerance, samples, trajectory, json } => {
            let model = model.build()?;
            let range = SearchRange { t_lo, t_hi, tolerance };
            cmd_min_time(&model, &schedule, epsilon, range, samples, trajectory.as_ref(), json)
        }
        Command::Sweep { config, workers, out } => cmd_sweep(&config, workers, out.as_ref()),
        Command::Audit { trajectory, delta_v, model, schedule, tf, samples, running, out, json } => {
            let model = if model.given() { Some(model.build()?) } else { None };
            let input = AuditInput { trajectory: trajectory.as_ref(), delta_v, model, schedule: schedule.as_ref(), tf, samples };
            cmd_audit(input, running, out.as_ref(), json)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
