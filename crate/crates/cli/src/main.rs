//! `mosaic-verify`: decide polynomial input-output properties of ReLU
//! networks, or replay counterexamples through the double-integrator plant.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mosaic_core::driver::{emit_report, verify, Engine, Report, ReportFormat, VerifyOptions};
use mosaic_core::formula::{parse, Mode};
use mosaic_core::linearize::{ApproxConfig, ApproxMode};
use mosaic_core::network::load_network;
use mosaic_core::rat;
use mosaic_core::replay::{simulate, trajectory_csv, DoubleIntegrator, PlantConfig};
use mosaic_core::theory::IcpBudget;

#[derive(Parser)]
#[command(
    name = "mosaic-verify",
    about = "Exact verification of polynomial properties of ReLU networks",
    args_conflicts_with_subcommands = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    verify: Option<VerifyArgs>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a network against a closed-form plant from a given state.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Network JSON file.
    #[arg(long = "nn", required = true)]
    nn: PathBuf,

    /// Query file.
    #[arg(long = "query", required = true)]
    query: PathBuf,

    /// Override the query file's falsify:/prove: mode.
    #[arg(long = "mode", value_enum)]
    mode: Option<CliMode>,

    /// Pieces per univariate approximation segment.
    #[arg(long = "approx", default_value_t = 1)]
    approx: u32,

    /// Breakpoint overlap epsilon (rational or decimal).
    #[arg(long = "approx-eps", default_value = "1e-6")]
    approx_eps: String,

    /// Approximation mode.
    #[arg(long = "approx-mode", value_enum, default_value_t = CliApproxMode::Overt)]
    approx_mode: CliApproxMode,

    /// Region enumeration engine.
    #[arg(long = "engine", value_enum, default_value_t = CliEngine::Native)]
    engine: CliEngine,

    /// Wall-clock seconds per region check.
    #[arg(long = "filter-timeout", default_value_t = 4.0)]
    filter_timeout: f64,

    /// Interval split limit per satisfiability check.
    #[arg(long = "icp-splits", default_value_t = 100_000)]
    icp_splits: u64,

    /// Box-size floor exponent: boxes stop splitting below width/2^FLOOR.
    #[arg(long = "icp-floor", default_value_t = 40)]
    icp_floor: u32,

    /// Enumerate and report every counterexample region.
    #[arg(long = "exhaustive")]
    exhaustive: bool,

    /// Worker pool size (0 = available parallelism).
    #[arg(long = "jobs", default_value_t = 0)]
    jobs: usize,

    /// Write the JSON report here (stdout gets the text summary).
    #[arg(long = "report")]
    report: Option<PathBuf>,

    /// Dump each normalized query as JSON into this directory.
    #[arg(long = "dump-queries")]
    dump_queries: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Falsify,
    Prove,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliApproxMode {
    Overt,
    Interval,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliEngine {
    Native,
    Exclusion,
}

#[derive(Args)]
struct ReplayArgs {
    /// Network JSON file.
    #[arg(long = "nn", required = true)]
    nn: PathBuf,

    /// Plant model.
    #[arg(long = "plant", default_value = "acc")]
    plant: String,

    /// Control period in seconds.
    #[arg(long = "T", default_value = "0.1")]
    period: String,

    /// Maximal acceleration.
    #[arg(long = "A", default_value = "100")]
    accel_max: String,

    /// Maximal braking (the lower control bound is -B).
    #[arg(long = "B", default_value = "100")]
    braking: String,

    /// Initial state "r,rv".
    #[arg(long = "init", required = true)]
    init: String,

    /// Number of control steps.
    #[arg(long = "steps", default_value_t = 100)]
    steps: usize,

    /// Write the trajectory CSV here instead of stdout.
    #[arg(long = "csv")]
    csv: Option<PathBuf>,
}

fn run_verify(args: &VerifyArgs) -> Result<ExitCode, String> {
    let query_text = std::fs::read_to_string(&args.query)
        .map_err(|e| format!("cannot read {}: {}", args.query.display(), e))?;
    let mut spec = parse(&query_text).map_err(|e| format!("{}: {}", args.query.display(), e))?;
    if let Some(mode) = args.mode {
        spec.mode = match mode {
            CliMode::Falsify => Mode::Falsify,
            CliMode::Prove => Mode::Prove,
        };
    }
    let nn_bytes = std::fs::read(&args.nn)
        .map_err(|e| format!("cannot read {}: {}", args.nn.display(), e))?;
    let net = load_network(&nn_bytes).map_err(|e| format!("{}: {}", args.nn.display(), e))?;
    let eps = rat::parse_rat(&args.approx_eps)
        .ok_or_else(|| format!("malformed --approx-eps '{}'", args.approx_eps))?;
    if args.approx < 1 {
        return Err("--approx must be at least 1".to_string());
    }
    let opts = VerifyOptions {
        approx: ApproxConfig {
            pieces: args.approx,
            eps,
            mode: match args.approx_mode {
                CliApproxMode::Overt => ApproxMode::Overt,
                CliApproxMode::Interval => ApproxMode::Interval,
            },
        },
        mosaic: Default::default(),
        engine: match args.engine {
            CliEngine::Native => Engine::Native,
            CliEngine::Exclusion => Engine::Exclusion,
        },
        filter: mosaic_core::filter::FilterBudget {
            icp: IcpBudget {
                max_boxes: args.icp_splits,
                floor_exp: args.icp_floor,
                deadline: None,
            },
            timeout: std::time::Duration::from_secs_f64(args.filter_timeout),
        },
        exhaustive: args.exhaustive,
        jobs: args.jobs,
        dump_queries: args.dump_queries.clone(),
    };
    let outcome = verify(&spec, &net, &opts).map_err(|e| e.to_string())?;
    let report = Report::from_outcome(&outcome);
    let text = emit_report(&report, ReportFormat::Text);
    print!("{}", String::from_utf8_lossy(&text));
    if let Some(path) = &args.report {
        let json = emit_report(&report, ReportFormat::Json);
        std::fs::write(path, json)
            .map_err(|e| format!("cannot write {}: {}", path.display(), e))?;
    }
    Ok(ExitCode::from(outcome.verdict.exit_code() as u8))
}

fn run_replay(args: &ReplayArgs) -> Result<ExitCode, String> {
    if args.plant != "acc" {
        return Err(format!("unknown plant '{}' (available: acc)", args.plant));
    }
    let nn_bytes = std::fs::read(&args.nn)
        .map_err(|e| format!("cannot read {}: {}", args.nn.display(), e))?;
    let net = load_network(&nn_bytes).map_err(|e| format!("{}: {}", args.nn.display(), e))?;
    let period = rat::parse_rat(&args.period)
        .ok_or_else(|| format!("malformed --T '{}'", args.period))?;
    let accel_max = rat::parse_rat(&args.accel_max)
        .ok_or_else(|| format!("malformed --A '{}'", args.accel_max))?;
    let braking = rat::parse_rat(&args.braking)
        .ok_or_else(|| format!("malformed --B '{}'", args.braking))?;
    let (r, rv) = args
        .init
        .split_once(',')
        .ok_or_else(|| "--init expects \"r,rv\"".to_string())?;
    let r = rat::parse_rat(r).ok_or_else(|| format!("malformed initial r '{}'", r))?;
    let rv = rat::parse_rat(rv).ok_or_else(|| format!("malformed initial rv '{}'", rv))?;
    if args.steps < 1 {
        return Err("--steps must be at least 1".to_string());
    }
    let cfg = PlantConfig::new(period, -braking, accel_max);
    let trajectory = simulate(&net, &DoubleIntegrator, &cfg, (r, rv), args.steps);
    let csv = trajectory_csv(&trajectory);
    match &args.csv {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| format!("cannot write {}: {}", path.display(), e))?,
        None => print!("{}", csv),
    }
    if trajectory.crashed {
        let (lo, hi) = trajectory.crash_time.expect("crash carries a time");
        eprintln!(
            "crash: position reaches 0 at t in [{}, {}]",
            rat::display(&lo),
            rat::display(&hi)
        );
    } else {
        eprintln!("no crash within {} steps", args.steps);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match (&cli.command, &cli.verify) {
        (Some(Command::Replay(args)), _) => run_replay(args),
        (None, Some(args)) => run_verify(args),
        (None, None) => Err("expected --nn/--query or a subcommand; see --help".to_string()),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::from(3)
        }
    }
}
