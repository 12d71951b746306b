use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cliffbundle::gamma::MatrixRepJson;
use cliffbundle::{dirac_gammas, run_experiment, run_suite, Convention, Error, ExperimentConfig, MetricConfig, Suite, VerifyOptions};

mod geometry_table;

#[derive(Parser, Debug)]
#[command(name = "cliffbundle", version, about = "Clifford algebra, spinor geometry and bundle evolution toolkit")]
struct Cli {
    /// RNG seed (ChaCha8Rng) for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Multiplies every check tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Output file (verify, geometry, gamma) or directory (evolve).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run invariant checks and emit a report.
    Verify {
        #[arg(long)]
        suite: String,
        /// Inject noise of this magnitude into check inputs.
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
    },
    /// Tabulate vierbein, Christoffel and spin-connection components.
    Geometry(GeometryArgs),
    /// Run an evolution experiment from a JSON config.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Gamma-matrix utilities.
    Gamma {
        #[command(subcommand)]
        action: GammaAction,
    },
}

#[derive(Subcommand, Debug)]
enum GammaAction {
    /// Print the Dirac representation as JSON.
    Dump {
        #[arg(long, default_value = "mm")]
        convention: String,
    },
}

#[derive(Args, Debug)]
struct GeometryArgs {
    /// Metric config JSON file.
    #[arg(long, conflicts_with = "metric")]
    config: Option<PathBuf>,
    /// Builtin metric name, as an alternative to --config.
    #[arg(long)]
    metric: Option<String>,
    /// Dimension for --metric.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Comma-separated coordinates; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    point: Vec<String>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["grid_hi", "grid_n"])]
    grid_lo: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    grid_hi: Option<String>,
    #[arg(long)]
    grid_n: Option<String>,
    /// Finite-difference step for metric derivatives.
    #[arg(long, default_value_t = cliffbundle::geometry::DEFAULT_STEP)]
    step: f64,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>> {
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|_| usage(format!("{what}: cannot parse '{v}' in '{s}'"))))
        .collect()
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_verify(cli: &Cli, suite: &str, perturb: f64) -> anyhow::Result<bool> {
    let suite: Suite = suite.parse()?;
    if !(cli.tolerance_scale > 0.0) || !(perturb >= 0.0) {
        bail!(usage("--tolerance-scale must be positive and --perturb non-negative"));
    }
    let report = run_suite(suite, &VerifyOptions { seed: cli.seed, perturb, tolerance_scale: cli.tolerance_scale });
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => report.to_csv()?,
    };
    emit(cli.out.as_deref(), &text)?;
    for f in report.failures() {
        eprintln!("FAIL {}: measured {:e} > tolerance {:e}", f.name, f.measured, f.tolerance);
    }
    Ok(report.passed)
}

fn load_metric(args: &GeometryArgs) -> anyhow::Result<MetricConfig> {
    match (&args.config, &args.metric) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| usage(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))
        }
        (None, Some(name)) => Ok(MetricConfig::builtin(name, args.dim)),
        _ => Err(usage("geometry needs exactly one of --config or --metric")),
    }
}

fn cmd_geometry(cli: &Cli, args: &GeometryArgs) -> anyhow::Result<bool> {
    let metric = load_metric(args)?.build()?;
    let n = metric.dim();
    let mut points: Vec<Vec<f64>> = args.point.iter().map(|p| parse_list(p, "--point")).collect::<anyhow::Result<_>>()?;
    if let (Some(lo), Some(hi), Some(counts)) = (&args.grid_lo, &args.grid_hi, &args.grid_n) {
        let lo: Vec<f64> = parse_list(lo, "--grid-lo")?;
        let hi: Vec<f64> = parse_list(hi, "--grid-hi")?;
        let counts: Vec<usize> = parse_list(counts, "--grid-n")?;
        points.extend(geometry_table::grid_points(&lo, &hi, &counts)?);
    }
    if points.is_empty() {
        return Err(usage("geometry needs --point or --grid-lo/--grid-hi/--grid-n"));
    }
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        return Err(usage(format!("point {p:?} has {} coordinates, metric has dim {n}", p.len())));
    }
    let table = geometry_table::tabulate(metric.as_ref(), &points, args.step)?;
    let text = match cli.format {
        Format::Csv => table.to_csv()?,
        Format::Json => serde_json::to_string_pretty(&table.to_json())? + "\n",
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(true)
}

fn cmd_evolve(cli: &Cli, config: &Path) -> anyhow::Result<bool> {
    let text = fs::read_to_string(config).map_err(|e| usage(format!("{}: {e}", config.display())))?;
    let cfg = ExperimentConfig::from_json(&text).map_err(|e| usage(format!("{}: {e}", config.display())))?;
    let result = run_experiment(&cfg, cli.out.as_deref())?;
    let last = result.rows.last().expect("at least the initial row");
    println!("final_norm {}", last.norm);
    println!("expectation_p {} {}", last.re_p, last.im_p);
    if let Some(r) = result.max_residual() {
        println!("crosscheck_max_residual {r}");
    }
    for f in &result.files {
        println!("wrote {}", f.display());
    }
    Ok(true)
}

fn cmd_gamma_dump(cli: &Cli, convention: &str) -> anyhow::Result<bool> {
    let conv: Convention = convention.parse()?;
    let json = MatrixRepJson::from(&dirac_gammas(conv));
    emit(cli.out.as_deref(), &(serde_json::to_string_pretty(&json)? + "\n"))?;
    Ok(true)
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CLIFFBUNDLE_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| usage(format!("CLIFFBUNDLE_THREADS: expected a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::Io(_)) => 2,
        Some(_) => 1,
        None => 2,
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    match &cli.command {
        Command::Verify { suite, perturb } => cmd_verify(cli, suite, *perturb),
        Command::Geometry(args) => cmd_geometry(cli, args),
        Command::Evolve { config } => cmd_evolve(cli, config),
        Command::Gamma { action: GammaAction::Dump { convention } } => cmd_gamma_dump(cli, convention),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            if let Some(Error::Stability { suggested_dt, .. }) = e.downcast_ref::<Error>() {
                eprintln!("error: {e}\nsuggested dt: {suggested_dt}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
