//! Command-line interface: simulate curve samples, test data files for a
//! mean change, and drive size / power studies with report emission.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use funcp::dgp::{ChangeSpec, DgpSpec, DgpVariant};
use funcp::error::Error;
use funcp::resample::Method;
use funcp::rng::RngStream;
use funcp::studio::{
    ingest, report, run_power_study, run_single_test, run_size_study, MethodSettings, StudyConfig,
    StudyKind, StudyResult,
};

#[derive(Parser)]
#[command(
    name = "funcp",
    about = "Change-point detection for functional time series (CUSUM with sieve/block bootstrap and asymptotic critical values)",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a curve sample from a built-in process and write it as CSV
    Simulate(SimulateArgs),
    /// Test a curve file for a change in mean
    Test(TestArgs),
    /// Empirical size study under the null hypothesis
    SizeStudy(StudyArgs),
    /// Size-corrected power study over jump sizes
    PowerStudy(StudyArgs),
    /// Re-run a study from a directory's config.snapshot
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Process: far1-bridge | far1-squared-bridge | fma1
    #[arg(long, default_value = "far1-bridge")]
    dgp: String,
    /// Autoregression strength C (bridge-driven processes)
    #[arg(long, default_value_t = 0.245)]
    c: f64,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Grid points on [0, 1]
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long, default_value_t = 100)]
    burn_in: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Inject a mean change after this observation (1-based)
    #[arg(long)]
    change_at: Option<usize>,
    /// Jump height of the injected change
    #[arg(long, default_value_t = 0.0)]
    jump: f64,
    /// Local-alternative exponent: the effective jump is jump * n^(-rate)
    #[arg(long)]
    rate: Option<f64>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TestArgs {
    /// Curve file (CSV, one row per curve)
    #[arg(long)]
    data: PathBuf,
    /// Companion single-row grid file (equidistant grid otherwise)
    #[arg(long)]
    grid_file: Option<PathBuf>,
    /// Engine: fsb | nbb | asymptotic
    #[arg(long, default_value = "fsb")]
    method: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap replicates
    #[arg(long, default_value_t = 500)]
    bootstrap: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Components for the sieve ("auto" or an integer)
    #[arg(long, default_value = "auto")]
    m: String,
    /// Sieve order ("auto" or an integer)
    #[arg(long, default_value = "auto")]
    p: String,
    /// Block length for nbb ("auto" or an integer)
    #[arg(long, default_value = "auto")]
    block_len: String,
    /// Projection dimension for the asymptotic engine ("auto" or an integer)
    #[arg(long, default_value = "auto")]
    d: String,
    /// Bartlett bandwidth for the asymptotic engine ("auto" or an integer)
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    /// Simulated limit paths for the asymptotic engine
    #[arg(long, default_value_t = 5000)]
    asym_paths: usize,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Directory for outcome.json, profile CSV and SVG
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also dump the replicate vector as a single-column CSV
    #[arg(long, default_value_t = false)]
    replicates: bool,
}

#[derive(Args)]
struct StudyArgs {
    /// key = value configuration file (flags below override it)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dgp: Option<String>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Comma-separated subset of fsb,nbb,asymptotic
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Comma-separated strictly increasing levels
    #[arg(long)]
    alphas: Option<String>,
    /// Comma-separated jump sizes (power studies)
    #[arg(long)]
    jumps: Option<String>,
    #[arg(long)]
    change_at: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    p_max: Option<String>,
    #[arg(long)]
    block_len: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    bandwidth: Option<String>,
    #[arg(long)]
    asym_paths: Option<usize>,
    /// Use the full experiment scale (2000 replications, 1000 bootstrap)
    #[arg(long, default_value_t = false)]
    paper_scale: bool,
    /// Output directory for table.csv, config.snapshot and plots
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Study directory holding config.snapshot
    dir: PathBuf,
    /// Where to write the re-run report (defaults to the same directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the snapshot's worker count
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_auto(value: &str, what: &str) -> Result<Option<usize>, Error> {
    match value.trim() {
        "auto" | "none" | "" => Ok(None),
        v => v
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("{what}: bad integer '{v}'"))),
    }
}

fn parse_variant(name: &str, c: f64) -> Result<DgpVariant, Error> {
    match name.trim() {
        "far1-bridge" => Ok(DgpVariant::Far1Bridge { c }),
        "far1-squared-bridge" => Ok(DgpVariant::Far1SquaredBridge { c }),
        "fma1" => Ok(DgpVariant::Fma1),
        other => Err(Error::InvalidArgument(format!("unknown dgp '{other}'"))),
    }
}

fn parse_list(value: &str, what: &str) -> Result<Vec<f64>, Error> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("{what}: bad number '{s}'")))
        })
        .collect()
}

fn run_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let variant = parse_variant(&args.dgp, args.c)?;
    let mut spec = DgpSpec {
        variant,
        n: args.n,
        grid_points: args.grid,
        burn_in: args.burn_in,
        change: None,
    };
    if let Some(k_star) = args.change_at {
        spec = spec.with_change(ChangeSpec {
            k_star,
            jump: args.jump,
            rate: args.rate,
        });
    }
    let series = spec.generate(&RngStream::new(args.seed))?;
    ingest::write_series(&series, &args.out)?;
    eprintln!(
        "wrote {} curves on {} grid points to {}",
        series.len(),
        series.grid_len(),
        args.out.display()
    );
    Ok(())
}

fn run_test(args: &TestArgs) -> Result<(), Error> {
    let series = match &args.grid_file {
        Some(grid) => ingest::read_series_with_grid(&args.data, grid)?,
        None => ingest::read_series(&args.data)?,
    };
    let cfg = StudyConfig {
        kind: StudyKind::SingleTest,
        methods: vec![Method::parse(&args.method)?],
        alphas: vec![args.alpha],
        bootstrap: args.bootstrap,
        seed: args.seed,
        workers: args.workers,
        n: series.len(),
        grid_points: series.grid_len(),
        settings: MethodSettings {
            m: parse_auto(&args.m, "--m")?,
            p: parse_auto(&args.p, "--p")?,
            block_len: parse_auto(&args.block_len, "--block-len")?,
            d: parse_auto(&args.d, "--d")?,
            bandwidth: parse_auto(&args.bandwidth, "--bandwidth")?,
            asym_paths: args.asym_paths,
            ..MethodSettings::default()
        },
        data_file: Some(args.data.clone()),
        ..StudyConfig::default()
    };
    let (outcome, scan, warnings) = run_single_test(&cfg, &series)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", report::outcome_json(&outcome));
    if let Some(dir) = &args.out {
        let written = report::emit_test_outcome(&outcome, Some(&scan), dir, args.replicates)?;
        for path in written {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn build_study_config(args: &StudyArgs, kind: StudyKind) -> Result<StudyConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            StudyConfig::parse(&text)?
        }
        None => StudyConfig::default(),
    };
    cfg.kind = kind;
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(g) = args.grid {
        cfg.grid_points = g;
    }
    if let Some(b) = args.burn_in {
        cfg.burn_in = b;
    }
    let c_now = match cfg.variant {
        DgpVariant::Far1Bridge { c } | DgpVariant::Far1SquaredBridge { c } => c,
        DgpVariant::Fma1 => 0.0,
    };
    let c = args.c.unwrap_or(c_now);
    if let Some(name) = &args.dgp {
        cfg.variant = parse_variant(name, c)?;
    } else if args.c.is_some() {
        cfg.variant = match cfg.variant {
            DgpVariant::Far1Bridge { .. } => DgpVariant::Far1Bridge { c },
            DgpVariant::Far1SquaredBridge { .. } => DgpVariant::Far1SquaredBridge { c },
            DgpVariant::Fma1 => DgpVariant::Fma1,
        };
    }
    if let Some(methods) = &args.methods {
        cfg.methods = methods
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(Method::parse)
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(r) = args.replications {
        cfg.replications = r;
    }
    if let Some(b) = args.bootstrap {
        cfg.bootstrap = b;
    }
    if let Some(alphas) = &args.alphas {
        cfg.alphas = parse_list(alphas, "--alphas")?;
    }
    if let Some(jumps) = &args.jumps {
        cfg.jumps = parse_list(jumps, "--jumps")?;
    }
    if kind == StudyKind::Size {
        cfg.jumps.clear();
        cfg.change_at = None;
    }
    if let Some(k) = args.change_at {
        cfg.change_at = Some(k);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(v) = &args.m {
        cfg.settings.m = parse_auto(v, "--m")?;
    }
    if let Some(v) = &args.p {
        cfg.settings.p = parse_auto(v, "--p")?;
    }
    if let Some(t) = args.threshold {
        cfg.settings.threshold = t;
    }
    if let Some(v) = &args.p_max {
        cfg.settings.p_max = parse_auto(v, "--p-max")?;
    }
    if let Some(v) = &args.block_len {
        cfg.settings.block_len = parse_auto(v, "--block-len")?;
    }
    if let Some(v) = &args.d {
        cfg.settings.d = parse_auto(v, "--d")?;
    }
    if let Some(v) = &args.bandwidth {
        cfg.settings.bandwidth = parse_auto(v, "--bandwidth")?;
    }
    if let Some(paths) = args.asym_paths {
        cfg.settings.asym_paths = paths;
    }
    if args.paper_scale {
        cfg = cfg.paper_scale();
    }
    Ok(cfg)
}

fn emit_and_log(cfg: &StudyConfig, result: &StudyResult, dir: &Path) -> Result<(), Error> {
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let written = report::emit_study(cfg, result, dir)?;
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    eprintln!("wall clock: {:.1}s", result.wall_clock_secs);
    Ok(())
}

fn run_study(args: &StudyArgs, kind: StudyKind) -> Result<(), Error> {
    let cfg = build_study_config(args, kind)?;
    let result = match kind {
        StudyKind::Size => run_size_study(&cfg)?,
        StudyKind::Power => run_power_study(&cfg)?,
        StudyKind::SingleTest => unreachable!(),
    };
    emit_and_log(&cfg, &result, &args.out)
}

fn run_report(args: &ReportArgs) -> Result<(), Error> {
    let snap = args.dir.join("config.snapshot");
    let text = std::fs::read_to_string(&snap).map_err(|e| Error::Io {
        path: snap.clone(),
        source: e,
    })?;
    let mut cfg = StudyConfig::parse(&text)?;
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    let result = match cfg.kind {
        StudyKind::Size => run_size_study(&cfg)?,
        StudyKind::Power => run_power_study(&cfg)?,
        StudyKind::SingleTest => {
            return Err(Error::InvalidArgument(
                "snapshot describes a single test; use the test subcommand".into(),
            ))
        }
    };
    let out = args.out.clone().unwrap_or_else(|| args.dir.clone());
    emit_and_log(&cfg, &result, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Test(args) => run_test(args),
        Command::SizeStudy(args) => run_study(args, StudyKind::Size),
        Command::PowerStudy(args) => run_study(args, StudyKind::Power),
        Command::Report(args) => run_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
