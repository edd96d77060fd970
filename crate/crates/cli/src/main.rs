//! Command-line front end: field generation, planning, simulation,
//! experiment suites, oracle verification, and report rendering.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error. Failures
//! emit a machine-readable JSON record on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rowplan_core::error::Error;
use rowplan_core::experiment::{
    biodiv_suite, paper_density_suite, run_experiment, ExperimentConfig, FieldCase, FieldSource,
};
use rowplan_core::field::{
    generate_field, load_field, save_field, FieldSpec, Priority, SpeciesSpec,
};
use rowplan_core::kinematics::ToolConfig;
use rowplan_core::oracle::{equivalence_sweep, monte_carlo_reach};
use rowplan_core::planner::{HarmfulnessContext, ObservationMode, PlannerConfig, RowPlan};
use rowplan_core::report::{render_report, summary_table, trajectory_svg};
use rowplan_core::simulator::{simulate_run, SimConfig};

#[derive(Parser)]
#[command(
    name = "rowplan",
    about = "Planning stack for a multi-head row-crop weeding gantry",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Segment,
    Rolling,
}

impl From<ModeArg> for ObservationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Segment => ObservationMode::Segment,
            ModeArg::Rolling => ObservationMode::Rolling,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic field file
    Generate(GenerateArgs),
    /// Plan axis routes for a field file
    Plan(PlanArgs),
    /// Execute a plan file against a field file
    Simulate(SimulateArgs),
    /// Run an experiment suite or config across seeds
    Experiment(ExperimentArgs),
    /// Check the planner against the brute-force oracle and the analytic
    /// reach probability against Monte-Carlo sampling
    Verify(VerifyArgs),
    /// Render SVG plots and a text table from a metrics CSV
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Weeds per square meter
    #[arg(long, default_value_t = 8.2)]
    lambda: f64,
    /// Weeding width, meters
    #[arg(long, default_value_t = 1.39)]
    width: f64,
    /// Row length, meters
    #[arg(long, default_value_t = 40.0)]
    length: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file holding the species mix (array of species entries)
    #[arg(long)]
    species_mix: Option<PathBuf>,
    /// Meters between crops; 0 = weed-only field
    #[arg(long, default_value_t = 0.0)]
    crop_spacing: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    /// Field file to plan
    #[arg(long)]
    field: PathBuf,
    #[arg(long, value_enum, default_value = "segment")]
    mode: ModeArg,
    /// Select by total harmfulness instead of (count, feasibility)
    #[arg(long, default_value_t = false)]
    biodiv: bool,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 5.0)]
    theta: f64,
    #[arg(long, default_value_t = 50.0)]
    omega: f64,
    #[arg(long, default_value_t = 0.6)]
    rho: f64,
    #[arg(long, default_value_t = 4)]
    heads: usize,
    /// Observation window length, meters
    #[arg(long, default_value_t = 1.0)]
    window: f64,
    /// Rolling stride as a fraction of the window
    #[arg(long, default_value_t = 0.5)]
    stride: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    /// Lateral actuation noise sigma, meters
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 5.0)]
    theta: f64,
    #[arg(long, default_value_t = 4)]
    heads: usize,
    /// Write the run metrics as JSON here (printed otherwise)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Built-in suite: paper-densities | biodiv
    #[arg(long, conflicts_with = "config")]
    suite: Option<String>,
    /// Experiment config JSON
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed count (`30`) or explicit list (`0,5,9`)
    #[arg(long, default_value = "10")]
    seeds: String,
    #[arg(long)]
    out: PathBuf,
    /// Override the robot speed of the tool config
    #[arg(long)]
    gamma: Option<f64>,
    /// Override the axis speed of the tool config
    #[arg(long)]
    theta: Option<f64>,
    /// Override the head count of the tool config
    #[arg(long)]
    heads: Option<usize>,
    /// Override the logistic steepness of every variant
    #[arg(long)]
    omega: Option<f64>,
    /// Override the feasibility cutoff of every variant
    #[arg(long)]
    rho: Option<f64>,
    /// Keep only fields at this density
    #[arg(long)]
    lambda: Option<f64>,
    /// Keep only variants with this observation mode
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Keep only variants with this bio-diversity setting
    #[arg(long)]
    biodiv: Option<bool>,
    /// Worker pool size
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Random planner-vs-oracle instances per selection mode
    #[arg(long, default_value_t = 1000)]
    instances: usize,
    /// Targets per instance (at most 8)
    #[arg(long, default_value_t = 6)]
    max_targets: usize,
    /// Monte-Carlo samples per reach-probability grid point
    #[arg(long, default_value_t = 200_000)]
    grid_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Metrics CSV produced by `experiment`
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Field file for an optional trajectory plot
    #[arg(long, requires = "plan")]
    field: Option<PathBuf>,
    /// Plan file for an optional trajectory plot
    #[arg(long, requires = "field")]
    plan: Option<PathBuf>,
}

fn error_record(err: &Error) -> (u8, String) {
    let (kind, code) = match err {
        Error::InvalidConfig { .. } => ("invalid-config", 1),
        Error::Parse { .. } => ("parse", 1),
        Error::Csv { .. } => ("csv", 1),
        Error::EmptyInput(_) => ("empty-input", 1),
        Error::UnimplementedStrategy(_) => ("unimplemented-strategy", 1),
        Error::OracleSize { .. } => ("oracle-size", 1),
        Error::Domain(_) => ("domain", 2),
        Error::OrderingViolation { .. } => ("ordering", 2),
        Error::AlreadyPassed { .. } => ("already-passed", 2),
        Error::WindowOverflow { .. } => ("window-overflow", 2),
        Error::KinematicViolation { .. } => ("kinematic-violation", 2),
        Error::Io(_) => ("io", 2),
    };
    (
        code,
        format!(
            "{{\"error\":{},\"kind\":\"{kind}\"}}",
            serde_json::to_string(&err.to_string()).unwrap_or_else(|_| "\"?\"".to_string())
        ),
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, record) = error_record(&err);
            eprintln!("{record}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Error> {
    let species_mix = match &args.species_mix {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<Vec<SpeciesSpec>>(&text).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        }
        None => vec![SpeciesSpec::new("weed", 1.0, 1.0, Priority::High)],
    };
    let spec = FieldSpec {
        lambda: args.lambda,
        width: args.width,
        length: args.length,
        species_mix,
        crop_spacing: args.crop_spacing,
        seed: args.seed,
        ..FieldSpec::uniform(args.lambda, args.width, args.length, args.seed)
    };
    let field = generate_field(&spec)?;
    save_field(&field, &args.out)?;
    println!(
        "wrote {} ({} weeds, {} crops)",
        args.out.display(),
        field.weed_count(),
        field.crops().count()
    );
    Ok(())
}

fn tool_from(gamma: f64, theta: f64, heads: usize, coverage: f64) -> ToolConfig {
    ToolConfig {
        heads,
        coverage_m: coverage,
        gamma,
        theta,
        ..ToolConfig::default()
    }
}

fn cmd_plan(args: PlanArgs) -> Result<(), Error> {
    let (field, warnings) = load_field(&args.field)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let tool = tool_from(args.gamma, args.theta, args.heads, field.spec().width);
    let cfg = PlannerConfig {
        omega: args.omega,
        rho: args.rho,
        mode: args.mode.into(),
        biodiv: args.biodiv,
        window_m: args.window,
        stride_fraction: args.stride,
        ..PlannerConfig::default()
    };
    let ctx = HarmfulnessContext::default();
    let window_m = rowplan_core::experiment::fit_window_length(&field, &tool, &cfg)?;
    if (window_m - cfg.window_m).abs() > 1e-12 {
        eprintln!("warning: window shrunk to {window_m} m to respect the target cap");
    }
    let plan = rowplan_core::experiment::plan_field(
        &field,
        &tool,
        &PlannerConfig { window_m, ..cfg },
        &ctx,
    )?;
    std::fs::write(&args.out, plan.to_json_string()?)?;
    let planned = plan.planned_ids().count();
    println!(
        "wrote {} ({} of {} weeds planned)",
        args.out.display(),
        planned,
        field.weed_count()
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let (field, _) = load_field(&args.field)?;
    let plan_text = std::fs::read_to_string(&args.plan)?;
    let plan = RowPlan::from_json_str(&plan_text, &args.plan.display().to_string())?;
    let tool = tool_from(args.gamma, args.theta, args.heads, field.spec().width);
    let sim = SimConfig {
        noise_sigma: args.noise_sigma,
        seed: args.seed,
        ..SimConfig::default()
    };
    let metrics = simulate_run(&field, &plan, &tool, &sim, &Default::default())?;
    let text = serde_json::to_string_pretty(&metrics).map_err(|e| Error::Parse {
        path: "<metrics>".to_string(),
        message: e.to_string(),
    })?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            println!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    println!(
        "loss {:.2}% ({} accurate, {} partial, {} missed of {})",
        metrics.loss_pct,
        metrics.accurate_hits,
        metrics.partial_hits,
        metrics.missed,
        metrics.total_weeds
    );
    Ok(())
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Error> {
    let parse_one = |s: &str| -> Result<u64, Error> {
        s.trim().parse().map_err(|_| Error::InvalidConfig {
            field: "seeds",
            message: format!("'{s}' is not an unsigned integer"),
        })
    };
    if text.contains(',') {
        text.split(',').map(parse_one).collect()
    } else {
        let n = parse_one(text)?;
        Ok((0..n).collect())
    }
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), Error> {
    let seeds = parse_seeds(&args.seeds)?;
    let mut cfg: ExperimentConfig = match (&args.suite, &args.config) {
        (Some(name), None) => match name.as_str() {
            "paper-densities" => paper_density_suite(seeds, Some(args.out.clone())),
            "biodiv" => biodiv_suite(seeds, Some(args.out.clone())),
            other => {
                return Err(Error::InvalidConfig {
                    field: "suite",
                    message: format!(
                        "unknown suite '{other}' (expected paper-densities or biodiv)"
                    ),
                })
            }
        },
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let mut cfg: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| Error::Parse {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
            cfg.seeds = seeds;
            cfg.out_dir = Some(args.out.clone());
            cfg
        }
        _ => {
            return Err(Error::InvalidConfig {
                field: "suite",
                message: "pass exactly one of --suite or --config".to_string(),
            })
        }
    };

    if let Some(gamma) = args.gamma {
        cfg.tool.gamma = gamma;
    }
    if let Some(theta) = args.theta {
        cfg.tool.theta = theta;
    }
    if let Some(heads) = args.heads {
        cfg.tool.heads = heads;
    }
    if let Some(lambda) = args.lambda {
        cfg.fields.retain(|f| match &f.source {
            FieldSource::Spec(s) => (s.lambda - lambda).abs() < 1e-9,
            FieldSource::File(_) => true,
        });
        if cfg.fields.is_empty() {
            cfg.fields.push(FieldCase {
                label: format!("density-{lambda}"),
                source: FieldSource::Spec(FieldSpec::uniform(lambda, 1.39, 40.0, 0)),
            });
        }
    }
    for v in &mut cfg.variants {
        if let Some(omega) = args.omega {
            v.planner.omega = omega;
        }
        if let Some(rho) = args.rho {
            v.planner.rho = rho;
        }
    }
    if let Some(mode) = args.mode {
        let mode: ObservationMode = mode.into();
        cfg.variants.retain(|v| v.planner.mode == mode);
    }
    if let Some(biodiv) = args.biodiv {
        cfg.variants.retain(|v| v.planner.biodiv == biodiv);
    }
    cfg.workers = args.workers.or(cfg.workers);

    let out = run_experiment(&cfg)?;
    println!("{}", summary_table(&out.summary));
    if let (Some(csv), Some(summary)) = (&out.csv_path, &out.summary_path) {
        println!("wrote {} and {}", csv.display(), summary.display());
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Error> {
    let sweep = equivalence_sweep(args.instances, args.max_targets, args.seed)?;
    println!(
        "oracle equivalence: {} mismatches over {} instances x 2 modes",
        sweep.mismatches, sweep.instances
    );

    let mut grid_failures = 0usize;
    let mut checked = 0usize;
    for &dy in &[0.05, 0.12, 0.2, 0.3, 0.36] {
        for &(gamma, theta) in &[(0.5, 5.0), (1.0, 5.0)] {
            for &lambda in &[3.1, 15.4] {
                let eta = lambda * 1.39;
                let p = rowplan_core::field::reach_probability(dy, gamma, theta, eta)?;
                let freq = monte_carlo_reach(dy, gamma, theta, eta, args.grid_samples, args.seed)?;
                let bound = 3.0 * (p * (1.0 - p) / args.grid_samples as f64).sqrt();
                if (p - freq).abs() > bound {
                    grid_failures += 1;
                }
                checked += 1;
            }
        }
    }
    println!(
        "reach probability: {grid_failures} of {checked} grid points outside the 3-sigma bound"
    );

    if sweep.mismatches > 0 || grid_failures > 0 {
        return Err(Error::Domain(format!(
            "verification failed: {} oracle mismatches, {grid_failures} grid failures",
            sweep.mismatches
        )));
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Error> {
    let csv = std::fs::read_to_string(&args.metrics)?;
    let out = render_report(&csv, &args.out)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    if let (Some(field_path), Some(plan_path)) = (&args.field, &args.plan) {
        let (field, _) = load_field(field_path)?;
        let plan_text = std::fs::read_to_string(plan_path)?;
        let plan = RowPlan::from_json_str(&plan_text, &plan_path.display().to_string())?;
        let tool = ToolConfig {
            coverage_m: field.spec().width,
            ..ToolConfig::default()
        };
        let svg = trajectory_svg(&field, Some(&plan), &tool);
        let path = args.out.join("trajectory.svg");
        std::fs::write(&path, svg)?;
        println!("wrote {}", path.display());
    }
    let table = std::fs::read_to_string(args.out.join("report.txt"))?;
    println!("{table}");
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
