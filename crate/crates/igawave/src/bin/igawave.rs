use clap::{Args, Parser, Subcommand};
use igawave::harness::{
    self, max_relative_drift, parse_f64_list, parse_usize_list, InitialCondition, ProblemKind,
    SimulationConfig,
};
use igawave::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "igawave",
    version,
    about = "Tensor-product isogeometric solvers for implicit wave propagation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scalar wave run (2D or 3D, chosen by the element list)
    Pwave(RunArgs),
    /// 2D linear elasticity run (predictor-corrector)
    Elasticity(RunArgs),
    /// Manufactured-solution convergence study over tau halvings
    Convergence(ConvergenceArgs),
    /// Spectral-radius sweep of the modal amplification matrix
    Stability(StabilityArgs),
    /// Per-step wall-time scaling benchmark (3D scalar solver)
    Bench(BenchArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file; command-line flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Elements per direction, e.g. 16,16 or 16,16,16
    #[arg(long)]
    elements: Option<String>,
    /// Spline degree
    #[arg(long)]
    degree: Option<usize>,
    /// Time-step size
    #[arg(long)]
    tau: Option<f64>,
    /// Number of time steps
    #[arg(long)]
    steps: Option<usize>,
    /// Allow full-scale meshes; without --elements this selects 32 per direction
    #[arg(long)]
    full: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Initial condition: zero | gaussian | mode
    #[arg(long)]
    ic: Option<String>,
    /// Gaussian center, e.g. 0.5,0.5
    #[arg(long)]
    center: Option<String>,
    /// Gaussian width
    #[arg(long)]
    width: Option<f64>,
    /// Mode wave numbers, e.g. 1,1
    #[arg(long)]
    mode_k: Option<String>,
    /// Material density
    #[arg(long)]
    rho: Option<f64>,
    /// First Lamé shear modulus
    #[arg(long)]
    mu: Option<f64>,
    /// Second Lamé parameter
    #[arg(long)]
    lambda: Option<f64>,
    /// Stabilization weight of the elastic energy-norm diagnostic
    #[arg(long)]
    sigma: Option<f64>,
    /// Snapshot cadence in steps (0 disables snapshots)
    #[arg(long)]
    snapshot_every: Option<usize>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Problem to study: pwave | elasticity
    #[arg(long, default_value = "pwave")]
    problem: String,
    /// Number of tau-halving levels (at least 3)
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Mode wave numbers of the manufactured solution
    #[arg(long)]
    mode_k: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Explicit comma-separated tau list (overrides the log grid)
    #[arg(long)]
    taus: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    tau_min: f64,
    #[arg(long, default_value_t = 1e3)]
    tau_max: f64,
    /// Points of the logarithmic tau grid
    #[arg(long, default_value_t = 25)]
    tau_count: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mesh sizes as elements per direction, e.g. 8,16,32
    #[arg(long, default_value = "8,16,32")]
    sizes: String,
    /// Timed steps per size (the median is reported)
    #[arg(long, default_value_t = 5)]
    timed_steps: usize,
}

fn build_config(kind: ProblemKind, common: &CommonArgs) -> Result<SimulationConfig, Error> {
    let mut cfg = SimulationConfig::new(kind);
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply_file(&text)?;
    }
    if common.full {
        cfg.full = true;
        if common.elements.is_none() && cfg.elements.iter().all(|&e| e == 16) {
            cfg.elements = vec![32; cfg.elements.len()];
        }
    }
    if let Some(e) = &common.elements {
        cfg.elements = parse_usize_list(e)?;
    }
    if let Some(d) = common.degree {
        cfg.degree = d;
    }
    if let Some(t) = common.tau {
        cfg.tau = t;
    }
    if let Some(s) = common.steps {
        cfg.steps = s;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
    }
    Ok(cfg)
}

fn apply_run_args(cfg: &mut SimulationConfig, args: &RunArgs) -> Result<(), Error> {
    if let Some(ic) = &args.ic {
        cfg.apply_key_value("ic", ic)?;
    }
    if let Some(c) = &args.center {
        cfg.apply_key_value("center", c)?;
    }
    if let Some(w) = args.width {
        cfg.apply_key_value("width", &w.to_string())?;
    }
    if let Some(k) = &args.mode_k {
        cfg.ic = InitialCondition::Mode {
            k: parse_usize_list(k)?,
        };
    }
    if let Some(v) = args.rho {
        cfg.rho = v;
    }
    if let Some(v) = args.mu {
        cfg.mu = v;
    }
    if let Some(v) = args.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = args.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = args.snapshot_every {
        cfg.snapshot_every = v;
    }
    Ok(())
}

fn cmd_pwave(args: &RunArgs) -> Result<(), Error> {
    let mut cfg = build_config(ProblemKind::Pwave2d, &args.common)?;
    apply_run_args(&mut cfg, args)?;
    cfg.kind = match cfg.elements.len() {
        2 => ProblemKind::Pwave2d,
        3 => ProblemKind::Pwave3d,
        other => {
            return Err(Error::InvalidInput(format!(
                "pwave needs 2 or 3 element counts, got {other}"
            )))
        }
    };
    if let InitialCondition::Gaussian { center, .. } = &mut cfg.ic {
        center.resize(cfg.kind.dims(), 0.5);
    }
    let out = harness::run_pwave(&cfg)?;
    println!(
        "{}: {} steps on {:?} elements, energy drift {:.3e}; outputs in {}",
        cfg.kind.as_str(),
        cfg.steps,
        cfg.elements,
        max_relative_drift(&out.records),
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_elasticity(args: &RunArgs) -> Result<(), Error> {
    let mut cfg = build_config(ProblemKind::Elasticity2d, &args.common)?;
    apply_run_args(&mut cfg, args)?;
    cfg.kind = ProblemKind::Elasticity2d;
    let out = harness::run_elasticity(&cfg)?;
    println!(
        "elasticity2d: {} steps on {:?} elements, energy drift {:.3e}; outputs in {}",
        cfg.steps,
        cfg.elements,
        max_relative_drift(&out.records),
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_convergence(args: &ConvergenceArgs) -> Result<(), Error> {
    let kind = match args.problem.as_str() {
        "pwave" => ProblemKind::Pwave2d,
        "elasticity" => ProblemKind::Elasticity2d,
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown convergence problem '{other}'"
            )))
        }
    };
    let mut cfg = build_config(kind, &args.common)?;
    if kind == ProblemKind::Pwave2d && cfg.elements.len() == 3 {
        cfg.kind = ProblemKind::Pwave3d;
    }
    let k = match &args.mode_k {
        Some(list) => parse_usize_list(list)?,
        None => vec![1; cfg.kind.dims()],
    };
    cfg.ic = InitialCondition::Mode { k };
    if let Some(v) = args.rho {
        cfg.rho = v;
    }
    if let Some(v) = args.mu {
        cfg.mu = v;
    }
    if let Some(v) = args.lambda {
        cfg.lambda = v;
    }
    let report = harness::run_convergence(&cfg, args.levels)?;
    println!("tau,l2_error");
    for (tau, err) in report.taus.iter().zip(&report.errors) {
        println!("{tau:.6e},{err:.6e}");
    }
    println!("log-log slope: {:.4}", report.slope);
    Ok(())
}

fn cmd_stability(args: &StabilityArgs) -> Result<(), Error> {
    let cfg = build_config(ProblemKind::Pwave2d, &args.common)?;
    let taus = match &args.taus {
        Some(list) => parse_f64_list(list)?,
        None => {
            if args.tau_count < 2 || args.tau_min <= 0.0 || args.tau_max <= args.tau_min {
                return Err(Error::InvalidInput(
                    "the log grid needs tau_count >= 2 and 0 < tau_min < tau_max".into(),
                ));
            }
            let ratio = (args.tau_max / args.tau_min).ln();
            let mut taus = vec![0.0];
            taus.extend(
                (0..args.tau_count)
                    .map(|i| args.tau_min * (ratio * i as f64 / (args.tau_count - 1) as f64).exp()),
            );
            taus
        }
    };
    let rows = harness::run_stability_sweep(&cfg, &taus)?;
    let worst = rows.iter().fold(0.0_f64, |m, r| m.max(r.1));
    println!(
        "{} tau values on {:?} elements, max spectral radius {:.12}; stability.csv in {}",
        rows.len(),
        cfg.elements,
        worst,
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Error> {
    let mut cfg = build_config(ProblemKind::Pwave3d, &args.common)?;
    cfg.elements = vec![8, 8, 8]; // per-size meshes come from --sizes
    let sizes = parse_usize_list(&args.sizes)?;
    let rows = harness::run_scaling_bench(&cfg, &sizes, args.timed_steps)?;
    println!("n_dofs,seconds_per_step");
    for (n, t) in &rows {
        println!("{n},{t:.6e}");
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    println!(
        "log-log slope vs N: {:.4}",
        harness::fit_loglog_slope(&xs, &ys)
    );
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidInput(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Pwave(args) => cmd_pwave(args),
        Command::Elasticity(args) => cmd_elasticity(args),
        Command::Convergence(args) => cmd_convergence(args),
        Command::Stability(args) => cmd_stability(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
