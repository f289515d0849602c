use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qcadmm::experiments::{
    certify_prepared, emit_csv, emit_json, prepare, run_experiment, run_single_with_objectives,
    EngineKind, ExperimentConfig, RunPoint, ScenarioKind, SweepParam,
};
use qcadmm::formats::{
    run_record_to_csv, run_record_to_json, CertificateFile, GraphFile, ProblemFile, SpectralFile,
};
use qcadmm_core::analysis::DEFAULT_MU;
use qcadmm_core::graph::{build_matrices, random_connected_graph, spectral_quantities};

/// Simulator and certificate checker for consensus optimization with
/// quantized inter-agent communication.
#[derive(Parser)]
#[command(name = "qcadmm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded instance and write its per-iteration trace
    Run(RunArgs),
    /// Run a seeded sweep (optionally over delta, rho or the edge count)
    Sweep(SweepArgs),
    /// Print the convergence certificate for a configuration
    Certify(CertifyArgs),
    /// Generate or load a topology and print its spectral quantities
    Graph(GraphArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    #[value(name = "quadratic_box")]
    QuadraticBox,
    #[value(name = "lasso")]
    Lasso,
}

impl From<ScenarioArg> for ScenarioKind {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::QuadraticBox => ScenarioKind::QuadraticBox,
            ScenarioArg::Lasso => ScenarioKind::Lasso,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    #[value(name = "c_admm")]
    CAdmm,
    #[value(name = "qc_admm")]
    QcAdmm,
}

impl From<EngineArg> for EngineKind {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::CAdmm => EngineKind::CAdmm,
            EngineArg::QcAdmm => EngineKind::QcAdmm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamArg {
    Delta,
    Rho,
    E,
}

impl From<ParamArg> for SweepParam {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::Delta => SweepParam::Delta,
            ParamArg::Rho => SweepParam::Rho,
            ParamArg::E => SweepParam::E,
        }
    }
}

#[derive(Args)]
struct InstanceArgs {
    /// Problem family
    #[arg(long, value_enum, default_value = "lasso")]
    scenario: ScenarioArg,
    /// Number of agents
    #[arg(long, default_value_t = 40)]
    n: usize,
    /// Number of edges
    #[arg(long, default_value_t = 300)]
    e: usize,
    /// Per-agent dimension
    #[arg(long, default_value_t = 20)]
    m: usize,
    /// Quantization resolution (0 disables quantization)
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Step parameter of the dual update
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Curvature parameter of the rate certificate
    #[arg(long, default_value_t = DEFAULT_MU)]
    mu: f64,
    /// Iteration engine
    #[arg(long, value_enum, default_value = "qc_admm")]
    engine: EngineArg,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// RNG seed for the graph and the problem instance
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Iteration cap
    #[arg(long = "max-iter", default_value_t = 500)]
    max_iter: usize,
    /// Where to write the per-iteration trace (CSV)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit the trace as JSON instead of CSV
    #[arg(long)]
    json: bool,
    /// Write the generated problem instance for replay
    #[arg(long = "dump-problem")]
    dump_problem: Option<PathBuf>,
    /// Replay a previously dumped problem instance
    #[arg(long = "load-problem")]
    load_problem: Option<PathBuf>,
    /// Load the whole configuration from a JSON file instead of flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Parameter swept over `--values`
    #[arg(long, value_enum)]
    param: Option<ParamArg>,
    /// Sweep values, comma separated
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    /// Explicit seed list, comma separated
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Shorthand for seeds 0..k (ignored when --seeds is given)
    #[arg(long = "num-seeds", default_value_t = 50)]
    num_seeds: u64,
    /// Iteration cap per run
    #[arg(long = "max-iter", default_value_t = 300)]
    max_iter: usize,
    /// Summary CSV path
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    /// Optional JSON summary (rows plus per-point averages)
    #[arg(long = "json-out")]
    json_out: Option<PathBuf>,
    /// Load the whole configuration from a JSON file instead of flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Optional output file (stdout otherwise)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 300)]
    e: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Load a topology from JSON instead of generating one
    #[arg(long)]
    load: Option<PathBuf>,
    /// Export the topology as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Graph(args) => cmd_graph(args),
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let point = match &args.config {
        Some(path) => {
            let cfg = load_config(path)?;
            let seed = *cfg.seeds.first().context("config has no seeds")?;
            RunPoint::from_config(&cfg, seed)
        }
        None => RunPoint {
            scenario: args.instance.scenario.into(),
            n: args.instance.n,
            e: args.instance.e,
            m: args.instance.m,
            delta: args.instance.delta,
            rho: args.instance.rho,
            mu: args.instance.mu,
            seed: args.seed,
            max_iterations: args.max_iter,
            engine: args.instance.engine.into(),
        },
    };
    let objectives = match &args.load_problem {
        Some(path) => Some(ProblemFile::load(path)?.to_objectives()?),
        None => None,
    };
    let out = run_single_with_objectives(&point, objectives)?;
    if let Some(path) = &args.dump_problem {
        ProblemFile::from_objectives(&out.objectives).save(path)?;
    }
    if let Some(path) = &args.out {
        let text = if args.json {
            run_record_to_json(&out.record)?
        } else {
            run_record_to_csv(&out.record)
        };
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let summary = serde_json::json!({
        "row": out.row,
        "certificate": out.certificate.as_ref().map(CertificateFile::from_certificate),
        "reference_residual": out.reference.optimality_residual,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => {
            let seeds = if args.seeds.is_empty() {
                (0..args.num_seeds).collect()
            } else {
                args.seeds.clone()
            };
            ExperimentConfig {
                scenario: args.instance.scenario.into(),
                n: args.instance.n,
                e: args.instance.e,
                m: args.instance.m,
                delta: args.instance.delta,
                rho: args.instance.rho,
                mu: args.instance.mu,
                param: args.param.map(Into::into),
                values: args.values.clone(),
                seeds,
                max_iterations: args.max_iter,
                engine: args.instance.engine.into(),
                output_path: None,
            }
        }
    };
    if cfg.param.is_some() && cfg.values.is_empty() {
        bail!("--param requires --values");
    }
    let summary = run_experiment(&cfg)?;
    let csv_path = cfg
        .output_path
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| args.out.clone());
    emit_csv(&summary, &csv_path)?;
    if let Some(path) = &args.json_out {
        emit_json(&summary, path)?;
    }
    println!("{}", serde_json::to_string_pretty(&summary.averages)?);
    eprintln!("wrote {} rows to {}", summary.rows.len(), csv_path.display());
    Ok(())
}

fn cmd_certify(args: CertifyArgs) -> Result<()> {
    let point = RunPoint {
        scenario: args.instance.scenario.into(),
        n: args.instance.n,
        e: args.instance.e,
        m: args.instance.m,
        delta: args.instance.delta,
        rho: args.instance.rho,
        mu: args.instance.mu,
        seed: args.seed,
        max_iterations: 0,
        engine: args.instance.engine.into(),
    };
    let prep = prepare(&point, None)?;
    let cert = certify_prepared(&prep, &point)?;
    let text = serde_json::to_string_pretty(&CertificateFile::from_certificate(&cert))?;
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_graph(args: GraphArgs) -> Result<()> {
    let graph = match &args.load {
        Some(path) => GraphFile::load(path)?.to_graph()?,
        None => random_connected_graph(args.n, args.e, args.seed)
            .map_err(|e| anyhow::anyhow!("{e}"))?,
    };
    if let Some(path) = &args.out {
        GraphFile::from_graph(&graph).save(path)?;
    }
    let spectral = spectral_quantities(&build_matrices(&graph))
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&SpectralFile::new(&graph, &spectral))?
    );
    Ok(())
}
