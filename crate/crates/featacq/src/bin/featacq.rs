//! Command-line surface over the experiment pipelines. Every subcommand is
//! deterministic given its flags: rerunning with the same arguments writes
//! byte-identical outputs.

use clap::{Args, Parser, Subcommand};
use featacq::error::Error;
use featacq::experiment::{
    cmd_acquire, cmd_fit, cmd_gen_data, cmd_interactive, cmd_learn_bn, cmd_ts, load_config,
    ExperimentConfig, GeneratorSpec,
};
use std::path::Path;

#[derive(Parser)]
#[command(
    name = "featacq",
    version,
    about = "Dynamic feature acquisition: fit conditional density models, run \
             greedy information-driven acquisition, learn Bayesian networks, \
             and evaluate time-series policies."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a density engine on the training split and write a model file
    Fit(CommonArgs),
    /// Run acquisition episodes over the test split; write curves and traces
    Acquire(CommonArgs),
    /// Learn a Bayesian network; write a DAG file and report a diff if a
    /// ground-truth sidecar exists
    LearnBn(CommonArgs),
    /// Time-series acquisition: budgeted step selection or consecutive
    /// acquisition with calibrated stopping
    Ts(CommonArgs),
    /// Generate a synthetic dataset plus a replay sidecar
    GenData(GenArgs),
    /// Interactive session: answer feature queries on stdin
    Interactive(CommonArgs),
}

/// Flag overrides applied on top of an optional TOML config.
#[derive(Args)]
struct CommonArgs {
    /// TOML config file; flags below override its values
    #[arg(long)]
    config: Option<String>,
    /// Input CSV path
    #[arg(long)]
    data: Option<String>,
    /// Label column for classification CSVs
    #[arg(long)]
    label: Option<String>,
    /// Target column for regression CSVs
    #[arg(long)]
    target: Option<String>,
    /// gaussian, mixture:m, or class-conditional:m
    #[arg(long)]
    engine: Option<String>,
    /// Model file path
    #[arg(long)]
    model: Option<String>,
    /// dfa, sfa, or both
    #[arg(long)]
    policy: Option<String>,
    /// Acquisition budget in features (or time steps for ts)
    #[arg(long)]
    budget: Option<usize>,
    /// Confidence stopping threshold in (0, 1]
    #[arg(long)]
    confidence: Option<f64>,
    /// `learn`, or a DAG edge-list file used to prune candidates
    #[arg(long, value_name = "dag-file|learn")]
    prune_bn: Option<String>,
    /// Model samples per candidate score
    #[arg(long)]
    n_samples: Option<usize>,
    /// Dirichlet concentration scale for time-step selection
    #[arg(long)]
    alpha: Option<f64>,
    /// Conditional-independence threshold in nats
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// Cap on evaluated test instances
    #[arg(long)]
    max_instances: Option<usize>,
    /// Time steps for CSV time-series input
    #[arg(long)]
    t_steps: Option<usize>,
    /// Features per time step
    #[arg(long)]
    step_width: Option<usize>,
    /// ts mode: budget or consecutive
    #[arg(long)]
    ts_mode: Option<String>,
    /// ts step selection: dirichlet or uniform
    #[arg(long)]
    ts_policy: Option<String>,
    /// Skip the SVG plot
    #[arg(long)]
    no_plot: bool,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// hierarchical, chrono, asia, sachs, or gating-demo
    #[arg(long)]
    generator: Option<String>,
    /// Number of rows
    #[arg(long)]
    n: Option<usize>,
    /// Target node index for network fixtures
    #[arg(long, default_value_t = 0)]
    bn_target: usize,
    /// Keep the network target continuous instead of median-splitting it
    #[arg(long)]
    regression: bool,
    /// Class-mean drift for the chrono generator
    #[arg(long, default_value_t = 1.6)]
    drift: f64,
}

fn merged_config(args: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(p) => load_config(Path::new(p))?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &args.data {
        cfg.data = Some(v.clone());
    }
    if let Some(v) = &args.label {
        cfg.label = Some(v.clone());
    }
    if let Some(v) = &args.target {
        cfg.target = Some(v.clone());
    }
    if let Some(v) = &args.engine {
        cfg.engine = v.clone();
    }
    if let Some(v) = &args.model {
        cfg.model = Some(v.clone());
    }
    if let Some(v) = &args.policy {
        cfg.policy = v.clone();
    }
    if let Some(v) = args.budget {
        cfg.budget = Some(v);
    }
    if let Some(v) = args.confidence {
        cfg.confidence = Some(v);
    }
    if let Some(v) = &args.prune_bn {
        cfg.prune_bn = Some(v.clone());
    }
    if let Some(v) = args.n_samples {
        cfg.n_samples = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.epsilon {
        cfg.epsilon = Some(v);
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if let Some(v) = args.max_instances {
        cfg.max_instances = Some(v);
    }
    if let Some(v) = args.t_steps {
        cfg.t_steps = Some(v);
    }
    if let Some(v) = args.step_width {
        cfg.step_width = Some(v);
    }
    if let Some(v) = &args.ts_mode {
        cfg.ts_mode = v.clone();
    }
    if let Some(v) = &args.ts_policy {
        cfg.ts_policy = v.clone();
    }
    if args.no_plot {
        cfg.plot = false;
    }
    Ok(cfg)
}

fn gen_config(args: &GenArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = merged_config(&args.common)?;
    if let Some(name) = &args.generator {
        let seed = cfg.seed;
        cfg.generator = Some(match name.as_str() {
            "hierarchical" => GeneratorSpec::Hierarchical {
                n: args.n.unwrap_or(20000),
                per_feature_weights: false,
                seed,
            },
            "chrono" => GeneratorSpec::Chrono {
                n: args.n.unwrap_or(6000),
                t_steps: cfg.t_steps.unwrap_or(12),
                step_width: cfg.step_width.unwrap_or(1),
                drift: args.drift,
                seed,
            },
            fixture @ ("asia" | "sachs" | "gating-demo") => GeneratorSpec::Bn {
                fixture: fixture.to_string(),
                n: args.n.unwrap_or(5000),
                target: args.bn_target,
                classify: !args.regression,
                seed,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown generator {other:?}; expected hierarchical, chrono, \
                     asia, sachs, or gating-demo"
                )))
            }
        });
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Fit(args) => {
            let cfg = merged_config(&args)?;
            let out = cmd_fit(&cfg)?;
            println!(
                "model written to {} ({} training rows, em converged: {})",
                out.model_path.display(),
                out.train_rows,
                out.em_converged
            );
        }
        Command::Acquire(args) => {
            let cfg = merged_config(&args)?;
            let out = cmd_acquire(&cfg)?;
            for w in &out.pruner_warnings {
                eprintln!("structure warning: {w}");
            }
            if let Some(order) = &out.static_order {
                println!("static order: {order:?}");
            }
            for run in &out.runs {
                let last = run.curve.last().expect("curve has step 0");
                println!(
                    "{}: {} instances, final metric {:.4} (curve {}, traces {})",
                    run.label,
                    out.instances,
                    last.1,
                    run.curve_path.display(),
                    run.trace_path.display()
                );
                if run.mean_pruned > 0.0 {
                    println!(
                        "{}: mean candidates per step {:.2}, mean pruned {:.2}",
                        run.label, run.mean_candidates, run.mean_pruned
                    );
                }
            }
            if let Some(p) = &out.plot_path {
                println!("plot: {}", p.display());
            }
        }
        Command::LearnBn(args) => {
            let cfg = merged_config(&args)?;
            let out = cmd_learn_bn(&cfg)?;
            for w in &out.warnings {
                eprintln!("structure warning: {w}");
            }
            println!(
                "epsilon {:.6}, {} edges written to {}",
                out.epsilon,
                out.edges.len(),
                out.dag_path.display()
            );
            if let Some(diff) = &out.diff {
                let name = |i: usize| out.node_names[i].clone();
                println!(
                    "diff vs ground truth: {} missing, {} extra, {} misoriented",
                    diff.missing_edges.len(),
                    diff.extra_edges.len(),
                    diff.misoriented.len()
                );
                for &(a, b) in &diff.missing_edges {
                    println!("  missing {} - {}", name(a), name(b));
                }
                for &(a, b) in &diff.extra_edges {
                    println!("  extra {} - {}", name(a), name(b));
                }
                for &(a, b) in &diff.misoriented {
                    println!("  misoriented {} - {}", name(a), name(b));
                }
            }
        }
        Command::Ts(args) => {
            let cfg = merged_config(&args)?;
            let out = cmd_ts(&cfg)?;
            println!("report: {}", out.report_path.display());
            if let Some(m) = out.mean_first_step {
                println!("mean first selected step: {m:.3} over {} instances", out.instances);
            }
            if let Some(m) = out.mean_stop {
                println!(
                    "mean stop step {:.3}, stopped accuracy {:.4}, overall accuracy {:.4}",
                    m,
                    out.stopped_accuracy.unwrap_or(f64::NAN),
                    out.overall_accuracy.unwrap_or(f64::NAN)
                );
            }
            if let Some(p) = &out.calibration_path {
                println!("calibration: {}", p.display());
            }
        }
        Command::GenData(args) => {
            let cfg = gen_config(&args)?;
            let out = cmd_gen_data(&cfg)?;
            println!("{} rows -> {}", out.rows, out.csv_path.display());
            println!("sidecar: {}", out.sidecar_path.display());
            if let Some(p) = &out.dag_path {
                println!("truth dag: {}", p.display());
            }
        }
        Command::Interactive(args) => {
            let cfg = merged_config(&args)?;
            let stdin = std::io::stdin();
            let stdout = std::io::stdout();
            let path = cmd_interactive(&cfg, &mut stdin.lock(), &mut stdout.lock())?;
            println!("trace: {}", path.display());
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
