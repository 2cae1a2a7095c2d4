//! `wsnsim` command line.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 integrity violation.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wsnsim::coding::{payloads, DistributionKind};
use wsnsim::dsa1::{run_dsa1, FloodOptions, StorageParams};
use wsnsim::dsa2::{inference_csv, run_dsa2};
use wsnsim::harness::{
    buffer_stats, emit, eta_grid, run_sweep, verify_scaling, Algorithm, DistSpec, ExperimentConfig,
    OutputFormat, ScalingConfig, SlotSpec,
};
use wsnsim::netgraph::generate_connected_enough;
use wsnsim::{seed, Error, Result};

#[derive(Parser)]
#[command(name = "wsnsim", version, about = "Flooding-based distributed storage simulator for sensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the decoding ratio and estimate the success probability.
    Run(RunArgs),
    /// Regress transmission counts against network size.
    Scaling {
        /// JSON scaling configuration.
        #[arg(long)]
        config: PathBuf,
        /// Write the report as JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump per-transmission events of a single dissemination as NDJSON.
    Trace(TraceArgs),
}

#[derive(Args, Clone)]
struct NetArgs {
    #[arg(long, value_enum, default_value = "dsa1")]
    alg: AlgArg,
    #[arg(long)]
    n: Option<usize>,
    /// Side length L of the deployment square.
    #[arg(long)]
    side: Option<f64>,
    /// Connectivity radius.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, value_enum, default_value = "ideal")]
    dist: DistArg,
    #[arg(long, default_value_t = 0.1)]
    c0: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Slots per node including the own-data slot.
    #[arg(long, conflicts_with = "m_ratio")]
    m: Option<usize>,
    /// Slots per node as a fraction of n (minimum 2).
    #[arg(long)]
    m_ratio: Option<f64>,
    /// DSA-II global scale C.
    #[arg(long, default_value_t = 1.0)]
    c_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Drop re-received packets instead of re-forwarding them.
    #[arg(long)]
    strict_discard: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    net: NetArgs,
    /// JSON experiment configuration; replaces the network flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    eta_start: f64,
    #[arg(long, default_value_t = 1.0)]
    eta_stop: f64,
    #[arg(long, default_value_t = 0.1)]
    eta_step: f64,
    /// Trial cap per grid point.
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 1.0)]
    sample_frac: f64,
    #[arg(long)]
    reuse_graph: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    net: NetArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the DSA-II inference table as CSV.
    #[arg(long)]
    inference_out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AlgArg {
    Dsa1,
    Dsa2,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum DistArg {
    Ideal,
    Robust,
}

impl NetArgs {
    fn given(&self) -> bool {
        self.n.is_some() || self.side.is_some() || self.radius.is_some()
    }

    fn experiment(&self) -> Result<ExperimentConfig> {
        let algorithm = match self.alg {
            AlgArg::Dsa1 => Algorithm::Dsa1,
            AlgArg::Dsa2 => Algorithm::Dsa2,
        };
        let (Some(n), Some(side), Some(radius)) = (self.n, self.side, self.radius) else {
            return Err(Error::Config("--n, --side and --radius are required".into()));
        };
        let mut cfg = ExperimentConfig::new(algorithm, n, side, radius);
        cfg.dist = DistSpec {
            kind: match self.dist {
                DistArg::Ideal => DistributionKind::Ideal,
                DistArg::Robust => DistributionKind::Robust,
            },
            c0: self.c0,
            delta: self.delta,
        };
        cfg.slots = match (self.m, self.m_ratio) {
            (Some(m), _) => SlotSpec::Fixed(m),
            (None, Some(r)) => SlotSpec::Ratio(r),
            (None, None) => SlotSpec::default(),
        };
        cfg.c_scale = self.c_scale;
        cfg.master_seed = self.seed;
        cfg.strict_discard = self.strict_discard;
        Ok(cfg)
    }
}

fn write_or_print(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(_) if args.net.given() => {
            return Err(Error::Config("--config cannot be combined with --n/--side/--radius".into()))
        }
        Some(path) => serde_json::from_str::<ExperimentConfig>(&read(path)?)?,
        None => {
            let mut cfg = args.net.experiment()?;
            cfg.eta_grid = eta_grid(args.eta_start, args.eta_stop, args.eta_step)?;
            cfg.trials = args.trials;
            cfg.sample_frac = args.sample_frac;
            cfg.reuse_graph = args.reuse_graph;
            cfg
        }
    };
    let result = run_sweep(&cfg)?;
    match &args.out {
        Some(path) => emit(&result, args.format, path)?,
        None => {
            let text = match args.format {
                OutputFormat::Csv => wsnsim::harness::to_csv(&result)?,
                OutputFormat::Json => wsnsim::harness::to_json(&result)?,
            };
            print!("{text}");
        }
    }
    for b in buffer_stats(std::slice::from_ref(&result)) {
        eprintln!(
            "{} n={} λ={:.2}: {:.2} stored IDs per node ({:.3} of n); {} slots audited",
            b.algorithm.label(),
            b.n,
            b.lambda,
            b.mean_distinct_ids,
            b.fraction_of_n,
            result.ledger.slots_checked
        );
    }
    Ok(())
}

fn scaling(config: &PathBuf, out: Option<&PathBuf>) -> Result<()> {
    let cfg: ScalingConfig = serde_json::from_str(&read(config)?)?;
    let report = verify_scaling(&cfg)?;
    for c in &report.checks {
        eprintln!("{:<28} {:>10.4}  {}", c.name, c.value, if c.pass { "PASS" } else { "FAIL" });
    }
    write_or_print(out, &serde_json::to_string_pretty(&report)?)
}

fn trace(args: TraceArgs) -> Result<()> {
    let cfg = args.net.experiment()?;
    cfg.validate()?;
    let graph = generate_connected_enough(
        cfg.n,
        cfg.side,
        cfg.radius,
        seed::derive(cfg.master_seed, seed::stream::GRAPH, 0),
        cfg.max_graph_attempts,
    )?;
    let truth = payloads(cfg.n, cfg.master_seed);
    let storage = StorageParams {
        m: cfg.slots.resolve(cfg.n),
        dist: cfg.dist.build(cfg.n)?,
    };
    let options = FloodOptions {
        strict_discard: cfg.strict_discard,
        trace: true,
    };
    let mut rng = seed::rng(seed::derive(cfg.master_seed, seed::stream::DISSEMINATION, 0));
    let report = match cfg.algorithm {
        Algorithm::Dsa1 => run_dsa1(&graph, &truth, &storage, options, &mut rng)?,
        Algorithm::Dsa2 => {
            let (report, inference) = run_dsa2(&graph, &truth, &storage, cfg.c_scale, options, &mut rng)?;
            if let Some(path) = &args.inference_out {
                write_or_print(Some(path), &inference_csv(&graph, &inference))?;
            }
            report
        }
    };
    write_or_print(args.out.as_ref(), &report.trace_ndjson()?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are configuration errors; 2 is reserved for integrity failures.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Scaling { config, out } => scaling(&config, out.as_ref()),
        Command::Trace(args) => trace(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wsnsim: {e}");
            match e {
                Error::Integrity(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
