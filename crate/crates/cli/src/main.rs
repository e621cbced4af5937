//! `sfgap`: decompositions, nonconvexity tables, gap bounds and application demos.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use sfgap::apps::Utility;
use sfgap::Error;

use commands::{DecomposeMode, DsmArgs, Family, Output, RhoArgs};
use config::{OutFormat, RunConfig};

#[derive(Parser)]
#[command(name = "sfgap", version, about = "Shapley-Folkman decompositions and duality-gap bounds")]
struct Cli {
    /// JSON run configuration; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "tol-lp", global = true)]
    tol_lp: Option<f64>,
    /// Tone grid step for spectrum demos (1/G).
    #[arg(long = "grid-step", global = true)]
    grid_step: Option<f64>,
    #[arg(long, global = true, value_enum)]
    out: Option<OutFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a point of a Minkowski sum into per-set combinations.
    Decompose {
        input: PathBuf,
        /// Use the minimal face through the point to tighten the support budget.
        #[arg(long, conflicts_with = "epigraph")]
        refined: bool,
        /// Sets are epigraph samples; `z` gives all coordinates but the last.
        #[arg(long)]
        epigraph: bool,
    },
    /// Tabulate k-th nonconvexity for k = 1..=k-max.
    Rho {
        #[arg(value_enum)]
        family: Family,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "k-max")]
        k_max: usize,
        #[arg(long)]
        sigma: Option<f64>,
        /// Sampled function document for the `sampled` family.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Refined and classic duality-gap bounds for a table of k-th nonconvexities.
    Bound {
        table: PathBuf,
        /// Number of coupling constraints.
        #[arg(long)]
        m: usize,
    },
    /// End-to-end gap report on an application instance.
    Demo {
        #[command(subcommand)]
        app: Demo,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum UtilityArg {
    Throughput,
    Log,
}

#[derive(Subcommand)]
enum Demo {
    /// Network utility maximization with single-path routing.
    Num {
        #[arg(long, default_value_t = 2)]
        links: usize,
        #[arg(long, default_value_t = 2)]
        users: usize,
        #[arg(long, default_value_t = 3)]
        paths: usize,
        #[arg(long, value_enum, default_value = "throughput")]
        utility: UtilityArg,
    },
    /// Spectrum management, swept over tone counts.
    Dsm {
        #[arg(long, default_value_t = 2)]
        users: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        tones: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        budget: f64,
        /// Draw noises and budgets from the seed instead.
        #[arg(long)]
        random: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::NumericBreakdown(_) | Error::Inconsistent(_) => 1,
        Error::OutsideHull | Error::Infeasible(_) => 2,
        Error::CapExceeded { .. } => 3,
    }
}

fn build_config(cli: &Cli) -> sfgap::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.tol_lp {
        cfg.settings.tol.lp = t;
    }
    if let Some(g) = cli.grid_step {
        cfg.grid_step = g;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &RunConfig) -> sfgap::Result<Output> {
    match &cli.command {
        Command::Decompose { input, refined, epigraph } => {
            let mode = match (refined, epigraph) {
                (true, _) => DecomposeMode::Refined,
                (_, true) => DecomposeMode::Epigraph,
                _ => DecomposeMode::Plain,
            };
            commands::decompose(input, mode, cfg)
        }
        Command::Rho { family, n, k_max, sigma, file } => {
            commands::rho(&RhoArgs { family: *family, n: *n, k_max: *k_max, sigma: *sigma, file: file.as_deref() }, cfg)
        }
        Command::Bound { table, m } => commands::bound(table, *m),
        Command::Demo { app: Demo::Num { links, users, paths, utility } } => {
            let u = match utility {
                UtilityArg::Throughput => Utility::Throughput,
                UtilityArg::Log => Utility::Log,
            };
            commands::demo_num(*links, *users, *paths, u, cfg)
        }
        Command::Demo { app: Demo::Dsm { users, tones, sigma, budget, random } } => commands::demo_dsm(
            &DsmArgs { users: *users, tones, sigma: *sigma, budget: *budget, random: *random },
            cfg,
        ),
    }
}

fn configure_threads() -> sfgap::Result<()> {
    if let Ok(v) = std::env::var("SFGAP_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::InvalidInput(format!("SFGAP_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::InvalidInput("SFGAP_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| build_config(&cli)).and_then(|cfg| run(&cli, &cfg).map(|o| (cfg, o)));
    match result {
        Ok((cfg, out)) => {
            match cfg.out {
                OutFormat::Json => {
                    let doc = json!({ "config": cfg, "result": out.json });
                    println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes"));
                }
                OutFormat::Csv => print!("{}", out.csv),
                OutFormat::Pretty => {
                    println!("config: {}", serde_json::to_string(&cfg).expect("config serializes"));
                    print!("{}", out.pretty);
                }
            }
            if out.verdicts_hold {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: a bound verdict failed");
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
