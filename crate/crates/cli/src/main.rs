use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use precluster::config::PipelineConfig;
use precluster::pipeline::{self, RunOptions};
use precluster::{Error, ErrorClass};

/// Clustering-enriched fault classification pipeline.
#[derive(Parser, Debug)]
#[command(name = "precluster", version, about)]
struct Cli {
    /// TOML run configuration; defaults apply to everything it leaves out.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured run seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Caps worker threads.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Fits classifiers one at a time so training times are comparable.
    #[arg(long, global = true)]
    sequential_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Generate synthetic sensor telemetry and its NoC schedule.
    Synth,
    /// Drop invalid rows, prune correlated channels, ANOVA-select, standardize.
    Preprocess,
    /// Pick epsilon and k from k-distance knees and silhouette sweeps.
    Tune,
    /// Run the six clustering algorithms.
    Cluster,
    /// Score clusterings against the NoC periods and select the best.
    Validate,
    /// Train and score every classifier with and without cluster features.
    Train,
    /// Paired comparison, statistics, tables and figures.
    Compare,
    /// All stages in order.
    RunAll,
    /// Print the effective configuration as TOML.
    PrintConfig,
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the thread pool: {e}")))?;
    }
    let opts = RunOptions {
        sequential_timing: cli.sequential_timing,
    };
    match cli.command {
        Command::Synth => pipeline::stage_synth(&cfg),
        Command::Preprocess => pipeline::stage_preprocess(&cfg),
        Command::Tune => pipeline::stage_tune(&cfg).map(drop),
        Command::Cluster => pipeline::stage_cluster(&cfg).map(drop),
        Command::Validate => pipeline::stage_validate(&cfg).map(drop),
        Command::Train => pipeline::stage_train(&cfg, opts).map(drop),
        Command::Compare => pipeline::stage_compare(&cfg).map(|c| print_headline(&c)),
        Command::RunAll => pipeline::run_all(&cfg, opts).map(|c| print_headline(&c)),
        Command::PrintConfig => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn print_headline(c: &precluster::report::ComparisonReport) {
    let p = c.accuracy_test.map_or("undefined".to_string(), |t| format!("{:.4}", t.p));
    println!("mean test-accuracy gain {:+.4} (paired t-test p = {p})", c.mean_accuracy_gain);
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("precluster: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
