use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod settings;

use settings::{read_pairs, Settings};

/// Evolve synthetic training datasets and compare them with real data.
#[derive(Debug, Parser)]
#[command(name = "evogen", version)]
struct Cli {
    /// Log progress to stderr (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split the data once and evolve one generated dataset.
    Generate(RunArgs),
    /// Compare classifiers trained on generated and on real data.
    Experiment(ExperimentArgs),
    /// Per-attribute comparison of a generated CSV against the real data.
    Distribution(DistributionArgs),
    /// Runtime and memory scaling with the generated dataset size.
    Bench(BenchArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long, value_parser = ["iris", "wdbc"])]
    dataset: Option<String>,
    /// Raw data file; defaults to $EVOGEN_DATA_DIR/<iris.data|wdbc.data>.
    #[arg(long)]
    data_file: Option<PathBuf>,
    /// `key = value` settings file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_parser = ["abundance", "scarcity"])]
    regime: Option<String>,
    /// Real instances per class under scarcity.
    #[arg(long)]
    per_class: Option<usize>,
    /// Training/testing share under abundance.
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    n_generated: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    repeats_real: Option<usize>,
    #[arg(long)]
    repeats_gen: Option<usize>,
    #[arg(long)]
    model_runs: Option<usize>,
    /// Add an arm trained on random, unevolved data.
    #[arg(long)]
    baseline: bool,
}

#[derive(Debug, Args)]
struct DistributionArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Generated data in the exported CSV format.
    #[arg(long)]
    generated: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_parser = ["abundance", "scarcity"])]
    regime: Option<String>,
    /// Comma-separated generated dataset sizes.
    #[arg(long)]
    sizes: Option<String>,
    /// Timed runs per size (the median is reported).
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Write artifacts here instead of the recorded directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or settings; exit code 2.
    Usage(String),
    /// Data or runtime failure; exit code 1.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<evogen::Error> for CliError {
    fn from(e: evogen::Error) -> Self {
        match e {
            evogen::Error::Config(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type Pairs = Vec<(String, String)>;

fn push<V: ToString>(pairs: &mut Pairs, key: &str, value: &Option<V>) {
    if let Some(v) = value {
        pairs.push((key.to_string(), v.to_string()));
    }
}

fn path(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

impl CommonArgs {
    fn pairs(&self) -> Result<Pairs, CliError> {
        let mut pairs = match &self.config {
            Some(file) => read_pairs(file)?,
            None => Vec::new(),
        };
        push(&mut pairs, "dataset", &self.dataset);
        push(&mut pairs, "data_file", &path(&self.data_file));
        push(&mut pairs, "out", &path(&self.out));
        push(&mut pairs, "seed", &self.seed);
        Ok(pairs)
    }
}

impl RunArgs {
    fn pairs(&self) -> Result<Pairs, CliError> {
        let mut pairs = self.common.pairs()?;
        push(&mut pairs, "regime", &self.regime);
        push(&mut pairs, "per_class", &self.per_class);
        push(&mut pairs, "train_fraction", &self.train_fraction);
        push(&mut pairs, "n_generated", &self.n_generated);
        push(&mut pairs, "ga.generations", &self.generations);
        Ok(pairs)
    }
}

fn settings_for(cli: &Command) -> Result<(&'static str, Settings), CliError> {
    let (command, pairs) = match cli {
        Command::Generate(a) => ("generate", a.pairs()?),
        Command::Experiment(a) => {
            let mut pairs = a.run.pairs()?;
            push(&mut pairs, "repeats_real", &a.repeats_real);
            push(&mut pairs, "repeats_gen", &a.repeats_gen);
            push(&mut pairs, "model_runs", &a.model_runs);
            if a.baseline {
                pairs.push(("baseline".into(), "true".into()));
            }
            ("experiment", pairs)
        }
        Command::Distribution(a) => {
            let mut pairs = a.common.pairs()?;
            push(&mut pairs, "generated", &path(&a.generated));
            ("distribution", pairs)
        }
        Command::Bench(a) => {
            let mut pairs = a.common.pairs()?;
            push(&mut pairs, "regime", &a.regime);
            push(&mut pairs, "bench.sizes", &a.sizes);
            push(&mut pairs, "bench.repeats", &a.repeats);
            push(&mut pairs, "bench.generations", &a.generations);
            ("bench", pairs)
        }
        Command::Replay(a) => {
            let pairs = read_pairs(&a.manifest)?;
            let command = match pairs.iter().rev().find(|(k, _)| k == "command").map(|(_, v)| v.as_str()) {
                Some("generate") => "generate",
                Some("experiment") => "experiment",
                Some("distribution") => "distribution",
                Some("bench") => "bench",
                other => {
                    return Err(CliError::Usage(format!(
                        "{}: unknown or missing command {other:?}",
                        a.manifest.display()
                    )))
                }
            };
            let mut settings = Settings::resolve(&pairs, None)?;
            if let Some(out) = &a.out {
                settings.out = Some(out.clone());
            }
            return Ok((command, settings));
        }
    };
    Ok((command, Settings::resolve(&pairs, None)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = settings_for(&cli.command).and_then(|(command, settings)| commands::run(command, settings));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("evogen: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("run `evogen --help` for usage");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
