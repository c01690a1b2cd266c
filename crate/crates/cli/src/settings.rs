//! Resolved run settings and the `key = value` file format shared by config
//! files and manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use evogen::evolve::GaConfig;
use evogen::harness::{DatasetId, ExperimentConfig, Regime};
use evogen::mlp::{Activation, EarlyStopping, MlpConfig};

use crate::CliError;

pub const DATA_DIR_VAR: &str = "EVOGEN_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    Abundance,
    Scarcity,
}

impl RegimeKind {
    fn name(self) -> &'static str {
        match self {
            RegimeKind::Abundance => "abundance",
            RegimeKind::Scarcity => "scarcity",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct NetSettings {
    hidden: Vec<usize>,
    activation: String,
    leaky_slope: f64,
    learning_rate: f64,
    max_epochs: usize,
    l2_lambda: f64,
    dropout_rate: f64,
    early_stopping_holdout: Option<f64>,
    early_stopping_patience: usize,
}

impl NetSettings {
    fn from_config(cfg: &MlpConfig) -> Self {
        let (activation, leaky_slope) = match cfg.hidden_activation {
            Activation::LeakyRelu { slope } => ("leaky_relu", slope),
            Activation::Relu => ("relu", 0.01),
        };
        Self {
            hidden: cfg.layer_sizes[1..cfg.layer_sizes.len() - 1].to_vec(),
            activation: activation.into(),
            leaky_slope,
            learning_rate: cfg.learning_rate,
            max_epochs: cfg.max_epochs,
            l2_lambda: cfg.l2_lambda,
            dropout_rate: cfg.dropout_rate,
            early_stopping_holdout: cfg.early_stopping.map(|es| es.holdout_fraction),
            early_stopping_patience: cfg.early_stopping.map_or(20, |es| es.patience),
        }
    }

    fn build(&self, dataset: DatasetId) -> Result<MlpConfig, CliError> {
        let hidden_activation = match self.activation.as_str() {
            "relu" => Activation::Relu,
            "leaky_relu" => Activation::LeakyRelu { slope: self.leaky_slope },
            other => return Err(CliError::Usage(format!("unknown activation {other:?} (relu or leaky_relu)"))),
        };
        let mut layer_sizes = vec![dataset.n_attributes()];
        layer_sizes.extend(&self.hidden);
        layer_sizes.push(dataset.n_classes());
        Ok(MlpConfig {
            layer_sizes,
            hidden_activation,
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            l2_lambda: self.l2_lambda,
            dropout_rate: self.dropout_rate,
            early_stopping: self
                .early_stopping_holdout
                .map(|holdout_fraction| EarlyStopping { holdout_fraction, patience: self.early_stopping_patience }),
            seed: 0,
        })
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<bool, CliError> {
        match key {
            "hidden" => self.hidden = parse_list(key, value)?,
            "activation" => self.activation = value.to_string(),
            "leaky_slope" => self.leaky_slope = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "l2_lambda" => self.l2_lambda = parse(key, value)?,
            "dropout_rate" => self.dropout_rate = parse(key, value)?,
            "early_stopping_holdout" => self.early_stopping_holdout = parse_optional(key, value)?,
            "early_stopping_patience" => self.early_stopping_patience = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn write(&self, prefix: &str, out: &mut String) {
        let _ = writeln!(out, "{prefix}.hidden = {}", join(&self.hidden));
        let _ = writeln!(out, "{prefix}.activation = {}", self.activation);
        let _ = writeln!(out, "{prefix}.leaky_slope = {}", self.leaky_slope);
        let _ = writeln!(out, "{prefix}.learning_rate = {}", self.learning_rate);
        let _ = writeln!(out, "{prefix}.max_epochs = {}", self.max_epochs);
        let _ = writeln!(out, "{prefix}.l2_lambda = {}", self.l2_lambda);
        let _ = writeln!(out, "{prefix}.dropout_rate = {}", self.dropout_rate);
        let _ = writeln!(out, "{prefix}.early_stopping_holdout = {}", optional(self.early_stopping_holdout));
        let _ = writeln!(out, "{prefix}.early_stopping_patience = {}", self.early_stopping_patience);
    }
}

/// Every knob of every command, with dataset-dependent defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub dataset: DatasetId,
    pub data_file: Option<PathBuf>,
    pub regime: RegimeKind,
    pub train_fraction: f64,
    pub per_class: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub n_generated: usize,
    pub repeats_real: usize,
    pub repeats_gen: usize,
    pub model_runs: usize,
    pub baseline: bool,
    pub generated: Option<PathBuf>,
    pub population_size: usize,
    pub generations: usize,
    pub mutation_prob: f64,
    pub elite_count: usize,
    pub parent_fraction: f64,
    pub target_fitness: Option<f64>,
    inner: NetSettings,
    eval: NetSettings,
    pub bench_sizes: Vec<usize>,
    pub bench_repeats: usize,
    pub bench_generations: usize,
}

impl Settings {
    pub fn defaults(dataset: DatasetId) -> Self {
        let base = ExperimentConfig::defaults(dataset, true);
        let ga = &base.ga;
        Self {
            dataset,
            data_file: None,
            regime: RegimeKind::Scarcity,
            train_fraction: dataset.default_train_fraction(),
            per_class: 1,
            seed: 0,
            out: None,
            n_generated: ga.n_generated,
            repeats_real: base.n_real_resamples,
            repeats_gen: base.n_generated_datasets,
            model_runs: base.n_model_runs,
            baseline: false,
            generated: None,
            population_size: ga.population_size,
            generations: ga.generations,
            mutation_prob: ga.mutation_prob,
            elite_count: ga.elite_count,
            parent_fraction: ga.parent_fraction,
            target_fitness: ga.target_fitness,
            inner: NetSettings::from_config(&ga.inner_mlp),
            eval: NetSettings::from_config(&base.eval_mlp),
            bench_sizes: vec![30, 60, 120, 240],
            bench_repeats: 3,
            bench_generations: 10,
        }
    }

    /// Defaults for the dataset named in `pairs` (or `fallback`), then every pair in order.
    pub fn resolve(pairs: &[(String, String)], fallback: Option<DatasetId>) -> Result<Self, CliError> {
        let dataset = match pairs.iter().rev().find(|(k, _)| k == "dataset") {
            Some((_, v)) => v.parse::<DatasetId>().map_err(|e| CliError::Usage(e.to_string()))?,
            None => fallback.ok_or_else(|| CliError::Usage("--dataset is required (iris or wdbc)".into()))?,
        };
        let mut settings = Self::defaults(dataset);
        for (k, v) in pairs {
            settings.apply(k, v)?;
        }
        Ok(settings)
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "dataset" => {
                let id: DatasetId = value.parse().map_err(|e: evogen::Error| CliError::Usage(e.to_string()))?;
                if id != self.dataset {
                    return Err(CliError::Usage(format!("dataset {id} conflicts with {}", self.dataset)));
                }
            }
            "data_file" => self.data_file = optional_path(value),
            "regime" => {
                self.regime = match value {
                    "abundance" => RegimeKind::Abundance,
                    "scarcity" => RegimeKind::Scarcity,
                    other => return Err(CliError::Usage(format!("unknown regime {other:?} (abundance or scarcity)"))),
                }
            }
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "per_class" => self.per_class = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = optional_path(value),
            "n_generated" => self.n_generated = parse(key, value)?,
            "repeats_real" => self.repeats_real = parse(key, value)?,
            "repeats_gen" => self.repeats_gen = parse(key, value)?,
            "model_runs" => self.model_runs = parse(key, value)?,
            "baseline" => self.baseline = parse(key, value)?,
            "generated" => self.generated = optional_path(value),
            "ga.population_size" => self.population_size = parse(key, value)?,
            "ga.generations" => self.generations = parse(key, value)?,
            "ga.mutation_prob" => self.mutation_prob = parse(key, value)?,
            "ga.elite_count" => self.elite_count = parse(key, value)?,
            "ga.parent_fraction" => self.parent_fraction = parse(key, value)?,
            "ga.target_fitness" => self.target_fitness = parse_optional(key, value)?,
            "bench.sizes" => self.bench_sizes = parse_list(key, value)?,
            "bench.repeats" => self.bench_repeats = parse(key, value)?,
            "bench.generations" => self.bench_generations = parse(key, value)?,
            // manifest bookkeeping
            "command" | "artifacts" => {}
            _ => {
                let handled = match key.split_once('.') {
                    Some(("inner", rest)) => self.inner.apply(rest, value)?,
                    Some(("eval", rest)) => self.eval.apply(rest, value)?,
                    _ => false,
                };
                if !handled {
                    return Err(CliError::Usage(format!("unknown setting {key:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        match self.regime {
            RegimeKind::Abundance => Regime::Abundance { train_fraction: self.train_fraction },
            RegimeKind::Scarcity => Regime::Scarcity { per_class: self.per_class },
        }
    }

    pub fn ga_config(&self) -> Result<GaConfig, CliError> {
        let mut ga = GaConfig::new(self.n_generated, self.generations, self.inner.build(self.dataset)?);
        ga.population_size = self.population_size;
        ga.mutation_prob = self.mutation_prob;
        ga.elite_count = self.elite_count;
        ga.parent_fraction = self.parent_fraction;
        ga.target_fitness = self.target_fitness;
        ga.validate()?;
        Ok(ga)
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig, CliError> {
        let cfg = ExperimentConfig {
            dataset: self.dataset,
            regime: self.regime(),
            n_generated_datasets: self.repeats_gen,
            n_real_resamples: self.repeats_real,
            n_model_runs: self.model_runs,
            include_baseline: self.baseline,
            ga: self.ga_config()?,
            eval_mlp: self.eval.build(self.dataset)?,
            master_seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn out_dir(&self) -> Result<&Path, CliError> {
        self.out.as_deref().ok_or_else(|| CliError::Usage("--out is required".into()))
    }

    /// `data_file`, else `$EVOGEN_DATA_DIR/<dataset file>`.
    pub fn resolve_data_file(&mut self) -> Result<PathBuf, CliError> {
        if self.data_file.is_none() {
            match std::env::var_os(DATA_DIR_VAR) {
                Some(dir) => self.data_file = Some(Path::new(&dir).join(self.dataset.file_name())),
                None => {
                    return Err(CliError::Usage(format!("--data-file is required when {DATA_DIR_VAR} is not set")))
                }
            }
        }
        let path = self.data_file.clone().expect("set above");
        let path = std::fs::canonicalize(&path).unwrap_or(path);
        self.data_file = Some(path.clone());
        Ok(path)
    }

    pub fn to_manifest(&self, command: &str, artifacts: &[String]) -> String {
        let mut out = String::from("# evogen run manifest; replay with `evogen replay --manifest <this file>`\n");
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("none".to_string(), |p| p.display().to_string());
        let _ = writeln!(out, "command = {command}");
        let _ = writeln!(out, "dataset = {}", self.dataset);
        let _ = writeln!(out, "data_file = {}", path(&self.data_file));
        let _ = writeln!(out, "regime = {}", self.regime.name());
        let _ = writeln!(out, "train_fraction = {}", self.train_fraction);
        let _ = writeln!(out, "per_class = {}", self.per_class);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "out = {}", path(&self.out));
        let _ = writeln!(out, "n_generated = {}", self.n_generated);
        let _ = writeln!(out, "repeats_real = {}", self.repeats_real);
        let _ = writeln!(out, "repeats_gen = {}", self.repeats_gen);
        let _ = writeln!(out, "model_runs = {}", self.model_runs);
        let _ = writeln!(out, "baseline = {}", self.baseline);
        let _ = writeln!(out, "generated = {}", path(&self.generated));
        out.push_str("\n# genetic algorithm\n");
        let _ = writeln!(out, "ga.population_size = {}", self.population_size);
        let _ = writeln!(out, "ga.generations = {}", self.generations);
        let _ = writeln!(out, "ga.mutation_prob = {}", self.mutation_prob);
        let _ = writeln!(out, "ga.elite_count = {}", self.elite_count);
        let _ = writeln!(out, "ga.parent_fraction = {}", self.parent_fraction);
        let _ = writeln!(out, "ga.target_fitness = {}", optional(self.target_fitness));
        out.push_str("\n# network inside the fitness function\n");
        self.inner.write("inner", &mut out);
        out.push_str("\n# downstream classifier\n");
        self.eval.write("eval", &mut out);
        out.push_str("\n# benchmarks\n");
        let _ = writeln!(out, "bench.sizes = {}", join(&self.bench_sizes));
        let _ = writeln!(out, "bench.repeats = {}", self.bench_repeats);
        let _ = writeln!(out, "bench.generations = {}", self.bench_generations);
        out.push('\n');
        let _ = writeln!(out, "artifacts = {}", artifacts.join(","));
        out
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("line {}: expected `key = value`, got {raw:?}", i + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_pairs(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn parse<V: std::str::FromStr>(key: &str, value: &str) -> Result<V, CliError> {
    value.parse().map_err(|_| CliError::Usage(format!("invalid value {value:?} for {key}")))
}

fn parse_optional(key: &str, value: &str) -> Result<Option<f64>, CliError> {
    if value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, CliError> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (value != "none").then(|| PathBuf::from(value))
}

fn optional(v: Option<f64>) -> String {
    v.map_or("none".into(), |v| v.to_string())
}

fn join(values: &[usize]) -> String {
    values.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}
