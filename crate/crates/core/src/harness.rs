//! End-to-end experiments comparing classifiers trained on generated data
//! with classifiers trained on the real training batch, plus distribution,
//! learning-curve and scaling reports.
//!
//! Every seed used by an experiment is derived from `master_seed` through
//! [`crate::seed::derive`], so a report is a pure function of its config.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use crate::dataset::{self, Dataset};
use crate::error::{Error, Result};
use crate::evolve::{self, FitnessScore, FitnessTrace, GaConfig, GenerationRecord, Genome};
use crate::mlp::{MlpConfig, MlpModel};
use crate::scalar::Scalar;
use crate::seed::{self, tag};
use crate::stats::{self, RegressionFit, SummaryStats, TestResult};

/// Minimum repeat counts for an experiment.
pub const MIN_GENERATED_DATASETS: usize = 3;
pub const MIN_REAL_RESAMPLES: usize = 3;
pub const MIN_MODEL_RUNS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetId {
    Iris,
    Wdbc,
}

impl DatasetId {
    pub fn name(self) -> &'static str {
        match self {
            DatasetId::Iris => "iris",
            DatasetId::Wdbc => "wdbc",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            DatasetId::Iris => "Iris",
            DatasetId::Wdbc => "Breast Cancer Wisconsin (diagnostic)",
        }
    }

    /// File name of the UCI data file.
    pub fn file_name(self) -> &'static str {
        match self {
            DatasetId::Iris => "iris.data",
            DatasetId::Wdbc => "wdbc.data",
        }
    }

    pub fn load<T: Scalar>(self, path: impl AsRef<Path>) -> Result<Dataset<T>> {
        match self {
            DatasetId::Iris => dataset::load_iris(path),
            DatasetId::Wdbc => dataset::load_wdbc(path),
        }
    }

    pub fn n_attributes(self) -> usize {
        match self {
            DatasetId::Iris => 4,
            DatasetId::Wdbc => 30,
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            DatasetId::Iris => 3,
            DatasetId::Wdbc => 2,
        }
    }

    pub fn default_hidden(self) -> Vec<usize> {
        match self {
            DatasetId::Iris => vec![8],
            DatasetId::Wdbc => vec![16],
        }
    }

    pub fn default_n_generated(self) -> usize {
        match self {
            DatasetId::Iris => 150,
            DatasetId::Wdbc => 100,
        }
    }

    pub fn default_generations(self) -> usize {
        match self {
            DatasetId::Iris => 300,
            DatasetId::Wdbc => 150,
        }
    }

    pub fn default_train_fraction(self) -> f64 {
        match self {
            DatasetId::Iris => 0.7,
            DatasetId::Wdbc => 0.8,
        }
    }

    /// Default GA configuration, inner network included.
    pub fn default_ga(self) -> GaConfig {
        let inner = MlpConfig::generation(self.n_attributes(), &self.default_hidden(), self.n_classes());
        GaConfig::new(self.default_n_generated(), self.default_generations(), inner)
    }

    pub fn default_eval_mlp(self) -> MlpConfig {
        MlpConfig::evaluation(self.n_attributes(), &self.default_hidden(), self.n_classes())
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iris" => Ok(DatasetId::Iris),
            "wdbc" => Ok(DatasetId::Wdbc),
            other => Err(Error::Config(format!("unknown dataset {other:?} (expected iris or wdbc)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Stratified split with the given fraction in the training/testing batch.
    Abundance { train_fraction: f64 },
    /// `per_class` instances of every class in the training/testing batch.
    Scarcity { per_class: usize },
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Abundance { .. } => "abundance",
            Regime::Scarcity { .. } => "scarcity",
        }
    }

    pub fn split<T: Scalar>(self, data: &Dataset<T>, seed: u64) -> Result<dataset::DataSplit<T>> {
        match self {
            Regime::Abundance { train_fraction } => data.split_random(train_fraction, seed),
            Regime::Scarcity { per_class } => data.split_scarce(per_class, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetId,
    pub regime: Regime,
    pub n_generated_datasets: usize,
    pub n_real_resamples: usize,
    pub n_model_runs: usize,
    pub include_baseline: bool,
    /// Evolution settings; `ga.seed` is replaced by a derived seed per run.
    pub ga: GaConfig,
    /// Downstream classifier; `eval_mlp.seed` is replaced per model run.
    pub eval_mlp: MlpConfig,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn defaults(dataset: DatasetId, scarcity: bool) -> Self {
        let regime = if scarcity {
            Regime::Scarcity { per_class: 1 }
        } else {
            Regime::Abundance { train_fraction: dataset.default_train_fraction() }
        };
        Self {
            dataset,
            regime,
            n_generated_datasets: MIN_GENERATED_DATASETS,
            n_real_resamples: MIN_REAL_RESAMPLES,
            n_model_runs: MIN_MODEL_RUNS,
            include_baseline: false,
            ga: dataset.default_ga(),
            eval_mlp: dataset.default_eval_mlp(),
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_generated_datasets < MIN_GENERATED_DATASETS {
            return Err(Error::Config(format!(
                "at least {MIN_GENERATED_DATASETS} generated datasets per resample are required, got {}",
                self.n_generated_datasets
            )));
        }
        if self.n_real_resamples < MIN_REAL_RESAMPLES {
            return Err(Error::Config(format!(
                "at least {MIN_REAL_RESAMPLES} real resamples are required, got {}",
                self.n_real_resamples
            )));
        }
        if self.n_model_runs < MIN_MODEL_RUNS {
            return Err(Error::Config(format!(
                "at least {MIN_MODEL_RUNS} model runs are required, got {}",
                self.n_model_runs
            )));
        }
        self.ga.validate()?;
        self.eval_mlp.validate()?;
        let (n_in, n_out) = (self.dataset.n_attributes(), self.dataset.n_classes());
        for (what, cfg) in [("inner", &self.ga.inner_mlp), ("evaluation", &self.eval_mlp)] {
            if cfg.n_inputs() != n_in || cfg.n_outputs() != n_out {
                return Err(Error::Config(format!(
                    "{what} network layers {:?} do not match {} ({n_in} attributes, {n_out} classes)",
                    cfg.layer_sizes, self.dataset
                )));
            }
        }
        Ok(())
    }

    pub fn split_seed(&self, resample: usize) -> u64 {
        seed::derive(self.master_seed, &[tag::SPLIT, resample as u64])
    }

    pub fn evolve_seed(&self, resample: usize, index: usize) -> u64 {
        seed::derive(self.master_seed, &[tag::EVOLVE, resample as u64, index as u64])
    }

    pub fn baseline_seed(&self, resample: usize, index: usize) -> u64 {
        seed::derive(self.master_seed, &[tag::BASELINE, resample as u64, index as u64])
    }

    pub fn model_seed(&self, arm: Arm, resample: usize, index: usize, run: usize) -> u64 {
        seed::derive(self.master_seed, &[tag::MODEL, arm.code(), resample as u64, index as u64, run as u64])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    Generated,
    Real,
    RandomBaseline,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Generated => "generated",
            Arm::Real => "real",
            Arm::RandomBaseline => "random_baseline",
        }
    }

    fn code(self) -> u64 {
        match self {
            Arm::Generated => 0,
            Arm::Real => 1,
            Arm::RandomBaseline => 2,
        }
    }

    fn heading(self) -> &'static str {
        match self {
            Arm::Generated => "Generated data",
            Arm::Real => "Real world data",
            Arm::RandomBaseline => "Random data",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub arm: Arm,
    pub mean_accuracy: f64,
    pub ci95: (f64, f64),
    pub min_accuracy: f64,
    pub max_accuracy: f64,
    pub retained_run_count: usize,
    pub total_run_count: usize,
    /// Accuracies left after discarding the extremes, in run order.
    pub retained: Vec<f64>,
}

/// One downstream model's validation accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub arm: Arm,
    pub resample: usize,
    /// Generated (or random) dataset index; `None` for the real arm.
    pub dataset_index: Option<usize>,
    pub model_run: usize,
    pub model_seed: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellTrace {
    pub resample: usize,
    pub index: usize,
    pub evolve_seed: u64,
    pub best: FitnessScore,
    pub trace: FitnessTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub arms: Vec<ArmSummary>,
    /// Generated vs real (Welch).
    pub comparison: TestResult,
    /// Generated vs random baseline (Welch), when the baseline ran.
    pub baseline_comparison: Option<TestResult>,
    pub traces: Vec<CellTrace>,
    pub runs: Vec<RunRecord>,
    pub split_seeds: Vec<u64>,
    pub train_test_sizes: Vec<usize>,
    pub validate_sizes: Vec<usize>,
}

impl ExperimentReport {
    pub fn arm(&self, arm: Arm) -> Option<&ArmSummary> {
        self.arms.iter().find(|a| a.arm == arm)
    }
}

/// Drops one minimum and one maximum (first occurrences).
pub fn discard_extremes(values: &[f64]) -> Vec<f64> {
    if values.len() < 2 {
        return Vec::new();
    }
    let argmin = (0..values.len()).min_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j))).expect("non-empty");
    let argmax = (0..values.len())
        .filter(|&i| i != argmin)
        .max_by(|&i, &j| values[i].total_cmp(&values[j]).then(j.cmp(&i)))
        .expect("two or more values");
    values.iter().enumerate().filter(|&(i, _)| i != argmin && i != argmax).map(|(_, &v)| v).collect()
}

/// Summary of one arm after discarding its extreme accuracies.
pub fn summarize_arm(arm: Arm, accuracies: &[f64]) -> Result<ArmSummary> {
    let retained = discard_extremes(accuracies);
    if retained.len() < 3 {
        return Err(Error::Config(format!(
            "arm {} keeps {} runs after discarding extremes; at least 3 are required",
            arm.name(),
            retained.len()
        )));
    }
    let s = stats::describe(&retained)?;
    Ok(ArmSummary {
        arm,
        mean_accuracy: s.mean,
        ci95: s.ci95.expect("n >= 3"),
        min_accuracy: s.min,
        max_accuracy: s.max,
        retained_run_count: retained.len(),
        total_run_count: accuracies.len(),
        retained,
    })
}

fn train_and_score(
    cfg: &ExperimentConfig,
    arm: Arm,
    resample: usize,
    index: Option<usize>,
    train: &Dataset<f64>,
    validate: &Dataset<f64>,
) -> Result<Vec<RunRecord>> {
    (0..cfg.n_model_runs)
        .map(|run| {
            let model_seed = cfg.model_seed(arm, resample, index.unwrap_or(0), run);
            let model = MlpModel::<f64>::init(cfg.eval_mlp.clone().with_seed(model_seed))?;
            let (trained, _) = model.train(train)?;
            Ok(RunRecord {
                arm,
                resample,
                dataset_index: index,
                model_run: run,
                model_seed,
                accuracy: trained.accuracy(validate)?,
            })
        })
        .collect()
}

fn random_genome(cfg: &ExperimentConfig, resample: usize, index: usize, data: &Dataset<f64>) -> Result<Genome<f64>> {
    let mut rng = seed::rng(cfg.baseline_seed(resample, index));
    Genome::random(cfg.ga.n_generated, data.n_attributes(), data.n_classes(), &mut rng)
}

fn check_dataset(cfg: &ExperimentConfig, raw: &Dataset<f64>) -> Result<()> {
    if raw.n_attributes() != cfg.dataset.n_attributes() || raw.n_classes() != cfg.dataset.n_classes() {
        return Err(Error::Dimension(format!(
            "data has {} attributes / {} classes, {} expects {} / {}",
            raw.n_attributes(),
            raw.n_classes(),
            cfg.dataset,
            cfg.dataset.n_attributes(),
            cfg.dataset.n_classes()
        )));
    }
    Ok(())
}

/// Runs the full comparison on raw (un-normalized) real data.
///
/// Normalization uses the whole dataset. For every real resample the
/// algorithm runs `n_generated_datasets` times; each fittest genome and the
/// real training batch each train `n_model_runs` classifiers, scored on the
/// validating batch.
pub fn run_experiment(cfg: &ExperimentConfig, raw: &Dataset<f64>) -> Result<ExperimentReport> {
    cfg.validate()?;
    check_dataset(cfg, raw)?;
    let data = raw.min_max_normalize()?;
    let mut runs = Vec::new();
    let mut traces = Vec::new();
    let mut split_seeds = Vec::new();
    let mut train_test_sizes = Vec::new();
    let mut validate_sizes = Vec::new();

    for r in 0..cfg.n_real_resamples {
        let split_seed = cfg.split_seed(r);
        let split = cfg.regime.split(&data, split_seed)?;
        split_seeds.push(split_seed);
        train_test_sizes.push(split.train_test.n_instances());
        validate_sizes.push(split.validate.n_instances());
        log::info!(
            "resample {r}: {} training/testing, {} validating",
            split.train_test.n_instances(),
            split.validate.n_instances()
        );

        runs.extend(train_and_score(cfg, Arm::Real, r, None, &split.train_test, &split.validate)?);

        for g in 0..cfg.n_generated_datasets {
            let ga = cfg.ga.clone().with_seed(cfg.evolve_seed(r, g));
            let evolution = evolve::evolve(&ga, &split.train_test)?;
            let best = evolution.best.cached_fitness().expect("best genome is evaluated");
            log::info!("resample {r} dataset {g}: best fitness {:.4}", best.fitness);
            runs.extend(train_and_score(cfg, Arm::Generated, r, Some(g), evolution.best.as_dataset(), &split.validate)?);
            traces.push(CellTrace { resample: r, index: g, evolve_seed: ga.seed, best, trace: evolution.trace });

            if cfg.include_baseline {
                let genome = random_genome(cfg, r, g, &data)?;
                runs.extend(train_and_score(
                    cfg,
                    Arm::RandomBaseline,
                    r,
                    Some(g),
                    genome.as_dataset(),
                    &split.validate,
                )?);
            }
        }
    }

    let accuracies = |arm: Arm| runs.iter().filter(|r| r.arm == arm).map(|r| r.accuracy).collect::<Vec<_>>();
    let generated = summarize_arm(Arm::Generated, &accuracies(Arm::Generated))?;
    let real = summarize_arm(Arm::Real, &accuracies(Arm::Real))?;
    let comparison = stats::welch_t_test(&generated.retained, &real.retained)?;
    let mut arms = vec![generated, real];
    let mut baseline_comparison = None;
    if cfg.include_baseline {
        let baseline = summarize_arm(Arm::RandomBaseline, &accuracies(Arm::RandomBaseline))?;
        baseline_comparison = Some(stats::welch_t_test(&arms[0].retained, &baseline.retained)?);
        arms.push(baseline);
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        arms,
        comparison,
        baseline_comparison,
        traces,
        runs,
        split_seeds,
        train_test_sizes,
        validate_sizes,
    })
}

/// The random-data arm alone: genomes drawn uniformly and never evolved.
pub fn run_random_baseline(cfg: &ExperimentConfig, raw: &Dataset<f64>) -> Result<ArmSummary> {
    cfg.validate()?;
    check_dataset(cfg, raw)?;
    let data = raw.min_max_normalize()?;
    let mut accuracies = Vec::new();
    for r in 0..cfg.n_real_resamples {
        let split = cfg.regime.split(&data, cfg.split_seed(r))?;
        for g in 0..cfg.n_generated_datasets {
            let genome = random_genome(cfg, r, g, &data)?;
            let runs = train_and_score(cfg, Arm::RandomBaseline, r, Some(g), genome.as_dataset(), &split.validate)?;
            accuracies.extend(runs.iter().map(|run| run.accuracy));
        }
    }
    summarize_arm(Arm::RandomBaseline, &accuracies)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeComparison {
    pub attribute: String,
    pub generated: SummaryStats,
    pub real: SummaryStats,
    /// Welch t-test, generated vs real.
    pub test: TestResult,
}

/// Per-attribute summaries of two datasets (original units) and a Welch test.
pub fn distribution_report(generated: &Dataset<f64>, real: &Dataset<f64>) -> Result<Vec<AttributeComparison>> {
    if generated.n_attributes() != real.n_attributes() {
        return Err(Error::Dimension(format!(
            "generated data has {} attributes, real data {}",
            generated.n_attributes(),
            real.n_attributes()
        )));
    }
    (0..real.n_attributes())
        .map(|j| {
            let g = generated.features().column(j);
            let r = real.features().column(j);
            Ok(AttributeComparison {
                attribute: real.attribute_names()[j].clone(),
                generated: stats::describe(&g)?,
                real: stats::describe(&r)?,
                test: stats::welch_t_test(&g, &r)?,
            })
        })
        .collect()
}

/// Exponential fit of the best combined MSE against generation index.
pub fn learning_curve_report(trace: &FitnessTrace) -> Result<RegressionFit> {
    if trace.len() < 10 {
        return Err(Error::Empty(format!("learning curve needs at least 10 generations, got {}", trace.len())));
    }
    let xs: Vec<f64> = trace.records.iter().map(|r| r.generation as f64).collect();
    stats::fit_exponential(&xs, &trace.best_mse_series())
}

/// `generation,best_mse,fitted` rows for plotting the learning curve.
pub fn learning_curve_csv(trace: &FitnessTrace, fit: &RegressionFit) -> String {
    let mut out = String::from("generation,best_mse,fitted\n");
    for r in &trace.records {
        let _ = writeln!(out, "{},{},{}", r.generation, r.best_mse(), fit.predict(r.generation as f64));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchTimeReport {
    /// `(n_generated, median seconds)`.
    pub rows: Vec<(usize, f64)>,
    pub linear: Option<RegressionFit>,
    pub quadratic: Option<RegressionFit>,
}

/// Wall-clock time of [`evolve::evolve`] per `n_generated` (median of `repeats`),
/// with linear and quadratic fits in `n`.
pub fn bench_time(sizes: &[usize], cfg: &GaConfig, real_batch: &Dataset<f64>, repeats: usize) -> Result<BenchTimeReport> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut ga = cfg.clone();
        ga.n_generated = n;
        ga.target_fitness = None;
        let mut times = Vec::with_capacity(repeats.max(1));
        for _ in 0..repeats.max(1) {
            let start = Instant::now();
            evolve::evolve(&ga, real_batch)?;
            times.push(start.elapsed().as_secs_f64());
        }
        times.sort_by(f64::total_cmp);
        rows.push((n, times[times.len() / 2]));
        log::info!("n_generated {n}: {:.4} s", times[times.len() / 2]);
    }
    let xs: Vec<f64> = rows.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|&(_, t)| t).collect();
    Ok(BenchTimeReport { rows, linear: stats::fit_linear(&xs, &ys).ok(), quadratic: stats::fit_quadratic(&xs, &ys).ok() })
}

/// Bytes held by one run of the algorithm: population genes, labels and
/// fitness caches, one inner network's parameters, and the trace.
pub fn accounted_bytes<T: Scalar>(cfg: &GaConfig, n_generated: usize, n_attributes: usize) -> usize {
    let genome = n_generated * n_attributes * std::mem::size_of::<T>()
        + n_generated * std::mem::size_of::<usize>()
        + std::mem::size_of::<Option<FitnessScore>>();
    cfg.population_size * genome
        + cfg.inner_mlp.parameter_count() * std::mem::size_of::<T>()
        + cfg.generations * std::mem::size_of::<GenerationRecord>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchMemoryReport {
    /// `(n_generated, bytes)`.
    pub rows: Vec<(usize, usize)>,
    pub linear: Option<RegressionFit>,
}

impl BenchMemoryReport {
    /// `bytes(n_i) / bytes(n_0)` for every row.
    pub fn growth_ratios(&self) -> Vec<f64> {
        match self.rows.first() {
            Some(&(_, base)) => self.rows.iter().map(|&(_, b)| b as f64 / base as f64).collect(),
            None => Vec::new(),
        }
    }
}

pub fn bench_memory(sizes: &[usize], cfg: &GaConfig, n_attributes: usize) -> BenchMemoryReport {
    let rows: Vec<(usize, usize)> = sizes.iter().map(|&n| (n, accounted_bytes::<f64>(cfg, n, n_attributes))).collect();
    let xs: Vec<f64> = rows.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|&(_, b)| b as f64).collect();
    BenchMemoryReport { rows, linear: stats::fit_linear(&xs, &ys).ok() }
}

// ---------------------------------------------------------------- rendering

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn fmt_p(p: f64) -> String {
    if p < 1e-4 {
        "<0.0001".to_string()
    } else {
        fmt4(p)
    }
}

fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        " ***"
    } else if p < 0.01 {
        " **"
    } else if p < 0.05 {
        " *"
    } else {
        ""
    }
}

impl ExperimentReport {
    /// Arm table: one row per arm, full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "arm,mean_accuracy,ci95_low,ci95_high,min_accuracy,max_accuracy,retained_runs,total_runs\n",
        );
        for a in &self.arms {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                a.arm.name(),
                a.mean_accuracy,
                a.ci95.0,
                a.ci95.1,
                a.min_accuracy,
                a.max_accuracy,
                a.retained_run_count,
                a.total_run_count
            );
        }
        out
    }

    pub fn tests_csv(&self) -> String {
        let mut out = String::from("comparison,test,statistic,df,p_value,degenerate\n");
        let mut row = |name: &str, t: &TestResult| {
            let df = t.df.map_or(String::new(), |d| d.to_string());
            let _ = writeln!(out, "{name},{},{},{df},{},{}", t.test_name, t.statistic, t.p_value, t.degenerate);
        };
        row("generated_vs_real", &self.comparison);
        if let Some(t) = &self.baseline_comparison {
            row("generated_vs_random_baseline", t);
        }
        out
    }

    pub fn runs_csv(&self) -> String {
        let mut out = String::from("arm,resample,dataset_index,model_run,model_seed,accuracy\n");
        for r in &self.runs {
            let idx = r.dataset_index.map_or(String::new(), |i| i.to_string());
            let _ = writeln!(out, "{},{},{idx},{},{},{}", r.arm.name(), r.resample, r.model_run, r.model_seed, r.accuracy);
        }
        out
    }

    /// Aligned text table with 4-decimal values.
    pub fn to_text(&self) -> String {
        let cfg = &self.config;
        let mut out = String::new();
        let regime = match cfg.regime {
            Regime::Abundance { train_fraction } => {
                format!("abundance of real world data ({:.0}% training/testing)", train_fraction * 100.0)
            }
            Regime::Scarcity { per_class } => {
                format!("scarcity of real world data ({per_class} instance(s) per class)")
            }
        };
        let _ = writeln!(out, "{} dataset - {}", cfg.dataset.title(), regime);
        let _ = writeln!(
            out,
            "master seed {}; {} resamples x {} generated datasets x {} model runs; {} generated instances",
            cfg.master_seed, cfg.n_real_resamples, cfg.n_generated_datasets, cfg.n_model_runs, cfg.ga.n_generated
        );
        let _ = writeln!(out);
        let label_w = 40;
        let col_w = 26;
        let _ = write!(out, "{:<label_w$}", "");
        for a in &self.arms {
            let _ = write!(out, "{:<col_w$}", a.arm.heading());
        }
        let _ = writeln!(out, "p value");
        let _ = write!(out, "{:<label_w$}", "Neural network mean accuracy [95% CI]");
        for a in &self.arms {
            let cell = format!("{}; [{}-{}]", fmt4(a.mean_accuracy), fmt4(a.ci95.0), fmt4(a.ci95.1));
            let _ = write!(out, "{cell:<col_w$}");
        }
        let p = self.comparison.p_value;
        let _ = writeln!(out, "{}{}", fmt_p(p), stars(p));
        let _ = write!(out, "{:<label_w$}", "Minimum accuracy");
        for a in &self.arms {
            let _ = write!(out, "{:<col_w$}", fmt4(a.min_accuracy));
        }
        let _ = writeln!(out);
        let _ = write!(out, "{:<label_w$}", "Maximum accuracy");
        for a in &self.arms {
            let _ = write!(out, "{:<col_w$}", fmt4(a.max_accuracy));
        }
        let _ = writeln!(out);
        let _ = write!(out, "{:<label_w$}", "Retained runs");
        for a in &self.arms {
            let _ = write!(out, "{:<col_w$}", format!("{} of {}", a.retained_run_count, a.total_run_count));
        }
        let _ = writeln!(out);
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "p value: generated vs real, {} (t = {}, df = {})",
            self.comparison.test_name,
            fmt4(self.comparison.statistic),
            self.comparison.df.map_or("-".into(), fmt4)
        );
        if let Some(t) = &self.baseline_comparison {
            let _ = writeln!(out, "generated vs random baseline: {} p = {}{}", t.test_name, fmt_p(t.p_value), stars(t.p_value));
        }
        out
    }
}

/// Distribution table, long format: two rows (generated, real) per attribute.
pub fn distribution_csv(rows: &[AttributeComparison]) -> String {
    let mut out = String::from("attribute,source,n,min,q25,median,q75,max,mean,ci95_low,ci95_high,p_value\n");
    for row in rows {
        for (source, s) in [("generated", &row.generated), ("real", &row.real)] {
            let (lo, hi) = s.ci95.map_or((String::new(), String::new()), |(l, h)| (l.to_string(), h.to_string()));
            let _ = writeln!(
                out,
                "{},{source},{},{},{},{},{},{},{},{lo},{hi},{}",
                row.attribute, s.n, s.min, s.q25, s.median, s.q75, s.max, s.mean, row.test.p_value
            );
        }
    }
    out
}

/// Distribution table with statistics as rows and attribute/source pairs as columns.
pub fn distribution_text(rows: &[AttributeComparison]) -> String {
    let mut out = String::new();
    let label_w = 16;
    let col_w = 20;
    let _ = write!(out, "{:<label_w$}", "");
    for (j, _) in rows.iter().enumerate() {
        let _ = write!(out, "{:<col_w$}{:<col_w$}", format!("Generated Data {}", j + 1), format!("Real world Data {}", j + 1));
    }
    let _ = writeln!(out);
    let stat_rows: [(&str, fn(&SummaryStats) -> String); 7] = [
        ("Minimum", |s| fmt4(s.min)),
        ("25% percentile", |s| fmt4(s.q25)),
        ("Median", |s| fmt4(s.median)),
        ("75% percentile", |s| fmt4(s.q75)),
        ("Maximum", |s| fmt4(s.max)),
        ("Mean", |s| fmt4(s.mean)),
        ("95% CI", |s| s.ci95.map_or("-".into(), |(l, h)| format!("{}-{}", fmt4(l), fmt4(h)))),
    ];
    for (name, f) in stat_rows {
        let _ = write!(out, "{name:<label_w$}");
        for row in rows {
            let _ = write!(out, "{:<col_w$}{:<col_w$}", f(&row.generated), f(&row.real));
        }
        let _ = writeln!(out);
    }
    let _ = write!(out, "{:<label_w$}", "p value");
    for row in rows {
        let _ = write!(out, "{:<col_w$}{:<col_w$}", fmt_p(row.test.p_value), "");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "(p values: Welch unpaired t-test)");
    out
}

/// Long-format points for external scatter plots: `attribute,value,source,class`.
pub fn scatter_csv(generated: &Dataset<f64>, real: &Dataset<f64>) -> String {
    let mut out = String::from("attribute,value,source,class\n");
    for (source, d) in [("generated", generated), ("real", real)] {
        for (row, label) in d.features().iter_rows().zip(d.labels()) {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{},{v},{source},{label}", real.attribute_names()[j]);
            }
        }
    }
    out
}

impl BenchTimeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_generated,seconds\n");
        for &(n, t) in &self.rows {
            let _ = writeln!(out, "{n},{t}");
        }
        out
    }

    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].1 > w[0].1)
    }
}

impl BenchMemoryReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_generated,bytes,ratio_to_first\n");
        for (&(n, b), ratio) in self.rows.iter().zip(self.growth_ratios()) {
            let _ = writeln!(out, "{n},{b},{ratio}");
        }
        out
    }
}

/// `series,model,params,r_square` rows for the scaling fits.
pub fn bench_fits_csv(time: Option<&BenchTimeReport>, memory: &BenchMemoryReport) -> String {
    let mut out = String::from("series,model,params,r_square\n");
    let mut row = |series: &str, fit: &RegressionFit| {
        let params: Vec<String> = fit.params.iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{series},{},{},{}", fit.model_name, params.join(" "), fit.r_square);
    };
    if let Some(t) = time {
        for fit in t.linear.iter().chain(&t.quadratic) {
            row("time", fit);
        }
    }
    if let Some(fit) = &memory.linear {
        row("memory", fit);
    }
    out
}
