use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use evogen::dataset::load_csv;
use evogen::evolve::{self, export_generated};
use evogen::harness::{self, BenchMemoryReport, ExperimentConfig};

use crate::settings::Settings;
use crate::CliError;

pub fn run(command: &str, mut s: Settings) -> Result<(), CliError> {
    match command {
        "generate" => generate(&mut s),
        "experiment" => experiment(&mut s),
        "distribution" => distribution(&mut s),
        "bench" => bench(&mut s),
        other => Err(CliError::Usage(format!("unknown command {other:?}"))),
    }
}

struct Output {
    dir: PathBuf,
}

impl Output {
    /// Creates the directory and writes the manifest before anything else.
    fn start(command: &str, s: &Settings, artifacts: &[String]) -> Result<Self, CliError> {
        let dir = s.out_dir()?.to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        let out = Self { dir };
        out.write("manifest.txt", &s.to_manifest(command, artifacts))?;
        Ok(out)
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Seeds follow the experiment layout, so `generate` with seed `s` produces
/// the same dataset as cell (0, 0) of an experiment with master seed `s`.
fn seed_layout(s: &Settings) -> Result<ExperimentConfig, CliError> {
    Ok(ExperimentConfig {
        dataset: s.dataset,
        regime: s.regime(),
        n_generated_datasets: s.repeats_gen,
        n_real_resamples: s.repeats_real,
        n_model_runs: s.model_runs,
        include_baseline: s.baseline,
        ga: s.ga_config()?,
        eval_mlp: s.ga_config()?.inner_mlp,
        master_seed: s.seed,
    })
}

fn generate(s: &mut Settings) -> Result<(), CliError> {
    let layout = seed_layout(s)?;
    let path = s.resolve_data_file()?;
    let curve = s.generations >= 10 && s.target_fitness.is_none();
    let mut artifacts = names(&["manifest.txt", "generated.csv", "trace.csv", "summary.txt"]);
    if curve {
        artifacts.push("learning_curve.csv".into());
    }
    let out = Output::start("generate", s, &artifacts)?;

    let data = s.dataset.load::<f64>(&path)?.min_max_normalize()?;
    let split = layout.regime.split(&data, layout.split_seed(0))?;
    let ga = layout.ga.clone().with_seed(layout.evolve_seed(0, 0));
    let evolution = evolve::evolve(&ga, &split.train_test)?;
    let exported = export_generated(&evolution.best, data.norm_params().expect("normalized"))?;
    out.write("generated.csv", &exported.to_csv())?;
    out.write("trace.csv", &evolution.trace.to_csv())?;

    let best = evolution.best.cached_fitness().expect("best genome is evaluated");
    let mut summary = String::new();
    let _ = writeln!(summary, "dataset          {}", s.dataset.title());
    let _ = writeln!(summary, "regime           {}", layout.regime.name());
    let _ = writeln!(summary, "real batch       {} instances", split.train_test.n_instances());
    let _ = writeln!(summary, "generated        {} instances", exported.n_instances());
    let _ = writeln!(summary, "generations run  {}", evolution.trace.len());
    let _ = writeln!(summary, "best fitness     {:.4}", best.fitness);
    let _ = writeln!(summary, "mse generated    {:.4}", best.mse_gen);
    let _ = writeln!(summary, "mse real         {:.4}", best.mse_real);
    if curve {
        let fit = harness::learning_curve_report(&evolution.trace)?;
        out.write("learning_curve.csv", &harness::learning_curve_csv(&evolution.trace, &fit))?;
        let p = &fit.params;
        let _ = writeln!(
            summary,
            "learning curve   mse = {:.4} * exp(-{:.4} g) + {:.4}, r2 = {:.4}",
            p[0], p[1], p[2], fit.r_square
        );
    }
    out.write("summary.txt", &summary)
}

fn experiment(s: &mut Settings) -> Result<(), CliError> {
    let cfg = s.experiment_config()?;
    let path = s.resolve_data_file()?;
    let mut artifacts = names(&["manifest.txt", "report.csv", "report.txt", "tests.csv", "runs.csv", "learning_curves.csv"]);
    for r in 0..cfg.n_real_resamples {
        for g in 0..cfg.n_generated_datasets {
            artifacts.push(trace_name(r, g));
        }
    }
    let out = Output::start("experiment", s, &artifacts)?;

    let raw = s.dataset.load::<f64>(&path)?;
    let report = harness::run_experiment(&cfg, &raw)?;
    out.write("report.csv", &report.to_csv())?;
    out.write("report.txt", &report.to_text())?;
    out.write("tests.csv", &report.tests_csv())?;
    out.write("runs.csv", &report.runs_csv())?;
    let mut curves = String::from("resample,index,generations,a,b,c,r_square\n");
    for cell in &report.traces {
        out.write(&trace_name(cell.resample, cell.index), &cell.trace.to_csv())?;
        if let Ok(fit) = harness::learning_curve_report(&cell.trace) {
            let p = &fit.params;
            let _ = writeln!(
                curves,
                "{},{},{},{},{},{},{}",
                cell.resample,
                cell.index,
                cell.trace.len(),
                p[0],
                p[1],
                p[2],
                fit.r_square
            );
        }
    }
    out.write("learning_curves.csv", &curves)?;
    print!("{}", report.to_text());
    Ok(())
}

fn trace_name(resample: usize, index: usize) -> String {
    format!("traces/trace_r{resample}_g{index}.csv")
}

fn distribution(s: &mut Settings) -> Result<(), CliError> {
    let generated = s
        .generated
        .clone()
        .ok_or_else(|| CliError::Usage("--generated is required".into()))?;
    let generated = fs::canonicalize(&generated).unwrap_or(generated);
    s.generated = Some(generated.clone());
    let path = s.resolve_data_file()?;
    let out = Output::start("distribution", s, &names(&["manifest.txt", "distribution.csv", "distribution.txt", "scatter.csv"]))?;

    let real = s.dataset.load::<f64>(&path)?;
    let gen = load_csv::<f64>(&generated, Some(s.dataset.n_classes()))?;
    let rows = harness::distribution_report(&gen, &real)?;
    out.write("distribution.csv", &harness::distribution_csv(&rows))?;
    out.write("distribution.txt", &harness::distribution_text(&rows))?;
    out.write("scatter.csv", &harness::scatter_csv(&gen, &real))?;
    print!("{}", harness::distribution_text(&rows));
    Ok(())
}

/// Wall-clock artifacts (`bench_time*.csv`) vary between runs; the memory
/// ones are exact.
fn bench(s: &mut Settings) -> Result<(), CliError> {
    if s.bench_sizes.is_empty() {
        return Err(CliError::Usage("--sizes needs at least one size".into()));
    }
    if s.bench_sizes.contains(&0) {
        return Err(CliError::Usage("--sizes must be positive".into()));
    }
    let mut layout = seed_layout(s)?;
    layout.ga.generations = s.bench_generations;
    layout.ga.validate()?;
    let path = s.resolve_data_file()?;
    let out = Output::start(
        "bench",
        s,
        &names(&["manifest.txt", "bench_memory.csv", "bench_fits.csv", "bench_time.csv", "bench_time_fits.csv"]),
    )?;

    let memory = harness::bench_memory(&s.bench_sizes, &layout.ga, s.dataset.n_attributes());
    out.write("bench_memory.csv", &memory.to_csv())?;
    out.write("bench_fits.csv", &harness::bench_fits_csv(None, &memory))?;

    let data = s.dataset.load::<f64>(&path)?.min_max_normalize()?;
    let split = layout.regime.split(&data, layout.split_seed(0))?;
    let ga = layout.ga.clone().with_seed(layout.evolve_seed(0, 0));
    let time = harness::bench_time(&s.bench_sizes, &ga, &split.train_test, s.bench_repeats)?;
    out.write("bench_time.csv", &time.to_csv())?;
    let no_memory = BenchMemoryReport { rows: Vec::new(), linear: None };
    out.write("bench_time_fits.csv", &harness::bench_fits_csv(Some(&time), &no_memory))?;
    if !time.is_monotone() {
        log::warn!("runtimes are not monotone in n_generated");
    }
    Ok(())
}
