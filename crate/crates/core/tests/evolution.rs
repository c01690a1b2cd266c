use evogen::dataset::Dataset;
use evogen::evolve::{self, eval_seed, fitness, GaConfig, Genome};
use evogen::matrix::Matrix;
use evogen::mlp::{Activation, MlpConfig, MlpModel};
use evogen::seed;
use evogen::stats;
use rand::Rng;

fn real_batch() -> Dataset<f64> {
    let rows = vec![vec![0.1, 0.2], vec![0.9, 0.8], vec![0.2, 0.1], vec![0.8, 0.9]];
    Dataset::unnamed(Matrix::from_rows(&rows).unwrap(), vec![0, 1, 0, 1], 2).unwrap()
}

fn tiny_ga(population: usize, generations: usize) -> GaConfig {
    let mut inner = MlpConfig::generation(2, &[3], 2);
    inner.max_epochs = 20;
    let mut cfg = GaConfig::new(6, generations, inner);
    cfg.population_size = population;
    cfg.elite_count = 1;
    cfg.seed = 42;
    cfg
}

#[test]
fn mutation_count_is_binomial() {
    let p = 0.05;
    let mut rng = seed::rng(1);
    let genome = Genome::<f64>::random(500, 8, 3, &mut rng).unwrap();
    let n = genome.genes().as_slice().len() as f64;
    let mut total = 0.0;
    let rounds = 10;
    for _ in 0..rounds {
        let child = genome.mutate(p, &mut rng);
        let changed = genome
            .genes()
            .as_slice()
            .iter()
            .zip(child.genes().as_slice())
            .filter(|(a, b)| a != b)
            .count() as f64;
        let sd = (n * p * (1.0 - p)).sqrt();
        assert!((changed - n * p).abs() < 4.5 * sd, "{changed} changed of {n}");
        total += changed;
    }
    let sd = (rounds as f64 * n * p * (1.0 - p)).sqrt();
    assert!((total - rounds as f64 * n * p).abs() < 4.5 * sd);
}

#[test]
fn micro_evolve_picks_brute_force_argmax() {
    let batch = real_batch();
    for run_seed in [1u64, 7, 99] {
        let mut cfg = tiny_ga(4, 1);
        cfg.seed = run_seed;
        let population = evolve::init_population::<f64>(&cfg, 2, 2).unwrap();
        let scores: Vec<f64> = population
            .iter()
            .enumerate()
            .map(|(i, g)| fitness(g, &batch, &cfg.inner_mlp, eval_seed(run_seed, 0, i)).unwrap().fitness)
            .collect();
        let mut best = 0;
        for i in 1..scores.len() {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        let result = evolve::evolve(&cfg, &batch).unwrap();
        assert_eq!(result.best.genes(), population[best].genes());
        assert_eq!(result.best.cached_fitness().unwrap().fitness, scores[best]);
        assert_eq!(result.trace.records[0].best_fitness, scores[best]);
    }
}

#[test]
fn fitness_matches_manual_training() {
    let batch = real_batch();
    let mut rng = seed::rng(3);
    let genome = Genome::<f64>::random(6, 2, 2, &mut rng).unwrap();
    let inner = tiny_ga(4, 1).inner_mlp;
    let score = fitness(&genome, &batch, &inner, 77).unwrap();
    let (model, _) = MlpModel::<f64>::init(inner.with_seed(77)).unwrap().train(genome.as_dataset()).unwrap();
    let mse_gen = model.mse(genome.as_dataset()).unwrap();
    let mse_real = model.mse(&batch).unwrap();
    assert_eq!(score.mse_gen, mse_gen);
    assert_eq!(score.mse_real, mse_real);
    assert_eq!(score.fitness, 1.0 / (mse_gen + mse_real + 1e-9));
}

#[test]
fn evolution_is_deterministic_and_elitist() {
    let batch = real_batch();
    let cfg = tiny_ga(6, 12);
    let a = evolve::evolve::<f64>(&cfg, &batch).unwrap();
    let b = evolve::evolve::<f64>(&cfg, &batch).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.trace.len(), 12);
    for w in a.trace.records.windows(2) {
        assert!(w[1].best_fitness >= w[0].best_fitness);
        assert!(w[1].best_mse() <= w[0].best_mse());
    }
    let mut other = cfg.clone();
    other.seed = 43;
    assert_ne!(evolve::evolve::<f64>(&other, &batch).unwrap().best.genes(), a.best.genes());
}

#[test]
fn target_fitness_stops_early() {
    let batch = real_batch();
    let mut cfg = tiny_ga(6, 50);
    cfg.target_fitness = Some(1e-6);
    let result = evolve::evolve::<f64>(&cfg, &batch).unwrap();
    assert_eq!(result.trace.len(), 1);
}

#[test]
fn divergent_candidates_score_zero() {
    let batch = real_batch();
    let mut rng = seed::rng(5);
    let genome = Genome::<f64>::random(6, 2, 2, &mut rng).unwrap();
    let mut inner = tiny_ga(4, 1).inner_mlp;
    inner.learning_rate = 1e300;
    let score = fitness(&genome, &batch, &inner, 1).unwrap();
    assert!(score.diverged);
    assert_eq!(score.fitness, 0.0);
}

#[test]
fn trace_csv_has_one_row_per_generation() {
    let cfg = tiny_ga(4, 5);
    let result = evolve::evolve::<f64>(&cfg, &real_batch()).unwrap();
    let csv = result.trace.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("generation,best_fitness,best_mse_gen,best_mse_real,mean_fitness"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn separable_toy_set_is_learned() {
    let rows = vec![
        vec![0.0, 0.0],
        vec![0.1, 0.3],
        vec![0.3, 0.1],
        vec![0.2, 0.2],
        vec![1.0, 1.0],
        vec![0.9, 0.7],
        vec![0.7, 0.9],
        vec![0.8, 0.8],
    ];
    let data = Dataset::unnamed(Matrix::from_rows(&rows).unwrap(), vec![0, 0, 0, 0, 1, 1, 1, 1], 2).unwrap();
    let config = MlpConfig {
        layer_sizes: vec![2, 4, 2],
        hidden_activation: Activation::Relu,
        learning_rate: 0.5,
        max_epochs: 500,
        l2_lambda: 0.0,
        dropout_rate: 0.0,
        early_stopping: None,
        seed: 3,
    };
    let (model, report) = MlpModel::<f64>::init(config).unwrap().train(&data).unwrap();
    assert_eq!(model.accuracy(&data).unwrap(), 1.0);
    assert_eq!(report.epochs_run, 500);
    assert_eq!(report.loss_history.len(), 500);
}

#[test]
fn early_stopping_triggers_on_noise() {
    let mut rng = seed::rng(17);
    let n = 120;
    let values: Vec<f64> = (0..n * 3).map(|_| rng.gen::<f64>()).collect();
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    let data = Dataset::unnamed(Matrix::from_vec(n, 3, values).unwrap(), labels, 2).unwrap();
    let config = MlpConfig::evaluation(3, &[8], 2).with_early_stopping(0.2, 5).with_seed(2);
    let (model, report) = MlpModel::<f64>::init(config.clone()).unwrap().train(&data).unwrap();
    assert!(report.stopped_early);
    assert!(report.epochs_run < config.max_epochs);
    assert!(model.parameters_finite());
    assert!(report.best_holdout_mse.is_some());
}

#[test]
fn training_is_bit_reproducible_with_dropout() {
    let mut rng = seed::rng(4);
    let values: Vec<f64> = (0..40 * 2).map(|_| rng.gen::<f64>()).collect();
    let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
    let data = Dataset::unnamed(Matrix::from_vec(40, 2, values).unwrap(), labels, 2).unwrap();
    let config = MlpConfig::evaluation(2, &[6], 2).with_early_stopping(0.2, 10).with_seed(5);
    let a = MlpModel::<f64>::init(config.clone()).unwrap().train(&data).unwrap();
    let b = MlpModel::<f64>::init(config).unwrap().train(&data).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
}

#[test]
fn learning_curve_of_a_real_run_is_monotone() {
    let batch = real_batch();
    let cfg = tiny_ga(8, 30);
    let result = evolve::evolve::<f64>(&cfg, &batch).unwrap();
    let series = result.trace.best_mse_series();
    assert!(series.windows(2).all(|w| w[1] <= w[0]));
    let xs: Vec<f64> = (0..series.len()).map(|i| i as f64).collect();
    let fit = stats::fit_exponential(&xs, &series).unwrap();
    assert!(fit.r_square.is_finite());
}
