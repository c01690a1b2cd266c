//! The data-generation genetic algorithm.
//!
//! Each individual ([`Genome`]) is a whole candidate dataset in normalized
//! feature space with a fixed, balanced label vector. Fitness trains a fresh
//! network on the candidate and scores it on both the candidate and the real
//! batch:
//!
//! ```text
//! fitness = 1 / (mse_gen + mse_real + 1e-9)
//! ```
//!
//! Selection is elitist truncation: the top `elite_count` genomes survive
//! unchanged together with their cached fitness, and the remaining slots are
//! filled with point-mutated copies of parents drawn from the top
//! `parent_fraction` of the ranked population. There is no crossover.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{denormalize_matrix, Dataset, NormParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mlp::{MlpConfig, MlpModel};
use crate::scalar::Scalar;
use crate::seed::{self, tag};

/// Regularizer in the fitness denominator.
pub const FITNESS_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessScore {
    pub fitness: f64,
    pub mse_gen: f64,
    pub mse_real: f64,
    /// Inner training produced a non-finite loss; fitness is then 0.
    pub diverged: bool,
}

impl FitnessScore {
    pub fn from_mse(mse_gen: f64, mse_real: f64) -> Self {
        Self { fitness: 1.0 / (mse_gen + mse_real + FITNESS_EPSILON), mse_gen, mse_real, diverged: false }
    }

    fn divergent() -> Self {
        Self { fitness: 0.0, mse_gen: f64::INFINITY, mse_real: f64::INFINITY, diverged: true }
    }
}

/// One candidate generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome<T> {
    data: Dataset<T>,
    cached: Option<FitnessScore>,
}

impl<T: Scalar> Genome<T> {
    /// Genes drawn i.i.d. uniform on `[0, 1]`; instance `i` gets class `i mod n_classes`.
    pub fn random(n_generated: usize, n_attributes: usize, n_classes: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let genes = (0..n_generated * n_attributes).map(|_| T::of(rng.gen::<f64>())).collect();
        let features = Matrix::from_vec(n_generated, n_attributes, genes)?;
        let labels = (0..n_generated).map(|i| i % n_classes).collect();
        Ok(Self { data: Dataset::unnamed(features, labels, n_classes)?, cached: None })
    }

    /// Builds a genome from explicit genes; every gene must lie in `[0, 1]`.
    pub fn from_parts(genes: Matrix<T>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if genes.as_slice().iter().any(|&g| !(g >= T::zero() && g <= T::one())) {
            return Err(Error::Config("genes must lie in [0, 1]".into()));
        }
        Ok(Self { data: Dataset::unnamed(genes, labels, n_classes)?, cached: None })
    }

    pub fn genes(&self) -> &Matrix<T> {
        self.data.features()
    }

    pub fn labels(&self) -> &[usize] {
        self.data.labels()
    }

    pub fn n_classes(&self) -> usize {
        self.data.n_classes()
    }

    /// The genome as a training set in normalized space.
    pub fn as_dataset(&self) -> &Dataset<T> {
        &self.data
    }

    pub fn cached_fitness(&self) -> Option<FitnessScore> {
        self.cached
    }

    /// Copy in which each gene is independently replaced by a fresh uniform
    /// draw with probability `p`. The copy carries no cached fitness.
    pub fn mutate(&self, p: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut data = self.data.clone();
        for g in data.features_mut().as_mut_slice() {
            if rng.gen::<f64>() < p {
                *g = T::of(rng.gen::<f64>());
            }
        }
        Self { data, cached: None }
    }

    fn check_against(&self, real_batch: &Dataset<T>) -> Result<()> {
        if self.data.n_attributes() != real_batch.n_attributes() || self.n_classes() != real_batch.n_classes() {
            return Err(Error::Dimension(format!(
                "genome is {} attributes / {} classes, real batch {} / {}",
                self.data.n_attributes(),
                self.n_classes(),
                real_batch.n_attributes(),
                real_batch.n_classes()
            )));
        }
        Ok(())
    }
}

/// Trains a fresh network (seeded with `eval_seed`) on the genome and scores it.
pub fn fitness<T: Scalar>(
    genome: &Genome<T>,
    real_batch: &Dataset<T>,
    inner_mlp: &MlpConfig,
    eval_seed: u64,
) -> Result<FitnessScore> {
    if real_batch.is_empty() {
        return Err(Error::Empty("real batch has no instances".into()));
    }
    genome.check_against(real_batch)?;
    let model = MlpModel::<T>::init(inner_mlp.clone().with_seed(eval_seed))?;
    match model.train(genome.as_dataset()) {
        Ok((trained, _)) => {
            let mse_gen = trained.mse(genome.as_dataset())?;
            let mse_real = trained.mse(real_batch)?;
            if mse_gen.is_finite() && mse_real.is_finite() {
                Ok(FitnessScore::from_mse(mse_gen, mse_real))
            } else {
                Ok(FitnessScore::divergent())
            }
        }
        Err(Error::Diverged { epoch }) => {
            log::debug!("inner network diverged at epoch {epoch}; candidate scored 0");
            Ok(FitnessScore::divergent())
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub mutation_prob: f64,
    pub elite_count: usize,
    pub parent_fraction: f64,
    pub n_generated: usize,
    pub target_fitness: Option<f64>,
    pub inner_mlp: MlpConfig,
    pub seed: u64,
}

impl GaConfig {
    pub fn new(n_generated: usize, generations: usize, inner_mlp: MlpConfig) -> Self {
        Self {
            population_size: 32,
            generations,
            mutation_prob: 0.01,
            elite_count: 2,
            parent_fraction: 0.25,
            n_generated,
            target_fitness: None,
            inner_mlp,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn parent_pool(&self) -> usize {
        (self.parent_fraction * self.population_size as f64).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.population_size == 0 || self.generations == 0 || self.n_generated == 0 {
            return bad("population_size, generations and n_generated must be positive".into());
        }
        if !(self.mutation_prob > 0.0 && self.mutation_prob < 1.0) {
            return bad(format!("mutation probability {} outside (0, 1)", self.mutation_prob));
        }
        if self.elite_count == 0 || self.elite_count >= self.population_size {
            return bad(format!(
                "elite_count {} must be in 1..population_size ({})",
                self.elite_count, self.population_size
            ));
        }
        if !(self.parent_fraction > 0.0 && self.parent_fraction <= 1.0) || self.parent_pool() == 0 {
            return bad(format!("parent fraction {} outside (0, 1]", self.parent_fraction));
        }
        if let Some(t) = self.target_fitness {
            if !(t > 0.0) {
                return bad(format!("target fitness {t} must be positive"));
            }
        }
        self.inner_mlp.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub best_mse_gen: f64,
    pub best_mse_real: f64,
    pub mean_fitness: f64,
}

impl GenerationRecord {
    pub fn best_mse(&self) -> f64 {
        self.best_mse_gen + self.best_mse_real
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitnessTrace {
    pub records: Vec<GenerationRecord>,
}

impl FitnessTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `best_mse_gen + best_mse_real` per generation.
    pub fn best_mse_series(&self) -> Vec<f64> {
        self.records.iter().map(GenerationRecord::best_mse).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,best_fitness,best_mse_gen,best_mse_real,mean_fitness\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.generation, r.best_fitness, r.best_mse_gen, r.best_mse_real, r.mean_fitness
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// `population_size` random genomes with balanced round-robin labels.
pub fn init_population<T: Scalar>(cfg: &GaConfig, n_attributes: usize, n_classes: usize) -> Result<Vec<Genome<T>>> {
    cfg.validate()?;
    let mut rng = seed::rng(seed::derive(cfg.seed, &[tag::INIT_POPULATION]));
    (0..cfg.population_size)
        .map(|_| Genome::random(cfg.n_generated, n_attributes, n_classes, &mut rng))
        .collect()
}

/// Seed of the inner network that scores individual `index` of `generation`.
pub fn eval_seed(run_seed: u64, generation: usize, index: usize) -> u64 {
    seed::derive(run_seed, &[tag::FITNESS, generation as u64, index as u64])
}

/// One generation: evaluate, rank, keep elites, refill with mutated parents.
///
/// The returned population is ordered with the elites first, best at index 0.
pub fn step<T: Scalar>(
    population: Vec<Genome<T>>,
    cfg: &GaConfig,
    real_batch: &Dataset<T>,
    generation: usize,
) -> Result<(Vec<Genome<T>>, GenerationRecord)> {
    cfg.validate()?;
    if population.len() != cfg.population_size {
        return Err(Error::Config(format!(
            "population has {} genomes, config expects {}",
            population.len(),
            cfg.population_size
        )));
    }
    if real_batch.is_empty() {
        return Err(Error::Empty("real batch has no instances".into()));
    }
    for g in &population {
        g.check_against(real_batch)?;
    }

    let mut population = population;
    population
        .par_iter_mut()
        .enumerate()
        .filter(|(_, g)| g.cached.is_none())
        .try_for_each(|(i, g)| -> Result<()> {
            g.cached = Some(fitness(g, real_batch, &cfg.inner_mlp, eval_seed(cfg.seed, generation, i))?);
            Ok(())
        })?;

    let score = |g: &Genome<T>| g.cached.expect("evaluated above");
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| score(&population[b]).fitness.total_cmp(&score(&population[a]).fitness).then(a.cmp(&b)));

    let best = score(&population[order[0]]);
    let mean_fitness = population.iter().map(|g| score(g).fitness).sum::<f64>() / population.len() as f64;
    let record = GenerationRecord {
        generation,
        best_fitness: best.fitness,
        best_mse_gen: best.mse_gen,
        best_mse_real: best.mse_real,
        mean_fitness,
    };

    let n_parents = cfg.parent_pool().min(population.len());
    let mut selection = seed::rng(seed::derive(cfg.seed, &[tag::SELECTION, generation as u64]));
    let parents: Vec<usize> = (cfg.elite_count..cfg.population_size)
        .map(|_| order[selection.gen_range(0..n_parents)])
        .collect();

    let mut next: Vec<Genome<T>> = order[..cfg.elite_count].iter().map(|&i| population[i].clone()).collect();
    let offspring: Vec<Genome<T>> = parents
        .par_iter()
        .enumerate()
        .map(|(k, &parent)| {
            let slot = cfg.elite_count + k;
            let mut rng = seed::rng(seed::derive(cfg.seed, &[tag::MUTATION, generation as u64, slot as u64]));
            population[parent].mutate(cfg.mutation_prob, &mut rng)
        })
        .collect();
    next.extend(offspring);
    Ok((next, record))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution<T> {
    /// Fittest genome observed, with its cached fitness.
    pub best: Genome<T>,
    pub trace: FitnessTrace,
}

/// Runs [`step`] for `cfg.generations` generations, or until the best
/// fitness reaches `cfg.target_fitness`.
pub fn evolve<T: Scalar>(cfg: &GaConfig, real_batch: &Dataset<T>) -> Result<Evolution<T>> {
    let population = init_population(cfg, real_batch.n_attributes(), real_batch.n_classes())?;
    evolve_from(population, cfg, real_batch)
}

/// [`evolve`] starting from a given population.
pub fn evolve_from<T: Scalar>(
    mut population: Vec<Genome<T>>,
    cfg: &GaConfig,
    real_batch: &Dataset<T>,
) -> Result<Evolution<T>> {
    cfg.validate()?;
    let mut trace = FitnessTrace::default();
    for generation in 0..cfg.generations {
        let (next, record) = step(population, cfg, real_batch, generation)?;
        population = next;
        trace.records.push(record);
        if cfg.target_fitness.is_some_and(|t| record.best_fitness >= t) {
            break;
        }
    }
    let best = population.swap_remove(0);
    Ok(Evolution { best, trace })
}

/// The genome's data in original units (denormalized with `norm_params`).
pub fn export_generated<T: Scalar>(genome: &Genome<T>, norm_params: &NormParams<T>) -> Result<Dataset<T>> {
    let features = denormalize_matrix(genome.genes(), norm_params)?;
    Dataset::unnamed(features, genome.labels().to_vec(), genome.n_classes())
}
