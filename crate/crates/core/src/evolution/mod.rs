//! Grammar-guided multi-objective genetic programming.
//!
//! Each generation builds `Pop` crossover offspring (first parent from the
//! best `μ`% of the sorted population, second from all of it) and one
//! mutant per individual, estimates every offspring on the estimation data,
//! scores `(E_s, E_p)` on the test data, and keeps the first `Pop` members
//! of the non-dominated sort of parents plus offspring.

mod operators;
mod pareto;

use std::collections::HashSet;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{estimate_sets, EstimatorConfig};
use crate::grammar::{DerivationTree, Grammar, GrammarError, Limits};
use crate::interpreter::{interpret, PolynomialModel};
use crate::rng;
use crate::simulation::{evaluate, DataSet};

pub use operators::{crossover, mutate, CROSSOVER_RETRIES};
pub use pareto::{crowding_distance, dominates, nondominated_sort, ObjectivePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("objective vectors of length {0} and {1}")]
    Dimension(usize, usize),
    #[error("invalid GP configuration: {0}")]
    Config(String),
    #[error("data set `{name}` has {inputs} inputs and {outputs} outputs; the grammar expects {want_inputs} and {want_outputs}")]
    Channels {
        name: String,
        inputs: usize,
        outputs: usize,
        want_inputs: usize,
        want_outputs: usize,
    },
    #[error("no {0} data")]
    NoData(&'static str),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Estimator(#[from] crate::estimation::EstimationError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub pop_size: usize,
    pub generations: usize,
    /// Largest number of auxiliary trees per derivation.
    pub complexity: usize,
    /// Share of the sorted population, in percent, that first parents of
    /// crossover are drawn from.
    pub mu: f64,
    pub seed: u64,
    /// Drop offspring whose model structure already occurs in the pool.
    pub dedup: bool,
    #[serde(skip)]
    pub estimator: EstimatorConfig,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            pop_size: 30,
            generations: 60,
            complexity: 20,
            mu: 50.0,
            seed: 0,
            dedup: false,
            estimator: EstimatorConfig::default(),
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        if self.pop_size < 2 {
            return Err(EvolutionError::Config("pop_size must be at least 2".into()));
        }
        if self.generations < 1 {
            return Err(EvolutionError::Config("generations must be at least 1".into()));
        }
        if self.complexity < 1 {
            return Err(EvolutionError::Config("complexity must be at least 1".into()));
        }
        if !(self.mu > 0.0 && self.mu <= 100.0) {
            return Err(EvolutionError::Config(format!("mu must be in (0, 100], got {}", self.mu)));
        }
        self.estimator.validate()?;
        Ok(())
    }

    fn parent_pool(&self) -> usize {
        ((self.mu / 100.0 * self.pop_size as f64).ceil() as usize).clamp(1, self.pop_size)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    /// Creation order within the run.
    pub id: u64,
    pub genotype: DerivationTree,
    /// Estimated model; `None` when interpretation failed.
    pub phenotype: Option<PolynomialModel>,
    pub fitness: ObjectivePoint,
}

/// One line of the progress stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressRecord {
    pub gen: usize,
    #[serde(rename = "best_Es")]
    pub best_es: f64,
    #[serde(rename = "best_Ep")]
    pub best_ep: f64,
    pub front1_size: usize,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug)]
pub struct Evolution {
    /// Non-dominated individuals of the final population, in sort order.
    pub front: Vec<Individual>,
    /// Final population, in sort order.
    pub population: Vec<Individual>,
}

/// Mean `(E_s, E_p)` over data sets; the sentinel if any set fails or
/// diverges.
pub fn score_sets(m: &PolynomialModel, sets: &[DataSet]) -> ObjectivePoint {
    let mut es = 0.0;
    let mut ep = 0.0;
    for d in sets {
        match evaluate(m, d) {
            Ok(r) if !r.diverged && r.e_s.is_finite() && r.e_p.is_finite() => {
                es += r.e_s;
                ep += r.e_p;
            }
            _ => return ObjectivePoint::sentinel(),
        }
    }
    let n = sets.len() as f64;
    ObjectivePoint::errors(es / n, ep / n)
}

/// Interprets, estimates and scores one genotype. Failures at any stage
/// give the sentinel fitness.
pub fn assess(
    g: &Grammar,
    genotype: &DerivationTree,
    est: &[DataSet],
    test: &[DataSet],
    estimator: &EstimatorConfig,
) -> (Option<PolynomialModel>, ObjectivePoint) {
    let Ok(model) = interpret(&g.derive(genotype)) else {
        return (None, ObjectivePoint::sentinel());
    };
    match estimate_sets(&model, est, estimator) {
        Ok(fitted) => {
            let fit = score_sets(&fitted, test);
            (Some(fitted), fit)
        }
        Err(_) => (Some(model), ObjectivePoint::sentinel()),
    }
}

const INIT: u64 = 0;
const CROSS: u64 = 1;
const MUTATE: u64 = 2;
const ESTIMATE: u64 = 3;

fn check_sets(g: &Grammar, sets: &[DataSet], what: &'static str) -> Result<(), EvolutionError> {
    if sets.is_empty() {
        return Err(EvolutionError::NoData(what));
    }
    let c = g.channels();
    for d in sets {
        if d.inputs() != c.inputs || d.outputs() != c.outputs {
            return Err(EvolutionError::Channels {
                name: d.name().to_string(),
                inputs: d.inputs(),
                outputs: d.outputs(),
                want_inputs: c.inputs,
                want_outputs: c.outputs,
            });
        }
    }
    Ok(())
}

/// Runs the genetic loop and returns the final population's first front.
/// `progress` receives one record per generation, after selection.
pub fn evolve(
    g: &Grammar,
    est: &[DataSet],
    test: &[DataSet],
    cfg: &GpConfig,
    progress: &mut dyn FnMut(&ProgressRecord),
) -> Result<Evolution, EvolutionError> {
    cfg.validate()?;
    check_sets(g, est, "estimation")?;
    check_sets(g, test, "test")?;
    let g = g.clone().with_limits(Limits {
        complexity: cfg.complexity,
        max_delay: g.limits().max_delay,
    })?;
    let started = Instant::now();
    let pop = cfg.pop_size;

    let genotypes: Vec<DerivationTree> = (0..pop)
        .map(|i| g.random_derivation(cfg.complexity, &mut rng::substream(cfg.seed, &[INIT, i as u64])))
        .collect();
    let mut next_id = 0u64;
    let mut population = assess_all(&g, genotypes, est, test, cfg, 0, &mut next_id);
    population = select(population, pop, cfg.dedup).0;

    for gen in 1..=cfg.generations {
        let pool = cfg.parent_pool();
        let mut offspring = Vec::with_capacity(2 * pop);
        for pair in 0..pop.div_ceil(2) {
            let mut r = rng::substream(cfg.seed, &[gen as u64, CROSS, pair as u64]);
            let a = &population[r.random_range(0..pool)].genotype;
            let b = &population[r.random_range(0..pop)].genotype;
            let (x, y) = crossover(&g, a, b, &mut r);
            offspring.push(x);
            if offspring.len() < pop {
                offspring.push(y);
            }
        }
        for (i, ind) in population.iter().enumerate() {
            let mut r = rng::substream(cfg.seed, &[gen as u64, MUTATE, i as u64]);
            offspring.push(mutate(&g, &ind.genotype, &mut r));
        }
        let children = assess_all(&g, offspring, est, test, cfg, gen, &mut next_id);
        let mut merged = population;
        merged.extend(children);
        let (survivors, front1) = select(merged, pop, cfg.dedup);
        population = survivors;

        let best = |k: usize| {
            population
                .iter()
                .map(|ind| ind.fitness.values()[k])
                .fold(f64::INFINITY, f64::min)
        };
        progress(&ProgressRecord {
            gen,
            best_es: best(0),
            best_ep: best(1),
            front1_size: front1,
            elapsed_s: started.elapsed().as_secs_f64(),
        });
    }

    let points: Vec<ObjectivePoint> = population.iter().map(|i| i.fitness.clone()).collect();
    let front = nondominated_sort(&points)
        .first()
        .map(|f| f.iter().map(|&i| population[i].clone()).collect())
        .unwrap_or_default();
    Ok(Evolution { front, population })
}

fn assess_all(
    g: &Grammar,
    genotypes: Vec<DerivationTree>,
    est: &[DataSet],
    test: &[DataSet],
    cfg: &GpConfig,
    gen: usize,
    next_id: &mut u64,
) -> Vec<Individual> {
    let first = *next_id;
    *next_id += genotypes.len() as u64;
    genotypes
        .into_par_iter()
        .enumerate()
        .map(|(i, genotype)| {
            let estimator = EstimatorConfig {
                seed: rng::mix(cfg.seed, &[gen as u64, ESTIMATE, i as u64]),
                ..cfg.estimator.clone()
            };
            let (phenotype, fitness) = assess(g, &genotype, est, test, &estimator);
            Individual {
                id: first + i as u64,
                genotype,
                phenotype,
                fitness,
            }
        })
        .collect()
}

/// First `keep` members of the non-dominated sort of `pool`, and how many
/// of them come from its first front. With `dedup`, repeated model
/// structures only compete when the unique ones cannot fill the population.
fn select(pool: Vec<Individual>, keep: usize, dedup: bool) -> (Vec<Individual>, usize) {
    let (primary, spare): (Vec<Individual>, Vec<Individual>) = if dedup {
        let mut seen = HashSet::new();
        pool.into_iter().partition(|ind| match &ind.phenotype {
            Some(m) => seen.insert(m.signature()),
            None => true,
        })
    } else {
        (pool, Vec::new())
    };
    let mut out = Vec::with_capacity(keep);
    let mut front1 = 0;
    for (tier, group) in [primary, spare].into_iter().enumerate() {
        let points: Vec<ObjectivePoint> = group.iter().map(|i| i.fitness.clone()).collect();
        let mut slots: Vec<Option<Individual>> = group.into_iter().map(Some).collect();
        for (rank, front) in nondominated_sort(&points).into_iter().enumerate() {
            for i in front {
                if out.len() == keep {
                    return (out, front1);
                }
                if tier == 0 && rank == 0 {
                    front1 += 1;
                }
                out.push(slots[i].take().expect("each index once"));
            }
        }
    }
    (out, front1)
}
