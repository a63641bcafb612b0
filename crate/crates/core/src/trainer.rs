//! Clonal selection over rule vectors.
//!
//! Each generation the best `select_top` candidates are cloned in proportion
//! to their rank, the clones are hypermutated with a rate that shrinks as
//! rank improves, and the pooled population is truncated back to size. The
//! worst `editing_fraction` of the survivors is then replaced by fresh random
//! candidates. The best candidate ever evaluated is always retained.
//!
//! All randomness comes from one seeded ChaCha stream consumed sequentially;
//! candidate evaluation is parallel but pure, so results do not depend on
//! the worker count.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ca::{FuzzyLevels, LocalRule, RuleVector, GENE_COUNT};
use crate::error::{Error, Result};
use crate::eval::{correlation, ConfusionCounts};
use crate::model::{vote_with, EncodedDataset, LabeledExample, ModelMetadata, Tally, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitnessMetric {
    #[default]
    Accuracy,
    /// Correlation coefficient; needs at most two labels.
    Cc,
}

impl FromStr for FitnessMetric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "accuracy" => Ok(FitnessMetric::Accuracy),
            "cc" => Ok(FitnessMetric::Cc),
            _ => Err(format!("unknown metric {s:?} (expected accuracy or cc)")),
        }
    }
}

impl fmt::Display for FitnessMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitnessMetric::Accuracy => "accuracy",
            FitnessMetric::Cc => "cc",
        })
    }
}

/// How training examples are scored against the basins they helped label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AffinityMode {
    /// Each example is classified by basin labels fitted on the full set.
    #[default]
    Resubstitution,
    /// Each example's own vote is withheld from its basin before it is
    /// classified, so singleton basins earn nothing.
    LeaveOneOut,
}

impl FromStr for AffinityMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "resub" => Ok(AffinityMode::Resubstitution),
            "loo" => Ok(AffinityMode::LeaveOneOut),
            _ => Err(format!(
                "unknown affinity mode {s:?} (expected resub or loo)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub levels: FuzzyLevels,
    pub size: usize,
    pub population: usize,
    pub generations: usize,
    pub select_top: usize,
    pub clone_budget: usize,
    pub editing_fraction: f64,
    pub rate_min: f64,
    pub rate_max: f64,
    pub metric: FitnessMetric,
    pub affinity: AffinityMode,
    pub seed: u64,
}

impl TrainerConfig {
    pub fn new(levels: FuzzyLevels, size: usize) -> Self {
        Self {
            levels,
            size,
            population: 50,
            generations: 200,
            select_top: 10,
            clone_budget: 50,
            editing_fraction: 0.1,
            rate_min: 0.05,
            rate_max: 0.5,
            metric: FitnessMetric::Accuracy,
            affinity: AffinityMode::Resubstitution,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.size == 0 {
            return bad("lattice size must be at least 1".into());
        }
        if self.population == 0 {
            return bad("population must be at least 1".into());
        }
        if self.select_top == 0 || self.select_top > self.population {
            return bad(format!(
                "select_top must be in 1..={} (population), got {}",
                self.population, self.select_top
            ));
        }
        if self.clone_budget < self.population {
            return bad(format!(
                "clone_budget {} must be at least the population {}",
                self.clone_budget, self.population
            ));
        }
        if !(0.0..1.0).contains(&self.editing_fraction) {
            return bad(format!(
                "editing_fraction must be in [0, 1), got {}",
                self.editing_fraction
            ));
        }
        if !(self.rate_min > 0.0 && self.rate_min <= self.rate_max && self.rate_max <= 1.0) {
            return bad(format!(
                "mutation rates must satisfy 0 < min <= max <= 1, got {}..{}",
                self.rate_min, self.rate_max
            ));
        }
        Ok(())
    }

    /// Candidates replaced by fresh random ones each generation.
    pub fn editing_count(&self) -> usize {
        (self.editing_fraction * self.population as f64).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerReport {
    /// Best-ever fitness after initialization and after each generation.
    pub best_fitness_per_generation: Vec<f64>,
    pub evaluations: usize,
    pub final_fitness: f64,
}

pub fn random_rules(size: usize, rng: &mut impl Rng) -> RuleVector {
    RuleVector::new(
        (0..size)
            .map(|_| LocalRule::from_gene(rng.gen_range(0..GENE_COUNT)))
            .collect(),
    )
}

/// Resamples each cell's rule with probability `rate`.
pub fn mutate(rules: &RuleVector, rate: f64, rng: &mut impl Rng) -> Result<RuleVector> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mutation rate must be in (0, 1], got {rate}"
        )));
    }
    Ok(RuleVector::new(
        rules
            .rules()
            .iter()
            .map(|&rule| {
                if rng.gen::<f64>() < rate {
                    LocalRule::from_gene(rng.gen_range(0..GENE_COUNT))
                } else {
                    rule
                }
            })
            .collect(),
    ))
}

/// Fitness of `rules` on a pre-encoded dataset. An undefined correlation
/// scores 0.
pub fn encoded_affinity(
    rules: &RuleVector,
    data: &EncodedDataset,
    metric: FitnessMetric,
    mode: AffinityMode,
) -> Result<f64> {
    if metric == FitnessMetric::Cc && data.label_names.len() > 2 {
        return Err(Error::TooManyLabels(data.label_names.len()));
    }
    let Tally {
        counts, membership, ..
    } = data.tally(rules)?;
    let winners: Vec<usize> = counts.iter().map(|c| data.vote(c)).collect();
    let labels = data.label_names.len();
    let mut scratch = vec![0usize; 2 * labels];
    // leave-one-out withholds the example from both its basin and the priors
    let predict = |i: usize, scratch: &mut Vec<usize>| -> usize {
        let basin = membership[i];
        match mode {
            AffinityMode::Resubstitution => winners[basin],
            AffinityMode::LeaveOneOut => {
                let own = data.labels[i];
                let (tally, priors) = scratch.split_at_mut(labels);
                tally.copy_from_slice(&counts[basin]);
                priors.copy_from_slice(&data.priors);
                tally[own] -= 1;
                priors[own] -= 1;
                if tally.iter().all(|&c| c == 0) {
                    vote_with(priors, priors)
                } else {
                    vote_with(tally, priors)
                }
            }
        }
    };
    match metric {
        FitnessMetric::Accuracy => {
            let correct = (0..data.len())
                .filter(|&i| predict(i, &mut scratch) == data.labels[i])
                .count();
            Ok(correct as f64 / data.len() as f64)
        }
        FitnessMetric::Cc => {
            // label index 0 is the lexicographically first label; the
            // coefficient is symmetric in the choice of positive class
            let mut cm = ConfusionCounts::default();
            for i in 0..data.len() {
                cm.record(predict(i, &mut scratch) == 0, data.labels[i] == 0);
            }
            Ok(correlation(&cm).unwrap_or(0.0))
        }
    }
}

/// Fits basins on `data`, re-classifies it and scores the result.
pub fn affinity(
    rules: &RuleVector,
    data: &[LabeledExample],
    levels: &FuzzyLevels,
    metric: FitnessMetric,
) -> Result<f64> {
    let encoded = EncodedDataset::new(data, *levels)?;
    encoded_affinity(rules, &encoded, metric, AffinityMode::Resubstitution)
}

#[derive(Clone)]
struct Candidate {
    rules: RuleVector,
    fitness: f64,
}

/// Sorts by fitness descending; the stable sort keeps earlier entries first
/// among equals.
fn rank(pool: &mut [Candidate]) {
    pool.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
}

/// Splits `budget` clones over `k` ranks with weights `1 / rank`, using
/// largest remainders so the total is exact.
fn clone_allocation(k: usize, budget: usize) -> Vec<usize> {
    let weights: Vec<f64> = (1..=k).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * budget as f64).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = budget - alloc.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        alloc[i] += 1;
        remaining -= 1;
    }
    alloc
}

fn evaluate(
    batch: Vec<RuleVector>,
    data: &EncodedDataset,
    config: &TrainerConfig,
) -> Result<Vec<Candidate>> {
    batch
        .into_par_iter()
        .map(|rules| {
            let fitness = encoded_affinity(&rules, data, config.metric, config.affinity)?;
            Ok(Candidate { rules, fitness })
        })
        .collect()
}

/// Runs clonal selection and returns the model built from the best rule
/// vector found.
pub fn train(
    data: &[LabeledExample],
    config: &TrainerConfig,
) -> Result<(TrainedModel, TrainerReport)> {
    config.validate()?;
    let encoded = EncodedDataset::new(data, config.levels)?;
    if encoded.size != config.size {
        return Err(Error::LengthMismatch {
            expected: config.size,
            actual: encoded.size,
        });
    }
    if config.metric == FitnessMetric::Cc && encoded.label_names.len() > 2 {
        return Err(Error::TooManyLabels(encoded.label_names.len()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial: Vec<RuleVector> = (0..config.population)
        .map(|_| random_rules(config.size, &mut rng))
        .collect();
    let mut population = evaluate(initial, &encoded, config)?;
    let mut evaluations = population.len();
    rank(&mut population);
    let mut best = population[0].clone();
    let mut curve = vec![best.fitness];

    let allocation = clone_allocation(config.select_top, config.clone_budget);
    let editing = config.editing_count();

    for _ in 0..config.generations {
        let k = config.select_top;
        let mut clones = Vec::with_capacity(config.clone_budget);
        for (i, &copies) in allocation.iter().enumerate() {
            let normalized = if k == 1 {
                1.0
            } else {
                (k - 1 - i) as f64 / (k - 1) as f64
            };
            let rate = config.rate_max - (config.rate_max - config.rate_min) * normalized;
            for _ in 0..copies {
                clones.push(mutate(&population[i].rules, rate, &mut rng)?);
            }
        }
        let clones = evaluate(clones, &encoded, config)?;
        evaluations += clones.len();

        population.extend(clones);
        rank(&mut population);
        population.truncate(config.population);

        if editing > 0 {
            let fresh: Vec<RuleVector> = (0..editing)
                .map(|_| random_rules(config.size, &mut rng))
                .collect();
            let fresh = evaluate(fresh, &encoded, config)?;
            evaluations += fresh.len();
            let keep = config.population - editing;
            population.truncate(keep);
            population.extend(fresh);
            rank(&mut population);
        }

        if population[0].fitness > best.fitness {
            best = population[0].clone();
        }
        curve.push(best.fitness);
    }

    let model = TrainedModel::fit(best.rules, data, config.levels)?.with_metadata(ModelMetadata {
        seed: Some(config.seed),
        fitness: Some(best.fitness),
        generations: Some(config.generations),
    });
    Ok((
        model,
        TrainerReport {
            best_fitness_per_generation: curve,
            evaluations,
            final_fitness: best.fitness,
        },
    ))
}
