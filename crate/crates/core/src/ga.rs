//! Genetic search over the network's initial weights and thresholds.
//!
//! A chromosome is the flat `w1 | b1 | w2 | b2` vector. Each generation:
//! fitness `F = k·Σ(y - o)²` (lower is better), roulette selection with
//! `P_i ∝ k / (F_i + ε)`, arithmetic crossover, and non-uniform mutation
//! whose strength `f(g) = r'·(1 - g/G_max)` shrinks to zero over the run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bpnet::{sse_loss, NetConfig, NetParams, Sample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationVariant {
    /// `b + f·(b - b_max)` when `r > 0.5`, else `b + f·(b_min - b)`.
    /// Both branches move the gene down; results are clamped.
    Downward,
    /// `b + f·(b_max - b)` when `r > 0.5`, else `b - f·(b - b_min)`.
    Symmetric,
}

impl std::str::FromStr for MutationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "downward" => Ok(Self::Downward),
            "symmetric" => Ok(Self::Symmetric),
            other => Err(Error::Config(format!("unknown mutation variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub gene_bounds: (f64, f64),
    pub fitness_k: f64,
    pub fitness_epsilon: f64,
    pub rng_seed: u64,
    pub elitism: bool,
    pub mutation_variant: MutationVariant,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            max_generations: 80,
            p_crossover: 0.5,
            p_mutation: 0.06,
            gene_bounds: (-0.5, 0.5),
            fitness_k: 1.0,
            fitness_epsilon: 1e-12,
            rng_seed: 0,
            elitism: true,
            mutation_variant: MutationVariant::Downward,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.population_size < 2 {
            return Err(Error::Config("population needs at least 2 individuals".into()));
        }
        if !prob(self.p_crossover) || !prob(self.p_mutation) {
            return Err(Error::Config("GA probabilities must lie in [0, 1]".into()));
        }
        let (lo, hi) = self.gene_bounds;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("gene bounds [{lo}, {hi}] are empty")));
        }
        if !(self.fitness_k > 0.0) || !(self.fitness_epsilon >= 0.0) {
            return Err(Error::Config("fitness coefficient must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub genes: Vec<f64>,
}

impl Chromosome {
    pub fn encode(params: &NetParams) -> Self {
        Self {
            genes: params.to_flat(),
        }
    }

    pub fn decode(&self, config: NetConfig) -> Result<NetParams> {
        NetParams::from_flat(config, &self.genes)
    }

    pub fn random<R: Rng + ?Sized>(len: usize, bounds: (f64, f64), rng: &mut R) -> Self {
        Self {
            genes: (0..len).map(|_| rng.gen_range(bounds.0..=bounds.1)).collect(),
        }
    }

    pub fn in_bounds(&self, bounds: (f64, f64)) -> bool {
        self.genes.iter().all(|g| (bounds.0..=bounds.1).contains(g))
    }
}

pub fn decode(chromosome: &Chromosome, config: NetConfig) -> Result<NetParams> {
    chromosome.decode(config)
}

pub fn fitness(chromosome: &Chromosome, config: NetConfig, samples: &[Sample], k: f64) -> Result<f64> {
    Ok(k * sse_loss(&chromosome.decode(config)?, samples)?)
}

/// `f_i = k / (F_i + ε)`, `P_i = f_i / Σ f_j`.
pub fn selection_probabilities(fitness_values: &[f64], k: f64, epsilon: f64) -> Vec<f64> {
    let f: Vec<f64> = fitness_values.iter().map(|&fi| k / (fi + epsilon)).collect();
    if f.iter().any(|v| v.is_infinite()) {
        // F_i = 0 with ε = 0: the limit puts all mass on the perfect individuals
        let n = f.iter().filter(|v| v.is_infinite()).count() as f64;
        return f.iter().map(|v| if v.is_infinite() { 1.0 / n } else { 0.0 }).collect();
    }
    let total: f64 = f.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        let n = fitness_values.len() as f64;
        return vec![1.0 / n; fitness_values.len()];
    }
    f.iter().map(|v| v / total).collect()
}

/// Cumulative-sum inversion: returns index `i` with probability `P_i`.
pub fn roulette_select<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the final cumulative sum
    probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Arithmetic crossover computed from the original parents:
/// `c_k = a·p_l + (1-a)·p_k`, `c_l = a·p_k + (1-a)·p_l`.
pub fn crossover(parent_k: &Chromosome, parent_l: &Chromosome, a: f64) -> Result<(Chromosome, Chromosome)> {
    if parent_k.genes.len() != parent_l.genes.len() {
        return Err(Error::LengthMismatch {
            left: parent_k.genes.len(),
            right: parent_l.genes.len(),
        });
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::Config(format!("crossover weight {a} not in [0, 1]")));
    }
    let (ck, cl) = parent_k
        .genes
        .iter()
        .zip(&parent_l.genes)
        .map(|(&bk, &bl)| (a * bl + (1.0 - a) * bk, a * bk + (1.0 - a) * bl))
        .unzip();
    Ok((Chromosome { genes: ck }, Chromosome { genes: cl }))
}

/// Mutates one gene given the draws `r` (branch) and `r_prime` (strength).
pub fn mutate_gene(b: f64, r: f64, r_prime: f64, generation: usize, config: &GaConfig) -> f64 {
    let (b_min, b_max) = config.gene_bounds;
    let g_max = config.max_generations.max(1) as f64;
    let f = r_prime * (1.0 - (generation as f64 / g_max).min(1.0));
    let moved = match (config.mutation_variant, r > 0.5) {
        (MutationVariant::Downward, true) => b + f * (b - b_max),
        (MutationVariant::Downward, false) => b + f * (b_min - b),
        (MutationVariant::Symmetric, true) => b + f * (b_max - b),
        (MutationVariant::Symmetric, false) => b - f * (b - b_min),
    };
    moved.clamp(b_min, b_max)
}

/// Each gene mutates independently with probability `p_mutation`.
pub fn mutate<R: Rng + ?Sized>(chromosome: &mut Chromosome, generation: usize, config: &GaConfig, rng: &mut R) {
    for b in &mut chromosome.genes {
        if rng.gen::<f64>() < config.p_mutation {
            let r = rng.gen::<f64>();
            let r_prime = rng.gen::<f64>();
            *b = mutate_gene(*b, r, r_prime, generation, config);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub individuals: Vec<Chromosome>,
    pub fitness_values: Vec<f64>,
    pub generation: usize,
}

impl Population {
    pub fn best_index(&self) -> usize {
        self.fitness_values
            .iter()
            .enumerate()
            .fold(0, |best, (i, f)| if *f < self.fitness_values[best] { i } else { best })
    }

    pub fn best_fitness(&self) -> f64 {
        self.fitness_values[self.best_index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolved {
    pub best: NetParams,
    pub best_fitness: f64,
    /// Best fitness seen so far, one entry per generation including the
    /// initial population.
    pub trace: Vec<f64>,
}

fn evaluate(individuals: &[Chromosome], config: NetConfig, samples: &[Sample], k: f64) -> Result<Vec<f64>> {
    // index-ordered collect, so results match a sequential run
    individuals
        .par_iter()
        .map(|c| fitness(c, config, samples, k))
        .collect()
}

pub fn evolve(net_config: NetConfig, ga_config: &GaConfig, samples: &[Sample]) -> Result<Evolved> {
    evolve_observed(net_config, ga_config, samples, |_| {})
}

/// Like [`evolve`], calling `observe` on every population (initial one
/// included) after its fitness has been evaluated.
pub fn evolve_observed<F: FnMut(&Population)>(
    net_config: NetConfig,
    ga_config: &GaConfig,
    samples: &[Sample],
    mut observe: F,
) -> Result<Evolved> {
    net_config.validate()?;
    ga_config.validate()?;
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples for fitness evaluation".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ga_config.rng_seed);
    let t = ga_config.population_size;
    let k = ga_config.fitness_k;
    let len = net_config.n_params();

    let individuals: Vec<Chromosome> = (0..t).map(|_| Chromosome::random(len, ga_config.gene_bounds, &mut rng)).collect();
    let fitness_values = evaluate(&individuals, net_config, samples, k)?;
    let mut pop = Population {
        individuals,
        fitness_values,
        generation: 0,
    };
    observe(&pop);

    let mut best = pop.individuals[pop.best_index()].clone();
    let mut best_f = pop.best_fitness();
    let mut trace = vec![best_f];

    for g in 0..ga_config.max_generations {
        let probs = selection_probabilities(&pop.fitness_values, k, ga_config.fitness_epsilon);
        let mut next = Vec::with_capacity(t);
        if ga_config.elitism {
            next.push(pop.individuals[pop.best_index()].clone());
        }
        while next.len() < t {
            let pk = &pop.individuals[roulette_select(&probs, &mut rng)];
            let pl = &pop.individuals[roulette_select(&probs, &mut rng)];
            let (mut ck, mut cl) = if rng.gen::<f64>() < ga_config.p_crossover {
                let a = rng.gen::<f64>();
                crossover(pk, pl, a)?
            } else {
                (pk.clone(), pl.clone())
            };
            mutate(&mut ck, g, ga_config, &mut rng);
            mutate(&mut cl, g, ga_config, &mut rng);
            next.push(ck);
            if next.len() < t {
                next.push(cl);
            }
        }
        let fitness_values = evaluate(&next, net_config, samples, k)?;
        pop = Population {
            individuals: next,
            fitness_values,
            generation: g + 1,
        };
        observe(&pop);

        let gen_best = pop.best_index();
        if pop.fitness_values[gen_best] < best_f {
            best_f = pop.fitness_values[gen_best];
            best = pop.individuals[gen_best].clone();
        }
        trace.push(best_f);
    }

    Ok(Evolved {
        best: best.decode(net_config)?,
        best_fitness: best_f,
        trace,
    })
}
