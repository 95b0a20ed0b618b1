//! Real-coded genetic search over a box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneticConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    /// Blend crossover extension beyond the parents' interval.
    pub blend_alpha: f64,
    /// Per-coordinate mutation probability.
    pub mutation_rate: f64,
    /// Initial mutation sd as a fraction of the box width; decays linearly
    /// to a tenth of that over the run.
    pub mutation_scale: f64,
    pub elite: usize,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        Self {
            population: 200,
            generations: 60,
            tournament: 3,
            crossover_rate: 0.9,
            blend_alpha: 0.3,
            mutation_rate: 1.0,
            mutation_scale: 0.05,
            elite: 2,
        }
    }
}

impl GeneticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 10 {
            return Err(Error::Configuration("population must be at least 10".into()));
        }
        if self.tournament == 0 || self.elite >= self.population {
            return Err(Error::Configuration("tournament ≥ 1 and elite < population required".into()));
        }
        for (name, v) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Configuration(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.blend_alpha >= 0.0 && self.mutation_scale >= 0.0) {
            return Err(Error::Configuration("blend_alpha and mutation_scale must be non-negative".into()));
        }
        Ok(())
    }
}

/// Individuals of the final population, best first.
#[derive(Debug, Clone)]
pub struct GeneticResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub population: Vec<(Vec<f64>, f64)>,
    pub evaluations: usize,
}

pub(crate) fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::Configuration("empty search box".into()));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Configuration(format!("invalid bounds [{lo}, {hi}]")));
        }
    }
    Ok(())
}

fn fitness(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Maximizes `objective` over the box. Non-finite values count as −∞.
/// Deterministic for a given seed; evaluations run in parallel.
pub fn genetic_search<F>(
    objective: &F,
    bounds: &[(f64, f64)],
    config: &GeneticConfig,
    seed: u64,
) -> Result<GeneticResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_bounds(bounds)?;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = bounds.len();
    let eval = |pop: Vec<Vec<f64>>| -> Vec<(Vec<f64>, f64)> {
        pop.into_par_iter()
            .map(|x| {
                let v = fitness(objective(&x));
                (x, v)
            })
            .collect()
    };
    let init =
        (0..config.population).map(|_| bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect()).collect();
    let mut pop = eval(init);
    let mut evaluations = pop.len();
    sort_desc(&mut pop);

    for g in 0..config.generations {
        let progress = g as f64 / config.generations.max(1) as f64;
        let scale = config.mutation_scale * (1.0 - 0.9 * progress);
        let mut children: Vec<Vec<f64>> = Vec::with_capacity(config.population);
        while children.len() < config.population - config.elite {
            let a = tournament(&pop, config.tournament, &mut rng);
            let b = tournament(&pop, config.tournament, &mut rng);
            let mut child = if rng.gen::<f64>() < config.crossover_rate {
                blend(&pop[a].0, &pop[b].0, config.blend_alpha, &mut rng)
            } else {
                pop[a].0.clone()
            };
            for (k, x) in child.iter_mut().enumerate() {
                let (lo, hi) = bounds[k];
                if rng.gen::<f64>() < config.mutation_rate {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *x += z * scale * (hi - lo);
                }
                *x = x.clamp(lo, hi);
            }
            debug_assert_eq!(child.len(), dim);
            children.push(child);
        }
        let mut next: Vec<(Vec<f64>, f64)> = pop[..config.elite].to_vec();
        evaluations += children.len();
        next.extend(eval(children));
        sort_desc(&mut next);
        pop = next;
    }

    let (best, best_value) = pop[0].clone();
    Ok(GeneticResult { best, best_value, population: pop, evaluations })
}

fn sort_desc(pop: &mut [(Vec<f64>, f64)]) {
    // Stable, so ties keep their creation order and runs stay reproducible.
    pop.sort_by(|a, b| b.1.total_cmp(&a.1));
}

fn tournament<R: Rng>(pop: &[(Vec<f64>, f64)], size: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..size {
        let c = rng.gen_range(0..pop.len());
        // Population is sorted, so the lower index is at least as fit.
        best = best.min(c);
    }
    best
}

fn blend<R: Rng>(a: &[f64], b: &[f64], alpha: f64, rng: &mut R) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            let ext = alpha * (hi - lo);
            if hi - lo == 0.0 {
                x
            } else {
                rng.gen_range(lo - ext..=hi + ext)
            }
        })
        .collect()
}

/// Points from a population that are pairwise farther apart than `tol`
/// (Euclidean), best first, at most `n`.
pub fn distinct_points(pop: &[(Vec<f64>, f64)], tol: f64, n: usize) -> Vec<(Vec<f64>, f64)> {
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut ranked = pop.to_vec();
    sort_desc(&mut ranked);
    for (x, v) in ranked {
        if out.len() == n {
            break;
        }
        if !v.is_finite() {
            continue;
        }
        if out.iter().all(|(y, _)| euclid(&x, y) > tol) {
            out.push((x, v));
        }
    }
    out
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
