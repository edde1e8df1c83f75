//! Genetic algorithm over RIS phase vectors.
//!
//! Each generation is fitness-sorted in descending order and rebuilt from
//! three groups: the top `elites` copied unchanged, `mutants` offspring made
//! by uniform mutation of the bottom `mutants` individuals, and `crossovers`
//! offspring from two-point crossover of parents chosen by stochastic
//! universal sampling among the middle `crossovers` individuals.
//!
//! All random draws come from one ChaCha8 stream in a fixed order; fitness
//! evaluation runs in parallel and never touches the generator.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::RateModel;
use crate::channel::{rng_for, SimRng};
use crate::config::PhaseVector;
use crate::error::{Error, Result};

/// Optimization target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Maximize the sum of user rates.
    Sum,
    /// Maximize the smallest user rate.
    Min,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Sum => "sum",
            Objective::Min => "min",
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Objective::Sum),
            "min" => Ok(Objective::Min),
            _ => Err(Error::InvalidConfig(format!("unknown objective `{s}` (expected sum|min)"))),
        }
    }
}

/// Sum of analytic user rates.
pub fn fitness_sum_rate(model: &RateModel, phases: &PhaseVector) -> Result<f64> {
    Ok(model.breakdown(phases)?.sum_rate())
}

/// Smallest analytic user rate.
pub fn fitness_min_rate(model: &RateModel, phases: &PhaseVector) -> Result<f64> {
    Ok(model.breakdown(phases)?.min_rate())
}

pub fn fitness(objective: Objective, model: &RateModel, phases: &PhaseVector) -> Result<f64> {
    match objective {
        Objective::Sum => fitness_sum_rate(model, phases),
        Objective::Min => fitness_min_rate(model, phases),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub elites: usize,
    pub mutants: usize,
    pub crossovers: usize,
    /// Generation budget; `None` means `100 * N`.
    pub max_iters: Option<usize>,
    /// Per-gene mutation probability; `None` means `1 / N`.
    pub mutation_rate: Option<f64>,
    /// Restrict phases to `2 pi j / grid`; continuous when `None`.
    pub phase_grid: Option<usize>,
    pub seed: u64,
    /// Store the best individual every this many generations (0 = never).
    pub snapshot_every: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            elites: 4,
            mutants: 8,
            crossovers: 8,
            max_iters: None,
            mutation_rate: None,
            phase_grid: None,
            seed: 0,
            snapshot_every: 0,
        }
    }
}

impl GaConfig {
    pub fn population(&self) -> usize {
        self.elites + self.mutants + self.crossovers
    }

    pub fn generations(&self, elements: usize) -> usize {
        self.max_iters.unwrap_or(100 * elements)
    }

    pub fn validate(&self) -> Result<()> {
        if self.elites == 0 || self.mutants == 0 || self.crossovers == 0 {
            return Err(Error::InvalidConfig(
                "elite, mutation and crossover groups must each hold at least one individual".into(),
            ));
        }
        if let Some(r) = self.mutation_rate {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidConfig(format!("mutation rate {r} outside (0, 1]")));
            }
        }
        if self.phase_grid == Some(0) {
            return Err(Error::InvalidConfig("phase grid needs at least one level".into()));
        }
        Ok(())
    }
}

/// Per-generation progress.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaTrace {
    /// Best fitness of each evaluated population (initial one included).
    pub best: Vec<f64>,
    pub mean: Vec<f64>,
    /// `(generation, best individual)` at the configured cadence.
    pub snapshots: Vec<(usize, PhaseVector)>,
}

impl GaTrace {
    pub fn is_monotone(&self) -> bool {
        self.best.windows(2).all(|w| w[1] >= w[0])
    }
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub best: PhaseVector,
    pub best_fitness: f64,
    pub trace: GaTrace,
}

struct Genes {
    grid: Option<usize>,
}

impl Genes {
    fn draw(&self, rng: &mut SimRng) -> f64 {
        match self.grid {
            Some(levels) => TAU * rng.random_range(0..levels) as f64 / levels as f64,
            None => rng.random_range(0.0..TAU),
        }
    }

    fn individual(&self, n: usize, rng: &mut SimRng) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

/// Stochastic universal sampling: `count` picks with evenly spaced pointers
/// over the cumulative weights. Weights must be positive.
pub fn stochastic_universal_sampling<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let step = total / count as f64;
    let start = rng.random::<f64>() * step;
    let mut picks = Vec::with_capacity(count);
    let mut idx = 0;
    let mut cumulative = weights[0];
    for j in 0..count {
        let pointer = start + j as f64 * step;
        while pointer >= cumulative && idx + 1 < weights.len() {
            idx += 1;
            cumulative += weights[idx];
        }
        picks.push(idx);
    }
    picks
}

/// Positive selection weights: shift fitness so the minimum sits at a small
/// positive floor.
fn selection_weights(fitness: &[f64]) -> Vec<f64> {
    let lo = fitness.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = (1e-3 * (hi - lo)).max(1e-12);
    fitness.iter().map(|f| f - lo + floor).collect()
}

/// Two-point crossover; cut points drawn without replacement from `1..N-1`.
/// Falls back to a single cut when `N == 2` and to a copy when `N == 1`.
fn two_point_crossover(a: &[f64], b: &[f64], rng: &mut SimRng) -> Vec<f64> {
    let n = a.len();
    let (lo, hi) = match n {
        0 | 1 => return a.to_vec(),
        2 => (1, 2),
        _ => {
            let x = rng.random_range(1..n);
            let mut y = rng.random_range(1..n - 1);
            if y >= x {
                y += 1;
            }
            (x.min(y), x.max(y))
        }
    };
    a[..lo].iter().chain(&b[lo..hi]).chain(&a[hi..]).copied().collect()
}

fn evaluate<F>(population: &[Vec<f64>], f: &F) -> Result<Vec<f64>>
where
    F: Fn(&PhaseVector) -> Result<f64> + Sync,
{
    population
        .par_iter()
        .map(|genes| f(&PhaseVector::wrapped(genes.iter().copied())))
        .collect()
}

/// Runs the GA with an arbitrary fitness function.
pub fn optimize_with<F>(elements: usize, ga: &GaConfig, fitness: F) -> Result<GaOutcome>
where
    F: Fn(&PhaseVector) -> Result<f64> + Sync,
{
    optimize_seeded(elements, ga, &[], fitness)
}

/// Like [`optimize_with`], replacing the first initial individuals with
/// `initial`.
pub fn optimize_seeded<F>(elements: usize, ga: &GaConfig, initial: &[PhaseVector], fitness: F) -> Result<GaOutcome>
where
    F: Fn(&PhaseVector) -> Result<f64> + Sync,
{
    ga.validate()?;
    if initial.iter().any(|p| p.len() != elements) {
        return Err(Error::Dimension("seed individual length differs from element count".into()));
    }
    let genes = Genes { grid: ga.phase_grid };
    let rate = ga.mutation_rate.unwrap_or(1.0 / elements as f64);
    let size = ga.population();
    let mut rng = rng_for(ga.seed, 0);
    let mut population: Vec<Vec<f64>> = (0..size).map(|_| genes.individual(elements, &mut rng)).collect();
    for (slot, p) in population.iter_mut().zip(initial) {
        *slot = p.as_slice().to_vec();
    }
    let mut scores = evaluate(&population, &fitness)?;
    let mut trace = GaTrace::default();
    let mut best: (f64, Vec<f64>) = (f64::NEG_INFINITY, Vec::new());
    let generations = ga.generations(elements);

    for generation in 0..=generations {
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        population = order.iter().map(|&i| population[i].clone()).collect();
        scores = order.iter().map(|&i| scores[i]).collect();

        if scores[0] > best.0 {
            best = (scores[0], population[0].clone());
        }
        trace.best.push(scores[0]);
        trace.mean.push(scores.iter().sum::<f64>() / size as f64);
        if ga.snapshot_every > 0 && generation % ga.snapshot_every == 0 {
            trace.snapshots.push((generation, PhaseVector::wrapped(population[0].iter().copied())));
        }
        if generation == generations {
            break;
        }

        let middle = ga.elites..ga.elites + ga.crossovers;
        let weights = selection_weights(&scores[middle.clone()]);
        let mut parents: Vec<usize> = stochastic_universal_sampling(&weights, 2 * ga.crossovers, &mut rng)
            .into_iter()
            .map(|j| middle.start + j)
            .collect();
        parents.shuffle(&mut rng);
        let children: Vec<Vec<f64>> = parents
            .chunks(2)
            .map(|pair| two_point_crossover(&population[pair[0]], &population[pair[1]], &mut rng))
            .collect();

        let mutants: Vec<Vec<f64>> = population[size - ga.mutants..]
            .iter()
            .map(|parent| {
                parent
                    .iter()
                    .map(|&g| if rng.random::<f64>() < rate { genes.draw(&mut rng) } else { g })
                    .collect()
            })
            .collect();

        let elite_scores = scores[..ga.elites].to_vec();
        let mut next: Vec<Vec<f64>> = population[..ga.elites].to_vec();
        let offspring: Vec<Vec<f64>> = mutants.into_iter().chain(children).collect();
        let offspring_scores = evaluate(&offspring, &fitness)?;
        next.extend(offspring);
        population = next;
        scores = elite_scores.into_iter().chain(offspring_scores).collect();
    }

    Ok(GaOutcome { best: PhaseVector::wrapped(best.1), best_fitness: best.0, trace })
}

/// Coordinate-wise local search from `start`.
///
/// Each element in turn tries every phase of a `levels`-point grid and, for
/// continuous phases (`on_grid == false`), the two neighbours `theta +- step`;
/// the best candidate is kept. The step halves after a sweep without
/// improvement, and the search stops when it drops below `1e-6` rad (or after
/// the first stalled sweep on a grid) or after `max_sweeps` sweeps. Fitness
/// never decreases and no randomness is involved.
pub fn refine<F>(start: &PhaseVector, levels: usize, on_grid: bool, max_sweeps: usize, fitness: F) -> Result<(PhaseVector, f64)>
where
    F: Fn(&PhaseVector) -> Result<f64> + Sync,
{
    if levels == 0 {
        return Err(Error::InvalidConfig("refinement grid needs at least one level".into()));
    }
    let mut current = start.as_slice().to_vec();
    let mut best = fitness(start)?;
    let mut step = TAU / (2 * levels) as f64;
    for _ in 0..max_sweeps {
        let mut improved = false;
        for n in 0..current.len() {
            let mut candidates: Vec<f64> = (0..levels).map(|j| TAU * j as f64 / levels as f64).collect();
            if !on_grid {
                candidates.extend([current[n] + step, current[n] - step]);
            }
            let scored: Vec<(f64, f64)> = candidates
                .par_iter()
                .map(|&c| {
                    let mut trial = current.clone();
                    trial[n] = c;
                    fitness(&PhaseVector::wrapped(trial)).map(|f| (f, c))
                })
                .collect::<Result<_>>()?;
            let (f, c) = scored.into_iter().fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
            if f > best {
                best = f;
                current[n] = crate::config::wrap_phase(c);
                improved = true;
            }
        }
        if !improved {
            if on_grid || step < 1e-6 {
                break;
            }
            step /= 2.0;
        }
    }
    Ok((PhaseVector::wrapped(current), best))
}

/// Optimizes RIS phases for the chosen objective of the analytic rate.
pub fn ga_optimize(objective: Objective, model: &RateModel, ga: &GaConfig) -> Result<GaOutcome> {
    optimize_with(model.config().elements, ga, |p| fitness(objective, model, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sus_spreads_pointers_proportionally() {
        let mut rng = rng_for(1, 0);
        let picks = stochastic_universal_sampling(&[1.0, 1.0, 2.0], 4, &mut rng);
        let mut counts = [0; 3];
        picks.iter().for_each(|&p| counts[p] += 1);
        assert_eq!(counts, [1, 1, 2]);
        assert!(picks.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sus_respects_tiny_weights() {
        let mut rng = rng_for(2, 0);
        let picks = stochastic_universal_sampling(&[1e-12, 10.0], 8, &mut rng);
        assert!(picks.iter().all(|&p| p == 1));
    }

    #[test]
    fn selection_weights_are_positive() {
        let w = selection_weights(&[3.0, 3.0, 3.0]);
        assert!(w.iter().all(|&x| x > 0.0));
        let w = selection_weights(&[1.0, 2.0, 5.0]);
        assert!(w[0] > 0.0 && w[0] < w[1] && w[1] < w[2]);
    }

    #[test]
    fn crossover_keeps_genes_and_length() {
        let mut rng = rng_for(3, 0);
        let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..10).map(|i| 100.0 + i as f64).collect();
        for _ in 0..100 {
            let c = two_point_crossover(&a, &b, &mut rng);
            assert_eq!(c.len(), 10);
            assert_eq!(c[0], 0.0);
            for (j, g) in c.iter().enumerate() {
                assert!(*g == a[j] || *g == b[j]);
            }
            assert!(c.iter().zip(&b).any(|(x, y)| x == y));
        }
        assert_eq!(two_point_crossover(&[1.0, 2.0], &[3.0, 4.0], &mut rng), vec![1.0, 4.0]);
        assert_eq!(two_point_crossover(&[1.0], &[3.0], &mut rng), vec![1.0]);
    }

    #[test]
    fn refine_climbs_smooth_objective() {
        let f = |p: &PhaseVector| Ok(p.as_slice().iter().map(|t| (t - 1.234).cos()).sum::<f64>());
        let start = PhaseVector::zeros(3);
        let (best, value) = refine(&start, 16, false, 200, f).unwrap();
        assert!((value - 3.0).abs() < 1e-10, "{value}");
        assert!(best.as_slice().iter().all(|t| (t - 1.234).abs() < 1e-4));
        let (on_grid, _) = refine(&start, 8, true, 10, f).unwrap();
        assert!(on_grid.as_slice().iter().all(|t| (t / (TAU / 8.0)).fract().abs() < 1e-12));
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig { elites: 0, ..Default::default() }.validate().is_err());
        assert!(GaConfig { mutation_rate: Some(0.0), ..Default::default() }.validate().is_err());
        assert!(GaConfig::default().validate().is_ok());
        assert_eq!(GaConfig::default().generations(16), 1600);
    }

    #[test]
    fn zero_budget_returns_best_initial_individual() {
        let ga = GaConfig { max_iters: Some(0), seed: 5, ..Default::default() };
        let f = |p: &PhaseVector| Ok(-p.as_slice().iter().map(|t| (t - 1.0).powi(2)).sum::<f64>());
        let out = optimize_with(3, &ga, f).unwrap();
        assert_eq!(out.trace.best.len(), 1);
        assert_eq!(out.best_fitness, out.trace.best[0]);
    }

    #[test]
    fn grid_bowl_is_solved() {
        let ga = GaConfig { seed: 9, max_iters: Some(200), phase_grid: Some(16), ..Default::default() };
        let target: Vec<f64> = [3.0, 14.0].iter().map(|j| j * TAU / 16.0).collect();
        let f = |p: &PhaseVector| {
            Ok(-p.as_slice().iter().zip(&target).map(|(t, c)| (t - c).powi(2)).sum::<f64>())
        };
        let out = optimize_with(2, &ga, f).unwrap();
        assert!(out.trace.is_monotone());
        assert!(out.best_fitness > -1e-12, "{}", out.best_fitness);
    }

    #[test]
    fn grid_phases_stay_on_grid() {
        let ga = GaConfig { seed: 1, max_iters: Some(20), phase_grid: Some(8), snapshot_every: 5, ..Default::default() };
        let out = optimize_with(5, &ga, |p| Ok(p.as_slice().iter().map(|t| t.sin()).sum())).unwrap();
        for t in out.best.as_slice() {
            let j = t / (TAU / 8.0);
            assert!((j - j.round()).abs() < 1e-9 && (0.0..TAU).contains(t));
        }
        assert_eq!(out.trace.snapshots.len(), 5);
    }
}
