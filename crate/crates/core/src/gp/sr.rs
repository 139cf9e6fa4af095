//! Single-tree symbolic regression: generational GP with one elite. Each
//! non-elite child is bred by tournament selection and subtree crossover,
//! then mutated with the configured probability. Fitness is the sum of
//! squared errors of the clamped prediction over the training rows.

use rayon::prelude::*;

use super::ops::{mutate, ptc2_init, subtree_crossover, tournament_select};
use super::tree::{clamp_output, ExpressionTree};
use super::{GpConfig, GpTraceRow};
use crate::rng::substream;

/// One training row: inputs and the value the tree should reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct SrRow {
    pub temp_c: f64,
    pub phi_dot: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrRun {
    pub best: ExpressionTree,
    pub best_fitness: f64,
    pub trace: Vec<GpTraceRow>,
}

/// Sum of squared errors of the clamped prediction over the rows.
pub fn sr_fitness(tree: &ExpressionTree, rows: &[SrRow], clamp: (f64, f64)) -> f64 {
    rows.iter()
        .map(|row| {
            let predicted = clamp_output(tree.evaluate(row.temp_c, row.phi_dot), clamp);
            let err = predicted - row.target;
            err * err
        })
        .sum()
}

/// Evolve one tree against the rows. The run is fully determined by the
/// config seed: individual i of the initial population draws from the
/// (seed, 0, i) substream and the child filling slot i after generation g
/// draws from (seed, g+1, i), so thread count cannot change the result.
pub fn run_sr(rows: &[SrRow], config: &GpConfig) -> SrRun {
    assert!(!rows.is_empty(), "empty training table");
    assert!(config.generations >= 1 && config.population >= 2);
    let clamp = config.clamp_bounds[0];

    let mut population: Vec<ExpressionTree> = (0..config.population)
        .map(|i| {
            let mut rng = substream(config.seed, &[0, i as u64]);
            ptc2_init(config, &mut rng)
        })
        .collect();

    let mut best: Option<(ExpressionTree, f64)> = None;
    let mut trace = Vec::with_capacity(config.generations);
    let mut evaluations = 0usize;

    for generation in 0..config.generations {
        let mut scored: Vec<(ExpressionTree, f64)> = population
            .par_iter()
            .map(|tree| (tree.clone(), sr_fitness(tree, rows, clamp)))
            .collect();
        evaluations += scored.len();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1));

        let fitness: Vec<f64> = scored.iter().map(|s| s.1).collect();
        trace.push(GpTraceRow {
            generation,
            best_smse: fitness[0],
            median_smse: median(&fitness),
            evaluations,
        });
        if best.as_ref().map(|(_, f)| fitness[0] < *f).unwrap_or(true) {
            best = Some((scored[0].0.clone(), fitness[0]));
        }
        if generation + 1 == config.generations {
            break;
        }

        let mut next: Vec<ExpressionTree> = Vec::with_capacity(config.population);
        next.push(scored[0].0.clone());
        for child in 1..config.population {
            let mut rng = substream(config.seed, &[generation as u64 + 1, child as u64]);
            let p1 = tournament_select(&fitness, config.tournament_size, &mut rng);
            let p2 = tournament_select(&fitness, config.tournament_size, &mut rng);
            let mut tree = subtree_crossover(&scored[p1].0, &scored[p2].0, config, &mut rng);
            if rand::Rng::gen::<f64>(&mut rng) < config.mutation_probability {
                tree = mutate(&tree, &mut rng);
            }
            debug_assert!(tree.within_limits(config.max_length, config.max_depth));
            next.push(tree);
        }
        population = next;
    }

    let (best, best_fitness) = best.unwrap();
    SrRun { best, best_fitness, trace }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
