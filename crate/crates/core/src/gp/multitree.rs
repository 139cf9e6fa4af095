//! Three-tree engine: each individual carries one tree per calibration
//! coordinate (u, v, w) and is scored by simulating the flow-stress model
//! those trees parameterize over the training tests. Breeding works
//! component by component, so no genetic material ever moves between the
//! u, v, and w trees.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ops::{mutate, ptc2_init, subtree_crossover, tournament_select};
use super::tree::{clamp_output, ExpressionTree};
use super::{GpConfig, GpTraceRow};
use crate::dataset::CompressionTest;
use crate::error::{Error, Result};
use crate::md2m::{simulate, to_abc, CalibrationUvw, LoadCase, MaterialConstants, SimControl};
use crate::metrics::{mse_per_test, smse};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiTreeIndividual {
    /// Trees for u, v, w in that order.
    pub trees: [ExpressionTree; 3],
    /// Summed per-test mean squared error; lower is better.
    pub smse: f64,
}

/// Everything needed to score a set of (u, v, w) trees by simulation.
#[derive(Clone, Copy)]
pub struct SimObjective<'a> {
    pub tests: &'a [CompressionTest],
    pub constants: &'a MaterialConstants,
    pub control: &'a SimControl,
}

impl SimObjective<'_> {
    /// Evaluate the trees at each test's (T, strain rate), clamp into the
    /// configured boxes, transform to (A, B, C), simulate, and sum the
    /// per-test mean squared errors.
    pub fn smse_of(&self, trees: &[ExpressionTree; 3], clamps: &[(f64, f64)]) -> Result<f64> {
        let mut errors = Vec::with_capacity(self.tests.len());
        for test in self.tests {
            let uvw = CalibrationUvw {
                u: clamp_output(trees[0].evaluate(test.temp_c, test.phi_dot), clamps[0]),
                v: clamp_output(trees[1].evaluate(test.temp_c, test.phi_dot), clamps[1]),
                w: clamp_output(trees[2].evaluate(test.temp_c, test.phi_dot), clamps[2]),
            };
            let abc = to_abc(&uvw);
            let load = LoadCase {
                temp_c: test.temp_c,
                phi_dot: test.phi_dot,
                phi_max: test.max_phi(),
            };
            let curve = simulate(&load, self.constants, &abc, self.control);
            errors.push(mse_per_test(test, &curve)?);
        }
        Ok(smse(&errors))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultitreeRun {
    pub best: MultiTreeIndividual,
    /// Final population, fitness-sorted, all evaluated.
    pub population: Vec<MultiTreeIndividual>,
    pub trace: Vec<GpTraceRow>,
}

/// Where and how often to write resume checkpoints: after every `every`-th
/// breeding step.
pub struct CheckpointSpec<'a> {
    pub path: &'a Path,
    pub every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointIndividual {
    /// The three trees in canonical prefix form.
    pub trees: Vec<String>,
    /// Cached fitness; None for children bred but not yet scored.
    pub smse: Option<f64>,
}

/// Resume state for a long run. The generation counter plus the config
/// seed fully determine the random substreams of the remaining
/// generations, so a resumed run finishes exactly like an uninterrupted
/// one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultitreeCheckpoint {
    pub seed: u64,
    /// Index of the next generation to evaluate.
    pub generation: usize,
    pub config_digest: String,
    pub population: Vec<CheckpointIndividual>,
    pub best: Option<CheckpointIndividual>,
}

impl MultitreeCheckpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read(path)?;
        Ok(serde_json::from_slice(&text)?)
    }
}

pub fn run_multitree(
    tests: &[CompressionTest],
    constants: &MaterialConstants,
    control: &SimControl,
    config: &GpConfig,
) -> Result<MultiTreeIndividual> {
    Ok(run_multitree_full(tests, constants, control, config, None, None)?.best)
}

/// Full-control variant: optionally resume from a checkpoint and write new
/// checkpoints along the way. Returns the best-ever individual, the final
/// population, and the per-generation trace (for a resumed run, the trace
/// and evaluation counter cover the resumed portion only).
pub fn run_multitree_full(
    tests: &[CompressionTest],
    constants: &MaterialConstants,
    control: &SimControl,
    config: &GpConfig,
    resume: Option<&MultitreeCheckpoint>,
    checkpoint: Option<&CheckpointSpec>,
) -> Result<MultitreeRun> {
    if tests.is_empty() {
        return Err(Error::data("no training tests"));
    }
    if config.clamp_bounds.len() != 3 {
        return Err(Error::config(format!(
            "three clamp bounds required, got {}",
            config.clamp_bounds.len()
        )));
    }
    assert!(config.generations >= 1 && config.population >= 2);
    let objective = SimObjective { tests, constants, control };
    let digest = config.digest();

    type Entry = ([ExpressionTree; 3], Option<f64>);
    let (start_generation, mut population, mut best): (usize, Vec<Entry>, Option<(
        [ExpressionTree; 3],
        f64,
    )>) = match resume {
        Some(cp) => {
            if cp.config_digest != digest {
                return Err(Error::config(
                    "checkpoint was written with a different configuration",
                ));
            }
            if cp.generation >= config.generations {
                return Err(Error::config(format!(
                    "checkpoint generation {} is past the configured {}",
                    cp.generation, config.generations
                )));
            }
            let population = cp
                .population
                .iter()
                .map(parse_individual)
                .collect::<Result<Vec<Entry>>>()?;
            if population.len() != config.population {
                return Err(Error::config("checkpoint population size mismatch"));
            }
            let best = match &cp.best {
                Some(ind) => {
                    let (trees, fit) = parse_individual(ind)?;
                    let fit = fit.ok_or_else(|| {
                        Error::config("checkpointed best individual has no fitness")
                    })?;
                    Some((trees, fit))
                }
                None => None,
            };
            (cp.generation, population, best)
        }
        None => {
            let population = (0..config.population)
                .map(|i| {
                    let mut rng = substream(config.seed, &[0, i as u64]);
                    let trees = [
                        ptc2_init(config, &mut rng),
                        ptc2_init(config, &mut rng),
                        ptc2_init(config, &mut rng),
                    ];
                    (trees, None)
                })
                .collect();
            (0, population, None)
        }
    };

    let mut trace = Vec::new();
    let mut evaluations = 0usize;

    for generation in start_generation..config.generations {
        let fresh: Vec<(usize, f64)> = population
            .par_iter()
            .enumerate()
            .filter(|(_, (_, fit))| fit.is_none())
            .map(|(i, (trees, _))| {
                objective
                    .smse_of(trees, &config.clamp_bounds)
                    .map(|v| (i, v))
            })
            .collect::<Result<Vec<_>>>()?;
        evaluations += fresh.len();
        for (i, fit) in fresh {
            population[i].1 = Some(fit);
        }

        population.sort_by(|a, b| a.1.unwrap().total_cmp(&b.1.unwrap()));
        let fitness: Vec<f64> = population.iter().map(|(_, f)| f.unwrap()).collect();
        trace.push(GpTraceRow {
            generation,
            best_smse: fitness[0],
            median_smse: median(&fitness),
            evaluations,
        });
        if best.as_ref().map(|(_, f)| fitness[0] < *f).unwrap_or(true) {
            best = Some((population[0].0.clone(), fitness[0]));
        }
        if generation + 1 == config.generations {
            break;
        }

        let mut next: Vec<Entry> = Vec::with_capacity(config.population);
        next.push(population[0].clone());
        for child in 1..config.population {
            let mut rng = substream(config.seed, &[generation as u64 + 1, child as u64]);
            let p1 = tournament_select(&fitness, config.tournament_size, &mut rng);
            let p2 = tournament_select(&fitness, config.tournament_size, &mut rng);
            let mut trees = Vec::with_capacity(3);
            for component in 0..3 {
                let t1 = &population[p1].0[component];
                let t2 = &population[p2].0[component];
                let mut tree = if rand::Rng::gen::<f64>(&mut rng) < config.crossover_probability
                {
                    subtree_crossover(t1, t2, config, &mut rng)
                } else if rand::Rng::gen_range(&mut rng, 0..2) == 0 {
                    t1.clone()
                } else {
                    t2.clone()
                };
                if rand::Rng::gen::<f64>(&mut rng) < config.mutation_probability {
                    tree = mutate(&tree, &mut rng);
                }
                debug_assert!(tree.within_limits(config.max_length, config.max_depth));
                trees.push(tree);
            }
            let trees: [ExpressionTree; 3] = trees.try_into().unwrap();
            next.push((trees, None));
        }
        population = next;

        if let Some(spec) = checkpoint {
            if spec.every > 0 && (generation + 1) % spec.every == 0 {
                let cp = MultitreeCheckpoint {
                    seed: config.seed,
                    generation: generation + 1,
                    config_digest: digest.clone(),
                    population: population.iter().map(serialize_entry).collect(),
                    best: best.as_ref().map(|(trees, fit)| CheckpointIndividual {
                        trees: trees.iter().map(|t| t.to_prefix()).collect(),
                        smse: Some(*fit),
                    }),
                };
                cp.save(spec.path)?;
            }
        }
    }

    let (best_trees, best_fit) = best.unwrap();
    Ok(MultitreeRun {
        best: MultiTreeIndividual { trees: best_trees, smse: best_fit },
        population: population
            .into_iter()
            .map(|(trees, fit)| MultiTreeIndividual { trees, smse: fit.unwrap() })
            .collect(),
        trace,
    })
}

fn parse_individual(ind: &CheckpointIndividual) -> Result<([ExpressionTree; 3], Option<f64>)> {
    if ind.trees.len() != 3 {
        return Err(Error::config("checkpoint individual must carry three trees"));
    }
    let trees = [
        ExpressionTree::parse(&ind.trees[0])?,
        ExpressionTree::parse(&ind.trees[1])?,
        ExpressionTree::parse(&ind.trees[2])?,
    ];
    Ok((trees, ind.smse))
}

fn serialize_entry(entry: &([ExpressionTree; 3], Option<f64>)) -> CheckpointIndividual {
    CheckpointIndividual {
        trees: entry.0.iter().map(|t| t.to_prefix()).collect(),
        smse: entry.1,
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
