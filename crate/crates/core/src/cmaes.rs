//! Covariance matrix adaptation evolution strategy on a box-bounded domain.
//!
//! Standard (mu/mu_w, lambda) formulation: rank-mu and rank-one covariance
//! updates, cumulative step-size adaptation, log-linear recombination
//! weights. Out-of-box samples are clamped to the box and the clamped point
//! is used both for evaluation and for the distribution update. The initial
//! covariance is diagonal with the squared box widths, so one dimensionless
//! step size serves parameters of different scales.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaesConfig {
    /// Inclusive search box per coordinate.
    pub bounds: Vec<(f64, f64)>,
    /// Samples per generation (lambda).
    pub population: usize,
    pub generations: usize,
    /// Initial step size as a fraction of the box width.
    pub sigma0_fraction: f64,
    /// Extra independent runs appended after the first; the best point over
    /// all runs is returned.
    pub restarts: usize,
    pub seed: u64,
}

impl CmaesConfig {
    pub fn new(bounds: Vec<(f64, f64)>, seed: u64) -> Self {
        CmaesConfig {
            bounds,
            population: 100,
            generations: 500,
            sigma0_fraction: 0.3,
            restarts: 0,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: usize,
    pub best_fitness: f64,
    pub sigma: f64,
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmaesResult {
    pub best_point: Vec<f64>,
    pub best_fitness: f64,
    pub evaluations: usize,
    pub trace: Vec<TraceRow>,
}

/// Clamp a point into the box.
pub fn box_repair(point: &mut [f64], bounds: &[(f64, f64)]) {
    for (x, &(lo, hi)) in point.iter_mut().zip(bounds) {
        *x = x.clamp(lo, hi);
    }
}

struct Constants {
    n: f64,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
}

impl Constants {
    fn new(dim: usize, lambda: usize) -> Self {
        let n = dim as f64;
        let mu = lambda / 2;
        let mut weights: Vec<f64> = (0..mu)
            .map(|i| ((mu as f64) + 0.5).ln() - ((i + 1) as f64).ln())
            .collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
        let c_mu = (2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) * (n + 2.0) + mu_eff))
            .min(1.0 - c_1);
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Constants { n, weights, mu_eff, c_sigma, d_sigma, c_c, c_1, c_mu, chi_n }
    }
}

/// Minimize `objective` over the configured box. Non-finite objective values
/// rank behind every finite value. The run is fully determined by the
/// config; the objective is evaluated in parallel but reduced in sample
/// order, so thread count does not change the result.
pub fn optimize<F>(config: &CmaesConfig, objective: F) -> CmaesResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(!config.bounds.is_empty(), "empty search box");
    assert!(config.population >= 4, "population must be at least 4");
    let dim = config.bounds.len();
    let consts = Constants::new(dim, config.population);
    let widths: Vec<f64> = config.bounds.iter().map(|&(lo, hi)| hi - lo).collect();

    let mut best_point = vec![0.0; dim];
    let mut best_fitness = f64::INFINITY;
    let mut evaluations = 0;
    let mut trace = Vec::new();

    for run in 0..=config.restarts {
        let mut rng = substream(config.seed, &[run as u64]);
        run_once(
            config,
            &consts,
            &widths,
            &objective,
            &mut rng,
            &mut best_point,
            &mut best_fitness,
            &mut evaluations,
            &mut trace,
        );
    }

    CmaesResult { best_point, best_fitness, evaluations, trace }
}

#[allow(clippy::too_many_arguments)]
fn run_once<F>(
    config: &CmaesConfig,
    consts: &Constants,
    widths: &[f64],
    objective: &F,
    rng: &mut ChaCha8Rng,
    best_point: &mut Vec<f64>,
    best_fitness: &mut f64,
    evaluations: &mut usize,
    trace: &mut Vec<TraceRow>,
) where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = config.bounds.len();
    let lambda = config.population;

    let mut mean = DVector::from_iterator(
        dim,
        config.bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)),
    );
    let mut sigma = config.sigma0_fraction;
    let mut cov = DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        widths.iter().map(|w| w * w),
    ));
    let mut p_sigma = DVector::zeros(dim);
    let mut p_c = DVector::zeros(dim);

    for generation in 0..config.generations {
        let eigen = cov.clone().symmetric_eigen();
        let d: DVector<f64> = eigen.eigenvalues.map(|ev| ev.max(1e-30).sqrt());
        let b = eigen.eigenvectors;

        let mut points: Vec<Vec<f64>> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z = DVector::from_iterator(dim, (0..dim).map(|_| standard_normal(rng)));
            let y = &b * z.component_mul(&d);
            let mut x: Vec<f64> = (0..dim).map(|i| mean[i] + sigma * y[i]).collect();
            box_repair(&mut x, &config.bounds);
            points.push(x);
        }

        let fitness: Vec<f64> = points.par_iter().map(|p| objective(p)).collect();
        *evaluations += lambda;

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| {
            fitness[a]
                .partial_cmp(&fitness[b])
                .unwrap_or_else(|| fitness[a].is_nan().cmp(&fitness[b].is_nan()))
                .then(a.cmp(&b))
        });

        let gen_best = order[0];
        if fitness[gen_best] < *best_fitness {
            *best_fitness = fitness[gen_best];
            best_point.clone_from(&points[gen_best]);
        }
        trace.push(TraceRow {
            generation: trace.len(),
            best_fitness: fitness[gen_best],
            sigma,
            mean: mean.iter().copied().collect(),
        });

        // Recombination over the repaired points.
        let mut new_mean = DVector::zeros(dim);
        for (rank, &w) in consts.weights.iter().enumerate() {
            let p = &points[order[rank]];
            for i in 0..dim {
                new_mean[i] += w * p[i];
            }
        }
        let shift: DVector<f64> = (&new_mean - &mean) / sigma;

        // C^(-1/2) * shift for the step-size path.
        let bt_shift = b.transpose() * &shift;
        let whitened = &b * bt_shift.component_div(&d);
        let csn = (consts.c_sigma * (2.0 - consts.c_sigma) * consts.mu_eff).sqrt();
        p_sigma = (1.0 - consts.c_sigma) * &p_sigma + csn * whitened;

        let expected_decay =
            (1.0 - (1.0 - consts.c_sigma).powi(2 * (generation as i32 + 1))).sqrt();
        let h_sigma = if p_sigma.norm() / expected_decay / consts.chi_n
            < 1.4 + 2.0 / (consts.n + 1.0)
        {
            1.0
        } else {
            0.0
        };
        let ccn = (consts.c_c * (2.0 - consts.c_c) * consts.mu_eff).sqrt();
        p_c = (1.0 - consts.c_c) * &p_c + h_sigma * ccn * &shift;

        let mut rank_mu = DMatrix::zeros(dim, dim);
        for (rank, &w) in consts.weights.iter().enumerate() {
            let p = &points[order[rank]];
            let y = DVector::from_iterator(dim, (0..dim).map(|i| (p[i] - mean[i]) / sigma));
            rank_mu += w * (&y * y.transpose());
        }
        let decay = 1.0 - consts.c_1 - consts.c_mu;
        let stall = (1.0 - h_sigma) * consts.c_c * (2.0 - consts.c_c);
        cov = decay * &cov
            + consts.c_1 * ((&p_c * p_c.transpose()) + stall * &cov)
            + consts.c_mu * rank_mu;
        // Keep the matrix exactly symmetric against drift.
        let cov_t = cov.transpose();
        cov = (&cov + cov_t) * 0.5;

        mean = new_mean;
        sigma *= ((consts.c_sigma / consts.d_sigma) * (p_sigma.norm() / consts.chi_n - 1.0)).exp();
        if !sigma.is_finite() || !mean.iter().all(|m| m.is_finite()) {
            break;
        }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    StandardNormal.sample(rng)
}

/// Write a per-generation trace as
/// `generation,best_fitness,sigma,mean_u,mean_v,mean_w` (generic coordinate
/// names `mean_0..` for dimensions other than three).
pub fn write_trace_csv(trace: &[TraceRow], path: &std::path::Path) -> Result<()> {
    let dim = trace.first().map(|r| r.mean.len()).unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["generation".to_string(), "best_fitness".into(), "sigma".into()];
    if dim == 3 {
        header.extend(["mean_u".into(), "mean_v".into(), "mean_w".into()]);
    } else {
        header.extend((0..dim).map(|i| format!("mean_{i}")));
    }
    w.write_record(&header)?;
    for row in trace {
        let mut record = vec![
            row.generation.to_string(),
            row.best_fitness.to_string(),
            row.sigma.to_string(),
        ];
        record.extend(row.mean.iter().map(|m| m.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn converges_on_sphere() {
        let config = CmaesConfig {
            population: 20,
            generations: 120,
            ..CmaesConfig::new(vec![(-5.0, 5.0); 3], 7)
        };
        let result = optimize(&config, sphere);
        assert!(result.best_fitness < 1e-12, "fitness {}", result.best_fitness);
        assert!(result.best_point.iter().all(|x| x.abs() < 1e-6));
        assert_eq!(result.evaluations, 20 * 120);
    }

    #[test]
    fn converges_on_shifted_quadratic_1d() {
        let config = CmaesConfig {
            population: 12,
            generations: 80,
            ..CmaesConfig::new(vec![(0.0, 10.0)], 11)
        };
        let result = optimize(&config, |x| (x[0] - 3.25) * (x[0] - 3.25));
        assert!((result.best_point[0] - 3.25).abs() < 1e-6);
    }

    #[test]
    fn stays_inside_the_box() {
        // Optimum outside the box: the result must sit on the boundary.
        let config = CmaesConfig {
            population: 16,
            generations: 60,
            ..CmaesConfig::new(vec![(-1.0, 1.0); 2], 3)
        };
        let result = optimize(&config, |x| {
            (x[0] - 4.0) * (x[0] - 4.0) + (x[1] + 3.0) * (x[1] + 3.0)
        });
        assert!((result.best_point[0] - 1.0).abs() < 1e-9);
        assert!((result.best_point[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn identical_seeds_identical_results() {
        let config = CmaesConfig {
            population: 16,
            generations: 40,
            ..CmaesConfig::new(vec![(-5.0, 5.0); 3], 99)
        };
        let a = optimize(&config, sphere);
        let b = optimize(&config, sphere);
        assert_eq!(a.best_point, b.best_point);
        assert_eq!(a.best_fitness, b.best_fitness);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn different_seeds_differ() {
        let mut config = CmaesConfig {
            population: 16,
            generations: 10,
            ..CmaesConfig::new(vec![(-5.0, 5.0); 3], 1)
        };
        let a = optimize(&config, sphere);
        config.seed = 2;
        let b = optimize(&config, sphere);
        assert_ne!(a.best_point, b.best_point);
    }

    #[test]
    fn restarts_keep_global_best() {
        let config = CmaesConfig {
            population: 8,
            generations: 5,
            restarts: 2,
            ..CmaesConfig::new(vec![(-5.0, 5.0); 2], 5)
        };
        let result = optimize(&config, sphere);
        assert_eq!(result.evaluations, 8 * 5 * 3);
        let direct = sphere(&result.best_point);
        assert_eq!(direct, result.best_fitness);
    }

    #[test]
    fn repair_clamps_componentwise() {
        let mut point = vec![-2.0, 0.5, 9.0];
        box_repair(&mut point, &[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)]);
        assert_eq!(point, vec![-1.0, 0.5, 1.0]);
    }

    #[test]
    fn trace_has_monotone_generations_and_csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let config = CmaesConfig {
            population: 8,
            generations: 12,
            ..CmaesConfig::new(vec![(-5.0, 5.0); 3], 21)
        };
        let result = optimize(&config, sphere);
        assert_eq!(result.trace.len(), 12);
        assert!(result.trace.windows(2).all(|w| w[1].generation == w[0].generation + 1));
        let path = dir.path().join("trace.csv");
        write_trace_csv(&result.trace, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("generation,best_fitness,sigma,mean_u,mean_v,mean_w"));
    }
}
