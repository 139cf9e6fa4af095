//! Error metrics between measured and simulated flow curves.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::CompressionTest;
use crate::error::{Error, Result};
use crate::md2m::{sample_at, SimulatedCurve};

/// Mean squared error charged to a test whose simulation diverged. Large
/// enough to dominate any physical error, small enough that sums over a few
/// dozen tests stay well inside f64 range, keeping fitness totally ordered.
pub const DIVERGENCE_PENALTY_MPA2: f64 = 1e9;

/// Per-test squared error summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestError {
    pub test_id: String,
    pub temp_c: f64,
    pub phi_dot: f64,
    /// Number of measured points the error was computed over.
    pub n_t: usize,
    /// Mean squared stress error [MPa^2].
    pub mse: f64,
}

/// Mean squared error of a simulated curve against one measured test,
/// sampling the simulation at the measured strains. A divergent simulation
/// is charged [`DIVERGENCE_PENALTY_MPA2`] instead of being sampled.
pub fn mse_per_test(test: &CompressionTest, curve: &SimulatedCurve) -> Result<TestError> {
    if test.phi.is_empty() {
        return Err(Error::data(format!("test {:?} has no points", test.id)));
    }
    let mse = if curve.divergent {
        DIVERGENCE_PENALTY_MPA2
    } else {
        let predicted = sample_at(curve, &test.phi).map_err(|e| {
            Error::data(format!("sampling test {:?}: {e}", test.id))
        })?;
        let mut sum = 0.0;
        for (hat, meas) in predicted.iter().zip(&test.kf) {
            let diff = hat - meas;
            sum += diff * diff;
        }
        sum / test.phi.len() as f64
    };
    Ok(TestError {
        test_id: test.id.clone(),
        temp_c: test.temp_c,
        phi_dot: test.phi_dot,
        n_t: test.phi.len(),
        mse,
    })
}

/// Sum of per-test MSE values, reduced in test id order so the result does
/// not depend on input ordering. No per-test normalization: tests with more
/// points do not weigh more, and error magnitudes add as-is.
pub fn smse(errors: &[TestError]) -> f64 {
    let mut sorted: Vec<&TestError> = errors.iter().collect();
    sorted.sort_by(|a, b| a.test_id.cmp(&b.test_id));
    sorted.iter().map(|e| e.mse).sum()
}

/// Root of the mean per-test MSE, the headline reporting figure.
pub fn rmse(errors: &[TestError]) -> f64 {
    if errors.is_empty() {
        return f64::NAN;
    }
    let mut sorted: Vec<&TestError> = errors.iter().collect();
    sorted.sort_by(|a, b| a.test_id.cmp(&b.test_id));
    let mean = sorted.iter().map(|e| e.mse).sum::<f64>() / errors.len() as f64;
    mean.sqrt()
}

/// Write per-test errors as `test_id,T_C,phi_dot,n_t,mse_MPa2`, closing with
/// an aggregate row carrying the total point count and the mean MSE.
pub fn write_report_csv(errors: &[TestError], path: &Path) -> Result<()> {
    let mut rows: Vec<&TestError> = errors.iter().collect();
    rows.sort_by(|a, b| a.test_id.cmp(&b.test_id));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["test_id", "T_C", "phi_dot", "n_t", "mse_MPa2"])?;
    for e in &rows {
        w.write_record(&[
            e.test_id.clone(),
            e.temp_c.to_string(),
            e.phi_dot.to_string(),
            e.n_t.to_string(),
            e.mse.to_string(),
        ])?;
    }
    if !rows.is_empty() {
        let n: usize = rows.iter().map(|e| e.n_t).sum();
        let mean = rows.iter().map(|e| e.mse).sum::<f64>() / rows.len() as f64;
        w.write_record(&["aggregate".into(), String::new(), String::new(), n.to_string(), mean.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
