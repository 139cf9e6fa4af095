//! Flow stress modelling and calibration for hot compression tests.
//!
//! The crate simulates a one-state-variable dislocation density model
//! ([`md2m`]), derives stress/strain curves from raw compression records
//! ([`dataset`]), and calibrates the model's three parameters per test with
//! CMA-ES ([`cmaes`]) or as closed-form expressions over temperature and
//! strain rate with genetic programming ([`gp`]). The [`workflows`] module
//! wires those pieces into the explicit (calibrate-then-regress) and implicit
//! (simulation-in-the-loop) calibration routes plus baselines and synthetic
//! benchmarks.
//!
//! All randomness flows from a single `u64` seed through [`rng::substream`];
//! every parallel code path reduces in a fixed order, so results are
//! bit-for-bit reproducible for a given seed regardless of thread count.

pub mod cmaes;
pub mod dataset;
pub mod error;
pub mod gp;
pub mod md2m;
pub mod metrics;
pub mod rng;
pub mod workflows;

pub use error::{Error, Result};
