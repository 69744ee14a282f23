//! Synthetic-measurement generation: Latin-hypercube designs, an adaptive
//! Dormand-Prince RK45 integrator with dense grid output and event-based
//! early termination, and dataset assembly with deterministic train/test
//! splits.

mod io;
mod lhs;
mod rk45;

pub use io::{load_dataset, write_dataset};
pub use lhs::{lhs, SampleDesign};
pub use rk45::{integrate, GridSolution, IntegratorConfig};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite right-hand side at t = {t}")]
    NonFiniteRhs { t: f64 },
    #[error("step size underflow at t = {t}: the problem looks too stiff for RK45")]
    Stiffness { t: f64 },
    #[error("stop predicate already holds at the initial state")]
    StoppedAtStart,
    #[error("could not draw a valid initial state after {0} attempts")]
    DrawRejected(usize),
    #[error("dataset i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset parse failed: {0}")]
    Parse(String),
}

/// One reference trajectory: uniform time grid (seconds), recorded state
/// columns, and the constant control/boundary inputs it was generated with.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Row-major: states[k] is the state vector at times[k].
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<f64>,
    pub extras: Vec<f64>,
    pub initial: Vec<f64>,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub model: String,
    pub state_names: Vec<String>,
    pub control_names: Vec<String>,
    pub extra_names: Vec<String>,
    pub seed: u64,
    pub bounds: Vec<(f64, f64)>,
    pub train: Vec<Trajectory>,
    pub test: Vec<Trajectory>,
    /// Model parameters and scaling constants, recorded for provenance.
    pub provenance: serde_json::Value,
}

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub rtol: f64,
    pub atol: f64,
    pub grid_size: usize,
    /// Horizon in seconds; trajectories start at 0.
    pub t_end: f64,
}

#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub n_total: usize,
    pub n_test: usize,
    pub n_train: usize,
    pub seed: u64,
    pub sim: SimConfig,
}

/// A process model that can synthesize reference trajectories. Each draw is
/// one row of the Latin-hypercube design over
/// `[initial states..., controls..., extras...]`.
pub trait DatasetModel {
    fn name(&self) -> String;
    fn state_names(&self) -> Vec<String>;
    fn control_names(&self) -> Vec<String>;
    fn extra_names(&self) -> Vec<String>;
    fn n_initial(&self) -> usize;
    fn draw_bounds(&self) -> Vec<(f64, f64)>;
    /// Rejects physically inconsistent corner draws (e.g. phase ordering).
    fn draw_ok(&self, _draw: &[f64]) -> bool {
        true
    }
    fn simulate(&self, draw: &[f64], sim: &SimConfig) -> Result<Trajectory, DatagenError>;
    fn provenance(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}

/// Deterministic seed derivation for independent RNG streams.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const LHS_TAG: u64 = 0x1;
const SPLIT_TAG: u64 = 0x2;
const REDRAW_TAG: u64 = 0x3;

/// Generates `n_total` trajectories with LHS-drawn initial states and
/// constant controls, then splits them into disjoint train/test sets by a
/// seeded shuffle. Low- and high-data regimes differ only in `n_train`.
pub fn build_dataset(
    model: &dyn DatasetModel,
    cfg: &DatasetConfig,
) -> Result<Dataset, DatagenError> {
    if cfg.n_test + cfg.n_train > cfg.n_total {
        return Err(DatagenError::InvalidArgument(format!(
            "n_test {} + n_train {} exceeds n_total {}",
            cfg.n_test, cfg.n_train, cfg.n_total
        )));
    }
    let bounds = model.draw_bounds();
    let design = SampleDesign {
        n_points: cfg.n_total,
        bounds: bounds.clone(),
        seed: mix_seed(cfg.seed, LHS_TAG),
    };
    let mut draws = lhs(&design)?;
    for (i, draw) in draws.iter_mut().enumerate() {
        if model.draw_ok(draw) {
            continue;
        }
        // Redraw the whole row uniformly from its own stream; keeps the rest
        // of the design untouched and the build deterministic.
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, REDRAW_TAG ^ (i as u64) << 8));
        let mut ok = false;
        for _ in 0..100 {
            for (d, (lo, hi)) in draw.iter_mut().zip(&bounds) {
                use rand::Rng;
                *d = rng.random_range(*lo..*hi);
            }
            if model.draw_ok(draw) {
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(DatagenError::DrawRejected(100));
        }
    }

    let mut trajectories = Vec::with_capacity(cfg.n_total);
    for draw in &draws {
        trajectories.push(model.simulate(draw, &cfg.sim)?);
    }

    let mut order: Vec<usize> = (0..cfg.n_total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, SPLIT_TAG));
    order.shuffle(&mut rng);
    let test_idx: Vec<usize> = order[..cfg.n_test].to_vec();
    let train_idx: Vec<usize> = order[cfg.n_test..cfg.n_test + cfg.n_train].to_vec();

    let take = |idx: &[usize]| -> Vec<Trajectory> {
        idx.iter().map(|&i| trajectories[i].clone()).collect()
    };
    Ok(Dataset {
        model: model.name(),
        state_names: model.state_names(),
        control_names: model.control_names(),
        extra_names: model.extra_names(),
        seed: cfg.seed,
        bounds,
        train: take(&train_idx),
        test: take(&test_idx),
        provenance: model.provenance(),
    })
}
