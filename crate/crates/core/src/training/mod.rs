//! PINN training: loss assembly over the autodiff tape, full-batch Adam
//! followed by L-BFGS with strong-Wolfe line search, and inverse-Dirichlet
//! dynamic loss weighting during the Adam phase.

mod adam;
mod idw;
mod lbfgs;
mod loss;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use idw::{idw_update, IdwConfig};
pub use lbfgs::{lbfgs_minimize, LbfgsConfig, LbfgsStatus, LbfgsTrace};
pub use loss::{
    loss_data, loss_init, loss_physics, loss_vanilla, LossParts, PinnLossEvaluator,
    ResidualNodes, ResidualSpec, TargetedPoints,
};

use crate::net::Network;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error("autodiff failure: {0}")]
    Autodiff(#[from] crate::autodiff::AdError),
    #[error("network failure: {0}")]
    Net(#[from] crate::net::NetError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite gradient at epoch {epoch}")]
    NonFiniteGradient { epoch: usize },
    #[error("loss diverged at epoch {epoch} (total = {total})")]
    Diverged {
        epoch: usize,
        total: f64,
        history: Vec<HistoryRow>,
    },
    #[error("residual construction failed: {0}")]
    Residual(String),
}

/// A PINN problem shape: which inputs and outputs the network has, which
/// outputs carry measurement data, and how residuals are built. Input 0 is
/// always the time coordinate.
pub struct PinnModelDef {
    pub name: String,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    /// Outputs 0..n_diff_outputs are differential states, the rest algebraic.
    pub n_diff_outputs: usize,
    pub measured_outputs: Vec<usize>,
    /// Input indices handed to the residual builder as controls.
    pub control_inputs: Vec<usize>,
    /// Model-unit bounds per input: network normalization and collocation
    /// sampling both draw from these.
    pub input_bounds: Vec<(f64, f64)>,
    /// Redimensionalization factor per output.
    pub output_scale: Vec<f64>,
    /// Physics residuals; `None` for the vanilla ANN.
    pub residual: Option<Box<dyn ResidualSpec>>,
    /// (input index, output index) pairs tying a measured differential
    /// state's initial-value input to its output, for the init loss.
    pub init_pairs: Vec<(usize, usize)>,
}

impl PinnModelDef {
    pub fn n_inputs(&self) -> usize {
        self.input_names.len()
    }
    pub fn n_outputs(&self) -> usize {
        self.output_names.len()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_g: f64,
    pub idw: IdwConfig,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda_g: 1.0,
            idw: IdwConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerSchedule {
    pub adam: AdamConfig,
    pub lbfgs: LbfgsConfig,
}

impl Default for OptimizerSchedule {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            lbfgs: LbfgsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Adam,
    Lbfgs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub phase: Phase,
    pub mse_data: f64,
    pub mse_physics: f64,
    pub mse_init: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub total: f64,
}

pub fn history_csv(rows: &[HistoryRow]) -> String {
    let mut out = String::from("epoch,phase,mse_data,mse_physics,mse_init,lambda1,lambda2,total\n");
    for r in rows {
        let phase = match r.phase {
            Phase::Adam => "adam",
            Phase::Lbfgs => "lbfgs",
        };
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.epoch, phase, r.mse_data, r.mse_physics, r.mse_init, r.lambda1, r.lambda2, r.total
        ));
    }
    out
}

#[derive(Debug)]
pub struct TrainResult {
    pub net: Network,
    pub history: Vec<HistoryRow>,
    /// Weights frozen at the Adam -> L-BFGS switch.
    pub final_lambdas: (f64, f64),
    pub lbfgs_status: Option<LbfgsStatus>,
}

/// Full-batch Adam with IDW updates, then L-BFGS with frozen weights.
/// Deterministic under a fixed network seed and fixed point sets.
pub fn train(
    net: &Network,
    model: &PinnModelDef,
    data: &TargetedPoints,
    init: &TargetedPoints,
    collocation: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<TrainResult, TrainingError> {
    let evaluator = PinnLossEvaluator::new(net, model, data, init, collocation, cfg.loss.lambda_g);
    let mut params = net.params.clone();
    let mut lambda1 = cfg.loss.lambda1;
    let mut lambda2 = cfg.loss.lambda2;
    let has_physics = model.residual.is_some() && !collocation.is_empty();
    let has_init = !init.inputs.is_empty();
    let mut history = Vec::new();

    let mut adam_state = AdamState::new(params.len());
    for epoch in 0..cfg.schedule.adam.epochs {
        let parts = evaluator.eval(&params)?;
        let total = parts.total(lambda1, lambda2);
        if !total.is_finite() {
            return Err(TrainingError::Diverged {
                epoch,
                total,
                history,
            });
        }
        if cfg.loss.idw.enabled && epoch % cfg.loss.idw.update_period == 0 {
            let (l1, l2) = idw_update(
                &parts,
                has_physics,
                has_init,
                lambda1,
                lambda2,
                cfg.loss.idw.smoothing,
            );
            lambda1 = l1;
            lambda2 = l2;
        }
        let grad = parts.total_gradient(lambda1, lambda2);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(TrainingError::NonFiniteGradient { epoch });
        }
        adam_step(&mut params, &grad, &mut adam_state, &cfg.schedule.adam);
        history.push(HistoryRow {
            epoch,
            phase: Phase::Adam,
            mse_data: parts.data,
            mse_physics: parts.physics,
            mse_init: parts.init,
            lambda1,
            lambda2,
            total,
        });
    }

    // Weights stay frozen for the second-order phase.
    let mut lbfgs_status = None;
    if cfg.schedule.lbfgs.max_iters > 0 {
        let adam_epochs = cfg.schedule.adam.epochs;
        let last_parts = std::cell::RefCell::new(None::<LossParts>);
        let mut objective = |p: &[f64]| -> Result<(f64, Vec<f64>), TrainingError> {
            let parts = evaluator.eval(p)?;
            let f = parts.total(lambda1, lambda2);
            let g = parts.total_gradient(lambda1, lambda2);
            *last_parts.borrow_mut() = Some(parts);
            Ok((f, g))
        };
        let mut rows: Vec<HistoryRow> = Vec::new();
        let (new_params, trace) = lbfgs_minimize(
            &mut objective,
            params.clone(),
            &cfg.schedule.lbfgs,
            |iter, _p, f| {
                let parts = last_parts.borrow();
                let parts = parts.as_ref().expect("iterate recorded after an eval");
                rows.push(HistoryRow {
                    epoch: adam_epochs + iter,
                    phase: Phase::Lbfgs,
                    mse_data: parts.data,
                    mse_physics: parts.physics,
                    mse_init: parts.init,
                    lambda1,
                    lambda2,
                    total: f,
                });
            },
        )?;
        params = new_params;
        history.extend(rows);
        lbfgs_status = Some(trace.status);
    }

    let mut trained = net.clone();
    trained.params = params;
    Ok(TrainResult {
        net: trained,
        history,
        final_lambdas: (lambda1, lambda2),
        lbfgs_status,
    })
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossConfig,
    pub schedule: OptimizerSchedule,
}
