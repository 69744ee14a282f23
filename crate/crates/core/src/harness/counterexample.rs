//! The two counter-example systems exercising the limits of the incidence
//! heuristic: a fully-known three-state ODE whose matrix is rank-deficient
//! yet whose constant states a PINN recovers, and a two-equation system with
//! full column rank whose states are fundamentally non-identifiable.

use super::incidence::incidence_report;
use super::metrics;
use crate::autodiff::{NodeId, Tape};
use crate::datagen::{integrate, IntegratorConfig};
use crate::net::{unit_scaling, Activation, Network, NetworkSpec, OutputActivation};
use crate::training::{
    train, AdamConfig, IdwConfig, LbfgsConfig, LossConfig, OptimizerSchedule, PinnModelDef,
    ResidualNodes, ResidualSpec, TargetedPoints, TrainConfig, TrainingError,
};
use serde::Serialize;

/// x1' = x1 x2 + x3, x2' = 0, x3' = 0.
struct Sm5Residual;

impl ResidualSpec for Sm5Residual {
    fn build(
        &self,
        tape: &mut Tape,
        outputs: &[NodeId],
        dots: &[NodeId],
        _controls: &[NodeId],
    ) -> Result<ResidualNodes, TrainingError> {
        let x1x2 = tape.mul(outputs[0], outputs[1]);
        let rhs1 = tape.add(x1x2, outputs[2]);
        let r1 = tape.sub(dots[0], rhs1);
        Ok(ResidualNodes {
            diff: vec![r1, dots[1], dots[2]],
            alg: vec![],
        })
    }
}

fn sm5_model() -> PinnModelDef {
    PinnModelDef {
        name: "counterexample-sm5".into(),
        input_names: vec!["t".into()],
        output_names: vec!["x_1".into(), "x_2".into(), "x_3".into()],
        n_diff_outputs: 3,
        measured_outputs: vec![0],
        control_inputs: vec![],
        input_bounds: vec![(0.0, 1.0)],
        output_scale: vec![1.0, 1.0, 1.0],
        residual: Some(Box::new(Sm5Residual)),
        init_pairs: vec![],
    }
}

/// Reference trajectory of the fully-known system from (1, 1, 2).
pub fn sm5_reference(grid_size: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let rhs = |_t: f64, x: &[f64], dx: &mut [f64]| {
        dx[0] = x[0] * x[1] + x[2];
        dx[1] = 0.0;
        dx[2] = 0.0;
    };
    let sol = integrate(
        &rhs,
        &[1.0, 1.0, 2.0],
        (0.0, 1.0),
        &IntegratorConfig {
            rtol: 1e-12,
            atol: 1e-14,
            grid_size,
            max_steps: 100_000,
        },
        None::<&fn(f64, &[f64]) -> bool>,
    )
    .expect("smooth reference system");
    (sol.times, sol.states)
}

#[derive(Debug, Serialize)]
pub struct Sm5Report {
    pub full_column_rank: bool,
    pub rendered_matrix: String,
    pub mape_x2_pct: f64,
    pub mape_x3_pct: f64,
    /// Weighted total and its raw terms at the last iterate.
    pub final_total_loss: f64,
    pub final_mse_data: f64,
    pub final_mse_physics: f64,
    pub final_mse_init: f64,
    pub final_lambdas: (f64, f64),
}

#[derive(Debug, Clone, Copy)]
pub struct CounterexampleBudget {
    pub adam_epochs: usize,
    pub lbfgs_iters: usize,
    pub collocation: usize,
}

impl Default for CounterexampleBudget {
    fn default() -> Self {
        Self {
            adam_epochs: 2000,
            lbfgs_iters: 600,
            collocation: 200,
        }
    }
}

fn counterexample_train_cfg(budget: &CounterexampleBudget) -> TrainConfig {
    TrainConfig {
        loss: LossConfig {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda_g: 1.0,
            idw: IdwConfig::default(),
        },
        schedule: OptimizerSchedule {
            adam: AdamConfig {
                epochs: budget.adam_epochs,
                ..AdamConfig::default()
            },
            lbfgs: LbfgsConfig {
                max_iters: budget.lbfgs_iters,
                ..LbfgsConfig::default()
            },
        },
    }
}

/// Trains the rank-deficient counter-example end to end; the PINN still
/// recovers both constant states.
pub fn sm5_demo(seed: u64, budget: &CounterexampleBudget) -> Result<Sm5Report, TrainingError> {
    let model = sm5_model();
    let (times, states) = sm5_reference(101);
    let data = TargetedPoints {
        inputs: times.iter().map(|t| vec![*t]).collect(),
        target_outputs: vec![0],
        targets: states.iter().map(|s| vec![s[0]]).collect(),
    };
    let init = TargetedPoints {
        inputs: vec![vec![0.0]],
        target_outputs: vec![0],
        targets: vec![vec![1.0]],
    };
    let colloc: Vec<Vec<f64>> = (0..budget.collocation)
        .map(|k| vec![k as f64 / (budget.collocation - 1) as f64])
        .collect();
    let net = Network::init(
        NetworkSpec {
            input_dim: 1,
            hidden_widths: vec![32, 32],
            output_dim: 3,
            hidden_activation: Activation::Tanh,
            output_activation: OutputActivation::Identity,
            seed,
        },
        unit_scaling(1, 3),
    )?;
    let result = train(&net, &model, &data, &init, &colloc, &counterexample_train_cfg(budget))?;

    let mut x2_pred = Vec::new();
    let mut x3_pred = Vec::new();
    for t in &times {
        let out = result.net.predict(&[*t])?;
        x2_pred.push(out[1]);
        x3_pred.push(out[2]);
    }
    let truth_x2: Vec<f64> = states.iter().map(|s| s[1]).collect();
    let truth_x3: Vec<f64> = states.iter().map(|s| s[2]).collect();
    let report = incidence_report("counterexample-sm5", "", 0).expect("registered");
    let last = result.history.last();
    Ok(Sm5Report {
        full_column_rank: report.full_column_rank,
        rendered_matrix: report.rendered,
        mape_x2_pct: metrics::mape(&x2_pred, &truth_x2).expect("nonzero truths"),
        mape_x3_pct: metrics::mape(&x3_pred, &truth_x3).expect("nonzero truths"),
        final_total_loss: last.map(|r| r.total).unwrap_or(f64::NAN),
        final_mse_data: last.map(|r| r.mse_data).unwrap_or(f64::NAN),
        final_mse_physics: last.map(|r| r.mse_physics).unwrap_or(f64::NAN),
        final_mse_init: last.map(|r| r.mse_init).unwrap_or(f64::NAN),
        final_lambdas: result.final_lambdas,
    })
}

/// Two dependent equations for the same derivative; the second is the
/// expanded square root of the first's square.
struct Sm6Residual;

impl ResidualSpec for Sm6Residual {
    fn build(
        &self,
        tape: &mut Tape,
        outputs: &[NodeId],
        dots: &[NodeId],
        _controls: &[NodeId],
    ) -> Result<ResidualNodes, TrainingError> {
        let (x1, x2, y) = (outputs[0], outputs[1], outputs[2]);
        let sum = tape.add(x1, x2);
        let sum = tape.add(sum, y);
        let r1 = tape.sub(dots[0], sum);
        // x1^2 + x2^2 + y^2 + 2 x1 x2 + 2 x1 y + 2 x2 y, then its root.
        let x12 = tape.mul(x1, x1);
        let x22 = tape.mul(x2, x2);
        let y2 = tape.mul(y, y);
        let x1x2 = tape.mul(x1, x2);
        let x1y = tape.mul(x1, y);
        let x2y = tape.mul(x2, y);
        let mut acc = tape.add(x12, x22);
        acc = tape.add(acc, y2);
        for cross in [x1x2, x1y, x2y] {
            let double = tape.scale(cross, 2.0);
            acc = tape.add(acc, double);
        }
        let root = tape.sqrt(acc);
        let r2 = tape.sub(dots[0], root);
        Ok(ResidualNodes {
            diff: vec![r1, r2],
            alg: vec![],
        })
    }
}

fn sm6_model() -> PinnModelDef {
    PinnModelDef {
        name: "counterexample-sm6".into(),
        input_names: vec!["t".into()],
        output_names: vec!["x_1".into(), "x_2".into(), "y".into()],
        n_diff_outputs: 2,
        measured_outputs: vec![2],
        control_inputs: vec![],
        input_bounds: vec![(0.0, 1.0)],
        output_scale: vec![1.0, 1.0, 1.0],
        residual: Some(Box::new(Sm6Residual)),
        init_pairs: vec![],
    }
}

#[derive(Debug, Serialize)]
pub struct Sm6Report {
    pub full_column_rank: bool,
    pub rendered_matrix: String,
    /// Per-seed: data fit on the measured state, percent.
    pub y_mape_pct: [f64; 2],
    /// Per-seed: worst self-consistency gap |x1 + x2 + y - dx1/dt| on the
    /// grid (finite-difference derivative), showing each seed solves the
    /// physics.
    pub physics_gap: [f64; 2],
    /// Cross-seed mean absolute differences: the non-uniqueness witness.
    pub x1_disagreement: f64,
    pub x2_disagreement: f64,
}

/// Trains the full-rank-but-unidentifiable system from two seeds. Both nets
/// satisfy physics and data, yet their x1/x2 estimates differ: full column
/// rank is not sufficient for estimability.
pub fn sm6_demo(
    seeds: (u64, u64),
    budget: &CounterexampleBudget,
) -> Result<Sm6Report, TrainingError> {
    let model = sm6_model();
    let n_grid = 101usize;
    let times: Vec<f64> = (0..n_grid).map(|k| k as f64 / (n_grid - 1) as f64).collect();
    // Measured data: y held at 1.
    let data = TargetedPoints {
        inputs: times.iter().map(|t| vec![*t]).collect(),
        target_outputs: vec![2],
        targets: vec![vec![1.0]; n_grid],
    };
    let init = TargetedPoints::default();
    let colloc: Vec<Vec<f64>> = (0..budget.collocation)
        .map(|k| vec![k as f64 / (budget.collocation - 1) as f64])
        .collect();

    let mut nets = Vec::new();
    for seed in [seeds.0, seeds.1] {
        let net = Network::init(
            NetworkSpec {
                input_dim: 1,
                hidden_widths: vec![32, 32],
                output_dim: 3,
                hidden_activation: Activation::Tanh,
                output_activation: OutputActivation::Identity,
                seed,
            },
            unit_scaling(1, 3),
        )?;
        let result = train(&net, &model, &data, &init, &colloc, &counterexample_train_cfg(budget))?;
        nets.push(result.net);
    }

    let mut y_mape = [0.0; 2];
    let mut gap = [0.0; 2];
    let mut series: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let h = 1e-5;
    for (i, net) in nets.iter().enumerate() {
        let mut x1 = Vec::new();
        let mut x2 = Vec::new();
        let mut y_pred = Vec::new();
        let mut worst = 0.0f64;
        for &t in &times {
            let out = net.predict(&[t])?;
            x1.push(out[0]);
            x2.push(out[1]);
            y_pred.push(out[2]);
            let tc = t.clamp(h, 1.0 - h);
            let up = net.predict(&[tc + h])?[0];
            let dn = net.predict(&[tc - h])?[0];
            let x1dot = (up - dn) / (2.0 * h);
            let at = net.predict(&[tc])?;
            worst = worst.max((at[0] + at[1] + at[2] - x1dot).abs());
        }
        y_mape[i] = metrics::mape(&y_pred, &vec![1.0; n_grid]).expect("unit truths");
        gap[i] = worst;
        series.push((x1, x2));
    }
    let disagreement = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
    };
    let report = incidence_report("counterexample-sm6", "", 0).expect("registered");
    Ok(Sm6Report {
        full_column_rank: report.full_column_rank,
        rendered_matrix: report.rendered,
        y_mape_pct: y_mape,
        physics_gap: gap,
        x1_disagreement: disagreement(&series[0].0, &series[1].0),
        x2_disagreement: disagreement(&series[0].1, &series[1].1),
    })
}
