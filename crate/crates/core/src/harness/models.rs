//! Bridges from the process models to the generic trainer: network/variant
//! layouts, dimensionless point sets, collocation designs, and truth columns
//! for scoring estimated states.

use crate::autodiff::{NodeId, Tape};
use crate::cstr::{self, CstrParams, CstrScaling, CstrVariant};
use crate::datagen::{lhs, mix_seed, SampleDesign, Trajectory};
use crate::net::{Activation, Network, NetworkSpec, OutputActivation, ScalingSpec};
use crate::separator::{self, SeparatorParams, SeparatorScaling};
use crate::training::{PinnModelDef, ResidualNodes, ResidualSpec, TargetedPoints, TrainingError};

const COLLOCATION_TAG: u64 = 0x10;
const INIT_TAG: u64 = 0x11;
const RUN_TAG: u64 = 0x12;

/// Derived seed for run `run_index` of a data set.
pub fn run_seed(dataset_seed: u64, run_index: usize) -> u64 {
    mix_seed(dataset_seed, RUN_TAG ^ ((run_index as u64) << 16))
}

// ---------------------------------------------------------------- CSTR --

struct CstrResidual {
    variant: CstrVariant,
    scaling: CstrScaling,
    params: CstrParams,
}

impl ResidualSpec for CstrResidual {
    fn build(
        &self,
        tape: &mut Tape,
        outputs: &[NodeId],
        output_dots: &[NodeId],
        controls: &[NodeId],
    ) -> Result<ResidualNodes, TrainingError> {
        let diff = cstr::residuals(
            tape,
            self.variant,
            outputs,
            output_dots,
            controls,
            &self.scaling,
            &self.params,
        )
        .map_err(|e| TrainingError::Residual(e.to_string()))?;
        Ok(ResidualNodes { diff, alg: vec![] })
    }
}

/// Differential-state estimation settings: 0 = all measured, 1/2/3 drop
/// cA/T/TK from the measured set (PINN-C only).
pub fn cstr_unmeasured_state(setting: usize) -> Option<usize> {
    match setting {
        0 => None,
        1 => Some(0),
        2 => Some(2),
        3 => Some(3),
        other => panic!("setting {other} out of range"),
    }
}

/// Model layout for a CSTR variant; `variant = None` is the vanilla ANN.
pub fn cstr_model(variant: Option<CstrVariant>, setting: usize) -> PinnModelDef {
    let params = CstrParams::default();
    let scaling = CstrScaling::from_params(&params);
    let unmeasured = cstr_unmeasured_state(setting);
    assert!(
        unmeasured.is_none() || variant == Some(CstrVariant::PinnC),
        "settings 1-3 apply to the rate-constant variant only"
    );
    let ranges = cstr::operating_ranges();
    let state_scale = [params.c_a_in, params.c_a_in, params.t_in, params.t_in];
    let state_names = ["c_A", "c_B", "T", "T_K"];

    let mut input_names = vec!["t".to_string()];
    let mut input_bounds = vec![(0.0, 1.0)];
    let mut init_pairs = Vec::new();
    for i in 0..4 {
        if unmeasured == Some(i) {
            continue;
        }
        init_pairs.push((input_names.len(), i));
        input_names.push(format!("{}0", state_names[i]));
        input_bounds.push((ranges[i].0 / state_scale[i], ranges[i].1 / state_scale[i]));
    }
    let control_inputs = vec![input_names.len(), input_names.len() + 1];
    input_names.push("q".into());
    input_bounds.push((ranges[4].0 / scaling.q_f, ranges[4].1 / scaling.q_f));
    input_names.push("Qdot_K".into());
    // Qdot_K,f is negative, so the dimensionless control spans [0, 1].
    input_bounds.push((0.0, 1.0));

    let (output_names, output_scale, residual): (Vec<String>, Vec<f64>, Option<Box<dyn ResidualSpec>>) =
        match variant {
            None => (
                state_names.iter().map(|s| s.to_string()).collect(),
                state_scale.to_vec(),
                None,
            ),
            Some(v) => {
                let mut scale = state_scale.to_vec();
                match v {
                    CstrVariant::PinnA | CstrVariant::PinnB => {
                        let r_scale = scaling.k_f * params.c_a_in;
                        scale.extend(vec![r_scale; v.n_outputs() - 4]);
                    }
                    CstrVariant::PinnC => {
                        scale.extend([scaling.k_f, scaling.k_f, scaling.k_f / params.c_a_in]);
                    }
                }
                (
                    v.output_names(),
                    scale,
                    Some(Box::new(CstrResidual {
                        variant: v,
                        scaling: scaling.clone(),
                        params: params.clone(),
                    }) as Box<dyn ResidualSpec>),
                )
            }
        };

    let measured_outputs: Vec<usize> = (0..4).filter(|i| unmeasured != Some(*i)).collect();
    PinnModelDef {
        name: match variant {
            None => "cstr-vanilla".into(),
            Some(CstrVariant::PinnA) => "cstr-pinn-a".into(),
            Some(CstrVariant::PinnB) => "cstr-pinn-b".into(),
            Some(CstrVariant::PinnC) => format!("cstr-pinn-c-s{setting}"),
        },
        input_names,
        output_names,
        n_diff_outputs: 4,
        measured_outputs,
        control_inputs,
        input_bounds,
        output_scale,
        residual,
        init_pairs,
    }
}

/// One model-unit input row for a CSTR trajectory at grid time `t_j`.
fn cstr_input_row(model: &PinnModelDef, traj: &Trajectory, t_seconds: f64) -> Vec<f64> {
    let params = CstrParams::default();
    let scaling = CstrScaling::from_params(&params);
    let state_scale = [params.c_a_in, params.c_a_in, params.t_in, params.t_in];
    let mut row = Vec::with_capacity(model.n_inputs());
    row.push(t_seconds / scaling.tau_s);
    for &(input_idx, out_idx) in &model.init_pairs {
        debug_assert_eq!(row.len(), input_idx);
        row.push(traj.initial[out_idx] / state_scale[out_idx]);
    }
    row.push(traj.controls[0] / scaling.q_f);
    row.push(traj.controls[1] / scaling.q_dot_k_f);
    row
}

/// Flattens train trajectories into measurement points, dimensionless.
pub fn cstr_data_points(model: &PinnModelDef, trajectories: &[Trajectory]) -> TargetedPoints {
    let params = CstrParams::default();
    let state_scale = [params.c_a_in, params.c_a_in, params.t_in, params.t_in];
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for traj in trajectories {
        for (k, &t) in traj.times.iter().enumerate() {
            inputs.push(cstr_input_row(model, traj, t));
            targets.push(
                model
                    .measured_outputs
                    .iter()
                    .map(|&o| traj.states[k][o] / state_scale[o])
                    .collect(),
            );
        }
    }
    TargetedPoints {
        inputs,
        target_outputs: model.measured_outputs.clone(),
        targets,
    }
}

/// Truth matrix (grid x outputs) for a CSTR trajectory, dimensional units.
/// Hidden algebraic states come from the reference kinetics along the
/// recorded temperature.
pub fn cstr_truths(variant: Option<CstrVariant>, traj: &Trajectory) -> Vec<Vec<f64>> {
    let params = CstrParams::default();
    let mut rows = Vec::with_capacity(traj.states.len());
    for state in &traj.states {
        let mut row = state.clone();
        let (k1, k2, k3) = cstr::arrhenius(state[2], &params).expect("recorded T > 0");
        match variant {
            None => {}
            Some(CstrVariant::PinnA) => {
                let (c_a, c_b) = (state[0], state[1]);
                row.push(-k1 * c_a - k3 * c_a * c_a);
                row.push(k1 * c_a - k2 * c_b);
            }
            Some(CstrVariant::PinnB) => {
                let (c_a, c_b) = (state[0], state[1]);
                row.push(k1 * c_a);
                row.push(k2 * c_b);
                row.push(k3 * c_a * c_a);
            }
            Some(CstrVariant::PinnC) => {
                row.push(k1);
                row.push(k2);
                row.push(k3);
            }
        }
        rows.push(row);
    }
    rows
}

/// Model-unit input rows over a whole test trajectory.
pub fn cstr_eval_inputs(model: &PinnModelDef, traj: &Trajectory) -> Vec<Vec<f64>> {
    traj.times
        .iter()
        .map(|&t| cstr_input_row(model, traj, t))
        .collect()
}

// ----------------------------------------------------------- separator --

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparatorVariant {
    Vanilla,
    Base,
    D32,
    D32Rv,
}

impl SeparatorVariant {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "vanilla" => Some(Self::Vanilla),
            "pinn-base" => Some(Self::Base),
            "pinn-d32" => Some(Self::D32),
            "pinn-d32-rv" => Some(Self::D32Rv),
            _ => None,
        }
    }

    fn n_extras(self) -> usize {
        match self {
            Self::Vanilla | Self::Base => 0,
            Self::D32 => 1,
            Self::D32Rv => 2,
        }
    }
}

struct SeparatorResidual {
    scaling: SeparatorScaling,
    params: SeparatorParams,
}

impl ResidualSpec for SeparatorResidual {
    fn build(
        &self,
        tape: &mut Tape,
        outputs: &[NodeId],
        output_dots: &[NodeId],
        controls: &[NodeId],
    ) -> Result<ResidualNodes, TrainingError> {
        let diff = separator::residuals(
            tape,
            outputs,
            output_dots,
            controls,
            &self.scaling,
            &self.params,
        )
        .map_err(|e| TrainingError::Residual(e.to_string()))?;
        Ok(ResidualNodes { diff, alg: vec![] })
    }
}

pub fn separator_model(variant: SeparatorVariant) -> PinnModelDef {
    let params = SeparatorParams::default();
    let scaling = SeparatorScaling::from_params(&params);
    let r = separator::operating_ranges();
    let two_r = scaling.two_r;
    let qf = scaling.q_f;

    // Inputs: t, h_aq(t0), h_DPZ(t0), controls, then measured properties.
    let mut input_names: Vec<String> = vec![
        "t".into(),
        "h_aq0".into(),
        "h_DPZ0".into(),
        "Vdot_aq_out".into(),
        "Vdot_org_out".into(),
    ];
    let mut input_bounds = vec![
        (0.0, 1.0),
        (r[1].0 / two_r, r[1].1 / two_r),
        (r[0].0 / two_r, r[0].1 / two_r),
        (r[2].0 / qf, r[2].1 / qf),
        (r[3].0 / qf, r[3].1 / qf),
    ];
    if variant.n_extras() >= 1 {
        input_names.push("d32".into());
        input_bounds.push(r[4]);
    }
    if variant.n_extras() >= 2 {
        input_names.push("r_v".into());
        input_bounds.push(r[5]);
    }

    let pinn = variant != SeparatorVariant::Vanilla;
    let output_names: Vec<String> = if pinn {
        vec![
            "h_DPZ".into(),
            "h_aq".into(),
            "Vdot_c".into(),
            "Vdot_s".into(),
        ]
    } else {
        vec!["h_DPZ".into(), "h_aq".into()]
    };
    let output_scale = if pinn {
        vec![two_r, two_r, qf, qf]
    } else {
        vec![two_r, two_r]
    };
    PinnModelDef {
        name: match variant {
            SeparatorVariant::Vanilla => "separator-vanilla".into(),
            SeparatorVariant::Base => "separator-pinn-base".into(),
            SeparatorVariant::D32 => "separator-pinn-d32".into(),
            SeparatorVariant::D32Rv => "separator-pinn-d32-rv".into(),
        },
        input_names,
        output_names,
        n_diff_outputs: 2,
        measured_outputs: vec![0, 1],
        control_inputs: vec![3, 4],
        input_bounds,
        output_scale,
        residual: if pinn {
            Some(Box::new(SeparatorResidual {
                scaling,
                params,
            }))
        } else {
            None
        },
        // Input h_aq0 targets output 1, input h_DPZ0 targets output 0.
        init_pairs: vec![(1, 1), (2, 0)],
    }
}

fn separator_input_row(model: &PinnModelDef, traj: &Trajectory, t_seconds: f64) -> Vec<f64> {
    let params = SeparatorParams::default();
    let scaling = SeparatorScaling::from_params(&params);
    let mut row = vec![
        t_seconds / scaling.tau_s,
        traj.initial[1] / scaling.two_r,
        traj.initial[0] / scaling.two_r,
        traj.controls[0] / scaling.q_f,
        traj.controls[1] / scaling.q_f,
    ];
    let n_extras = model.n_inputs() - 5;
    for e in 0..n_extras {
        row.push(traj.extras[e]);
    }
    row
}

pub fn separator_data_points(model: &PinnModelDef, trajectories: &[Trajectory]) -> TargetedPoints {
    let params = SeparatorParams::default();
    let scaling = SeparatorScaling::from_params(&params);
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for traj in trajectories {
        for (k, &t) in traj.times.iter().enumerate() {
            inputs.push(separator_input_row(model, traj, t));
            targets.push(vec![
                traj.states[k][0] / scaling.two_r,
                traj.states[k][1] / scaling.two_r,
            ]);
        }
    }
    TargetedPoints {
        inputs,
        target_outputs: vec![0, 1],
        targets,
    }
}

/// Truths (grid x outputs) for a separator trajectory; the hidden rates were
/// recorded during data generation.
pub fn separator_truths(pinn: bool, traj: &Trajectory) -> Vec<Vec<f64>> {
    traj.states
        .iter()
        .map(|s| if pinn { s.clone() } else { s[..2].to_vec() })
        .collect()
}

pub fn separator_eval_inputs(model: &PinnModelDef, traj: &Trajectory) -> Vec<Vec<f64>> {
    traj.times
        .iter()
        .map(|&t| separator_input_row(model, traj, t))
        .collect()
}

// ------------------------------------------------------------- generic --

/// Collocation design over the model's full input box (time included).
pub fn collocation_points(
    model: &PinnModelDef,
    n_points: usize,
    dataset_seed: u64,
) -> Vec<Vec<f64>> {
    lhs(&SampleDesign {
        n_points,
        bounds: model.input_bounds.clone(),
        seed: mix_seed(dataset_seed, COLLOCATION_TAG),
    })
    .expect("collocation design")
}

/// Initial-condition design: everything but time sampled, t pinned to 0;
/// targets are the sampled initial values of the measured states.
pub fn init_points(model: &PinnModelDef, n_points: usize, dataset_seed: u64) -> TargetedPoints {
    let rest = lhs(&SampleDesign {
        n_points,
        bounds: model.input_bounds[1..].to_vec(),
        seed: mix_seed(dataset_seed, INIT_TAG),
    })
    .expect("init design");
    let mut inputs = Vec::with_capacity(n_points);
    let mut targets = Vec::with_capacity(n_points);
    let mut target_outputs = Vec::new();
    for &(_, out) in &model.init_pairs {
        target_outputs.push(out);
    }
    for row in rest {
        let mut full = Vec::with_capacity(model.n_inputs());
        full.push(0.0);
        full.extend(row);
        targets.push(model.init_pairs.iter().map(|&(inp, _)| full[inp]).collect());
        inputs.push(full);
    }
    TargetedPoints {
        inputs,
        target_outputs,
        targets,
    }
}

/// Network over the model's layout: hidden widths per regime, tanh hidden
/// activation, sigmoid outputs for the separator models only.
pub fn build_network(
    model: &PinnModelDef,
    hidden: &[usize],
    sigmoid_output: bool,
    seed: u64,
) -> Network {
    let spec = NetworkSpec {
        input_dim: model.n_inputs(),
        hidden_widths: hidden.to_vec(),
        output_dim: model.n_outputs(),
        hidden_activation: Activation::Tanh,
        output_activation: if sigmoid_output {
            OutputActivation::Sigmoid
        } else {
            OutputActivation::Identity
        },
        seed,
    };
    let scaling = ScalingSpec {
        input_lo: model.input_bounds.iter().map(|b| b.0).collect(),
        input_hi: model.input_bounds.iter().map(|b| b.1).collect(),
        output_scale: model.output_scale.clone(),
    };
    Network::init(spec, scaling).expect("layout-consistent network")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{build_dataset, DatasetConfig, SimConfig};

    #[test]
    fn cstr_pinn_c_layout() {
        let m = cstr_model(Some(CstrVariant::PinnC), 0);
        assert_eq!(m.n_inputs(), 7);
        assert_eq!(m.n_outputs(), 7);
        assert_eq!(m.measured_outputs, vec![0, 1, 2, 3]);
        assert_eq!(m.control_inputs, vec![5, 6]);
        assert_eq!(m.init_pairs.len(), 4);
    }

    #[test]
    fn cstr_setting_2_drops_temperature_input_and_measurement() {
        let m = cstr_model(Some(CstrVariant::PinnC), 2);
        assert_eq!(m.n_inputs(), 6);
        assert!(!m.input_names.iter().any(|n| n == "T0"));
        assert_eq!(m.measured_outputs, vec![0, 1, 3]);
        // T (output 2) still predicted, just not measured.
        assert_eq!(m.n_outputs(), 7);
    }

    #[test]
    fn separator_variant_inputs_match_published_table() {
        assert_eq!(separator_model(SeparatorVariant::Vanilla).n_inputs(), 5);
        assert_eq!(separator_model(SeparatorVariant::Base).n_inputs(), 5);
        assert_eq!(separator_model(SeparatorVariant::D32).n_inputs(), 6);
        assert_eq!(separator_model(SeparatorVariant::D32Rv).n_inputs(), 7);
        assert_eq!(separator_model(SeparatorVariant::Vanilla).n_outputs(), 2);
        assert_eq!(separator_model(SeparatorVariant::Base).n_outputs(), 4);
    }

    #[test]
    fn data_points_round_trip_dimensionless_ranges() {
        let model_def = cstr_model(Some(CstrVariant::PinnC), 0);
        let ds = build_dataset(
            &crate::cstr::CstrDataset::default(),
            &DatasetConfig {
                n_total: 4,
                n_test: 1,
                n_train: 3,
                seed: 3,
                sim: SimConfig {
                    rtol: 1e-8,
                    atol: 1e-10,
                    grid_size: 11,
                    t_end: 60.0,
                },
            },
        )
        .unwrap();
        let pts = cstr_data_points(&model_def, &ds.train);
        assert_eq!(pts.inputs.len(), 3 * 11);
        for row in &pts.inputs {
            assert_eq!(row.len(), 7);
            assert!(row[0] >= 0.0 && row[0] <= 1.0);
            // dimensionless concentrations near [0.3, 0.6]
            assert!(row[1] > 0.3 && row[1] < 0.6);
        }
        for t in &pts.targets {
            assert_eq!(t.len(), 4);
        }
    }

    #[test]
    fn init_points_target_their_own_inputs() {
        let model_def = cstr_model(Some(CstrVariant::PinnC), 0);
        let pts = init_points(&model_def, 16, 5);
        assert_eq!(pts.inputs.len(), 16);
        for (inp, tgt) in pts.inputs.iter().zip(&pts.targets) {
            assert_eq!(inp[0], 0.0);
            for (k, &(input_idx, _)) in model_def.init_pairs.iter().enumerate() {
                assert_eq!(tgt[k], inp[input_idx]);
            }
        }
    }

    #[test]
    fn collocation_respects_bounds() {
        let model_def = separator_model(SeparatorVariant::D32Rv);
        let pts = collocation_points(&model_def, 50, 9);
        for row in &pts {
            for (v, (lo, hi)) in row.iter().zip(&model_def.input_bounds) {
                assert!(v >= lo && v <= hi);
            }
        }
    }
}
