//! Loss terms over the tape. Each term builds its graph once per evaluation
//! (one network replica plus targets or residuals), then runs every point
//! through it sequentially, accumulating value and parameter gradient in a
//! fixed order.

use super::{PinnModelDef, TrainingError};
use crate::autodiff::{NodeId, Tape};
use crate::net::Network;

/// Points with measurement targets: `inputs[k]` is a full model-unit input
/// vector, `targets[k]` holds one value per entry of `target_outputs`.
#[derive(Debug, Clone, Default)]
pub struct TargetedPoints {
    pub inputs: Vec<Vec<f64>>,
    pub target_outputs: Vec<usize>,
    pub targets: Vec<Vec<f64>>,
}

/// Physics residual nodes, split into differential and algebraic groups for
/// the two normalizers of the physics loss.
pub struct ResidualNodes {
    pub diff: Vec<NodeId>,
    pub alg: Vec<NodeId>,
}

/// Builds the residual graph for one collocation point from the network's
/// output and time-derivative nodes plus the control input nodes.
pub trait ResidualSpec {
    fn build(
        &self,
        tape: &mut Tape,
        outputs: &[NodeId],
        output_dots: &[NodeId],
        controls: &[NodeId],
    ) -> Result<ResidualNodes, TrainingError>;
}

/// Per-term loss values and parameter gradients of one full-batch evaluation.
#[derive(Debug, Clone)]
pub struct LossParts {
    pub data: f64,
    pub physics: f64,
    pub init: f64,
    pub g_data: Vec<f64>,
    pub g_physics: Vec<f64>,
    pub g_init: Vec<f64>,
}

impl LossParts {
    pub fn total(&self, lambda1: f64, lambda2: f64) -> f64 {
        self.data + lambda1 * self.physics + lambda2 * self.init
    }

    pub fn total_gradient(&self, lambda1: f64, lambda2: f64) -> Vec<f64> {
        let mut g = self.g_data.clone();
        for i in 0..g.len() {
            g[i] += lambda1 * self.g_physics[i] + lambda2 * self.g_init[i];
        }
        g
    }
}

/// Squared-mismatch graph: network plus one target input per scored output,
/// loss normalized separately over the differential and algebraic groups.
struct MismatchTape {
    tape: Tape,
    loss: NodeId,
    n_model_inputs: usize,
}

fn build_mismatch_tape(
    net: &Network,
    model: &PinnModelDef,
    points: &TargetedPoints,
) -> MismatchTape {
    let mut tape = Tape::new();
    let graph = net.build_graph(&mut tape, None);
    let target_nodes: Vec<NodeId> = points.target_outputs.iter().map(|_| tape.input()).collect();
    let n = points.inputs.len().max(1);
    let n_diff = points
        .target_outputs
        .iter()
        .filter(|&&o| o < model.n_diff_outputs)
        .count();
    let n_alg = points.target_outputs.len() - n_diff;
    let mut loss = tape.constant(0.0);
    for (slot, &out_idx) in points.target_outputs.iter().enumerate() {
        let e = tape.sub(graph.outputs[out_idx], target_nodes[slot]);
        let e2 = tape.mul(e, e);
        let norm = if out_idx < model.n_diff_outputs {
            1.0 / (n_diff.max(1) * n) as f64
        } else {
            1.0 / (n_alg.max(1) * n) as f64
        };
        let term = tape.scale(e2, norm);
        loss = tape.add(loss, term);
    }
    tape.mark_output(loss);
    MismatchTape {
        tape,
        loss,
        n_model_inputs: net.spec.input_dim,
    }
}

fn accumulate_mismatch(
    mt: &mut MismatchTape,
    points: &TargetedPoints,
    params: &[f64],
    grad: &mut [f64],
) -> Result<f64, TrainingError> {
    let mut value = 0.0;
    let mut inputs = vec![0.0; mt.n_model_inputs + points.target_outputs.len()];
    for (point, targets) in points.inputs.iter().zip(&points.targets) {
        inputs[..mt.n_model_inputs].copy_from_slice(point);
        inputs[mt.n_model_inputs..].copy_from_slice(targets);
        mt.tape.forward(&inputs, params)?;
        value += mt.tape.value(mt.loss);
        let g = mt.tape.backward(mt.loss)?;
        for (acc, gi) in grad.iter_mut().zip(&g) {
            *acc += gi;
        }
    }
    Ok(value)
}

/// Physics graph: lifted network, residual nodes, and the per-point loss
/// with the algebraic group weighted by lambda_g.
struct PhysicsTape {
    tape: Tape,
    loss: NodeId,
}

fn build_physics_tape(
    net: &Network,
    model: &PinnModelDef,
    n_points: usize,
    lambda_g: f64,
) -> Result<Option<PhysicsTape>, TrainingError> {
    let Some(residual) = model.residual.as_ref() else {
        return Ok(None);
    };
    let mut tape = Tape::new();
    let graph = net.build_graph(&mut tape, Some(0));
    let dots = graph.output_dots.as_ref().expect("lifted graph");
    let controls: Vec<NodeId> = model
        .control_inputs
        .iter()
        .map(|&i| graph.inputs[i])
        .collect();
    let nodes = residual.build(&mut tape, &graph.outputs, dots, &controls)?;
    let n = n_points.max(1);
    let mut loss = tape.constant(0.0);
    if !nodes.diff.is_empty() {
        let norm = 1.0 / (nodes.diff.len() * n) as f64;
        for &r in &nodes.diff {
            let r2 = tape.mul(r, r);
            let term = tape.scale(r2, norm);
            loss = tape.add(loss, term);
        }
    }
    if !nodes.alg.is_empty() {
        let norm = lambda_g / (nodes.alg.len() * n) as f64;
        for &r in &nodes.alg {
            let r2 = tape.mul(r, r);
            let term = tape.scale(r2, norm);
            loss = tape.add(loss, term);
        }
    }
    tape.mark_output(loss);
    Ok(Some(PhysicsTape { tape, loss }))
}

/// Evaluates the three loss terms and their gradients for given parameters.
/// Graphs are rebuilt on every call; collocation batches are small enough
/// that simplicity wins over caching.
pub struct PinnLossEvaluator<'a> {
    net: &'a Network,
    model: &'a PinnModelDef,
    data: &'a TargetedPoints,
    init: &'a TargetedPoints,
    collocation: &'a [Vec<f64>],
    lambda_g: f64,
}

impl<'a> PinnLossEvaluator<'a> {
    pub fn new(
        net: &'a Network,
        model: &'a PinnModelDef,
        data: &'a TargetedPoints,
        init: &'a TargetedPoints,
        collocation: &'a [Vec<f64>],
        lambda_g: f64,
    ) -> Self {
        Self {
            net,
            model,
            data,
            init,
            collocation,
            lambda_g,
        }
    }

    pub fn eval(&self, params: &[f64]) -> Result<LossParts, TrainingError> {
        let n_params = params.len();
        let mut parts = LossParts {
            data: 0.0,
            physics: 0.0,
            init: 0.0,
            g_data: vec![0.0; n_params],
            g_physics: vec![0.0; n_params],
            g_init: vec![0.0; n_params],
        };

        if !self.data.inputs.is_empty() {
            let mut mt = build_mismatch_tape(self.net, self.model, self.data);
            parts.data = accumulate_mismatch(&mut mt, self.data, params, &mut parts.g_data)?;
        }
        if !self.init.inputs.is_empty() {
            let mut mt = build_mismatch_tape(self.net, self.model, self.init);
            parts.init = accumulate_mismatch(&mut mt, self.init, params, &mut parts.g_init)?;
        }
        if !self.collocation.is_empty() {
            if let Some(mut pt) =
                build_physics_tape(self.net, self.model, self.collocation.len(), self.lambda_g)?
            {
                for point in self.collocation {
                    pt.tape.forward(point, params)?;
                    parts.physics += pt.tape.value(pt.loss);
                    let g = pt.tape.backward(pt.loss)?;
                    for (acc, gi) in parts.g_physics.iter_mut().zip(&g) {
                        *acc += gi;
                    }
                }
            }
        }
        Ok(parts)
    }
}

/// Mean squared mismatch over measured states, Eq-style normalization.
pub fn loss_data(
    net: &Network,
    model: &PinnModelDef,
    points: &TargetedPoints,
) -> Result<f64, TrainingError> {
    if points.inputs.is_empty() {
        return Err(TrainingError::InvalidArgument("empty data set".into()));
    }
    let empty_init = TargetedPoints::default();
    let ev = PinnLossEvaluator::new(net, model, points, &empty_init, &[], 1.0);
    Ok(ev.eval(&net.params)?.data)
}

/// Physics loss over collocation points: differential residual mean plus
/// lambda_g times the algebraic residual mean.
pub fn loss_physics(
    net: &Network,
    model: &PinnModelDef,
    collocation: &[Vec<f64>],
    lambda_g: f64,
) -> Result<f64, TrainingError> {
    if model.residual.is_none() {
        return Err(TrainingError::InvalidArgument(
            "model has no residual spec".into(),
        ));
    }
    let empty = TargetedPoints::default();
    let ev = PinnLossEvaluator::new(net, model, &empty, &empty, collocation, lambda_g);
    Ok(ev.eval(&net.params)?.physics)
}

/// Mismatch between the prediction at t0 and the sampled initial values.
pub fn loss_init(
    net: &Network,
    model: &PinnModelDef,
    points: &TargetedPoints,
) -> Result<f64, TrainingError> {
    let empty = TargetedPoints::default();
    let ev = PinnLossEvaluator::new(net, model, &empty, points, &[], 1.0);
    Ok(ev.eval(&net.params)?.init)
}

/// Vanilla benchmark loss: data plus weighted init, no physics. The network
/// must output measured states only.
pub fn loss_vanilla(
    net: &Network,
    model: &PinnModelDef,
    data: &TargetedPoints,
    init: &TargetedPoints,
    lambda_init: f64,
) -> Result<f64, TrainingError> {
    if model.measured_outputs.len() != model.n_outputs() {
        return Err(TrainingError::InvalidArgument(
            "vanilla network outputs must all be measured".into(),
        ));
    }
    let ev = PinnLossEvaluator::new(net, model, data, init, &[], 1.0);
    let parts = ev.eval(&net.params)?;
    Ok(parts.data + lambda_init * parts.init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{unit_scaling, Activation, Network, NetworkSpec, OutputActivation};

    fn tiny_net(outputs: usize, seed: u64) -> Network {
        Network::init(
            NetworkSpec {
                input_dim: 1,
                hidden_widths: vec![4],
                output_dim: outputs,
                hidden_activation: Activation::Tanh,
                output_activation: OutputActivation::Identity,
                seed,
            },
            unit_scaling(1, outputs),
        )
        .unwrap()
    }

    fn plain_model(outputs: usize, measured: Vec<usize>) -> PinnModelDef {
        PinnModelDef {
            name: "test".into(),
            input_names: vec!["t".into()],
            output_names: (0..outputs).map(|i| format!("y{i}")).collect(),
            n_diff_outputs: outputs,
            measured_outputs: measured,
            control_inputs: vec![],
            input_bounds: vec![(0.0, 1.0)],
            output_scale: vec![1.0; outputs],
            residual: None,
            init_pairs: vec![],
        }
    }

    #[test]
    fn perfect_predictions_give_zero_data_loss() {
        let net = tiny_net(1, 3);
        let model = plain_model(1, vec![0]);
        let t = 0.4;
        let y = net.predict(&[t]).unwrap()[0];
        let pts = TargetedPoints {
            inputs: vec![vec![t]],
            target_outputs: vec![0],
            targets: vec![vec![y]],
        };
        let loss = loss_data(&net, &model, &pts).unwrap();
        assert!(loss < 1e-28);
    }

    #[test]
    fn single_point_error_half_gives_quarter() {
        let net = tiny_net(1, 5);
        let model = plain_model(1, vec![0]);
        let t = 0.2;
        let y = net.predict(&[t]).unwrap()[0];
        let pts = TargetedPoints {
            inputs: vec![vec![t]],
            target_outputs: vec![0],
            targets: vec![vec![y + 0.5]],
        };
        let loss = loss_data(&net, &model, &pts).unwrap();
        assert!((loss - 0.25).abs() < 1e-12);
    }

    #[test]
    fn duplicating_points_leaves_mean_unchanged() {
        let net = tiny_net(1, 6);
        let model = plain_model(1, vec![0]);
        let mk = |reps: usize| TargetedPoints {
            inputs: vec![vec![0.3]; reps],
            target_outputs: vec![0],
            targets: vec![vec![1.0]; reps],
        };
        let a = loss_data(&net, &model, &mk(1)).unwrap();
        let b = loss_data(&net, &model, &mk(2)).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn empty_data_is_argument_error() {
        let net = tiny_net(1, 0);
        let model = plain_model(1, vec![0]);
        let pts = TargetedPoints::default();
        assert!(matches!(
            loss_data(&net, &model, &pts),
            Err(TrainingError::InvalidArgument(_))
        ));
    }

    struct FixedResidual {
        diff: Vec<f64>,
        alg: Vec<f64>,
    }

    impl ResidualSpec for FixedResidual {
        fn build(
            &self,
            tape: &mut Tape,
            _outputs: &[NodeId],
            _dots: &[NodeId],
            _controls: &[NodeId],
        ) -> Result<ResidualNodes, TrainingError> {
            Ok(ResidualNodes {
                diff: self.diff.iter().map(|v| tape.constant(*v)).collect(),
                alg: self.alg.iter().map(|v| tape.constant(*v)).collect(),
            })
        }
    }

    #[test]
    fn physics_loss_definition_on_constant_residuals() {
        // Residual vector (1, 1) over one point with two differential
        // states and no algebraic part: the mean is 1.
        let net = tiny_net(2, 7);
        let mut model = plain_model(2, vec![0, 1]);
        model.residual = Some(Box::new(FixedResidual {
            diff: vec![1.0, 1.0],
            alg: vec![],
        }));
        let loss = loss_physics(&net, &model, &[vec![0.5]], 1.0).unwrap();
        assert!((loss - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_g_zero_ignores_algebraic_residuals() {
        let net = tiny_net(2, 8);
        let mut model = plain_model(2, vec![0, 1]);
        model.residual = Some(Box::new(FixedResidual {
            diff: vec![0.0],
            alg: vec![3.0],
        }));
        let with = loss_physics(&net, &model, &[vec![0.1]], 1.0).unwrap();
        let without = loss_physics(&net, &model, &[vec![0.1]], 0.0).unwrap();
        assert!((with - 9.0).abs() < 1e-12);
        assert_eq!(without, 0.0);
    }

    struct ExactSolutionResidual;

    impl ResidualSpec for ExactSolutionResidual {
        // Residual dx/dt - 0: satisfied exactly by a constant network.
        fn build(
            &self,
            tape: &mut Tape,
            _outputs: &[NodeId],
            dots: &[NodeId],
            _controls: &[NodeId],
        ) -> Result<ResidualNodes, TrainingError> {
            Ok(ResidualNodes {
                diff: vec![dots[0]],
                alg: vec![],
            })
        }
    }

    #[test]
    fn network_solving_the_ode_exactly_has_zero_physics_loss() {
        // Zero all weights: the network is constant, so dx/dt = 0 holds.
        let mut net = tiny_net(1, 9);
        for p in &mut net.params {
            *p = 0.0;
        }
        let mut model = plain_model(1, vec![0]);
        model.residual = Some(Box::new(ExactSolutionResidual));
        let colloc: Vec<Vec<f64>> = (0..16).map(|k| vec![k as f64 / 15.0]).collect();
        let loss = loss_physics(&net, &model, &colloc, 1.0).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn init_loss_examples() {
        let net = tiny_net(1, 10);
        let model = plain_model(1, vec![0]);
        let y0 = net.predict(&[0.0]).unwrap()[0];
        // exact: zero
        let exact = TargetedPoints {
            inputs: vec![vec![0.0]],
            target_outputs: vec![0],
            targets: vec![vec![y0]],
        };
        assert!(loss_init(&net, &model, &exact).unwrap() < 1e-28);
        // error 2 -> 4
        let off = TargetedPoints {
            inputs: vec![vec![0.0]],
            target_outputs: vec![0],
            targets: vec![vec![y0 + 2.0]],
        };
        assert!((loss_init(&net, &model, &off).unwrap() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn vanilla_loss_reduces_to_data_when_unweighted() {
        let net = tiny_net(1, 12);
        let model = plain_model(1, vec![0]);
        let pts = TargetedPoints {
            inputs: vec![vec![0.1], vec![0.9]],
            target_outputs: vec![0],
            targets: vec![vec![0.0], vec![1.0]],
        };
        let init = TargetedPoints {
            inputs: vec![vec![0.0]],
            target_outputs: vec![0],
            targets: vec![vec![0.5]],
        };
        let v0 = loss_vanilla(&net, &model, &pts, &init, 0.0).unwrap();
        let d = loss_data(&net, &model, &pts).unwrap();
        assert!((v0 - d).abs() < 1e-15);
        let v1 = loss_vanilla(&net, &model, &pts, &init, 2.0).unwrap();
        let i = loss_init(&net, &model, &init).unwrap();
        assert!((v1 - (d + 2.0 * i)).abs() < 1e-13);
    }

    #[test]
    fn vanilla_with_unmeasured_output_is_argument_error() {
        let net = tiny_net(2, 13);
        let model = plain_model(2, vec![0]); // output 1 unmeasured
        let pts = TargetedPoints {
            inputs: vec![vec![0.1]],
            target_outputs: vec![0],
            targets: vec![vec![0.0]],
        };
        assert!(matches!(
            loss_vanilla(&net, &model, &pts, &TargetedPoints::default(), 1.0),
            Err(TrainingError::InvalidArgument(_))
        ));
    }
}
