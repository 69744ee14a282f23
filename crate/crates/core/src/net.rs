//! Multilayer perceptron with input normalization and optional bounded
//! output layer, expressed over the autodiff tape.
//!
//! Inputs arrive in model units (dimensionless time/states/controls plus any
//! raw measured properties) and are mapped affinely to [-1, 1] using the
//! per-input bounds of [`ScalingSpec`]. Outputs are produced in dimensionless
//! form; the harness redimensionalizes with the per-output reference scales.

use crate::autodiff::{Dual, NodeId, Tape};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
    pub hidden_activation: Activation,
    pub output_activation: OutputActivation,
    pub seed: u64,
}

/// Per-input normalization bounds and per-output reference scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub input_lo: Vec<f64>,
    pub input_hi: Vec<f64>,
    pub output_scale: Vec<f64>,
}

impl ScalingSpec {
    pub fn validate(&self, input_dim: usize, output_dim: usize) -> Result<(), NetError> {
        if self.input_lo.len() != input_dim || self.input_hi.len() != input_dim {
            return Err(NetError::InvalidSpec(format!(
                "scaling bounds cover {} inputs, network has {input_dim}",
                self.input_lo.len()
            )));
        }
        if self.output_scale.len() != output_dim {
            return Err(NetError::InvalidSpec(format!(
                "{} output scales for {output_dim} outputs",
                self.output_scale.len()
            )));
        }
        for (lo, hi) in self.input_lo.iter().zip(&self.input_hi) {
            if !(lo < hi) {
                return Err(NetError::InvalidSpec(format!(
                    "input bound [{lo}, {hi}] must satisfy lo < hi"
                )));
            }
        }
        if self.output_scale.iter().any(|s| *s == 0.0) {
            return Err(NetError::InvalidSpec("output scale must be nonzero".into()));
        }
        Ok(())
    }

    /// Affine map of one input coordinate to [-1, 1].
    pub fn normalize(&self, i: usize, v: f64) -> f64 {
        let (lo, hi) = (self.input_lo[i], self.input_hi[i]);
        2.0 * (v - lo) / (hi - lo) - 1.0
    }

    pub fn denormalize(&self, i: usize, w: f64) -> f64 {
        let (lo, hi) = (self.input_lo[i], self.input_hi[i]);
        lo + (w + 1.0) * (hi - lo) / 2.0
    }

    /// Slope of the normalization map, d(normalized)/d(raw).
    pub fn slope(&self, i: usize) -> f64 {
        2.0 / (self.input_hi[i] - self.input_lo[i])
    }
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("expected {expected} inputs, got {got}")]
    InputMismatch { expected: usize, got: usize },
    #[error("checkpoint i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse failed: {0}")]
    Parse(#[from] serde_json::Error),
}

/// MLP with a flat parameter vector laid out layer by layer, weights
/// row-major (per output neuron) followed by biases.
#[derive(Debug, Clone)]
pub struct Network {
    pub spec: NetworkSpec,
    pub scaling: ScalingSpec,
    pub params: Vec<f64>,
}

impl Network {
    /// Glorot-uniform weights from the spec seed, zero biases. The same seed
    /// always yields bitwise-identical parameters.
    pub fn init(spec: NetworkSpec, scaling: ScalingSpec) -> Result<Self, NetError> {
        if spec.input_dim == 0 || spec.output_dim == 0 {
            return Err(NetError::InvalidSpec("zero input or output dim".into()));
        }
        if spec.hidden_widths.is_empty() {
            return Err(NetError::InvalidSpec("at least one hidden layer".into()));
        }
        if spec.hidden_widths.iter().any(|w| *w == 0) {
            return Err(NetError::InvalidSpec("zero-width hidden layer".into()));
        }
        scaling.validate(spec.input_dim, spec.output_dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut params = Vec::with_capacity(param_count(&spec));
        for (fan_in, fan_out) in layer_dims(&spec) {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(rng.random_range(-bound..bound));
            }
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Ok(Self { spec, scaling, params })
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.spec)
    }

    /// Plain forward evaluation in `f64`, inputs in model units.
    pub fn predict(&self, raw_inputs: &[f64]) -> Result<Vec<f64>, NetError> {
        if raw_inputs.len() != self.spec.input_dim {
            return Err(NetError::InputMismatch {
                expected: self.spec.input_dim,
                got: raw_inputs.len(),
            });
        }
        let mut layer: Vec<f64> = raw_inputs
            .iter()
            .enumerate()
            .map(|(i, &v)| self.scaling.normalize(i, v))
            .collect();
        let mut offset = 0;
        let dims: Vec<_> = layer_dims(&self.spec).collect();
        let n_layers = dims.len();
        for (li, (fan_in, fan_out)) in dims.into_iter().enumerate() {
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let biases = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let mut next = Vec::with_capacity(fan_out);
            for o in 0..fan_out {
                let mut acc = biases[o];
                for (i, &x) in layer.iter().enumerate() {
                    acc += weights[o * fan_in + i] * x;
                }
                let is_output = li == n_layers - 1;
                let v = if is_output {
                    match self.spec.output_activation {
                        OutputActivation::Identity => acc,
                        OutputActivation::Sigmoid => stable_sigmoid(acc),
                    }
                } else {
                    match self.spec.hidden_activation {
                        Activation::Tanh => acc.tanh(),
                        Activation::Sigmoid => stable_sigmoid(acc),
                    }
                };
                next.push(v);
            }
            layer = next;
        }
        Ok(layer)
    }

    /// Records the network on a tape: input leaves in model units, the
    /// normalization affine, all layers, and parameter leaves in the same
    /// order as `self.params`. With `lift_time`, the derivative of every
    /// output with respect to the raw value of that input is built as
    /// ordinary tape nodes and returned alongside.
    pub fn build_graph(&self, tape: &mut Tape, lift_time: Option<usize>) -> NetGraph {
        let inputs: Vec<NodeId> = (0..self.spec.input_dim).map(|_| tape.input()).collect();
        let mut layer: Vec<Dual> = Vec::with_capacity(self.spec.input_dim);
        for (i, &raw) in inputs.iter().enumerate() {
            let scaled = {
                let s = tape.scale(raw, self.scaling.slope(i));
                let shift = tape.constant(-self.scaling.slope(i) * self.scaling.input_lo[i] - 1.0);
                tape.add(s, shift)
            };
            let dual = if lift_time == Some(i) {
                tape.dual_seed(scaled, self.scaling.slope(i))
            } else {
                tape.dual_const_dot(scaled)
            };
            layer.push(dual);
        }
        let dims: Vec<_> = layer_dims(&self.spec).collect();
        let n_layers = dims.len();
        for (li, (fan_in, fan_out)) in dims.into_iter().enumerate() {
            let mut weights = Vec::with_capacity(fan_in * fan_out);
            for _ in 0..fan_in * fan_out {
                weights.push(tape.param());
            }
            let mut biases = Vec::with_capacity(fan_out);
            for _ in 0..fan_out {
                biases.push(tape.param());
            }
            let mut next = Vec::with_capacity(fan_out);
            for o in 0..fan_out {
                let mut acc = tape.dual_const_dot(biases[o]);
                for (i, &x) in layer.iter().enumerate() {
                    let prod = tape.dual_mul_node(x, weights[o * fan_in + i]);
                    acc = tape.dual_add(acc, prod);
                }
                let is_output = li == n_layers - 1;
                let v = if is_output {
                    match self.spec.output_activation {
                        OutputActivation::Identity => acc,
                        OutputActivation::Sigmoid => tape.dual_sigmoid(acc),
                    }
                } else {
                    match self.spec.hidden_activation {
                        Activation::Tanh => tape.dual_tanh(acc),
                        Activation::Sigmoid => tape.dual_sigmoid(acc),
                    }
                };
                next.push(v);
            }
            layer = next;
        }
        NetGraph {
            inputs,
            outputs: layer.iter().map(|d| d.val).collect(),
            output_dots: lift_time.map(|_| layer.iter().map(|d| d.dot).collect()),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), NetError> {
        self.save_with_outputs(path, &[])
    }

    /// Checkpoint with the variant's output ordering recorded alongside.
    pub fn save_with_outputs(
        &self,
        path: &std::path::Path,
        output_names: &[String],
    ) -> Result<(), NetError> {
        let ck = Checkpoint {
            schema: 1,
            seed: self.spec.seed,
            spec: self.spec.clone(),
            scaling: self.scaling.clone(),
            params: self.params.clone(),
            output_names: output_names.to_vec(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&ck)?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, NetError> {
        let ck: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(Self {
            spec: ck.spec,
            scaling: ck.scaling,
            params: ck.params,
        })
    }
}

/// Checkpoint file layout: spec, scaling, flat parameter array (row-major
/// per layer), the init seed, and the variant's output ordering. JSON float
/// round-trips are bit-exact.
#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: u32,
    pub seed: u64,
    pub spec: NetworkSpec,
    pub scaling: ScalingSpec,
    pub params: Vec<f64>,
    #[serde(default)]
    pub output_names: Vec<String>,
}

/// Node handles of a network recorded on a tape.
pub struct NetGraph {
    pub inputs: Vec<NodeId>,
    pub outputs: Vec<NodeId>,
    /// d(output)/d(raw lifted input), present when built with `lift_time`.
    pub output_dots: Option<Vec<NodeId>>,
}

fn layer_dims(spec: &NetworkSpec) -> impl Iterator<Item = (usize, usize)> + '_ {
    let ins = std::iter::once(spec.input_dim).chain(spec.hidden_widths.iter().copied());
    let outs = spec
        .hidden_widths
        .iter()
        .copied()
        .chain(std::iter::once(spec.output_dim));
    ins.zip(outs)
}

fn param_count(spec: &NetworkSpec) -> usize {
    layer_dims(spec).map(|(i, o)| i * o + o).sum()
}

#[inline]
fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Uniform scaling over [0,1] inputs and unit output scales; handy default
/// for tests and the counter-example models.
pub fn unit_scaling(input_dim: usize, output_dim: usize) -> ScalingSpec {
    ScalingSpec {
        input_lo: vec![0.0; input_dim],
        input_hi: vec![1.0; input_dim],
        output_scale: vec![1.0; output_dim],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_spec(seed: u64) -> NetworkSpec {
        NetworkSpec {
            input_dim: 1,
            hidden_widths: vec![16],
            output_dim: 1,
            hidden_activation: Activation::Tanh,
            output_activation: OutputActivation::Identity,
            seed,
        }
    }

    #[test]
    fn same_seed_bitwise_equal() {
        let a = Network::init(small_spec(7), unit_scaling(1, 1)).unwrap();
        let b = Network::init(small_spec(7), unit_scaling(1, 1)).unwrap();
        assert!(a
            .params
            .iter()
            .zip(&b.params)
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn param_count_1_16_1() {
        let net = Network::init(small_spec(0), unit_scaling(1, 1)).unwrap();
        assert_eq!(net.param_count(), 1 * 16 + 16 + 16 * 1 + 1);
        assert_eq!(net.params.len(), 49);
    }

    #[test]
    fn glorot_bound_32_32() {
        let bound: f64 = (6.0 / 64.0_f64).sqrt();
        assert_relative_eq!(bound, 0.30618621784789726, max_relative = 1e-12);
        let spec = NetworkSpec {
            input_dim: 32,
            hidden_widths: vec![32],
            output_dim: 1,
            hidden_activation: Activation::Tanh,
            output_activation: OutputActivation::Identity,
            seed: 11,
        };
        let net = Network::init(spec, unit_scaling(32, 1)).unwrap();
        // First layer weights obey the fan-32/32 bound and are not all tiny.
        let w = &net.params[..32 * 32];
        assert!(w.iter().all(|v| v.abs() < bound));
        assert!(w.iter().any(|v| v.abs() > bound / 2.0));
    }

    #[test]
    fn zero_width_layer_is_argument_error() {
        let mut spec = small_spec(0);
        spec.hidden_widths = vec![8, 0];
        assert!(matches!(
            Network::init(spec, unit_scaling(1, 1)),
            Err(NetError::InvalidSpec(_))
        ));
    }

    #[test]
    fn lower_bound_maps_to_minus_one() {
        let scaling = ScalingSpec {
            input_lo: vec![2.0],
            input_hi: vec![6.0],
            output_scale: vec![1.0],
        };
        assert_eq!(scaling.normalize(0, 2.0), -1.0);
        assert_eq!(scaling.normalize(0, 6.0), 1.0);
    }

    #[test]
    fn normalization_roundtrip() {
        let scaling = ScalingSpec {
            input_lo: vec![-3.0, 370.0],
            input_hi: vec![5.0, 410.0],
            output_scale: vec![1.0],
        };
        for i in 0..2 {
            for k in 0..100 {
                let v = scaling.input_lo[i]
                    + (scaling.input_hi[i] - scaling.input_lo[i]) * (k as f64) / 99.0;
                let back = scaling.denormalize(i, scaling.normalize(i, v));
                assert_relative_eq!(back, v, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn sigmoid_output_stays_in_unit_interval() {
        let spec = NetworkSpec {
            input_dim: 3,
            hidden_widths: vec![8, 8],
            output_dim: 4,
            hidden_activation: Activation::Tanh,
            output_activation: OutputActivation::Sigmoid,
            seed: 5,
        };
        let net = Network::init(spec, unit_scaling(3, 4)).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..3.0)).collect();
            let y = net.predict(&x).unwrap();
            assert!(y.iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }

    #[test]
    fn predict_reproducible_and_continuous_in_t() {
        let net = Network::init(small_spec(3), unit_scaling(1, 1)).unwrap();
        let a = net.predict(&[0.5]).unwrap();
        let b = net.predict(&[0.5]).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        let dy = (net.predict(&[0.5 + 1e-6]).unwrap()[0] - a[0]).abs();
        assert!(dy < 1e-4, "jump {dy} across 1e-6 step");
    }

    #[test]
    fn tape_graph_matches_plain_predict() {
        let spec = NetworkSpec {
            input_dim: 2,
            hidden_widths: vec![6, 5],
            output_dim: 3,
            hidden_activation: Activation::Tanh,
            output_activation: OutputActivation::Sigmoid,
            seed: 9,
        };
        let scaling = ScalingSpec {
            input_lo: vec![0.0, -1.0],
            input_hi: vec![1.0, 2.0],
            output_scale: vec![1.0; 3],
        };
        let net = Network::init(spec, scaling).unwrap();
        let mut tape = crate::autodiff::Tape::new();
        let g = net.build_graph(&mut tape, None);
        for id in &g.outputs {
            tape.mark_output(*id);
        }
        let x = [0.3, 0.7];
        let tape_out = tape.forward(&x, &net.params).unwrap();
        let plain = net.predict(&x).unwrap();
        for (a, b) in tape_out.iter().zip(&plain) {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn lifted_time_derivative_matches_tangent_sweep() {
        let spec = NetworkSpec {
            input_dim: 3,
            hidden_widths: vec![8, 8],
            output_dim: 2,
            hidden_activation: Activation::Tanh,
            output_activation: OutputActivation::Identity,
            seed: 21,
        };
        let scaling = ScalingSpec {
            input_lo: vec![0.0, 0.2, -1.0],
            input_hi: vec![1.0, 0.9, 1.0],
            output_scale: vec![1.0; 2],
        };
        let net = Network::init(spec, scaling).unwrap();
        let mut tape = crate::autodiff::Tape::new();
        let g = net.build_graph(&mut tape, Some(0));
        let dots = g.output_dots.as_ref().unwrap();
        for (&v, &d) in g.outputs.iter().zip(dots) {
            tape.mark_output(v);
            tape.mark_output(d);
        }
        let x = [0.42, 0.5, 0.1];
        let vals = tape.forward(&x, &net.params).unwrap();
        let tang = tape.time_derivative(&x, &net.params, 0).unwrap();
        // outputs interleaved (val, dot): dot value equals tangent of val.
        for k in 0..2 {
            assert_relative_eq!(vals[2 * k + 1], tang[2 * k], max_relative = 1e-12);
        }
    }

    #[test]
    fn checkpoint_roundtrip_bit_exact() {
        let net = Network::init(small_spec(13), unit_scaling(1, 1)).unwrap();
        let dir = std::env::temp_dir().join("pinndae-ck-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("net.json");
        net.save(&path).unwrap();
        let back = Network::load(&path).unwrap();
        assert_eq!(net.spec, back.spec);
        assert!(net
            .params
            .iter()
            .zip(&back.params)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
