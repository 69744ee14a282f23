//! Scalar computational-graph engine with reverse-mode gradients and
//! forward-mode tangents.
//!
//! A [`Tape`] records scalar operations as an append-only node sequence.
//! Designated leaf nodes are inputs (fed per evaluation) or parameters
//! (fed per optimizer state); everything else is derived. One forward sweep
//! populates values, one backward sweep accumulates adjoints, and a tangent
//! sweep propagates a directional derivative with respect to a single input.
//!
//! Training losses that contain time derivatives of network outputs are
//! handled by lifting the tangent computation onto the tape itself (see
//! [`Dual`]): the derivative of each node with respect to the time input is
//! built as an ordinary node, so a single reverse sweep over the enlarged
//! graph yields exact parameter gradients of derivative-bearing losses.
//! No second-order sweep is ever needed.

use thiserror::Error;

/// Index of a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Input(u32),
    Param(u32),
    Const,
    Add(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    /// Power with a fixed real exponent; the base must be strictly positive.
    Pow(u32, f64),
    Exp(u32),
    Sqrt(u32),
    Tanh(u32),
    Sigmoid(u32),
}

#[derive(Debug, Error)]
pub enum AdError {
    #[error("evaluation failed at node {node}: {reason}")]
    Evaluation { node: usize, reason: String },
    #[error("backward requested before a forward pass")]
    BackwardBeforeForward,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type AdResult<T> = Result<T, AdError>;

/// Append-only operation tape. Single-context: one forward/backward pair at
/// a time; independent tapes may run in parallel.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    ops: Vec<Op>,
    values: Vec<f64>,
    adjoints: Vec<f64>,
    tangents: Vec<f64>,
    input_ids: Vec<NodeId>,
    param_ids: Vec<NodeId>,
    output_ids: Vec<NodeId>,
    forward_done: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn num_inputs(&self) -> usize {
        self.input_ids.len()
    }

    pub fn num_params(&self) -> usize {
        self.param_ids.len()
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.output_ids
    }

    fn push(&mut self, op: Op, value: f64) -> NodeId {
        let id = NodeId(self.ops.len() as u32);
        // Construction invariant the evaluation sweeps rely on for unchecked
        // indexing: every parent precedes its child.
        debug_assert!(match op {
            Op::Add(a, b) | Op::Mul(a, b) | Op::Div(a, b) => a < id.0 && b < id.0,
            Op::Neg(a)
            | Op::Pow(a, _)
            | Op::Exp(a)
            | Op::Sqrt(a)
            | Op::Tanh(a)
            | Op::Sigmoid(a) => a < id.0,
            Op::Input(_) | Op::Param(_) | Op::Const => true,
        });
        self.ops.push(op);
        self.values.push(value);
        self.forward_done = false;
        id
    }

    /// Declares a new input leaf; value supplied on every forward pass.
    pub fn input(&mut self) -> NodeId {
        let slot = self.input_ids.len() as u32;
        let id = self.push(Op::Input(slot), 0.0);
        self.input_ids.push(id);
        id
    }

    /// Declares a new parameter leaf; value supplied on every forward pass.
    pub fn param(&mut self) -> NodeId {
        let slot = self.param_ids.len() as u32;
        let id = self.push(Op::Param(slot), 0.0);
        self.param_ids.push(id);
        id
    }

    pub fn constant(&mut self, value: f64) -> NodeId {
        self.push(Op::Const, value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add(a.0, b.0), 0.0)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Mul(a.0, b.0), 0.0)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Div(a.0, b.0), 0.0)
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Neg(a.0), 0.0)
    }

    /// a - b, composed from the primitive op set.
    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let nb = self.neg(b);
        self.add(a, nb)
    }

    pub fn powf(&mut self, a: NodeId, exponent: f64) -> NodeId {
        self.push(Op::Pow(a.0, exponent), 0.0)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Exp(a.0), 0.0)
    }

    pub fn sqrt(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sqrt(a.0), 0.0)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Tanh(a.0), 0.0)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sigmoid(a.0), 0.0)
    }

    /// Scales a node by a compile-time-known constant.
    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let k = self.constant(c);
        self.mul(k, a)
    }

    /// Registers a node as an output, returned by `forward` in registration order.
    pub fn mark_output(&mut self, id: NodeId) {
        self.output_ids.push(id);
    }

    /// Value of a node after a forward pass.
    pub fn value(&self, id: NodeId) -> f64 {
        self.values[id.index()]
    }

    /// Adjoint of a node after a backward pass.
    pub fn adjoint(&self, id: NodeId) -> f64 {
        self.adjoints[id.index()]
    }

    /// Runs a forward value sweep. Every node receives a finite value or an
    /// evaluation error naming the offending node is returned.
    pub fn forward(&mut self, inputs: &[f64], params: &[f64]) -> AdResult<Vec<f64>> {
        if inputs.len() != self.input_ids.len() {
            return Err(AdError::InvalidArgument(format!(
                "expected {} inputs, got {}",
                self.input_ids.len(),
                inputs.len()
            )));
        }
        if params.len() != self.param_ids.len() {
            return Err(AdError::InvalidArgument(format!(
                "expected {} params, got {}",
                self.param_ids.len(),
                params.len()
            )));
        }
        // SAFETY throughout the sweeps: parents precede children (asserted at
        // push time), so parent slots are initialized and in bounds; input
        // and param slot counts were validated above.
        for i in 0..self.ops.len() {
            let get = |k: u32| unsafe { *self.values.get_unchecked(k as usize) };
            let v = match self.ops[i] {
                Op::Input(slot) => unsafe { *inputs.get_unchecked(slot as usize) },
                Op::Param(slot) => unsafe { *params.get_unchecked(slot as usize) },
                Op::Const => self.values[i],
                Op::Add(a, b) => get(a) + get(b),
                Op::Mul(a, b) => get(a) * get(b),
                Op::Div(a, b) => {
                    let d = get(b);
                    if d == 0.0 {
                        return Err(AdError::Evaluation {
                            node: i,
                            reason: "division by zero".into(),
                        });
                    }
                    get(a) / d
                }
                Op::Neg(a) => -get(a),
                Op::Pow(a, p) => {
                    let x = get(a);
                    if x <= 0.0 {
                        return Err(AdError::Evaluation {
                            node: i,
                            reason: format!("pow base {x} must be > 0"),
                        });
                    }
                    x.powf(p)
                }
                Op::Exp(a) => get(a).exp(),
                Op::Sqrt(a) => {
                    let x = get(a);
                    if x <= 0.0 {
                        return Err(AdError::Evaluation {
                            node: i,
                            reason: format!("sqrt argument {x} must be > 0"),
                        });
                    }
                    x.sqrt()
                }
                Op::Tanh(a) => get(a).tanh(),
                Op::Sigmoid(a) => sigmoid(get(a)),
            };
            if !v.is_finite() {
                return Err(AdError::Evaluation {
                    node: i,
                    reason: format!("non-finite value {v}"),
                });
            }
            self.values[i] = v;
        }
        self.forward_done = true;
        Ok(self.output_ids.iter().map(|id| self.values[id.index()]).collect())
    }

    /// Reverse sweep from one output node. Returns d(output)/d(param) for
    /// every parameter in declaration order; unused parameters get exactly 0.
    pub fn backward(&mut self, output: NodeId) -> AdResult<Vec<f64>> {
        if !self.forward_done {
            return Err(AdError::BackwardBeforeForward);
        }
        if output.index() >= self.ops.len() {
            return Err(AdError::InvalidArgument(format!(
                "output node {} out of range",
                output.index()
            )));
        }
        self.adjoints.clear();
        self.adjoints.resize(self.ops.len(), 0.0);
        self.adjoints[output.index()] = 1.0;
        // SAFETY: same construction invariant as `forward`.
        let adj = self.adjoints.as_mut_ptr();
        let bump = |k: u32, dv: f64| unsafe { *adj.add(k as usize) += dv };
        for i in (0..self.ops.len()).rev() {
            let w = self.adjoints[i];
            if w == 0.0 {
                continue;
            }
            let val = |k: u32| unsafe { *self.values.get_unchecked(k as usize) };
            match self.ops[i] {
                Op::Input(_) | Op::Param(_) | Op::Const => {}
                Op::Add(a, b) => {
                    bump(a, w);
                    bump(b, w);
                }
                Op::Mul(a, b) => {
                    bump(a, w * val(b));
                    bump(b, w * val(a));
                }
                Op::Div(a, b) => {
                    let vb = val(b);
                    bump(a, w / vb);
                    bump(b, -w * self.values[i] / vb);
                }
                Op::Neg(a) => bump(a, -w),
                Op::Pow(a, p) => bump(a, w * p * self.values[i] / val(a)),
                Op::Exp(a) => bump(a, w * self.values[i]),
                Op::Sqrt(a) => bump(a, w * 0.5 / self.values[i]),
                Op::Tanh(a) => {
                    let t = self.values[i];
                    bump(a, w * (1.0 - t * t));
                }
                Op::Sigmoid(a) => {
                    let s = self.values[i];
                    bump(a, w * s * (1.0 - s));
                }
            }
        }
        Ok(self
            .param_ids
            .iter()
            .map(|id| self.adjoints[id.index()])
            .collect())
    }

    /// Exact forward-mode derivative of every output with respect to one
    /// designated input. Runs its own forward pass.
    pub fn time_derivative(
        &mut self,
        inputs: &[f64],
        params: &[f64],
        time_input_index: usize,
    ) -> AdResult<Vec<f64>> {
        if time_input_index >= self.input_ids.len() {
            return Err(AdError::InvalidArgument(format!(
                "input index {time_input_index} out of range (have {})",
                self.input_ids.len()
            )));
        }
        self.forward(inputs, params)?;
        self.tangents.clear();
        self.tangents.resize(self.ops.len(), 0.0);
        self.tangents[self.input_ids[time_input_index].index()] = 1.0;
        for i in 0..self.ops.len() {
            let t = match self.ops[i] {
                Op::Input(_) | Op::Param(_) | Op::Const => self.tangents[i],
                Op::Add(a, b) => self.tangents[a as usize] + self.tangents[b as usize],
                Op::Mul(a, b) => {
                    self.tangents[a as usize] * self.values[b as usize]
                        + self.values[a as usize] * self.tangents[b as usize]
                }
                Op::Div(a, b) => {
                    (self.tangents[a as usize] - self.values[i] * self.tangents[b as usize])
                        / self.values[b as usize]
                }
                Op::Neg(a) => -self.tangents[a as usize],
                Op::Pow(a, p) => {
                    p * self.values[i] / self.values[a as usize] * self.tangents[a as usize]
                }
                Op::Exp(a) => self.values[i] * self.tangents[a as usize],
                Op::Sqrt(a) => 0.5 / self.values[i] * self.tangents[a as usize],
                Op::Tanh(a) => {
                    let v = self.values[i];
                    (1.0 - v * v) * self.tangents[a as usize]
                }
                Op::Sigmoid(a) => {
                    let s = self.values[i];
                    s * (1.0 - s) * self.tangents[a as usize]
                }
            };
            self.tangents[i] = t;
        }
        Ok(self
            .output_ids
            .iter()
            .map(|id| self.tangents[id.index()])
            .collect())
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A tape value paired with the node holding its derivative with respect to
/// the time input. All arithmetic emits ordinary tape nodes, so reverse mode
/// differentiates through the tangent computation.
#[derive(Debug, Clone, Copy)]
pub struct Dual {
    pub val: NodeId,
    pub dot: NodeId,
}

impl Tape {
    /// A dual with zero derivative (constants and non-time leaves).
    pub fn dual_const_dot(&mut self, val: NodeId) -> Dual {
        let dot = self.constant(0.0);
        Dual { val, dot }
    }

    /// The time leaf itself: derivative is the given constant seed
    /// (e.g. the input-normalization slope applied to raw time).
    pub fn dual_seed(&mut self, val: NodeId, seed: f64) -> Dual {
        let dot = self.constant(seed);
        Dual { val, dot }
    }

    pub fn dual_add(&mut self, a: Dual, b: Dual) -> Dual {
        Dual {
            val: self.add(a.val, b.val),
            dot: self.add(a.dot, b.dot),
        }
    }

    /// Multiplication by a node that does not depend on time (weights,
    /// constants): the factor's tangent is structurally zero.
    pub fn dual_mul_node(&mut self, a: Dual, k: NodeId) -> Dual {
        Dual {
            val: self.mul(a.val, k),
            dot: self.mul(a.dot, k),
        }
    }

    /// Addition of a time-independent node.
    pub fn dual_add_node(&mut self, a: Dual, k: NodeId) -> Dual {
        Dual {
            val: self.add(a.val, k),
            dot: a.dot,
        }
    }

    pub fn dual_tanh(&mut self, a: Dual) -> Dual {
        let t = self.tanh(a.val);
        let t2 = self.mul(t, t);
        let one = self.constant(1.0);
        let sech2 = self.sub(one, t2);
        let dot = self.mul(sech2, a.dot);
        Dual { val: t, dot }
    }

    pub fn dual_sigmoid(&mut self, a: Dual) -> Dual {
        let s = self.sigmoid(a.val);
        let one = self.constant(1.0);
        let om = self.sub(one, s);
        let deriv = self.mul(s, om);
        let dot = self.mul(deriv, a.dot);
        Dual { val: s, dot }
    }
}

/// Abstraction over "a place scalar expressions can be built": either plain
/// `f64` arithmetic or tape nodes. Physics residual evaluators are written
/// once against this trait and reused for both training graphs and direct
/// numeric checks.
pub trait Algebra {
    type V: Copy;
    fn constant(&mut self, c: f64) -> Self::V;
    fn add(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn sub(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn mul(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn div(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn neg(&mut self, a: Self::V) -> Self::V;
    fn sqrt(&mut self, a: Self::V) -> Self::V;
    fn scale(&mut self, a: Self::V, c: f64) -> Self::V {
        let k = self.constant(c);
        self.mul(a, k)
    }
}

impl Algebra for Tape {
    type V = NodeId;
    fn constant(&mut self, c: f64) -> NodeId {
        Tape::constant(self, c)
    }
    fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        Tape::add(self, a, b)
    }
    fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        Tape::sub(self, a, b)
    }
    fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        Tape::mul(self, a, b)
    }
    fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        Tape::div(self, a, b)
    }
    fn neg(&mut self, a: NodeId) -> NodeId {
        Tape::neg(self, a)
    }
    fn sqrt(&mut self, a: NodeId) -> NodeId {
        Tape::sqrt(self, a)
    }
}

/// Plain `f64` arithmetic, for oracle-side evaluation of the same expressions.
#[derive(Debug, Default, Clone, Copy)]
pub struct Reals;

impl Algebra for Reals {
    type V = f64;
    fn constant(&mut self, c: f64) -> f64 {
        c
    }
    fn add(&mut self, a: f64, b: f64) -> f64 {
        a + b
    }
    fn sub(&mut self, a: f64, b: f64) -> f64 {
        a - b
    }
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        a * b
    }
    fn div(&mut self, a: f64, b: f64) -> f64 {
        a / b
    }
    fn neg(&mut self, a: f64) -> f64 {
        -a
    }
    fn sqrt(&mut self, a: f64) -> f64 {
        a.sqrt()
    }
}
