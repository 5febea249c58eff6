//! Define-then-run computation graph with reverse-mode differentiation.
//!
//! Nodes are appended in construction order, which is already a valid
//! topological order: every operation only references earlier nodes.
//! [`Graph::forward`] evaluates the nodes front to back and
//! [`Graph::backward`] walks them once in reverse, accumulating adjoints
//! additively so fan-out is handled without special casing.

use serde::{Deserialize, Serialize};

use super::tensor::{matmul_acc, matmul_nt_acc, matmul_tn_acc, Tensor2};
use crate::error::{Error, Result};

/// Handle to a node inside one [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a trainable tensor inside a [`ParamSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Direction for row/column-wise reductions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Each row independently (reduce across its columns).
    Row,
    /// Each column independently (reduce across its rows).
    Col,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub tensor: Tensor2,
}

/// Ordered, named collection of trainable tensors.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    entries: Vec<NamedTensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor2) -> ParamId {
        self.entries.push(NamedTensor {
            name: name.into(),
            tensor,
        });
        ParamId(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor2 {
        &self.entries[id.0].tensor
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor2 {
        &mut self.entries[id.0].tensor
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.entries
            .iter()
            .position(|e| e.name == name)
            .map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn entries(&self) -> &[NamedTensor] {
        &self.entries
    }

    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.len()).sum()
    }
}

/// One gradient tensor per parameter, in [`ParamSet`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    grads: Vec<Tensor2>,
}

impl Gradients {
    pub fn zeros_like(params: &ParamSet) -> Self {
        Self {
            grads: params
                .entries
                .iter()
                .map(|e| Tensor2::zeros(e.tensor.rows(), e.tensor.cols()))
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor2 {
        &self.grads[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor2 {
        &mut self.grads[id.0]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor2> {
        self.grads.iter()
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.grads {
            g.scale_in_place(factor);
        }
    }

    pub fn reset(&mut self) {
        for g in &mut self.grads {
            g.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.grads.iter().map(Tensor2::sq_norm).sum::<f64>().sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`; returns the
    /// norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
        norm
    }
}

#[derive(Clone, Debug)]
enum Op {
    Input(usize),
    Param(ParamId),
    Const(Tensor2),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Softmax(NodeId, Axis),
    LogSumExp(NodeId, Axis),
    MaxOverRows(NodeId),
    Transpose(NodeId),
    ConcatCols(Vec<NodeId>),
    ConcatRows(Vec<NodeId>),
    SliceRows(NodeId, usize, usize),
    SliceCols(NodeId, usize, usize),
    PickSum(NodeId, Vec<(usize, usize)>),
    Sum(NodeId),
    Focal {
        probs: NodeId,
        gold: usize,
        gamma: f64,
        weight: f64,
    },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Input(_) => "input",
            Op::Param(_) => "param",
            Op::Const(_) => "const",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::Softmax(..) => "softmax",
            Op::LogSumExp(..) => "logsumexp",
            Op::MaxOverRows(_) => "max_over_rows",
            Op::Transpose(_) => "transpose",
            Op::ConcatCols(_) => "concat_cols",
            Op::ConcatRows(_) => "concat_rows",
            Op::SliceRows(..) => "slice_rows",
            Op::SliceCols(..) => "slice_cols",
            Op::PickSum(..) => "pick_sum",
            Op::Sum(_) => "sum",
            Op::Focal { .. } => "focal_loss",
        }
    }
}

/// How the right operand of an elementwise op is broadcast.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Broadcast {
    Same,
    Row,
    Col,
    Scalar,
}

fn broadcast_kind(a: &Tensor2, b: &Tensor2) -> Option<Broadcast> {
    let (ar, ac) = a.shape();
    match b.shape() {
        (r, c) if r == ar && c == ac => Some(Broadcast::Same),
        (1, 1) => Some(Broadcast::Scalar),
        (1, c) if c == ac => Some(Broadcast::Row),
        (r, 1) if r == ar => Some(Broadcast::Col),
        _ => None,
    }
}

#[inline]
fn bcast_index(kind: Broadcast, r: usize, c: usize, bcols: usize) -> usize {
    match kind {
        Broadcast::Same => r * bcols + c,
        Broadcast::Row => c,
        Broadcast::Col => r,
        Broadcast::Scalar => 0,
    }
}

/// Guard inside the focal/cross-entropy log.
pub const LOG_EPS: f64 = 1e-12;

/// Focal loss on a probability value: `-w (1-p)^γ log(max(p, ε))`.
pub fn focal_value(p: f64, gamma: f64, weight: f64) -> f64 {
    let q = (1.0 - p).max(0.0);
    let modulating = if gamma == 0.0 { 1.0 } else { q.powf(gamma) };
    -weight * modulating * p.max(LOG_EPS).ln()
}

fn focal_derivative(p: f64, gamma: f64, weight: f64) -> f64 {
    let q = (1.0 - p).max(0.0);
    let log_p = p.max(LOG_EPS).ln();
    let dlog = if p > LOG_EPS { 1.0 / p } else { 0.0 };
    let modulating = if gamma == 0.0 { 1.0 } else { q.powf(gamma) };
    let dmod = if gamma == 0.0 {
        0.0
    } else if gamma == 1.0 {
        -1.0
    } else if q > 0.0 {
        -gamma * q.powf(gamma - 1.0)
    } else {
        0.0
    };
    -weight * (dmod * log_p + modulating * dlog)
}

struct Node {
    op: Op,
    needs_grad: bool,
}

/// A computation graph over [`Tensor2`] values.
///
/// Single-threaded by construction; build one graph per worker.
pub struct Graph {
    nodes: Vec<Node>,
    values: Vec<Tensor2>,
    param_shapes: Vec<(usize, usize)>,
    forwarded: bool,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            values: Vec::new(),
            param_shapes: Vec::new(),
            forwarded: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op) -> NodeId {
        let needs_grad = match &op {
            Op::Param(_) => true,
            Op::Input(_) | Op::Const(_) => false,
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => {
                self.nodes[a.0].needs_grad || self.nodes[b.0].needs_grad
            }
            Op::ConcatCols(ids) | Op::ConcatRows(ids) => {
                ids.iter().any(|id| self.nodes[id.0].needs_grad)
            }
            Op::Scale(a, _)
            | Op::Tanh(a)
            | Op::Sigmoid(a)
            | Op::Softmax(a, _)
            | Op::LogSumExp(a, _)
            | Op::MaxOverRows(a)
            | Op::Transpose(a)
            | Op::SliceRows(a, ..)
            | Op::SliceCols(a, ..)
            | Op::PickSum(a, _)
            | Op::Sum(a)
            | Op::Focal { probs: a, .. } => self.nodes[a.0].needs_grad,
        };
        self.nodes.push(Node { op, needs_grad });
        self.forwarded = false;
        NodeId(self.nodes.len() - 1)
    }

    /// Placeholder bound to `inputs[slot]` at forward time.
    pub fn input(&mut self, slot: usize) -> NodeId {
        self.push(Op::Input(slot))
    }

    pub fn param(&mut self, id: ParamId) -> NodeId {
        self.push(Op::Param(id))
    }

    pub fn constant(&mut self, value: Tensor2) -> NodeId {
        self.push(Op::Const(value))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::MatMul(a, b))
    }

    /// `a + b`, with `b` broadcast as a row vector, column vector or scalar.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Sub(a, b))
    }

    /// Elementwise (Hadamard) product with the same broadcasting as [`Graph::add`].
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        self.push(Op::Scale(a, factor))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sigmoid(a))
    }

    pub fn softmax(&mut self, a: NodeId, axis: Axis) -> NodeId {
        self.push(Op::Softmax(a, axis))
    }

    /// `Axis::Row` yields an `r×1` column, `Axis::Col` a `1×c` row.
    pub fn log_sum_exp(&mut self, a: NodeId, axis: Axis) -> NodeId {
        self.push(Op::LogSumExp(a, axis))
    }

    /// Column-wise maximum over all rows, `1×c`.
    pub fn max_over_rows(&mut self, a: NodeId) -> NodeId {
        self.push(Op::MaxOverRows(a))
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Transpose(a))
    }

    /// Side-by-side concatenation; all parts share the row count.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        self.push(Op::ConcatCols(parts.to_vec()))
    }

    /// Vertical stacking; all parts share the column count.
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> NodeId {
        self.push(Op::ConcatRows(parts.to_vec()))
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        self.push(Op::SliceRows(a, start, len))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        self.push(Op::SliceCols(a, start, len))
    }

    /// Scalar sum of the listed `(row, col)` entries; repeats count twice.
    pub fn pick_sum(&mut self, a: NodeId, entries: Vec<(usize, usize)>) -> NodeId {
        self.push(Op::PickSum(a, entries))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sum(a))
    }

    /// Scalar focal loss on a `1×C` probability row.
    pub fn focal_loss(&mut self, probs: NodeId, gold: usize, gamma: f64, weight: f64) -> NodeId {
        self.push(Op::Focal {
            probs,
            gold,
            gamma,
            weight,
        })
    }

    pub fn value(&self, id: NodeId) -> Option<&Tensor2> {
        if self.forwarded {
            self.values.get(id.0)
        } else {
            None
        }
    }

    /// Evaluates every node in construction order.
    pub fn forward(&mut self, params: &ParamSet, inputs: &[Tensor2]) -> Result<()> {
        self.forwarded = false;
        self.values.clear();
        self.values.reserve(self.nodes.len());
        self.param_shapes = params.entries.iter().map(|e| e.tensor.shape()).collect();
        for idx in 0..self.nodes.len() {
            let value = self.eval(idx, params, inputs)?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    node: idx,
                    op: self.nodes[idx].op.name(),
                });
            }
            self.values.push(value);
        }
        self.forwarded = true;
        Ok(())
    }

    fn shape_err(&self, idx: usize, detail: String) -> Error {
        Error::Shape {
            node: idx,
            op: self.nodes[idx].op.name(),
            detail,
        }
    }

    fn eval(&self, idx: usize, params: &ParamSet, inputs: &[Tensor2]) -> Result<Tensor2> {
        let v = |id: &NodeId| &self.values[id.0];
        let out = match &self.nodes[idx].op {
            Op::Input(slot) => inputs
                .get(*slot)
                .cloned()
                .ok_or_else(|| self.shape_err(idx, format!("missing input slot {slot}")))?,
            Op::Param(id) => {
                if id.0 >= params.len() {
                    return Err(self.shape_err(idx, format!("unknown parameter {}", id.0)));
                }
                params.get(*id).clone()
            }
            Op::Const(t) => t.clone(),
            Op::MatMul(a, b) => {
                let (a, b) = (v(a), v(b));
                if a.cols() != b.rows() {
                    return Err(self.shape_err(
                        idx,
                        format!("{}x{} · {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
                    ));
                }
                let mut out = Tensor2::zeros(a.rows(), b.cols());
                matmul_acc(a, b, &mut out);
                out
            }
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => {
                let (av, bv) = (v(a), v(b));
                let kind = broadcast_kind(av, bv).ok_or_else(|| {
                    self.shape_err(
                        idx,
                        format!(
                            "cannot broadcast {}x{} onto {}x{}",
                            bv.rows(),
                            bv.cols(),
                            av.rows(),
                            av.cols()
                        ),
                    )
                })?;
                let mut out = av.clone();
                let bc = bv.cols();
                let cols = av.cols();
                let bd = bv.data();
                let op = &self.nodes[idx].op;
                for r in 0..av.rows() {
                    let row = out.row_mut(r);
                    for (c, x) in row.iter_mut().enumerate() {
                        let y = bd[bcast_index(kind, r, c, bc)];
                        *x = match op {
                            Op::Add(..) => *x + y,
                            Op::Sub(..) => *x - y,
                            _ => *x * y,
                        };
                    }
                    debug_assert_eq!(row.len(), cols);
                }
                out
            }
            Op::Scale(a, f) => v(a).map(|x| x * f),
            Op::Tanh(a) => v(a).map(f64::tanh),
            Op::Sigmoid(a) => v(a).map(sigmoid),
            Op::Softmax(a, axis) => softmax(v(a), *axis),
            Op::LogSumExp(a, axis) => log_sum_exp(v(a), *axis),
            Op::MaxOverRows(a) => {
                let a = v(a);
                if a.rows() == 0 {
                    return Err(self.shape_err(idx, "max over zero rows".into()));
                }
                let mut out = Tensor2::row_vector(a.row(0));
                for r in 1..a.rows() {
                    for (o, &x) in out.data_mut().iter_mut().zip(a.row(r)) {
                        if x > *o {
                            *o = x;
                        }
                    }
                }
                out
            }
            Op::Transpose(a) => v(a).transpose(),
            Op::ConcatCols(ids) => {
                let rows = v(&ids[0]).rows();
                if let Some(bad) = ids.iter().find(|id| v(id).rows() != rows) {
                    return Err(self.shape_err(
                        idx,
                        format!("part {} has {} rows, expected {rows}", bad.0, v(bad).rows()),
                    ));
                }
                let cols: usize = ids.iter().map(|id| v(id).cols()).sum();
                let mut data = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for id in ids {
                        data.extend_from_slice(v(id).row(r));
                    }
                }
                Tensor2::from_vec(rows, cols, data)?
            }
            Op::ConcatRows(ids) => {
                let cols = v(&ids[0]).cols();
                if let Some(bad) = ids.iter().find(|id| v(id).cols() != cols) {
                    return Err(self.shape_err(
                        idx,
                        format!("part {} has {} cols, expected {cols}", bad.0, v(bad).cols()),
                    ));
                }
                let rows: usize = ids.iter().map(|id| v(id).rows()).sum();
                let mut data = Vec::with_capacity(rows * cols);
                for id in ids {
                    data.extend_from_slice(v(id).data());
                }
                Tensor2::from_vec(rows, cols, data)?
            }
            Op::SliceRows(a, start, len) => {
                let a = v(a);
                if start + len > a.rows() || *len == 0 {
                    return Err(self.shape_err(
                        idx,
                        format!("rows {start}..{} of {}", start + len, a.rows()),
                    ));
                }
                a.slice_rows(*start, *len)
            }
            Op::SliceCols(a, start, len) => {
                let a = v(a);
                if start + len > a.cols() || *len == 0 {
                    return Err(self.shape_err(
                        idx,
                        format!("cols {start}..{} of {}", start + len, a.cols()),
                    ));
                }
                let cols: Vec<usize> = (*start..start + len).collect();
                a.select_cols(&cols)
            }
            Op::PickSum(a, entries) => {
                let a = v(a);
                let mut total = 0.0;
                for &(r, c) in entries {
                    if r >= a.rows() || c >= a.cols() {
                        return Err(self.shape_err(
                            idx,
                            format!("entry ({r},{c}) outside {}x{}", a.rows(), a.cols()),
                        ));
                    }
                    total += a.get(r, c);
                }
                Tensor2::scalar(total)
            }
            Op::Sum(a) => Tensor2::scalar(v(a).sum()),
            Op::Focal {
                probs,
                gold,
                gamma,
                weight,
            } => {
                let p = v(probs);
                if p.rows() != 1 || *gold >= p.cols() {
                    return Err(self.shape_err(
                        idx,
                        format!("gold {gold} for {}x{} distribution", p.rows(), p.cols()),
                    ));
                }
                Tensor2::scalar(focal_value(p.get(0, *gold), *gamma, *weight))
            }
        };
        Ok(out)
    }

    /// Gradients of the scalar `loss` with respect to every parameter.
    /// Parameters with no path to the loss receive exact zeros.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let mut grads = Gradients {
            grads: self
                .param_shapes
                .iter()
                .map(|&(r, c)| Tensor2::zeros(r, c))
                .collect(),
        };
        self.backward_into(loss, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Graph::backward`] but adds into an existing accumulator.
    pub fn backward_into(&self, loss: NodeId, out: &mut Gradients) -> Result<()> {
        if !self.forwarded {
            return Err(Error::NotForwarded);
        }
        let lv = &self.values[loss.0];
        if lv.shape() != (1, 1) {
            return Err(Error::NotScalar {
                node: loss.0,
                rows: lv.rows(),
                cols: lv.cols(),
            });
        }
        if out.grads.len() != self.param_shapes.len() {
            return Err(Error::Invalid(format!(
                "gradient accumulator has {} slots for {} parameters",
                out.grads.len(),
                self.param_shapes.len()
            )));
        }
        let mut adj: Vec<Option<Tensor2>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(Tensor2::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            if !self.nodes[idx].needs_grad {
                continue;
            }
            self.propagate(idx, &g, &mut adj, out);
        }
        Ok(())
    }

    fn propagate(&self, idx: usize, g: &Tensor2, adj: &mut [Option<Tensor2>], out: &mut Gradients) {
        let values = &self.values;
        let nodes = &self.nodes;
        let y = &values[idx];
        macro_rules! with_adj {
            ($id:expr, |$t:ident| $body:expr) => {
                if let Some($t) = adjoint_entry(adj, nodes, values, $id) {
                    $body;
                }
            };
        }

        match &nodes[idx].op {
            Op::Input(_) | Op::Const(_) => {}
            Op::Param(id) => out.grads[id.0].add_assign(g),
            Op::MatMul(a, b) => {
                let (av, bv) = (&values[a.0], &values[b.0]);
                with_adj!(*a, |ga| matmul_nt_acc(g, bv, ga));
                with_adj!(*b, |gb| matmul_tn_acc(av, g, gb));
            }
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(nodes[idx].op, Op::Sub(..)) {
                    -1.0
                } else {
                    1.0
                };
                with_adj!(*a, |ga| ga.add_assign(g));
                let kind = broadcast_kind(&values[a.0], &values[b.0]).unwrap();
                with_adj!(*b, |gb| {
                    let bc = gb.cols();
                    for r in 0..g.rows() {
                        for c in 0..g.cols() {
                            gb.data_mut()[bcast_index(kind, r, c, bc)] += sign * g.get(r, c);
                        }
                    }
                });
            }
            Op::Mul(a, b) => {
                let (av, bv) = (&values[a.0], &values[b.0]);
                let kind = broadcast_kind(av, bv).unwrap();
                let bc = bv.cols();
                with_adj!(*a, |ga| {
                    for r in 0..g.rows() {
                        for c in 0..g.cols() {
                            let k = r * g.cols() + c;
                            ga.data_mut()[k] +=
                                g.data()[k] * bv.data()[bcast_index(kind, r, c, bc)];
                        }
                    }
                });
                with_adj!(*b, |gb| {
                    for r in 0..g.rows() {
                        for c in 0..g.cols() {
                            let k = r * g.cols() + c;
                            gb.data_mut()[bcast_index(kind, r, c, bc)] +=
                                g.data()[k] * av.data()[k];
                        }
                    }
                });
            }
            Op::Scale(a, f) => with_adj!(*a, |ga| {
                for (x, gv) in ga.data_mut().iter_mut().zip(g.data()) {
                    *x += f * gv;
                }
            }),
            Op::Tanh(a) => with_adj!(*a, |ga| {
                for ((x, gv), yv) in ga.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                    *x += gv * (1.0 - yv * yv);
                }
            }),
            Op::Sigmoid(a) => with_adj!(*a, |ga| {
                for ((x, gv), yv) in ga.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                    *x += gv * yv * (1.0 - yv);
                }
            }),
            Op::Softmax(a, axis) => with_adj!(*a, |ga| {
                let (rows, cols) = y.shape();
                match axis {
                    Axis::Row => {
                        for r in 0..rows {
                            let dot: f64 = (0..cols).map(|c| g.get(r, c) * y.get(r, c)).sum();
                            for c in 0..cols {
                                let k = r * cols + c;
                                ga.data_mut()[k] += y.data()[k] * (g.data()[k] - dot);
                            }
                        }
                    }
                    Axis::Col => {
                        for c in 0..cols {
                            let dot: f64 = (0..rows).map(|r| g.get(r, c) * y.get(r, c)).sum();
                            for r in 0..rows {
                                let k = r * cols + c;
                                ga.data_mut()[k] += y.data()[k] * (g.data()[k] - dot);
                            }
                        }
                    }
                }
            }),
            Op::LogSumExp(a, axis) => {
                let x = &values[a.0];
                with_adj!(*a, |ga| {
                    let (rows, cols) = x.shape();
                    for r in 0..rows {
                        for c in 0..cols {
                            let (lse, gv) = match axis {
                                Axis::Row => (y.data()[r], g.data()[r]),
                                Axis::Col => (y.data()[c], g.data()[c]),
                            };
                            let k = r * cols + c;
                            ga.data_mut()[k] += gv * (x.data()[k] - lse).exp();
                        }
                    }
                });
            }
            Op::MaxOverRows(a) => {
                let x = &values[a.0];
                with_adj!(*a, |ga| {
                    for c in 0..x.cols() {
                        let target = y.data()[c];
                        let r = (0..x.rows()).find(|&r| x.get(r, c) == target).unwrap_or(0);
                        let k = r * x.cols() + c;
                        ga.data_mut()[k] += g.data()[c];
                    }
                });
            }
            Op::Transpose(a) => with_adj!(*a, |ga| ga.add_assign(&g.transpose())),
            Op::ConcatCols(ids) => {
                let mut offset = 0;
                for id in ids {
                    let w = values[id.0].cols();
                    with_adj!(*id, |gi| {
                        for r in 0..g.rows() {
                            for (x, gv) in
                                gi.row_mut(r).iter_mut().zip(&g.row(r)[offset..offset + w])
                            {
                                *x += gv;
                            }
                        }
                    });
                    offset += w;
                }
            }
            Op::ConcatRows(ids) => {
                let mut offset = 0;
                let cols = g.cols();
                for id in ids {
                    let h = values[id.0].rows();
                    with_adj!(*id, |gi| {
                        let src = &g.data()[offset * cols..(offset + h) * cols];
                        for (x, gv) in gi.data_mut().iter_mut().zip(src) {
                            *x += gv;
                        }
                    });
                    offset += h;
                }
            }
            Op::SliceRows(a, start, len) => with_adj!(*a, |ga| {
                let cols = ga.cols();
                let dst = &mut ga.data_mut()[start * cols..(start + len) * cols];
                for (x, gv) in dst.iter_mut().zip(g.data()) {
                    *x += gv;
                }
            }),
            Op::SliceCols(a, start, len) => with_adj!(*a, |ga| {
                for r in 0..g.rows() {
                    let dst = &mut ga.row_mut(r)[*start..start + len];
                    for (x, gv) in dst.iter_mut().zip(g.row(r)) {
                        *x += gv;
                    }
                }
            }),
            Op::PickSum(a, entries) => with_adj!(*a, |ga| {
                let gv = g.item();
                for &(r, c) in entries {
                    let k = r * ga.cols() + c;
                    ga.data_mut()[k] += gv;
                }
            }),
            Op::Sum(a) => with_adj!(*a, |ga| {
                let gv = g.item();
                ga.data_mut().iter_mut().for_each(|x| *x += gv);
            }),
            Op::Focal {
                probs,
                gold,
                gamma,
                weight,
            } => {
                let p = values[probs.0].get(0, *gold);
                with_adj!(*probs, |gp| {
                    gp.data_mut()[*gold] += g.item() * focal_derivative(p, *gamma, *weight);
                });
            }
        }
    }
}

/// Adjoint slot of an input node, created on first use; `None` when the
/// node has no path to a parameter.
fn adjoint_entry<'a>(
    adj: &'a mut [Option<Tensor2>],
    nodes: &[Node],
    values: &[Tensor2],
    id: NodeId,
) -> Option<&'a mut Tensor2> {
    if !nodes[id.0].needs_grad {
        return None;
    }
    let v = &values[id.0];
    Some(adj[id.0].get_or_insert_with(|| Tensor2::zeros(v.rows(), v.cols())))
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-shifted softmax along `axis`.
pub fn softmax(x: &Tensor2, axis: Axis) -> Tensor2 {
    let (rows, cols) = x.shape();
    let mut out = x.clone();
    match axis {
        Axis::Row => {
            for r in 0..rows {
                softmax_in_place(out.row_mut(r));
            }
        }
        Axis::Col => {
            for c in 0..cols {
                let mut col = x.column(c);
                softmax_in_place(&mut col);
                for (r, v) in col.into_iter().enumerate() {
                    out.set(r, c, v);
                }
            }
        }
    }
    out
}

pub fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in values.iter_mut() {
        *v /= total;
    }
}

/// `max + ln Σ exp(x - max)`.
pub fn log_sum_exp_slice(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn log_sum_exp(x: &Tensor2, axis: Axis) -> Tensor2 {
    match axis {
        Axis::Row => {
            let vals: Vec<f64> = (0..x.rows()).map(|r| log_sum_exp_slice(x.row(r))).collect();
            Tensor2::col_vector(&vals)
        }
        Axis::Col => {
            let vals: Vec<f64> = (0..x.cols())
                .map(|c| log_sum_exp_slice(&x.column(c)))
                .collect();
            Tensor2::row_vector(&vals)
        }
    }
}
