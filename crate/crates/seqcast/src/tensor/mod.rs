//! Dense 2-D tensors with reverse-mode automatic differentiation.
//!
//! All state lives in a [`Graph`]: a tape of tensors in creation order, which
//! is also a valid topological order. Model parameters are created first and
//! pinned with [`Graph::mark_persistent`]; every training window then builds
//! a fresh tape on top and [`Graph::reset`] truncates it back, leaving the
//! parameters (and their gradient accumulators) in place.
//!
//! Scalars are 1x1 tensors, row vectors 1xn. Everything is `f64`; the models
//! here are desk-scale and gradient-check fidelity matters more than speed.

mod backward;
mod ops;

use crate::error::{Error, Result};

/// Handle to a tensor in a [`Graph`]. Ids of persistent tensors stay valid
/// across [`Graph::reset`]; ids of tape tensors die with their tape, and any
/// later use is reported as a contract violation rather than silently
/// aliasing a new tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId {
    idx: usize,
    gen: u64,
}

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Leaf,
    MatMul(TensorId, TensorId),
    Transpose(TensorId),
    Add(TensorId, TensorId),
    Sub(TensorId, TensorId),
    Mul(TensorId, TensorId),
    /// Row-vector bias broadcast over the rows of the left operand. The only
    /// implicit broadcast in the engine; everything else requires equal shapes.
    AddBias(TensorId, TensorId),
    Relu(TensorId),
    Tanh(TensorId),
    Sigmoid(TensorId),
    Scale(TensorId, f64),
    Softmax {
        x: TensorId,
        axis: usize,
    },
    LayerNorm {
        x: TensorId,
        gain: TensorId,
        bias: TensorId,
        /// Per-row mean and 1/sqrt(var + eps), saved by the forward pass.
        mean: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Dropout {
        x: TensorId,
        /// Per-element multiplier: 0.0 for dropped entries, 1/(1-p) for kept.
        mask: Vec<f64>,
    },
    ConcatCols(Vec<TensorId>),
    SumAll(TensorId),
}

#[derive(Debug)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    /// Present iff `requires_grad`; accumulates across backward calls.
    grad: Option<Vec<f64>>,
    requires_grad: bool,
    /// True when a gradient path to some `requires_grad` leaf flows through.
    needs_grad: bool,
    op: Op,
    name: Option<String>,
}

impl Tensor {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Default)]
pub struct Graph {
    tensors: Vec<Tensor>,
    persistent: usize,
    gen: u64,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    /// Number of live tensors (persistent + current tape).
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    fn push(&mut self, t: Tensor) -> TensorId {
        self.tensors.push(t);
        TensorId {
            idx: self.tensors.len() - 1,
            gen: self.gen,
        }
    }

    pub(crate) fn node(&self, id: TensorId) -> Result<&Tensor> {
        self.check(id)?;
        Ok(&self.tensors[id.idx])
    }

    fn check(&self, id: TensorId) -> Result<()> {
        if id.idx < self.persistent || (id.gen == self.gen && id.idx < self.tensors.len()) {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "tensor id {} is stale: it belongs to a tape that was reset",
                id.idx
            )))
        }
    }

    /// Constant (non-trainable) tensor: inputs, targets, masks, encodings.
    pub fn leaf(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Result<TensorId> {
        if rows * cols != data.len() || rows == 0 || cols == 0 {
            return Err(Error::Contract(format!(
                "leaf of shape {}x{} given {} values",
                rows,
                cols,
                data.len()
            )));
        }
        Ok(self.push(Tensor {
            rows,
            cols,
            data,
            grad: None,
            requires_grad: false,
            needs_grad: false,
            op: Op::Leaf,
            name: None,
        }))
    }

    pub fn scalar(&mut self, v: f64) -> TensorId {
        self.leaf(1, 1, vec![v]).expect("1x1 leaf")
    }

    /// Trainable leaf with a named gradient accumulator. Create all parameters
    /// before [`Graph::mark_persistent`] so they survive tape resets.
    pub fn param(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    ) -> Result<TensorId> {
        let name = name.into();
        if rows * cols != data.len() || rows == 0 || cols == 0 {
            return Err(Error::Contract(format!(
                "parameter {name} of shape {rows}x{cols} given {} values",
                data.len()
            )));
        }
        let n = data.len();
        Ok(self.push(Tensor {
            rows,
            cols,
            data,
            grad: Some(vec![0.0; n]),
            requires_grad: true,
            needs_grad: true,
            op: Op::Leaf,
            name: Some(name),
        }))
    }

    /// Pin every tensor created so far; `reset` will keep them.
    pub fn mark_persistent(&mut self) {
        self.persistent = self.tensors.len();
    }

    /// Drop the current tape, keeping persistent tensors. Ids handed out for
    /// tape tensors become invalid.
    pub fn reset(&mut self) {
        self.tensors.truncate(self.persistent);
        self.gen += 1;
    }

    pub fn shape(&self, id: TensorId) -> Result<(usize, usize)> {
        let t = self.node(id)?;
        Ok((t.rows, t.cols))
    }

    pub fn value(&self, id: TensorId) -> Result<&[f64]> {
        Ok(&self.node(id)?.data)
    }

    /// Gradient accumulator of a `requires_grad` tensor, if any.
    pub fn grad(&self, id: TensorId) -> Result<Option<&[f64]>> {
        Ok(self.node(id)?.grad.as_deref())
    }

    pub fn name(&self, id: TensorId) -> Result<Option<&str>> {
        Ok(self.node(id)?.name.as_deref())
    }

    /// Overwrite a tensor's values in place (shape fixed). Used by the
    /// optimizer tests and checkpoint loading; not recorded on the tape.
    pub fn set_value(&mut self, id: TensorId, data: &[f64]) -> Result<()> {
        self.check(id)?;
        let t = &mut self.tensors[id.idx];
        if data.len() != t.data.len() {
            return Err(Error::Contract(format!(
                "set_value: tensor holds {} values, got {}",
                t.data.len(),
                data.len()
            )));
        }
        t.data.copy_from_slice(data);
        Ok(())
    }

    /// Mutable parameter values plus a read-only view of the gradient, for
    /// optimizer updates. Errors on non-parameter tensors.
    pub fn param_and_grad_mut(&mut self, id: TensorId) -> Result<(&mut [f64], &[f64], &str)> {
        self.check(id)?;
        let t = &mut self.tensors[id.idx];
        if !t.requires_grad {
            return Err(Error::Contract(format!(
                "tensor {} has no gradient accumulator; optimizer steps need parameters",
                id.idx
            )));
        }
        let name = t.name.as_deref().unwrap_or("<unnamed>");
        Ok((&mut t.data, t.grad.as_deref().expect("requires_grad"), name))
    }

    /// Zero every gradient accumulator.
    pub fn zero_grads(&mut self) {
        for t in &mut self.tensors {
            if let Some(g) = &mut t.grad {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }

    fn binary_shape_check(
        &self,
        op: &'static str,
        a: TensorId,
        b: TensorId,
    ) -> Result<(usize, usize)> {
        let (ar, ac) = self.shape(a)?;
        let (br, bc) = self.shape(b)?;
        if (ar, ac) != (br, bc) {
            return Err(Error::ShapeMismatch {
                op,
                lhs: (ar, ac),
                rhs: (br, bc),
            });
        }
        Ok((ar, ac))
    }

    fn needs(&self, ids: &[TensorId]) -> bool {
        ids.iter().any(|id| self.tensors[id.idx].needs_grad)
    }

    fn push_op(
        &mut self,
        rows: usize,
        cols: usize,
        data: Vec<f64>,
        needs_grad: bool,
        op: Op,
    ) -> TensorId {
        debug_assert_eq!(rows * cols, data.len());
        self.push(Tensor {
            rows,
            cols,
            data,
            grad: None,
            requires_grad: false,
            needs_grad,
            op,
            name: None,
        })
    }
}

/// c += a(m x k) * b(k x n), row-major.
pub(crate) fn mm_nn_acc(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let crow = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                crow[j] += av * brow[j];
            }
        }
    }
}

/// c += a(m x k) * b(n x k)^T, row-major.
pub(crate) fn mm_nt_acc(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut s = 0.0;
            for p in 0..k {
                s += arow[p] * brow[p];
            }
            c[i * n + j] += s;
        }
    }
}

/// c += a(k x m)^T * b(k x n), row-major.
pub(crate) fn mm_tn_acc(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    for p in 0..k {
        let arow = &a[p * m..(p + 1) * m];
        let brow = &b[p * n..(p + 1) * n];
        for i in 0..m {
            let av = arow[i];
            if av == 0.0 {
                continue;
            }
            let crow = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                crow[j] += av * brow[j];
            }
        }
    }
}
