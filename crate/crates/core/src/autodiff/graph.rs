//! The computation tape and its operations.

use crate::tensor::Tensor;

use super::AutodiffError;

/// Handle to a node on a [`Graph`]. Only meaningful for the graph that
/// created it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op {
    Leaf,
    /// y = W x + b
    Affine { w: NodeId, x: NodeId, b: NodeId },
    /// y = W x
    MatVec { w: NodeId, x: NodeId },
    Add { a: NodeId, b: NodeId },
    /// Elementwise product.
    Mul { a: NodeId, b: NodeId },
    Tanh { x: NodeId },
    Sigmoid { x: NodeId },
    Softmax { x: NodeId },
    /// -log softmax(logits)[target]; stores the softmax for the backward rule.
    CrossEntropy { logits: NodeId, probs: Vec<f64>, target: usize },
    /// Identity forward; backward multiplies the incoming gradient by -lambda.
    GradReverse { x: NodeId, lambda: f64 },
    /// Columnwise mean of a sequence of equal-length vectors.
    MeanRows { rows: Vec<NodeId> },
    /// sum_t weights[t] * rows[t]
    WeightedSumRows { weights: NodeId, rows: Vec<NodeId> },
    /// T scalars -> one vector of length T.
    StackScalars { items: Vec<NodeId> },
    Dot { a: NodeId, b: NodeId },
    /// [a; b] concatenation of two vectors.
    Concat { a: NodeId, b: NodeId },
    /// Contiguous sub-vector x[start..start+len].
    Slice { x: NodeId, start: usize, len: usize },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Affine { .. } => "affine",
            Op::MatVec { .. } => "matvec",
            Op::Add { .. } => "add",
            Op::Mul { .. } => "mul",
            Op::Tanh { .. } => "tanh",
            Op::Sigmoid { .. } => "sigmoid",
            Op::Softmax { .. } => "softmax",
            Op::CrossEntropy { .. } => "cross_entropy",
            Op::GradReverse { .. } => "grad_reverse",
            Op::MeanRows { .. } => "mean_over_time",
            Op::WeightedSumRows { .. } => "weighted_sum",
            Op::StackScalars { .. } => "stack_scalars",
            Op::Dot { .. } => "dot",
            Op::Concat { .. } => "concat",
            Op::Slice { .. } => "slice",
        }
    }
}

/// Reverse-mode computation tape.
pub struct Graph {
    values: Vec<Tensor>,
    ops: Vec<Op>,
    requires: Vec<bool>,
    grads: Vec<Option<Tensor>>,
    backward_done: bool,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            values: Vec::new(),
            ops: Vec::new(),
            requires: Vec::new(),
            grads: Vec::new(),
            backward_done: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value computed for `id` during the forward pass.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.values[id.0]
    }

    /// Gradient accumulated at `id`, available after [`Graph::backward`].
    /// `None` if no gradient reached the node.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.grads[id.0].as_ref()
    }

    pub fn backward_done(&self) -> bool {
        self.backward_done
    }

    fn push(&mut self, value: Tensor, op: Op, requires: bool) -> Result<NodeId, AutodiffError> {
        if !value.all_finite() {
            return Err(AutodiffError::NonFiniteValue { op: op.name() });
        }
        let id = NodeId(self.values.len());
        self.values.push(value);
        self.ops.push(op);
        self.requires.push(requires);
        self.grads.push(None);
        Ok(id)
    }

    fn requires_any(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.requires[id.0])
    }

    /// Insert an input node. `requires_grad` marks it as a differentiation
    /// target; gradients are only propagated toward such leaves.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> NodeId {
        // Leaf values are caller-supplied; the finiteness check still applies.
        self.push(value, Op::Leaf, requires_grad)
            .expect("leaf tensors must be finite")
    }

    /// y = W x + b with W: [m, n], x: [n], b: [m].
    pub fn affine(&mut self, w: NodeId, x: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (wt, xt, bt) = (&self.values[w.0], &self.values[x.0], &self.values[b.0]);
        if wt.shape().len() != 2 || wt.cols() != xt.len() || wt.rows() != bt.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "affine",
                detail: format!(
                    "W {:?}, x {:?}, b {:?}",
                    wt.shape(),
                    xt.shape(),
                    bt.shape()
                ),
            });
        }
        let mut out = bt.data().to_vec();
        matvec_accumulate(wt, xt.data(), &mut out);
        let req = self.requires_any(&[w, x, b]);
        self.push(Tensor::vector(out), Op::Affine { w, x, b }, req)
    }

    /// y = W x with W: [m, n], x: [n].
    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> Result<NodeId, AutodiffError> {
        let (wt, xt) = (&self.values[w.0], &self.values[x.0]);
        if wt.shape().len() != 2 || wt.cols() != xt.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "matvec",
                detail: format!("W {:?}, x {:?}", wt.shape(), xt.shape()),
            });
        }
        let mut out = vec![0.0; wt.rows()];
        matvec_accumulate(wt, xt.data(), &mut out);
        let req = self.requires_any(&[w, x]);
        self.push(Tensor::vector(out), Op::MatVec { w, x }, req)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (at, bt) = (&self.values[a.0], &self.values[b.0]);
        if at.shape() != bt.shape() {
            return Err(AutodiffError::ShapeMismatch {
                op: "add",
                detail: format!("{:?} vs {:?}", at.shape(), bt.shape()),
            });
        }
        let data = at
            .data()
            .iter()
            .zip(bt.data())
            .map(|(x, y)| x + y)
            .collect();
        let value = Tensor::from_shape(at.shape().to_vec(), data).expect("same shape");
        let req = self.requires_any(&[a, b]);
        self.push(value, Op::Add { a, b }, req)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (at, bt) = (&self.values[a.0], &self.values[b.0]);
        if at.shape() != bt.shape() {
            return Err(AutodiffError::ShapeMismatch {
                op: "mul",
                detail: format!("{:?} vs {:?}", at.shape(), bt.shape()),
            });
        }
        let data = at
            .data()
            .iter()
            .zip(bt.data())
            .map(|(x, y)| x * y)
            .collect();
        let value = Tensor::from_shape(at.shape().to_vec(), data).expect("same shape");
        let req = self.requires_any(&[a, b]);
        self.push(value, Op::Mul { a, b }, req)
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId, AutodiffError> {
        let xt = &self.values[x.0];
        let data = xt.data().iter().map(|v| v.tanh()).collect();
        let value = Tensor::from_shape(xt.shape().to_vec(), data).expect("same shape");
        let req = self.requires[x.0];
        self.push(value, Op::Tanh { x }, req)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId, AutodiffError> {
        let xt = &self.values[x.0];
        let data = xt.data().iter().map(|v| sigmoid(*v)).collect();
        let value = Tensor::from_shape(xt.shape().to_vec(), data).expect("same shape");
        let req = self.requires[x.0];
        self.push(value, Op::Sigmoid { x }, req)
    }

    /// Numerically stable softmax over a vector.
    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId, AutodiffError> {
        let xt = &self.values[x.0];
        if xt.is_empty() {
            return Err(AutodiffError::EmptySequence { op: "softmax" });
        }
        let value = Tensor::vector(softmax_stable(xt.data()));
        let req = self.requires[x.0];
        self.push(value, Op::Softmax { x }, req)
    }

    /// loss = -log softmax(logits)[target], computed via the log-sum-exp
    /// identity. Backward is softmax(logits) - onehot(target).
    pub fn cross_entropy_loss(
        &mut self,
        logits: NodeId,
        target: usize,
    ) -> Result<NodeId, AutodiffError> {
        let lt = &self.values[logits.0];
        let k = lt.len();
        if target >= k {
            return Err(AutodiffError::TargetOutOfRange { target, classes: k });
        }
        let z = lt.data();
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = z.iter().map(|v| (v - max).exp()).sum();
        let loss = max + sum_exp.ln() - z[target];
        let probs = z.iter().map(|v| (v - max).exp() / sum_exp).collect();
        let req = self.requires[logits.0];
        self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                probs,
                target,
            },
            req,
        )
    }

    /// Identity in the forward pass; the backward pass multiplies the
    /// incoming gradient by `-lambda` before it continues upstream.
    pub fn grad_reverse(&mut self, x: NodeId, lambda: f64) -> Result<NodeId, AutodiffError> {
        if !(lambda >= 0.0) {
            return Err(AutodiffError::NegativeLambda { lambda });
        }
        let value = self.values[x.0].clone();
        let req = self.requires[x.0];
        self.push(value, Op::GradReverse { x, lambda }, req)
    }

    /// Columnwise arithmetic mean over `rows` (all equal-length vectors).
    pub fn mean_over_time(&mut self, rows: &[NodeId]) -> Result<NodeId, AutodiffError> {
        if rows.is_empty() {
            return Err(AutodiffError::EmptySequence {
                op: "mean_over_time",
            });
        }
        let dim = self.values[rows[0].0].len();
        let mut out = vec![0.0; dim];
        for &r in rows {
            let rt = &self.values[r.0];
            if rt.len() != dim {
                return Err(AutodiffError::ShapeMismatch {
                    op: "mean_over_time",
                    detail: format!("row of len {} among rows of len {dim}", rt.len()),
                });
            }
            for (o, v) in out.iter_mut().zip(rt.data()) {
                *o += v;
            }
        }
        let inv = 1.0 / rows.len() as f64;
        for o in &mut out {
            *o *= inv;
        }
        let req = self.requires_any(rows);
        self.push(
            Tensor::vector(out),
            Op::MeanRows {
                rows: rows.to_vec(),
            },
            req,
        )
    }

    /// c = sum_t weights[t] * rows[t], the attention summary.
    pub fn weighted_sum(
        &mut self,
        weights: NodeId,
        rows: &[NodeId],
    ) -> Result<NodeId, AutodiffError> {
        let wt = &self.values[weights.0];
        if wt.len() != rows.len() || rows.is_empty() {
            return Err(AutodiffError::ShapeMismatch {
                op: "weighted_sum",
                detail: format!("{} weights for {} rows", wt.len(), rows.len()),
            });
        }
        let dim = self.values[rows[0].0].len();
        let mut out = vec![0.0; dim];
        for (t, &r) in rows.iter().enumerate() {
            let rt = &self.values[r.0];
            if rt.len() != dim {
                return Err(AutodiffError::ShapeMismatch {
                    op: "weighted_sum",
                    detail: format!("row of len {} among rows of len {dim}", rt.len()),
                });
            }
            let w = self.values[weights.0].data()[t];
            for (o, v) in out.iter_mut().zip(rt.data()) {
                *o += w * v;
            }
        }
        let req = self.requires_any(rows) || self.requires[weights.0];
        self.push(
            Tensor::vector(out),
            Op::WeightedSumRows {
                weights,
                rows: rows.to_vec(),
            },
            req,
        )
    }

    /// Collect single-element nodes into one vector (attention scores).
    pub fn stack_scalars(&mut self, items: &[NodeId]) -> Result<NodeId, AutodiffError> {
        if items.is_empty() {
            return Err(AutodiffError::EmptySequence {
                op: "stack_scalars",
            });
        }
        let mut out = Vec::with_capacity(items.len());
        for &i in items {
            let it = &self.values[i.0];
            if it.len() != 1 {
                return Err(AutodiffError::ShapeMismatch {
                    op: "stack_scalars",
                    detail: format!("item of shape {:?}", it.shape()),
                });
            }
            out.push(it.data()[0]);
        }
        let req = self.requires_any(items);
        self.push(
            Tensor::vector(out),
            Op::StackScalars {
                items: items.to_vec(),
            },
            req,
        )
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (at, bt) = (&self.values[a.0], &self.values[b.0]);
        if at.len() != bt.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "dot",
                detail: format!("{:?} vs {:?}", at.shape(), bt.shape()),
            });
        }
        let v = at.data().iter().zip(bt.data()).map(|(x, y)| x * y).sum();
        let req = self.requires_any(&[a, b]);
        self.push(Tensor::scalar(v), Op::Dot { a, b }, req)
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (at, bt) = (&self.values[a.0], &self.values[b.0]);
        if at.shape().len() > 1 || bt.shape().len() > 1 {
            return Err(AutodiffError::ShapeMismatch {
                op: "concat",
                detail: format!("{:?} vs {:?}", at.shape(), bt.shape()),
            });
        }
        let mut out = at.data().to_vec();
        out.extend_from_slice(bt.data());
        let req = self.requires_any(&[a, b]);
        self.push(Tensor::vector(out), Op::Concat { a, b }, req)
    }

    pub fn slice(
        &mut self,
        x: NodeId,
        start: usize,
        len: usize,
    ) -> Result<NodeId, AutodiffError> {
        let xt = &self.values[x.0];
        if start + len > xt.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "slice",
                detail: format!("[{start}, {}) of len {}", start + len, xt.len()),
            });
        }
        let out = xt.data()[start..start + len].to_vec();
        let req = self.requires[x.0];
        self.push(Tensor::vector(out), Op::Slice { x, start, len }, req)
    }

    /// Run the reverse sweep from `loss` (a single-element node), seeding
    /// d loss / d loss = 1. Visits each node at most once, in reverse
    /// creation order. A second call without a fresh graph is an error.
    pub fn backward(&mut self, loss: NodeId) -> Result<(), AutodiffError> {
        if self.backward_done {
            return Err(AutodiffError::BackwardConsumed);
        }
        self.backward_done = true;
        let lt = &self.values[loss.0];
        if lt.len() != 1 {
            return Err(AutodiffError::NonScalarLoss {
                shape: lt.shape().to_vec(),
            });
        }
        let mut seed = Tensor::zeros(lt.shape());
        seed.data_mut()[0] = 1.0;
        self.grads[loss.0] = Some(seed);

        for i in (0..=loss.0).rev() {
            let Some(gout) = self.grads[i].take() else {
                continue;
            };
            if !gout.all_finite() {
                return Err(AutodiffError::NonFiniteGradient {
                    node: i,
                    op: self.ops[i].name(),
                });
            }
            self.propagate(i, &gout)?;
            self.grads[i] = Some(gout);
        }
        Ok(())
    }

    /// Accumulate `gout` at node `i` into the gradients of its inputs.
    fn propagate(&mut self, i: usize, gout: &Tensor) -> Result<(), AutodiffError> {
        // Inputs always precede their consumers on the tape, so `grads[j]`
        // for j < i is untouched by the sweep position at i.
        let g = gout.data();
        match &self.ops[i] {
            Op::Leaf => {}
            Op::Affine { w, x, b } => {
                let (w, x, b) = (*w, *x, *b);
                if self.requires[w.0] {
                    let xv = self.values[x.0].data().to_vec();
                    let gw = self.grad_buf(w);
                    outer_accumulate(g, &xv, gw.data_mut());
                }
                if self.requires[x.0] {
                    let mut gx = vec![0.0; self.values[x.0].len()];
                    matvec_t_accumulate(&self.values[w.0], g, &mut gx);
                    add_into(self.grad_buf(x).data_mut(), &gx);
                }
                if self.requires[b.0] {
                    add_into(self.grad_buf(b).data_mut(), g);
                }
            }
            Op::MatVec { w, x } => {
                let (w, x) = (*w, *x);
                if self.requires[w.0] {
                    let xv = self.values[x.0].data().to_vec();
                    let gw = self.grad_buf(w);
                    outer_accumulate(g, &xv, gw.data_mut());
                }
                if self.requires[x.0] {
                    let mut gx = vec![0.0; self.values[x.0].len()];
                    matvec_t_accumulate(&self.values[w.0], g, &mut gx);
                    add_into(self.grad_buf(x).data_mut(), &gx);
                }
            }
            Op::Add { a, b } => {
                let (a, b) = (*a, *b);
                if self.requires[a.0] {
                    add_into(self.grad_buf(a).data_mut(), g);
                }
                if self.requires[b.0] {
                    add_into(self.grad_buf(b).data_mut(), g);
                }
            }
            Op::Mul { a, b } => {
                let (a, b) = (*a, *b);
                if self.requires[a.0] {
                    let bv = self.values[b.0].data().to_vec();
                    let ga = self.grad_buf(a);
                    for ((d, gi), bi) in ga.data_mut().iter_mut().zip(g).zip(&bv) {
                        *d += gi * bi;
                    }
                }
                if self.requires[b.0] {
                    let av = self.values[a.0].data().to_vec();
                    let gb = self.grad_buf(b);
                    for ((d, gi), ai) in gb.data_mut().iter_mut().zip(g).zip(&av) {
                        *d += gi * ai;
                    }
                }
            }
            Op::Tanh { x } => {
                let x = *x;
                if self.requires[x.0] {
                    let yv = self.values[i].data().to_vec();
                    let gx = self.grad_buf(x);
                    for ((d, gi), yi) in gx.data_mut().iter_mut().zip(g).zip(&yv) {
                        *d += gi * (1.0 - yi * yi);
                    }
                }
            }
            Op::Sigmoid { x } => {
                let x = *x;
                if self.requires[x.0] {
                    let yv = self.values[i].data().to_vec();
                    let gx = self.grad_buf(x);
                    for ((d, gi), yi) in gx.data_mut().iter_mut().zip(g).zip(&yv) {
                        *d += gi * yi * (1.0 - yi);
                    }
                }
            }
            Op::Softmax { x } => {
                let x = *x;
                if self.requires[x.0] {
                    // dL/dx = y ⊙ (g - (g · y))
                    let yv = self.values[i].data().to_vec();
                    let dot: f64 = yv.iter().zip(g).map(|(y, gi)| y * gi).sum();
                    let gx = self.grad_buf(x);
                    for ((d, gi), yi) in gx.data_mut().iter_mut().zip(g).zip(&yv) {
                        *d += yi * (gi - dot);
                    }
                }
            }
            Op::CrossEntropy {
                logits,
                probs,
                target,
            } => {
                let (logits, target) = (*logits, *target);
                if self.requires[logits.0] {
                    let probs = probs.clone();
                    let gs = g[0];
                    let gl = self.grad_buf(logits);
                    for (k, (d, p)) in gl.data_mut().iter_mut().zip(&probs).enumerate() {
                        let onehot = if k == target { 1.0 } else { 0.0 };
                        *d += gs * (p - onehot);
                    }
                }
            }
            Op::GradReverse { x, lambda } => {
                let (x, lambda) = (*x, *lambda);
                if self.requires[x.0] {
                    let gx = self.grad_buf(x);
                    for (d, gi) in gx.data_mut().iter_mut().zip(g) {
                        *d += -lambda * gi;
                    }
                }
            }
            Op::MeanRows { rows } => {
                let rows = rows.clone();
                let inv = 1.0 / rows.len() as f64;
                for r in rows {
                    if self.requires[r.0] {
                        let gr = self.grad_buf(r);
                        for (d, gi) in gr.data_mut().iter_mut().zip(g) {
                            *d += gi * inv;
                        }
                    }
                }
            }
            Op::WeightedSumRows { weights, rows } => {
                let (weights, rows) = (*weights, rows.clone());
                if self.requires[weights.0] {
                    let mut gw = vec![0.0; rows.len()];
                    for (t, &r) in rows.iter().enumerate() {
                        gw[t] = self.values[r.0]
                            .data()
                            .iter()
                            .zip(g)
                            .map(|(h, gi)| h * gi)
                            .sum();
                    }
                    add_into(self.grad_buf(weights).data_mut(), &gw);
                }
                for (t, &r) in rows.iter().enumerate() {
                    if self.requires[r.0] {
                        let w = self.values[weights.0].data()[t];
                        let gr = self.grad_buf(r);
                        for (d, gi) in gr.data_mut().iter_mut().zip(g) {
                            *d += w * gi;
                        }
                    }
                }
            }
            Op::StackScalars { items } => {
                let items = items.clone();
                for (t, it) in items.into_iter().enumerate() {
                    if self.requires[it.0] {
                        let gi = g[t];
                        self.grad_buf(it).data_mut()[0] += gi;
                    }
                }
            }
            Op::Dot { a, b } => {
                let (a, b) = (*a, *b);
                let gs = g[0];
                if self.requires[a.0] {
                    let bv = self.values[b.0].data().to_vec();
                    let ga = self.grad_buf(a);
                    for (d, bi) in ga.data_mut().iter_mut().zip(&bv) {
                        *d += gs * bi;
                    }
                }
                if self.requires[b.0] {
                    let av = self.values[a.0].data().to_vec();
                    let gb = self.grad_buf(b);
                    for (d, ai) in gb.data_mut().iter_mut().zip(&av) {
                        *d += gs * ai;
                    }
                }
            }
            Op::Concat { a, b } => {
                let (a, b) = (*a, *b);
                let na = self.values[a.0].len();
                if self.requires[a.0] {
                    add_into(self.grad_buf(a).data_mut(), &g[..na]);
                }
                if self.requires[b.0] {
                    add_into(self.grad_buf(b).data_mut(), &g[na..]);
                }
            }
            Op::Slice { x, start, len } => {
                let (x, start, len) = (*x, *start, *len);
                if self.requires[x.0] {
                    let gx = self.grad_buf(x);
                    add_into(&mut gx.data_mut()[start..start + len], &g[..len]);
                }
            }
        }
        Ok(())
    }

    /// Gradient accumulator for `id`, zero-initialized on first touch.
    fn grad_buf(&mut self, id: NodeId) -> &mut Tensor {
        let shape = self.values[id.0].shape().to_vec();
        self.grads[id.0].get_or_insert_with(|| Tensor::zeros(&shape))
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Max-subtracted softmax of a slice.
pub(crate) fn softmax_stable(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// out += W x
fn matvec_accumulate(w: &Tensor, x: &[f64], out: &mut [f64]) {
    let cols = w.cols();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w.data()[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (wi, xi) in row.iter().zip(x) {
            acc += wi * xi;
        }
        *o += acc;
    }
}

/// out += W^T g
fn matvec_t_accumulate(w: &Tensor, g: &[f64], out: &mut [f64]) {
    let cols = w.cols();
    for (r, gi) in g.iter().enumerate() {
        let row = &w.data()[r * cols..(r + 1) * cols];
        for (o, wi) in out.iter_mut().zip(row) {
            *o += wi * gi;
        }
    }
}

/// out += g x^T (row-major [len(g), len(x)])
fn outer_accumulate(g: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, gi) in g.iter().enumerate() {
        let row = &mut out[r * cols..(r + 1) * cols];
        for (o, xi) in row.iter_mut().zip(x) {
            *o += gi * xi;
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
