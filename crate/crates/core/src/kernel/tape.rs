use std::sync::Arc;

use super::tensor::{matmul_raw, Real, Tensor};
use super::KernelError;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Compressed sparse row matrix used as a constant operand of [`Tape::spmm`].
#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> Csr<T> {
    /// Builds from `(row, col, value)` triplets; entries are sorted by row then column.
    pub fn from_triplets(rows: usize, cols: usize, mut entries: Vec<(usize, usize, T)>) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; rows + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx: entries.iter().map(|e| e.1).collect(),
            values: entries.iter().map(|e| e.2).collect(),
        }
    }

    fn mul_dense(&self, x: &[T], n: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows * n];
        for r in 0..self.rows {
            let orow = &mut out[r * n..(r + 1) * n];
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = self.values[p];
                let xrow = &x[self.col_idx[p] * n..(self.col_idx[p] + 1) * n];
                for (o, &xv) in orow.iter_mut().zip(xrow) {
                    *o += v * xv;
                }
            }
        }
        out
    }

    fn transpose_mul_dense(&self, g: &[T], n: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols * n];
        for r in 0..self.rows {
            let grow = &g[r * n..(r + 1) * n];
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = self.values[p];
                let c = self.col_idx[p];
                for (o, &gv) in out[c * n..(c + 1) * n].iter_mut().zip(grow) {
                    *o += v * gv;
                }
            }
        }
        out
    }
}

enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    AddRowBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MulColumn(Var, Var),
    Scale(Var, T),
    AddScalar(Var),
    LeakyRelu(Var, T),
    Relu(Var),
    Sigmoid(Var),
    LnClamped(Var, T),
    Sum(Var),
    GatherRows(Var, Arc<Vec<usize>>),
    MaskedSoftmax(Var, Arc<Vec<Vec<usize>>>),
    SegmentSum {
        weights: Var,
        source: Var,
        src: Arc<Vec<usize>>,
        tgt: Arc<Vec<usize>>,
    },
    SpMM(Arc<Csr<T>>, Var),
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Records primitive operations in execution order so a single reverse sweep can
/// produce gradients. A tape serves one forward/backward pass.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn shape_err(msg: String) -> KernelError {
    KernelError::Shape(msg)
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Every recorded value, in recording order.
    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.nodes.len()).map(Var)
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Trainable leaf.
    pub fn param(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// Non-trainable leaf.
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.rg(v)
    }

    /// Operands of the op that produced `v` (empty for leaves).
    pub fn inputs(&self, v: Var) -> Vec<Var> {
        match &self.nodes[v.0].op {
            Op::Leaf => vec![],
            Op::MatMul(a, b)
            | Op::AddRowBias(a, b)
            | Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::MulColumn(a, b) => vec![*a, *b],
            Op::Transpose(a)
            | Op::Scale(a, _)
            | Op::AddScalar(a)
            | Op::LeakyRelu(a, _)
            | Op::Relu(a)
            | Op::Sigmoid(a)
            | Op::LnClamped(a, _)
            | Op::Sum(a)
            | Op::GatherRows(a, _)
            | Op::MaskedSoftmax(a, _)
            | Op::SpMM(_, a) => vec![*a],
            Op::SegmentSum {
                weights, source, ..
            } => vec![*weights, *source],
        }
    }

    /// Short name of the op that produced `v`.
    pub fn op_name(&self, v: Var) -> &'static str {
        match &self.nodes[v.0].op {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Transpose(..) => "transpose",
            Op::AddRowBias(..) => "add_bias",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::MulColumn(..) => "mul_column",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::LeakyRelu(..) => "leaky_relu",
            Op::Relu(..) => "relu",
            Op::Sigmoid(..) => "sigmoid",
            Op::LnClamped(..) => "ln_clamped",
            Op::Sum(..) => "sum",
            Op::GatherRows(..) => "gather_rows",
            Op::MaskedSoftmax(..) => "masked_softmax",
            Op::SegmentSum { .. } => "segment_sum",
            Op::SpMM(..) => "spmm",
        }
    }

    fn dims(&self, v: Var) -> (usize, usize) {
        let t = &self.nodes[v.0].value;
        (t.rows(), t.cols())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        let (m, k) = self.dims(a);
        let (k2, n) = self.dims(b);
        if k != k2 {
            return Err(shape_err(format!("matmul {m}x{k} by {k2}x{n}")));
        }
        let out = matmul_raw(self.value(a).data(), self.value(b).data(), m, k, n);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::from_parts(vec![m, n], out), Op::MatMul(a, b), rg))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transposed();
        let rg = self.rg(a);
        self.push(out, Op::Transpose(a), rg)
    }

    /// `x[m×n] + b[1×n]`, bias broadcast over rows.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var, KernelError> {
        let (m, n) = self.dims(x);
        if self.value(b).len() != n {
            return Err(shape_err(format!(
                "bias of {} for {m}x{n}",
                self.value(b).len()
            )));
        }
        let bias = self.value(b).data().to_vec();
        let mut out = self.value(x).data().to_vec();
        for row in out.chunks_mut(n.max(1)) {
            for (o, &bv) in row.iter_mut().zip(&bias) {
                *o += bv;
            }
        }
        let rg = self.rg(x) || self.rg(b);
        Ok(self.push(
            Tensor::from_parts(vec![m, n], out),
            Op::AddRowBias(x, b),
            rg,
        ))
    }

    fn zip_same(&self, a: Var, b: Var, what: &str) -> Result<(), KernelError> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(shape_err(format!(
                "{what}: {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        Ok(())
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op<T>, f: impl Fn(T, T) -> T) -> Var {
        let ta = self.value(a);
        let tb = self.value(b);
        let out: Vec<T> = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = ta.shape().to_vec();
        let rg = self.rg(a) || self.rg(b);
        self.push(Tensor::from_parts(shape, out), op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        self.zip_same(a, b, "add")?;
        Ok(self.zip_with(a, b, Op::Add(a, b), |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        self.zip_same(a, b, "sub")?;
        Ok(self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y))
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        self.zip_same(a, b, "mul")?;
        Ok(self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y))
    }

    /// Scales row `i` of `x[m×n]` by `v[i]` where `v` has `m` entries.
    pub fn mul_column(&mut self, x: Var, v: Var) -> Result<Var, KernelError> {
        let (m, n) = self.dims(x);
        if self.value(v).len() != m {
            return Err(shape_err(format!(
                "column of {} for {m}x{n}",
                self.value(v).len()
            )));
        }
        let col = self.value(v).data();
        let mut out = self.value(x).data().to_vec();
        for (i, row) in out.chunks_mut(n.max(1)).enumerate() {
            for o in row.iter_mut() {
                *o *= col[i];
            }
        }
        let rg = self.rg(x) || self.rg(v);
        Ok(self.push(Tensor::from_parts(vec![m, n], out), Op::MulColumn(x, v), rg))
    }

    fn unary(&mut self, a: Var, op: Op<T>, f: impl Fn(T) -> T) -> Var {
        let out = self.value(a).map(f);
        let rg = self.rg(a);
        self.push(out, op, rg)
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        self.unary(a, Op::Scale(a, s), |x| x * s)
    }

    pub fn add_scalar(&mut self, a: Var, s: T) -> Var {
        self.unary(a, Op::AddScalar(a), |x| x + s)
    }

    pub fn leaky_relu(&mut self, a: Var, slope: T) -> Var {
        self.unary(a, Op::LeakyRelu(a, slope), |x| {
            if x > T::zero() {
                x
            } else {
                x * slope
            }
        })
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(
            a,
            Op::Relu(a),
            |x| if x > T::zero() { x } else { T::zero() },
        )
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), |x| {
            if x >= T::zero() {
                T::one() / (T::one() + (-x).exp())
            } else {
                let e = x.exp();
                e / (T::one() + e)
            }
        })
    }

    /// `ln(max(x, floor))`; the gradient is zero where the clamp is active.
    pub fn ln_clamped(&mut self, a: Var, floor: T) -> Var {
        self.unary(a, Op::LnClamped(a, floor), |x| x.max(floor).ln())
    }

    /// Sum of all entries as a `1×1` scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let s: T = self.value(a).data().iter().copied().sum();
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    /// Stacks rows `x[idx[0]], x[idx[1]], ...`.
    pub fn gather_rows(&mut self, x: Var, idx: Arc<Vec<usize>>) -> Result<Var, KernelError> {
        let (m, n) = self.dims(x);
        let src = self.value(x).data();
        let mut out = Vec::with_capacity(idx.len() * n);
        for &i in idx.iter() {
            if i >= m {
                return Err(KernelError::IndexOutOfRange { index: i, len: m });
            }
            out.extend_from_slice(&src[i * n..(i + 1) * n]);
        }
        let rg = self.rg(x);
        Ok(self.push(
            Tensor::from_parts(vec![idx.len(), n], out),
            Op::GatherRows(x, idx),
            rg,
        ))
    }

    /// Softmax over each group of flat indices, max-subtracted. Entries outside
    /// every group come out as zero.
    pub fn masked_softmax(
        &mut self,
        scores: Var,
        groups: Arc<Vec<Vec<usize>>>,
    ) -> Result<Var, KernelError> {
        let x = self.value(scores);
        let len = x.len();
        let out = softmax_groups(x.data(), &groups, len)?;
        let shape = x.shape().to_vec();
        let rg = self.rg(scores);
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::MaskedSoftmax(scores, groups),
            rg,
        ))
    }

    /// `out[tgt[p]] += weights[p] * source[src[p]]` for every pair `p`, giving a
    /// `targets × n` matrix.
    pub fn segment_sum(
        &mut self,
        weights: Var,
        source: Var,
        src: Arc<Vec<usize>>,
        tgt: Arc<Vec<usize>>,
        targets: usize,
    ) -> Result<Var, KernelError> {
        let (s_rows, n) = self.dims(source);
        let w = self.value(weights).data();
        if w.len() != src.len() || src.len() != tgt.len() {
            return Err(shape_err(format!(
                "segment_sum: {} weights, {} sources, {} targets",
                w.len(),
                src.len(),
                tgt.len()
            )));
        }
        let sdata = self.value(source).data();
        let mut out = vec![T::zero(); targets * n];
        for p in 0..src.len() {
            let (s, t) = (src[p], tgt[p]);
            if s >= s_rows {
                return Err(KernelError::IndexOutOfRange {
                    index: s,
                    len: s_rows,
                });
            }
            if t >= targets {
                return Err(KernelError::IndexOutOfRange {
                    index: t,
                    len: targets,
                });
            }
            let wp = w[p];
            for (o, &v) in out[t * n..(t + 1) * n]
                .iter_mut()
                .zip(&sdata[s * n..(s + 1) * n])
            {
                *o += wp * v;
            }
        }
        let rg = self.rg(weights) || self.rg(source);
        Ok(self.push(
            Tensor::from_parts(vec![targets, n], out),
            Op::SegmentSum {
                weights,
                source,
                src,
                tgt,
            },
            rg,
        ))
    }

    /// Constant sparse matrix times dense `x`.
    pub fn spmm(&mut self, a: Arc<Csr<T>>, x: Var) -> Result<Var, KernelError> {
        let (m, n) = self.dims(x);
        if a.cols != m {
            return Err(shape_err(format!("spmm {}x{} by {m}x{n}", a.rows, a.cols)));
        }
        let out = a.mul_dense(self.value(x).data(), n);
        let rows = a.rows;
        let rg = self.rg(x);
        Ok(self.push(Tensor::from_parts(vec![rows, n], out), Op::SpMM(a, x), rg))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>, KernelError> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(KernelError::NotScalar(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::from_parts(lv.shape().to_vec(), vec![T::one()]));

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }

        let shapes = self
            .nodes
            .iter()
            .map(|n| n.value.shape().to_vec())
            .collect();
        Ok(Gradients { grads, shapes })
    }

    fn propagate(&self, node: &Node<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let mut acc = |v: Var, d: Tensor<T>| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(t) => t.add_assign(&d),
                slot @ None => {
                    let shape = self.nodes[v.0].value.shape().to_vec();
                    *slot = Some(Tensor::from_parts(shape, d.into_data()));
                }
            }
        };
        let gd = g.data();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                if self.rg(*a) {
                    let bt = tb.transposed();
                    acc(
                        *a,
                        Tensor::from_parts(vec![m, k], matmul_raw(gd, bt.data(), m, n, k)),
                    );
                }
                if self.rg(*b) {
                    let at = ta.transposed();
                    acc(
                        *b,
                        Tensor::from_parts(vec![k, n], matmul_raw(at.data(), gd, k, m, n)),
                    );
                }
            }
            Op::Transpose(a) => acc(*a, g.transposed()),
            Op::AddRowBias(x, b) => {
                acc(*x, g.clone());
                let n = g.cols();
                let mut gb = vec![T::zero(); n];
                for row in gd.chunks(n.max(1)) {
                    for (o, &v) in gb.iter_mut().zip(row) {
                        *o += v;
                    }
                }
                acc(*b, Tensor::from_parts(vec![gb.len()], gb));
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                if self.rg(*a) {
                    acc(*a, zip(g, tb, |x, y| x * y));
                }
                if self.rg(*b) {
                    acc(*b, zip(g, ta, |x, y| x * y));
                }
            }
            Op::MulColumn(x, v) => {
                let (tx, tv) = (val(*x), val(*v));
                let n = tx.cols().max(1);
                if self.rg(*x) {
                    let mut d = gd.to_vec();
                    for (i, row) in d.chunks_mut(n).enumerate() {
                        for o in row.iter_mut() {
                            *o *= tv.data()[i];
                        }
                    }
                    acc(*x, Tensor::from_parts(vec![d.len()], d));
                }
                if self.rg(*v) {
                    let d: Vec<T> = gd
                        .chunks(n)
                        .zip(tx.data().chunks(n))
                        .map(|(gr, xr)| gr.iter().zip(xr).map(|(&a, &b)| a * b).sum())
                        .collect();
                    acc(*v, Tensor::from_parts(vec![d.len()], d));
                }
            }
            Op::Scale(a, s) => acc(*a, g.map(|v| v * *s)),
            Op::AddScalar(a) => acc(*a, g.clone()),
            Op::LeakyRelu(a, slope) => acc(
                *a,
                zip(
                    g,
                    val(*a),
                    |gv, x| if x > T::zero() { gv } else { gv * *slope },
                ),
            ),
            Op::Relu(a) => acc(
                *a,
                zip(
                    g,
                    val(*a),
                    |gv, x| if x > T::zero() { gv } else { T::zero() },
                ),
            ),
            Op::Sigmoid(a) => acc(*a, zip(g, &node.value, |gv, y| gv * y * (T::one() - y))),
            Op::LnClamped(a, floor) => acc(
                *a,
                zip(
                    g,
                    val(*a),
                    |gv, x| if x > *floor { gv / x } else { T::zero() },
                ),
            ),
            Op::Sum(a) => {
                let s = gd[0];
                acc(*a, Tensor::full(val(*a).shape(), s));
            }
            Op::GatherRows(x, idx) => {
                let tx = val(*x);
                let n = tx.cols();
                let mut d = vec![T::zero(); tx.len()];
                for (p, &i) in idx.iter().enumerate() {
                    for (o, &v) in d[i * n..(i + 1) * n]
                        .iter_mut()
                        .zip(&gd[p * n..(p + 1) * n])
                    {
                        *o += v;
                    }
                }
                acc(*x, Tensor::from_parts(vec![d.len()], d));
            }
            Op::MaskedSoftmax(a, groups) => {
                let y = node.value.data();
                let mut d = vec![T::zero(); y.len()];
                for group in groups.iter() {
                    let dot: T = group.iter().map(|&i| y[i] * gd[i]).sum();
                    for &i in group {
                        d[i] = y[i] * (gd[i] - dot);
                    }
                }
                acc(*a, Tensor::from_parts(vec![d.len()], d));
            }
            Op::SegmentSum {
                weights,
                source,
                src,
                tgt,
            } => {
                let (tw, ts) = (val(*weights), val(*source));
                let n = ts.cols();
                let sd = ts.data();
                if self.rg(*weights) {
                    let d: Vec<T> = (0..src.len())
                        .map(|p| {
                            let (s, t) = (src[p], tgt[p]);
                            gd[t * n..(t + 1) * n]
                                .iter()
                                .zip(&sd[s * n..(s + 1) * n])
                                .map(|(&a, &b)| a * b)
                                .sum()
                        })
                        .collect();
                    acc(*weights, Tensor::from_parts(vec![d.len()], d));
                }
                if self.rg(*source) {
                    let w = tw.data();
                    let mut d = vec![T::zero(); ts.len()];
                    for p in 0..src.len() {
                        let (s, t) = (src[p], tgt[p]);
                        let wp = w[p];
                        for (o, &v) in d[s * n..(s + 1) * n]
                            .iter_mut()
                            .zip(&gd[t * n..(t + 1) * n])
                        {
                            *o += wp * v;
                        }
                    }
                    acc(*source, Tensor::from_parts(vec![d.len()], d));
                }
            }
            Op::SpMM(a, x) => {
                let n = g.cols();
                let d = a.transpose_mul_dense(gd, n);
                acc(*x, Tensor::from_parts(vec![d.len()], d));
            }
        }
    }
}

fn zip<T: Real>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    Tensor::from_parts(
        vec![a.len()],
        a.data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| f(x, y))
            .collect(),
    )
}

pub(crate) fn softmax_groups<T: Real>(
    x: &[T],
    groups: &[Vec<usize>],
    len: usize,
) -> Result<Vec<T>, KernelError> {
    let mut out = vec![T::zero(); len];
    for (gi, group) in groups.iter().enumerate() {
        if group.is_empty() {
            return Err(KernelError::EmptyGroup(gi));
        }
        let mut max = T::neg_infinity();
        for &i in group {
            if i >= len {
                return Err(KernelError::IndexOutOfRange { index: i, len });
            }
            max = max.max(x[i]);
        }
        let mut total = T::zero();
        for &i in group {
            let e = (x[i] - max).exp();
            out[i] = e;
            total += e;
        }
        for &i in group {
            out[i] = out[i] / total;
        }
    }
    Ok(out)
}

/// Gradients produced by [`Tape::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
    shapes: Vec<Vec<usize>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient for `v`; zeros when the loss did not depend on it.
    pub fn get(&self, v: Var) -> Tensor<T> {
        match &self.grads[v.0] {
            Some(t) => Tensor::from_parts(self.shapes[v.0].clone(), t.data().to_vec()),
            None => Tensor::zeros(&self.shapes[v.0]),
        }
    }

    pub fn is_reached(&self, v: Var) -> bool {
        self.grads[v.0].is_some()
    }
}
