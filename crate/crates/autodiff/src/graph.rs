//! Tape of recorded operations and the reverse sweep over it.
//!
//! Every op appends one node holding its forward value. [`Graph::backward`]
//! walks the tape from the end, handing each node's output gradient to the
//! adjoint of the op that produced it. Gradients reaching the same node from
//! several consumers are summed, which is what makes `gather_rows` with
//! duplicate indices correct.

use std::borrow::Cow;
use std::cell::{Ref, RefCell};

use crate::tensor::{gemm_acc, gemm_nt_acc, gemm_tn_acc};
use crate::{Error, Real, Result, Tensor};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Silu(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        normalized: Vec<T>,
        inv_std: Vec<T>,
    },
    Softmax(Var),
    MaskedFill {
        x: Var,
        mask: Vec<bool>,
    },
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    GatherRows {
        x: Var,
        idx: Vec<usize>,
    },
    ScatterRows {
        x: Var,
        idx: Vec<usize>,
    },
    Transpose(Var),
    Reshape(Var),
    SliceCols {
        x: Var,
        start: usize,
    },
    SumRows(Var),
    SumAll(Var),
}

struct Node<'a, T: Real> {
    value: Cow<'a, Tensor<T>>,
    op: Op<T>,
    needs_grad: bool,
}

/// Recording context for one differentiable computation.
///
/// Leaves borrow their tensors, so binding a large parameter set costs no
/// copies. A graph is single-threaded; build one per thread.
pub struct Graph<'a, T: Real> {
    nodes: RefCell<Vec<Node<'a, T>>>,
}

impl<'a, T: Real> Default for Graph<'a, T> {
    fn default() -> Self {
        Self::new()
    }
}

fn dims2<T: Real>(t: &Tensor<T>, op: &'static str) -> Result<(usize, usize)> {
    t.dims2().ok_or_else(|| Error::Rank {
        op,
        shape: t.shape().to_vec(),
    })
}

fn mismatch<T: Real>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> Error {
    Error::ShapeMismatch {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

fn silu<T: Real>(x: T) -> T {
    x / (T::one() + (-x).exp())
}

fn silu_grad<T: Real>(x: T) -> T {
    let s = T::one() / (T::one() + (-x).exp());
    s * (T::one() + x * (T::one() - s))
}

impl<'a, T: Real> Graph<'a, T> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Cow<'a, Tensor<T>>, op: Op<T>, needs_grad: bool) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op, needs_grad });
        Var(nodes.len() - 1)
    }

    fn push_op(&self, value: Tensor<T>, op: Op<T>, parents: &[Var]) -> Var {
        let needs_grad = {
            let nodes = self.nodes.borrow();
            parents.iter().any(|p| nodes[p.0].needs_grad)
        };
        self.push(Cow::Owned(value), op, needs_grad)
    }

    /// Borrowed view of a node's forward value.
    pub fn value(&self, v: Var) -> Ref<'_, Tensor<T>> {
        Ref::map(self.nodes.borrow(), |n| n[v.0].value.as_ref())
    }

    pub fn shape(&self, v: Var) -> Vec<usize> {
        self.value(v).shape().to_vec()
    }

    /// Differentiable leaf borrowing `t`.
    pub fn param(&self, t: &'a Tensor<T>) -> Result<Var> {
        t.check_finite("parameter")?;
        Ok(self.push(Cow::Borrowed(t), Op::Leaf, true))
    }

    /// Non-differentiable leaf.
    pub fn constant(&self, t: Tensor<T>) -> Result<Var> {
        t.check_finite("constant")?;
        Ok(self.push(Cow::Owned(t), Op::Leaf, false))
    }

    /// Differentiable leaf that owns its value.
    pub fn input(&self, t: Tensor<T>) -> Result<Var> {
        t.check_finite("input")?;
        Ok(self.push(Cow::Owned(t), Op::Leaf, true))
    }

    pub fn matmul(&self, a: Var, b: Var) -> Result<Var> {
        let out = {
            let (ta, tb) = (self.value(a), self.value(b));
            let (m, k) = dims2(&ta, "matmul")?;
            let (k2, n) = dims2(&tb, "matmul")?;
            if ta.rank() != 2 || tb.rank() != 2 || k != k2 {
                return Err(mismatch("matmul", &ta, &tb));
            }
            let mut out = vec![T::zero(); m * n];
            gemm_acc(ta.data(), tb.data(), &mut out, m, k, n);
            Tensor::new(vec![m, n], out)?
        };
        Ok(self.push_op(out, Op::MatMul(a, b), &[a, b]))
    }

    fn zip_same(&self, a: Var, b: Var, op: &'static str, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(mismatch(op, &ta, &tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    pub fn add(&self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_same(a, b, "add", |x, y| x + y)?;
        Ok(self.push_op(out, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_same(a, b, "sub", |x, y| x - y)?;
        Ok(self.push_op(out, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_same(a, b, "mul", |x, y| x * y)?;
        Ok(self.push_op(out, Op::Mul(a, b), &[a, b]))
    }

    /// Adds a length-`n` row vector to every row of an `m x n` matrix.
    pub fn add_row(&self, a: Var, row: Var) -> Result<Var> {
        let out = {
            let (ta, tr) = (self.value(a), self.value(row));
            let (m, n) = dims2(&ta, "add_row")?;
            if tr.len() != n || ta.rank() != 2 {
                return Err(mismatch("add_row", &ta, &tr));
            }
            let mut data = ta.data().to_vec();
            for i in 0..m {
                for (o, &r) in data[i * n..(i + 1) * n].iter_mut().zip(tr.data()) {
                    *o = *o + r;
                }
            }
            Tensor::new(vec![m, n], data)?
        };
        Ok(self.push_op(out, Op::AddRow(a, row), &[a, row]))
    }

    pub fn scale(&self, a: Var, c: T) -> Result<Var> {
        let out = {
            let ta = self.value(a);
            Tensor::new(ta.shape().to_vec(), ta.data().iter().map(|&x| x * c).collect())?
        };
        Ok(self.push_op(out, Op::Scale(a, c), &[a]))
    }

    /// `x * sigmoid(x)` elementwise.
    pub fn silu(&self, a: Var) -> Result<Var> {
        let out = {
            let ta = self.value(a);
            Tensor::new(ta.shape().to_vec(), ta.data().iter().map(|&x| silu(x)).collect())?
        };
        Ok(self.push_op(out, Op::Silu(a), &[a]))
    }

    /// Normalizes each row over the channel (last) axis, then applies a
    /// per-channel gain and bias.
    pub fn layer_norm(&self, x: Var, gain: Var, bias: Var, eps: T) -> Result<Var> {
        let (out, normalized, inv_std) = {
            let (tx, tg, tb) = (self.value(x), self.value(gain), self.value(bias));
            let (m, n) = dims2(&tx, "layer_norm")?;
            if tg.len() != n {
                return Err(mismatch("layer_norm", &tx, &tg));
            }
            if tb.len() != n {
                return Err(mismatch("layer_norm", &tx, &tb));
            }
            let nf = T::from_usize(n).unwrap_or_else(T::one);
            let mut normalized = vec![T::zero(); m * n];
            let mut inv_std = vec![T::zero(); m];
            let mut out = vec![T::zero(); m * n];
            for i in 0..m {
                let row = &tx.data()[i * n..(i + 1) * n];
                let mean = row.iter().fold(T::zero(), |s, &v| s + v) / nf;
                let var = row.iter().fold(T::zero(), |s, &v| s + (v - mean) * (v - mean)) / nf;
                let is = T::one() / (var + eps).sqrt();
                inv_std[i] = is;
                for j in 0..n {
                    let h = (row[j] - mean) * is;
                    normalized[i * n + j] = h;
                    out[i * n + j] = h * tg.data()[j] + tb.data()[j];
                }
            }
            (Tensor::new(tx.shape().to_vec(), out)?, normalized, inv_std)
        };
        Ok(self.push_op(
            out,
            Op::LayerNorm {
                x,
                gain,
                bias,
                normalized,
                inv_std,
            },
            &[x, gain, bias],
        ))
    }

    /// Softmax over the last axis of a matrix. Entries where `allowed` is
    /// false get weight exactly zero; a row with no allowed entry is an error.
    pub fn softmax(&self, x: Var, allowed: Option<&[bool]>) -> Result<Var> {
        let out = {
            let tx = self.value(x);
            let (m, n) = dims2(&tx, "softmax")?;
            if let Some(mask) = allowed {
                if mask.len() != m * n {
                    return Err(Error::MaskLength {
                        expected: m * n,
                        got: mask.len(),
                    });
                }
            }
            let ok = |i: usize| allowed.is_none_or(|mk| mk[i]);
            let mut out = vec![T::zero(); m * n];
            for i in 0..m {
                let row = &tx.data()[i * n..(i + 1) * n];
                if let Some(j) = (0..n).find(|&j| ok(i * n + j) && !row[j].is_finite()) {
                    return Err(Error::NonFinite {
                        context: "softmax input".into(),
                        index: i * n + j,
                    });
                }
                let mut max = T::neg_infinity();
                for (j, &v) in row.iter().enumerate() {
                    if ok(i * n + j) && v > max {
                        max = v;
                    }
                }
                if max == T::neg_infinity() {
                    return Err(Error::EmptySoftmaxRow { row: i });
                }
                let mut total = T::zero();
                for (j, &v) in row.iter().enumerate() {
                    if ok(i * n + j) {
                        let e = (v - max).exp();
                        out[i * n + j] = e;
                        total = total + e;
                    }
                }
                for o in &mut out[i * n..(i + 1) * n] {
                    *o = *o / total;
                }
            }
            Tensor::new(tx.shape().to_vec(), out)?
        };
        Ok(self.push_op(out, Op::Softmax(x), &[x]))
    }

    /// Replaces entries where `mask` is true by `value`.
    pub fn masked_fill(&self, x: Var, mask: &[bool], value: T) -> Result<Var> {
        let out = {
            let tx = self.value(x);
            if mask.len() != tx.len() {
                return Err(Error::MaskLength {
                    expected: tx.len(),
                    got: mask.len(),
                });
            }
            let data = tx
                .data()
                .iter()
                .zip(mask)
                .map(|(&v, &m)| if m { value } else { v })
                .collect();
            Tensor::new(tx.shape().to_vec(), data)?
        };
        Ok(self.push_op(out, Op::MaskedFill { x, mask: mask.to_vec() }, &[x]))
    }

    pub fn concat_rows(&self, parts: &[Var]) -> Result<Var> {
        let out = {
            let first = parts.first().ok_or(Error::EmptyConcat)?;
            let cols = dims2(&self.value(*first), "concat_rows")?.1;
            let mut rows = 0;
            let mut data = Vec::new();
            for &p in parts {
                let tp = self.value(p);
                let (r, c) = dims2(&tp, "concat_rows")?;
                if c != cols {
                    return Err(mismatch("concat_rows", &self.value(*first), &tp));
                }
                rows += r;
                data.extend_from_slice(tp.data());
            }
            Tensor::new(vec![rows, cols], data)?
        };
        Ok(self.push_op(out, Op::ConcatRows(parts.to_vec()), parts))
    }

    pub fn concat_cols(&self, parts: &[Var]) -> Result<Var> {
        let out = {
            let first = parts.first().ok_or(Error::EmptyConcat)?;
            let rows = dims2(&self.value(*first), "concat_cols")?.0;
            let mut widths = Vec::with_capacity(parts.len());
            for &p in parts {
                let tp = self.value(p);
                let (r, c) = dims2(&tp, "concat_cols")?;
                if r != rows {
                    return Err(mismatch("concat_cols", &self.value(*first), &tp));
                }
                widths.push(c);
            }
            let total: usize = widths.iter().sum();
            let mut data = vec![T::zero(); rows * total];
            let mut offset = 0;
            for (&p, &w) in parts.iter().zip(&widths) {
                let tp = self.value(p);
                for i in 0..rows {
                    data[i * total + offset..i * total + offset + w].copy_from_slice(&tp.data()[i * w..(i + 1) * w]);
                }
                offset += w;
            }
            Tensor::new(vec![rows, total], data)?
        };
        Ok(self.push_op(out, Op::ConcatCols(parts.to_vec()), parts))
    }

    /// Output row `r` is input row `idx[r]`. Indices may repeat.
    pub fn gather_rows(&self, x: Var, idx: &[usize]) -> Result<Var> {
        let out = {
            let tx = self.value(x);
            let (m, n) = dims2(&tx, "gather_rows")?;
            let mut data = Vec::with_capacity(idx.len() * n);
            for &i in idx {
                if i >= m {
                    return Err(Error::IndexOutOfRange { index: i, len: m });
                }
                data.extend_from_slice(&tx.data()[i * n..(i + 1) * n]);
            }
            Tensor::new(vec![idx.len(), n], data)?
        };
        Ok(self.push_op(out, Op::GatherRows { x, idx: idx.to_vec() }, &[x]))
    }

    /// Adds input row `r` into output row `idx[r]` of a zero `rows x n` matrix.
    pub fn scatter_rows(&self, x: Var, idx: &[usize], rows: usize) -> Result<Var> {
        let out = {
            let tx = self.value(x);
            let (m, n) = dims2(&tx, "scatter_rows")?;
            if idx.len() != m {
                return Err(Error::MaskLength {
                    expected: m,
                    got: idx.len(),
                });
            }
            let mut data = vec![T::zero(); rows * n];
            for (r, &i) in idx.iter().enumerate() {
                if i >= rows {
                    return Err(Error::IndexOutOfRange { index: i, len: rows });
                }
                for (o, &v) in data[i * n..(i + 1) * n].iter_mut().zip(&tx.data()[r * n..(r + 1) * n]) {
                    *o = *o + v;
                }
            }
            Tensor::new(vec![rows, n], data)?
        };
        Ok(self.push_op(out, Op::ScatterRows { x, idx: idx.to_vec() }, &[x]))
    }

    pub fn transpose(&self, x: Var) -> Result<Var> {
        let out = {
            let tx = self.value(x);
            let (m, n) = dims2(&tx, "transpose")?;
            let mut data = vec![T::zero(); m * n];
            for i in 0..m {
                for j in 0..n {
                    data[j * m + i] = tx.data()[i * n + j];
                }
            }
            Tensor::new(vec![n, m], data)?
        };
        Ok(self.push_op(out, Op::Transpose(x), &[x]))
    }

    pub fn reshape(&self, x: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(x).clone().reshaped(shape.to_vec())?;
        Ok(self.push_op(out, Op::Reshape(x), &[x]))
    }

    /// Columns `start..end` of a matrix.
    pub fn slice_cols(&self, x: Var, start: usize, end: usize) -> Result<Var> {
        let out = {
            let tx = self.value(x);
            let (m, n) = dims2(&tx, "slice_cols")?;
            if start > end || end > n {
                return Err(Error::IndexOutOfRange { index: end, len: n });
            }
            let w = end - start;
            let mut data = Vec::with_capacity(m * w);
            for i in 0..m {
                data.extend_from_slice(&tx.data()[i * n + start..i * n + end]);
            }
            Tensor::new(vec![m, w], data)?
        };
        Ok(self.push_op(out, Op::SliceCols { x, start }, &[x]))
    }

    /// Sums each row, giving an `m x 1` column.
    pub fn sum_rows(&self, x: Var) -> Result<Var> {
        let out = {
            let tx = self.value(x);
            let (m, n) = dims2(&tx, "sum_rows")?;
            let data = (0..m)
                .map(|i| tx.data()[i * n..(i + 1) * n].iter().fold(T::zero(), |s, &v| s + v))
                .collect();
            Tensor::new(vec![m, 1], data)?
        };
        Ok(self.push_op(out, Op::SumRows(x), &[x]))
    }

    pub fn sum_all(&self, x: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(x).sum());
        Ok(self.push_op(out, Op::SumAll(x), &[x]))
    }

    /// Sum of squared entries.
    pub fn sum_squares(&self, x: Var) -> Result<Var> {
        let sq = self.mul(x, x)?;
        self.sum_all(sq)
    }

    /// Reverse sweep from a scalar output.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let nodes = self.nodes.borrow();
        let loss_node = nodes.get(loss.0).ok_or(Error::IndexOutOfRange {
            index: loss.0,
            len: nodes.len(),
        })?;
        if loss_node.value.len() != 1 {
            return Err(Error::NotScalar {
                shape: loss_node.value.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::filled(loss_node.value.shape(), T::one()));

        for id in (0..=loss.0).rev() {
            let node = &nodes[id];
            if !node.needs_grad {
                continue;
            }
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[id].take() else {
                continue;
            };
            let value = |v: Var| nodes[v.0].value.as_ref();
            let needs = |v: Var| nodes[v.0].needs_grad;
            let acc = |v: Var, t: Tensor<T>, grads: &mut Vec<Option<Tensor<T>>>| {
                if !needs(v) {
                    return;
                }
                match &mut grads[v.0] {
                    Some(existing) => existing.add_assign(&t),
                    slot @ None => *slot = Some(t),
                }
            };
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (ta, tb) = (value(*a), value(*b));
                    let (m, k) = (ta.shape()[0], ta.shape()[1]);
                    let n = tb.shape()[1];
                    if needs(*a) {
                        let mut da = vec![T::zero(); m * k];
                        gemm_nt_acc(g.data(), tb.data(), &mut da, m, k, n);
                        acc(*a, Tensor::new(vec![m, k], da)?, &mut grads);
                    }
                    if needs(*b) {
                        let mut db = vec![T::zero(); k * n];
                        gemm_tn_acc(ta.data(), g.data(), &mut db, m, k, n);
                        acc(*b, Tensor::new(vec![k, n], db)?, &mut grads);
                    }
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone(), &mut grads);
                    acc(*b, g, &mut grads);
                }
                Op::Sub(a, b) => {
                    let neg = Tensor::new(g.shape().to_vec(), g.data().iter().map(|&v| -v).collect())?;
                    acc(*a, g, &mut grads);
                    acc(*b, neg, &mut grads);
                }
                Op::Mul(a, b) => {
                    let (ta, tb) = (value(*a), value(*b));
                    let da = g.data().iter().zip(tb.data()).map(|(&gv, &bv)| gv * bv).collect();
                    let db = g.data().iter().zip(ta.data()).map(|(&gv, &av)| gv * av).collect();
                    acc(*a, Tensor::new(g.shape().to_vec(), da)?, &mut grads);
                    acc(*b, Tensor::new(g.shape().to_vec(), db)?, &mut grads);
                }
                Op::AddRow(a, row) => {
                    let shape_r = value(*row).shape().to_vec();
                    let n = shape_r.iter().product::<usize>();
                    let mut dr = vec![T::zero(); n];
                    for chunk in g.data().chunks(n) {
                        for (d, &v) in dr.iter_mut().zip(chunk) {
                            *d = *d + v;
                        }
                    }
                    acc(*row, Tensor::new(shape_r, dr)?, &mut grads);
                    acc(*a, g, &mut grads);
                }
                Op::Scale(a, c) => {
                    let d = g.data().iter().map(|&v| v * *c).collect();
                    acc(*a, Tensor::new(g.shape().to_vec(), d)?, &mut grads);
                }
                Op::Silu(a) => {
                    let ta = value(*a);
                    let d = g
                        .data()
                        .iter()
                        .zip(ta.data())
                        .map(|(&gv, &x)| gv * silu_grad(x))
                        .collect();
                    acc(*a, Tensor::new(g.shape().to_vec(), d)?, &mut grads);
                }
                Op::LayerNorm {
                    x,
                    gain,
                    bias,
                    normalized,
                    inv_std,
                } => {
                    let tg = value(*gain);
                    let n = tg.len();
                    let m = inv_std.len();
                    let nf = T::from_usize(n).unwrap_or_else(T::one);
                    let mut dgain = vec![T::zero(); n];
                    let mut dbias = vec![T::zero(); n];
                    let mut dx = vec![T::zero(); m * n];
                    for i in 0..m {
                        let gr = &g.data()[i * n..(i + 1) * n];
                        let hr = &normalized[i * n..(i + 1) * n];
                        let mut mean_dh = T::zero();
                        let mut mean_dh_h = T::zero();
                        for j in 0..n {
                            dgain[j] = dgain[j] + gr[j] * hr[j];
                            dbias[j] = dbias[j] + gr[j];
                            let dh = gr[j] * tg.data()[j];
                            mean_dh = mean_dh + dh;
                            mean_dh_h = mean_dh_h + dh * hr[j];
                        }
                        mean_dh = mean_dh / nf;
                        mean_dh_h = mean_dh_h / nf;
                        for j in 0..n {
                            let dh = gr[j] * tg.data()[j];
                            dx[i * n + j] = inv_std[i] * (dh - mean_dh - hr[j] * mean_dh_h);
                        }
                    }
                    acc(*gain, Tensor::new(tg.shape().to_vec(), dgain)?, &mut grads);
                    acc(*bias, Tensor::new(value(*bias).shape().to_vec(), dbias)?, &mut grads);
                    acc(*x, Tensor::new(g.shape().to_vec(), dx)?, &mut grads);
                }
                Op::Softmax(x) => {
                    let y = node.value.as_ref();
                    let (m, n) = (y.shape()[0], y.shape()[1]);
                    let mut dx = vec![T::zero(); m * n];
                    for i in 0..m {
                        let yr = &y.data()[i * n..(i + 1) * n];
                        let gr = &g.data()[i * n..(i + 1) * n];
                        let dot = yr.iter().zip(gr).fold(T::zero(), |s, (&a, &b)| s + a * b);
                        for j in 0..n {
                            dx[i * n + j] = yr[j] * (gr[j] - dot);
                        }
                    }
                    acc(*x, Tensor::new(vec![m, n], dx)?, &mut grads);
                }
                Op::MaskedFill { x, mask } => {
                    let d = g
                        .data()
                        .iter()
                        .zip(mask)
                        .map(|(&v, &m)| if m { T::zero() } else { v })
                        .collect();
                    acc(*x, Tensor::new(g.shape().to_vec(), d)?, &mut grads);
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = value(p).len();
                        let shape = value(p).shape().to_vec();
                        if needs(p) {
                            acc(
                                p,
                                Tensor::new(shape, g.data()[offset..offset + len].to_vec())?,
                                &mut grads,
                            );
                        }
                        offset += len;
                    }
                }
                Op::ConcatCols(parts) => {
                    let (rows, total) = (g.shape()[0], g.shape()[1]);
                    let mut offset = 0;
                    for &p in parts {
                        let shape = value(p).shape().to_vec();
                        let w = value(p).dims2().map_or(0, |d| d.1);
                        if needs(p) {
                            let mut d = Vec::with_capacity(rows * w);
                            for i in 0..rows {
                                d.extend_from_slice(&g.data()[i * total + offset..i * total + offset + w]);
                            }
                            acc(p, Tensor::new(shape, d)?, &mut grads);
                        }
                        offset += w;
                    }
                }
                Op::GatherRows { x, idx } => {
                    let shape = value(*x).shape().to_vec();
                    let (m, n) = value(*x).dims2().unwrap_or((0, 0));
                    let mut d = vec![T::zero(); m * n];
                    for (r, &i) in idx.iter().enumerate() {
                        for (o, &v) in d[i * n..(i + 1) * n].iter_mut().zip(&g.data()[r * n..(r + 1) * n]) {
                            *o = *o + v;
                        }
                    }
                    acc(*x, Tensor::new(shape, d)?, &mut grads);
                }
                Op::ScatterRows { x, idx } => {
                    let shape = value(*x).shape().to_vec();
                    let n = g.shape()[1];
                    let mut d = Vec::with_capacity(idx.len() * n);
                    for &i in idx {
                        d.extend_from_slice(&g.data()[i * n..(i + 1) * n]);
                    }
                    acc(*x, Tensor::new(shape, d)?, &mut grads);
                }
                Op::Transpose(x) => {
                    let (n, m) = (g.shape()[0], g.shape()[1]);
                    let mut d = vec![T::zero(); m * n];
                    for i in 0..n {
                        for j in 0..m {
                            d[j * n + i] = g.data()[i * m + j];
                        }
                    }
                    acc(*x, Tensor::new(value(*x).shape().to_vec(), d)?, &mut grads);
                }
                Op::Reshape(x) => {
                    let shape = value(*x).shape().to_vec();
                    acc(*x, g.reshaped(shape)?, &mut grads);
                }
                Op::SliceCols { x, start } => {
                    let shape = value(*x).shape().to_vec();
                    let (m, n) = value(*x).dims2().unwrap_or((0, 0));
                    let w = g.shape()[1];
                    let mut d = vec![T::zero(); m * n];
                    for i in 0..m {
                        d[i * n + start..i * n + start + w].copy_from_slice(&g.data()[i * w..(i + 1) * w]);
                    }
                    acc(*x, Tensor::new(shape, d)?, &mut grads);
                }
                Op::SumRows(x) => {
                    let shape = value(*x).shape().to_vec();
                    let (m, n) = value(*x).dims2().unwrap_or((0, 0));
                    let mut d = Vec::with_capacity(m * n);
                    for i in 0..m {
                        d.extend(std::iter::repeat_n(g.data()[i], n));
                    }
                    acc(*x, Tensor::new(shape, d)?, &mut grads);
                }
                Op::SumAll(x) => {
                    let shape = value(*x).shape().to_vec();
                    acc(*x, Tensor::filled(&shape, g.data()[0]), &mut grads);
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Result of a reverse sweep: the gradient of the loss w.r.t. every node
/// that the loss depends on through differentiable leaves.
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient w.r.t. `v`, or `None` when the loss does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}
