//! Recorded computation graph with reverse-mode gradient accumulation.
//!
//! A [`Graph`] borrows a [`ParamSet`] for the duration of one forward pass.
//! Each operation appends a node holding its output; [`Graph::backward`]
//! walks the node list in reverse and accumulates `∂loss/∂θ` into a
//! [`Gradients`] buffer aligned with the parameter set. Nodes only ever
//! reference earlier nodes, so insertion order is a topological order.

use std::collections::HashMap;

use super::array::{dot, mm, mm_nt, mm_tn, sigmoid, softmax, Scalar, Tensor};
use super::TensorError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamEntry<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub trainable: bool,
    /// Rows whose gradient is always discarded (e.g. the padding embedding).
    pub frozen_rows: Vec<usize>,
}

/// Named trainable tensors, in insertion order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ParamSet<T> {
    entries: Vec<ParamEntry<T>>,
    by_name: HashMap<String, usize>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        ParamSet {
            entries: Vec::new(),
            by_name: HashMap::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>) -> ParamId {
        let name = name.into();
        assert!(!self.by_name.contains_key(&name), "duplicate parameter name {name}");
        let id = self.entries.len();
        self.by_name.insert(name.clone(), id);
        self.entries.push(ParamEntry {
            name,
            value,
            trainable: true,
            frozen_rows: Vec::new(),
        });
        ParamId(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.entries[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.entries[id.0].value
    }

    pub fn entry(&self, id: ParamId) -> &ParamEntry<T> {
        &self.entries[id.0]
    }

    pub fn entry_mut(&mut self, id: ParamId) -> &mut ParamEntry<T> {
        &mut self.entries[id.0]
    }

    pub fn entries(&self) -> &[ParamEntry<T>] {
        &self.entries
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|e| ParamEntry {
                    name: e.name.clone(),
                    value: e.value.cast(),
                    trainable: e.trainable,
                    frozen_rows: e.frozen_rows.clone(),
                })
                .collect(),
            by_name: self.by_name.clone(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|e| e.value.all_finite())
    }
}

/// One gradient tensor per parameter, aligned with a [`ParamSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(params: &ParamSet<T>) -> Self {
        Gradients {
            tensors: params.entries.iter().map(|e| Tensor::zeros(e.value.shape())).collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor<T>)> {
        self.tensors.iter().enumerate().map(|(i, t)| (ParamId(i), t))
    }

    pub fn zero(&mut self) {
        for t in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|v| *v = T::zero());
        }
    }

    /// Global l2 norm over every gradient coordinate.
    pub fn norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.data().iter())
            .map(|v| v.f64() * v.f64())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: T) {
        for t in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|v| *v = *v * factor);
        }
    }

    /// Element-wise accumulation of another buffer over the same parameters.
    pub fn accumulate(&mut self, other: &Gradients<T>) -> Result<(), TensorError> {
        if self.tensors.len() != other.tensors.len() {
            return Err(TensorError::Usage("gradient buffers differ in length".into()));
        }
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            if a.shape() != b.shape() {
                return Err(TensorError::Shape {
                    op: "accumulate",
                    left: a.shape().to_vec(),
                    right: b.shape().to_vec(),
                });
            }
            a.add_assign(b.data());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug)]
enum Op<T> {
    Input,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    MatMulNT(NodeId, NodeId),
    MatVec(NodeId, NodeId),
    VecMat(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    AddRowBias(NodeId, NodeId),
    AddN(Vec<NodeId>),
    OneMinus(NodeId),
    Scale(NodeId, T),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Softmax(NodeId),
    Concat(Vec<NodeId>),
    StackRows(Vec<NodeId>),
    Row(NodeId, usize),
    Gather(ParamId, Vec<usize>),
    Unfold(NodeId, usize),
    MaxRows(NodeId, Vec<usize>),
    Dot(NodeId, NodeId),
    Sum(NodeId),
    SumSquares(NodeId),
    Dropout(NodeId, Vec<T>),
    SoftmaxCrossEntropy(NodeId, usize),
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Param(_) => "param",
            Op::MatMul(..) => "matmul",
            Op::MatMulNT(..) => "matmul_nt",
            Op::MatVec(..) => "matvec",
            Op::VecMat(..) => "vecmat",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::AddRowBias(..) => "add_row_bias",
            Op::AddN(_) => "add_n",
            Op::OneMinus(_) => "one_minus",
            Op::Scale(..) => "scale",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Softmax(_) => "softmax",
            Op::Concat(_) => "concat",
            Op::StackRows(_) => "stack_rows",
            Op::Row(..) => "row",
            Op::Gather(..) => "gather",
            Op::Unfold(..) => "unfold",
            Op::MaxRows(..) => "max_rows",
            Op::Dot(..) => "dot",
            Op::Sum(_) => "sum",
            Op::SumSquares(_) => "sum_squares",
            Op::Dropout(..) => "dropout",
            Op::SoftmaxCrossEntropy(..) => "softmax_cross_entropy",
        }
    }
}

struct Node<T> {
    op: Op<T>,
    value: Tensor<T>,
}

pub struct Graph<'p, T: Scalar> {
    params: &'p ParamSet<T>,
    nodes: Vec<Node<T>>,
    param_nodes: HashMap<ParamId, NodeId>,
}

fn shape_err(op: &'static str, a: &[usize], b: &[usize]) -> TensorError {
    TensorError::Shape {
        op,
        left: a.to_vec(),
        right: b.to_vec(),
    }
}

impl<'p, T: Scalar> Graph<'p, T> {
    pub fn new(params: &'p ParamSet<T>) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
        }
    }

    pub fn params(&self) -> &'p ParamSet<T> {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        self.nodes[id.0].value.shape()
    }

    fn push(&mut self, op: Op<T>, value: Tensor<T>) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    fn data(&self, id: NodeId) -> &[T] {
        self.nodes[id.0].value.data()
    }

    pub fn input(&mut self, value: Tensor<T>) -> NodeId {
        self.push(Op::Input, value)
    }

    /// Node for a parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(&n) = self.param_nodes.get(&id) {
            return n;
        }
        let value = self.params.get(id).clone();
        let n = self.push(Op::Param(id), value);
        self.param_nodes.insert(id, n);
        n
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(shape_err("matmul", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let out = mm(self.data(a), self.data(b), m, k, n);
        Ok(self.push(Op::MatMul(a, b), Tensor::new(vec![m, n], out)?))
    }

    /// a·bᵀ for a m×k and b n×k.
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[1] {
            return Err(shape_err("matmul_nt", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[0]);
        let out = mm_nt(self.data(a), self.data(b), m, k, n);
        Ok(self.push(Op::MatMulNT(a, b), Tensor::new(vec![m, n], out)?))
    }

    /// W·x for W m×k and x of length k.
    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> Result<NodeId, TensorError> {
        let (sw, sx) = (self.shape(w), self.shape(x));
        if sw.len() != 2 || sx.len() != 1 || sw[1] != sx[0] {
            return Err(shape_err("matvec", sw, sx));
        }
        let (m, k) = (sw[0], sw[1]);
        let out = mm(self.data(w), self.data(x), m, k, 1);
        Ok(self.push(Op::MatVec(w, x), Tensor::vector(out)?))
    }

    /// xᵀ·A for x of length m and A m×n; a weighted sum of A's rows.
    pub fn vecmat(&mut self, x: NodeId, a: NodeId) -> Result<NodeId, TensorError> {
        let (sx, sa) = (self.shape(x), self.shape(a));
        if sx.len() != 1 || sa.len() != 2 || sx[0] != sa[0] {
            return Err(shape_err("vecmat", sx, sa));
        }
        let (m, n) = (sa[0], sa[1]);
        let out = mm(self.data(x), self.data(a), 1, m, n);
        Ok(self.push(Op::VecMat(x, a), Tensor::vector(out)?))
    }

    fn elementwise(
        &mut self,
        a: NodeId,
        b: NodeId,
        name: &'static str,
        f: impl Fn(T, T) -> T,
        op: Op<T>,
    ) -> Result<NodeId, TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(name, self.shape(a), self.shape(b)));
        }
        let out: Vec<T> = self.data(a).iter().zip(self.data(b)).map(|(&x, &y)| f(x, y)).collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(op, Tensor::new(shape, out)?))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        self.elementwise(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        self.elementwise(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        self.elementwise(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    /// Adds a length-n bias to every row of an m×n matrix.
    pub fn add_row_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId, TensorError> {
        let (sa, sb) = (self.shape(a), self.shape(bias));
        if sa.len() != 2 || sb.len() != 1 || sa[1] != sb[0] {
            return Err(shape_err("add_row_bias", sa, sb));
        }
        let n = sa[1];
        let shape = sa.to_vec();
        let b = self.data(bias);
        let out: Vec<T> = self.data(a).iter().enumerate().map(|(i, &v)| v + b[i % n]).collect();
        Ok(self.push(Op::AddRowBias(a, bias), Tensor::new(shape, out)?))
    }

    pub fn add_n(&mut self, xs: &[NodeId]) -> Result<NodeId, TensorError> {
        let first = *xs
            .first()
            .ok_or_else(|| TensorError::Usage("add_n of no operands".into()))?;
        let shape = self.shape(first).to_vec();
        let mut out = vec![T::zero(); self.data(first).len()];
        for &x in xs {
            if self.shape(x) != shape.as_slice() {
                return Err(shape_err("add_n", &shape, self.shape(x)));
            }
            for (o, &v) in out.iter_mut().zip(self.data(x)) {
                *o = *o + v;
            }
        }
        Ok(self.push(Op::AddN(xs.to_vec()), Tensor::new(shape, out)?))
    }

    fn unary(&mut self, a: NodeId, f: impl Fn(T) -> T, op: Op<T>) -> NodeId {
        let shape = self.shape(a).to_vec();
        let out: Vec<T> = self.data(a).iter().map(|&v| f(v)).collect();
        let value = Tensor::new(shape, out).expect("unary op preserves shape");
        self.push(op, value)
    }

    /// 1 − a, elementwise.
    pub fn one_minus(&mut self, a: NodeId) -> NodeId {
        self.unary(a, |v| T::one() - v, Op::OneMinus(a))
    }

    pub fn scale(&mut self, a: NodeId, c: T) -> NodeId {
        self.unary(a, |v| v * c, Op::Scale(a, c))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.unary(a, |v| v.tanh(), Op::Tanh(a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.unary(a, |v| v.max(T::zero()), Op::Relu(a))
    }

    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId, TensorError> {
        if self.value(a).rank() != 1 {
            return Err(shape_err("softmax", self.shape(a), &[]));
        }
        let out = softmax(self.data(a))?;
        Ok(self.push(Op::Softmax(a), Tensor::vector(out)?))
    }

    /// Concatenates vectors.
    pub fn concat(&mut self, xs: &[NodeId]) -> Result<NodeId, TensorError> {
        if xs.is_empty() {
            return Err(TensorError::Usage("concat of no operands".into()));
        }
        let mut out = Vec::new();
        for &x in xs {
            if self.value(x).rank() != 1 {
                return Err(shape_err("concat", self.shape(x), &[]));
            }
            out.extend_from_slice(self.data(x));
        }
        Ok(self.push(Op::Concat(xs.to_vec()), Tensor::vector(out)?))
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack_rows(&mut self, xs: &[NodeId]) -> Result<NodeId, TensorError> {
        let first = *xs
            .first()
            .ok_or_else(|| TensorError::Usage("stack_rows of no operands".into()))?;
        let n = self.data(first).len();
        let mut out = Vec::with_capacity(n * xs.len());
        for &x in xs {
            if self.value(x).rank() != 1 || self.data(x).len() != n {
                return Err(shape_err("stack_rows", self.shape(first), self.shape(x)));
            }
            out.extend_from_slice(self.data(x));
        }
        Ok(self.push(Op::StackRows(xs.to_vec()), Tensor::new(vec![xs.len(), n], out)?))
    }

    pub fn row(&mut self, a: NodeId, i: usize) -> Result<NodeId, TensorError> {
        let s = self.shape(a);
        if s.len() != 2 || i >= s[0] {
            return Err(shape_err("row", s, &[i]));
        }
        let out = self.value(a).row(i).to_vec();
        Ok(self.push(Op::Row(a, i), Tensor::vector(out)?))
    }

    /// Looks up rows of a parameter table. Reads the table in place so large
    /// embedding matrices are never copied into the graph.
    pub fn gather(&mut self, table: ParamId, indices: &[usize]) -> Result<NodeId, TensorError> {
        let t = self.params.get(table);
        if t.rank() != 2 {
            return Err(shape_err("gather", t.shape(), &[]));
        }
        if indices.is_empty() {
            return Err(TensorError::Usage("gather of no indices".into()));
        }
        let (rows, d) = (t.shape()[0], t.shape()[1]);
        let mut out = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            if i >= rows {
                return Err(shape_err("gather", t.shape(), &[i]));
            }
            out.extend_from_slice(t.row(i));
        }
        Ok(self.push(
            Op::Gather(table, indices.to_vec()),
            Tensor::new(vec![indices.len(), d], out)?,
        ))
    }

    /// Sliding windows of `width` consecutive rows, each flattened into one
    /// row: L×d becomes (L−width+1)×(width·d).
    pub fn unfold(&mut self, a: NodeId, width: usize) -> Result<NodeId, TensorError> {
        let s = self.shape(a);
        if s.len() != 2 || width == 0 || width > s[0] {
            return Err(shape_err("unfold", s, &[width]));
        }
        let (l, d) = (s[0], s[1]);
        let positions = l - width + 1;
        let src = self.data(a);
        let mut out = Vec::with_capacity(positions * width * d);
        for p in 0..positions {
            out.extend_from_slice(&src[p * d..(p + width) * d]);
        }
        Ok(self.push(Op::Unfold(a, width), Tensor::new(vec![positions, width * d], out)?))
    }

    /// Column-wise maximum over the rows of a matrix (max-over-time pooling).
    /// Ties resolve to the earliest row.
    pub fn max_rows(&mut self, a: NodeId) -> Result<NodeId, TensorError> {
        let s = self.shape(a);
        if s.len() != 2 {
            return Err(shape_err("max_rows", s, &[]));
        }
        let (m, n) = (s[0], s[1]);
        let src = self.data(a);
        let mut best = src[..n].to_vec();
        let mut arg = vec![0usize; n];
        for i in 1..m {
            for j in 0..n {
                let v = src[i * n + j];
                if v > best[j] {
                    best[j] = v;
                    arg[j] = i;
                }
            }
        }
        Ok(self.push(Op::MaxRows(a, arg), Tensor::vector(best)?))
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err("dot", self.shape(a), self.shape(b)));
        }
        let v = dot(self.data(a), self.data(b));
        Ok(self.push(Op::Dot(a, b), Tensor::scalar(v)))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = self.data(a).iter().copied().sum();
        self.push(Op::Sum(a), Tensor::scalar(v))
    }

    pub fn sum_squares(&mut self, a: NodeId) -> NodeId {
        let v = self.data(a).iter().map(|&x| x * x).sum();
        self.push(Op::SumSquares(a), Tensor::scalar(v))
    }

    /// Inverted dropout with an explicit keep/scale mask (entries 0 or 1/(1−rate)).
    pub fn dropout_with_mask(&mut self, a: NodeId, mask: Vec<T>) -> Result<NodeId, TensorError> {
        if mask.len() != self.data(a).len() {
            return Err(shape_err("dropout", self.shape(a), &[mask.len()]));
        }
        let shape = self.shape(a).to_vec();
        let out: Vec<T> = self.data(a).iter().zip(&mask).map(|(&v, &m)| v * m).collect();
        Ok(self.push(Op::Dropout(a, mask), Tensor::new(shape, out)?))
    }

    /// Inverted dropout. In eval mode, or with rate 0, returns `a` itself.
    pub fn dropout<R: rand::Rng + ?Sized>(
        &mut self,
        a: NodeId,
        rate: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<NodeId, TensorError> {
        super::dropout::check_rate(rate)?;
        if mode == Mode::Eval || rate == 0.0 {
            return Ok(a);
        }
        let mask = super::dropout::mask::<T, R>(self.data(a).len(), rate, rng);
        self.dropout_with_mask(a, mask)
    }

    /// −log softmax(logits)[target], as a scalar node.
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, target: usize) -> Result<NodeId, TensorError> {
        let s = self.shape(logits);
        if s.len() != 1 || target >= s[0] {
            return Err(shape_err("softmax_cross_entropy", s, &[target]));
        }
        let z = self.data(logits);
        let max = z.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        let loss = lse - z[target];
        Ok(self.push(Op::SoftmaxCrossEntropy(logits, target), Tensor::scalar(loss)))
    }

    /// Reverse-mode pass from a scalar loss node.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients<T>, TensorError> {
        let mut grads = Gradients::zeros_like(self.params);
        self.backward_into(loss, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Graph::backward`] but adds into an existing gradient buffer.
    pub fn backward_into(&self, loss: NodeId, out: &mut Gradients<T>) -> Result<(), TensorError> {
        let loss_value = &self.nodes[loss.0].value;
        if !loss_value.is_scalar() {
            return Err(TensorError::NonScalarLoss(loss_value.shape().to_vec()));
        }
        if out.len() != self.params.len() {
            return Err(TensorError::Usage(
                "gradient buffer does not match the parameter set".into(),
            ));
        }
        let mut node_grads: Vec<Option<Vec<T>>> = vec![None; loss.0 + 1];
        node_grads[loss.0] = Some(vec![T::one()]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = node_grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if g.iter().any(|v| !v.is_finite()) {
                return Err(TensorError::NonFinite {
                    node: idx,
                    op: node.op.name(),
                });
            }
            self.propagate(idx, &g, &mut node_grads, out);
        }
        Ok(())
    }

    fn propagate(&self, idx: usize, g: &[T], node_grads: &mut [Option<Vec<T>>], out: &mut Gradients<T>) {
        fn acc<T: Scalar>(slot: &mut Option<Vec<T>>, delta: Vec<T>) {
            match slot {
                Some(existing) => {
                    for (e, d) in existing.iter_mut().zip(delta) {
                        *e = *e + d;
                    }
                }
                None => *slot = Some(delta),
            }
        }
        fn acc_with<T: Scalar>(slot: &mut Option<Vec<T>>, len: usize, f: impl FnOnce(&mut [T])) {
            let buf = slot.get_or_insert_with(|| vec![T::zero(); len]);
            f(buf);
        }

        let node = &self.nodes[idx];
        let val = node.value.data();
        let d = |id: NodeId| self.nodes[id.0].value.data();
        let sh = |id: NodeId| self.nodes[id.0].value.shape();

        match &node.op {
            Op::Input => {}
            Op::Param(p) => out.tensors[p.0].add_assign(g),
            Op::MatMul(a, b) => {
                let (m, k) = (sh(*a)[0], sh(*a)[1]);
                let n = sh(*b)[1];
                acc(&mut node_grads[a.0], mm_nt(g, d(*b), m, n, k));
                acc(&mut node_grads[b.0], mm_tn(d(*a), g, m, k, n));
            }
            Op::MatMulNT(a, b) => {
                let (m, k) = (sh(*a)[0], sh(*a)[1]);
                let n = sh(*b)[0];
                acc(&mut node_grads[a.0], mm(g, d(*b), m, n, k));
                acc(&mut node_grads[b.0], mm_tn(g, d(*a), m, n, k));
            }
            Op::MatVec(w, x) => {
                let (m, k) = (sh(*w)[0], sh(*w)[1]);
                let xv = d(*x);
                acc(&mut node_grads[w.0], mm(g, xv, m, 1, k));
                acc(&mut node_grads[x.0], mm_tn(d(*w), g, m, k, 1));
            }
            Op::VecMat(x, a) => {
                let (m, n) = (sh(*a)[0], sh(*a)[1]);
                acc(&mut node_grads[x.0], mm_nt(d(*a), g, m, n, 1));
                acc(&mut node_grads[a.0], mm(d(*x), g, m, 1, n));
            }
            Op::Add(a, b) => {
                acc(&mut node_grads[a.0], g.to_vec());
                acc(&mut node_grads[b.0], g.to_vec());
            }
            Op::Sub(a, b) => {
                acc(&mut node_grads[a.0], g.to_vec());
                acc(&mut node_grads[b.0], g.iter().map(|&v| -v).collect());
            }
            Op::Mul(a, b) => {
                let (av, bv) = (d(*a), d(*b));
                acc(
                    &mut node_grads[a.0],
                    g.iter().zip(bv).map(|(&gi, &bi)| gi * bi).collect(),
                );
                acc(
                    &mut node_grads[b.0],
                    g.iter().zip(av).map(|(&gi, &ai)| gi * ai).collect(),
                );
            }
            Op::AddRowBias(a, b) => {
                let n = sh(*b)[0];
                acc(&mut node_grads[a.0], g.to_vec());
                let mut gb = vec![T::zero(); n];
                for (i, &v) in g.iter().enumerate() {
                    gb[i % n] = gb[i % n] + v;
                }
                acc(&mut node_grads[b.0], gb);
            }
            Op::AddN(xs) => {
                for x in xs {
                    acc(&mut node_grads[x.0], g.to_vec());
                }
            }
            Op::OneMinus(a) => acc(&mut node_grads[a.0], g.iter().map(|&v| -v).collect()),
            Op::Scale(a, c) => acc(&mut node_grads[a.0], g.iter().map(|&v| v * *c).collect()),
            Op::Sigmoid(a) => acc(
                &mut node_grads[a.0],
                g.iter().zip(val).map(|(&gi, &y)| gi * y * (T::one() - y)).collect(),
            ),
            Op::Tanh(a) => acc(
                &mut node_grads[a.0],
                g.iter().zip(val).map(|(&gi, &y)| gi * (T::one() - y * y)).collect(),
            ),
            Op::Relu(a) => acc(
                &mut node_grads[a.0],
                g.iter()
                    .zip(val)
                    .map(|(&gi, &y)| if y > T::zero() { gi } else { T::zero() })
                    .collect(),
            ),
            Op::Softmax(a) => {
                let inner = dot(g, val);
                acc(
                    &mut node_grads[a.0],
                    g.iter().zip(val).map(|(&gi, &y)| y * (gi - inner)).collect(),
                );
            }
            Op::Concat(xs) => {
                let mut offset = 0;
                for x in xs {
                    let len = d(*x).len();
                    acc(&mut node_grads[x.0], g[offset..offset + len].to_vec());
                    offset += len;
                }
            }
            Op::StackRows(xs) => {
                let n = sh(xs[0])[0];
                for (i, x) in xs.iter().enumerate() {
                    acc(&mut node_grads[x.0], g[i * n..(i + 1) * n].to_vec());
                }
            }
            Op::Row(a, i) => {
                let len = d(*a).len();
                let n = g.len();
                acc_with(&mut node_grads[a.0], len, |buf| {
                    for (dst, &v) in buf[i * n..(i + 1) * n].iter_mut().zip(g) {
                        *dst = *dst + v;
                    }
                });
            }
            Op::Gather(table, indices) => {
                let t = &mut out.tensors[table.0];
                let dim = t.cols();
                for (r, &i) in indices.iter().enumerate() {
                    let row = t.row_mut(i);
                    for (dst, &v) in row.iter_mut().zip(&g[r * dim..(r + 1) * dim]) {
                        *dst = *dst + v;
                    }
                }
            }
            Op::Unfold(a, width) => {
                let len = d(*a).len();
                let dim = sh(*a)[1];
                let span = width * dim;
                let positions = g.len() / span;
                acc_with(&mut node_grads[a.0], len, |buf| {
                    for p in 0..positions {
                        let src = &g[p * span..(p + 1) * span];
                        for (dst, &v) in buf[p * dim..p * dim + span].iter_mut().zip(src) {
                            *dst = *dst + v;
                        }
                    }
                });
            }
            Op::MaxRows(a, arg) => {
                let len = d(*a).len();
                let n = arg.len();
                acc_with(&mut node_grads[a.0], len, |buf| {
                    for (j, &i) in arg.iter().enumerate() {
                        buf[i * n + j] = buf[i * n + j] + g[j];
                    }
                });
            }
            Op::Dot(a, b) => {
                let s = g[0];
                acc(&mut node_grads[a.0], d(*b).iter().map(|&v| v * s).collect());
                acc(&mut node_grads[b.0], d(*a).iter().map(|&v| v * s).collect());
            }
            Op::Sum(a) => {
                let len = d(*a).len();
                acc(&mut node_grads[a.0], vec![g[0]; len]);
            }
            Op::SumSquares(a) => {
                let two = T::of(2.0);
                acc(&mut node_grads[a.0], d(*a).iter().map(|&v| two * v * g[0]).collect());
            }
            Op::Dropout(a, mask) => acc(
                &mut node_grads[a.0],
                g.iter().zip(mask).map(|(&gi, &m)| gi * m).collect(),
            ),
            Op::SoftmaxCrossEntropy(logits, target) => {
                let z = d(*logits);
                let p = softmax(z).expect("logits were finite at forward time");
                let s = g[0];
                acc(
                    &mut node_grads[logits.0],
                    p.iter()
                        .enumerate()
                        .map(|(i, &pi)| {
                            let onehot = if i == *target { T::one() } else { T::zero() };
                            s * (pi - onehot)
                        })
                        .collect(),
                );
            }
        }
    }
}
