//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Every operation appends a node holding its value and a gradient rule, so
//! the tape is topologically ordered by construction. [`Tape::backward`]
//! replays it in reverse numerically. [`Tape::grad_graph`] instead records
//! the gradient computation as new tape nodes, which makes input gradients
//! themselves differentiable (needed for gradient penalties).

use std::rc::Rc;

use super::kernels::{self, ConvGeom};
use super::tensor::Tensor;
use crate::error::{arg_err, dim_err, Error, Result};

/// Slope used by every leaky ReLU in the crate's networks.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Sigmoid,
    Tanh,
    /// Row-wise softmax over a rank-2 input.
    SoftmaxRows,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Mean,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    MulConst(Var, Rc<Vec<f64>>),
    Square(Var),
    AddBias { x: Var, bias: Var },
    MatMul(Var, Var),
    Transpose(Var),
    Reshape(Var),
    Concat { parts: Vec<Var>, axis: usize },
    Narrow { x: Var, axis: usize, start: usize },
    Pad { x: Var, axis: usize, before: usize },
    Sum(Var),
    Mean(Var),
    ExpandScalar(Var),
    MeanLastAxis(Var),
    RowNorm(Var),
    Conv1d { x: Var, kernel: Var, bias: Option<Var>, geom: ConvGeom },
    ConvTranspose1d { x: Var, kernel: Var, bias: Option<Var>, geom: ConvGeom },
    MaxPool1d { x: Var, argmax: Rc<Vec<usize>> },
    Activation { x: Var, kind: Activation },
    CrossEntropy { logits: Var, labels: Rc<Vec<usize>>, probs: Rc<Vec<f64>>, reduction: Reduction },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Gradients produced by a backward pass, indexed by leaf [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn take(&mut self, v: Var) -> Option<Vec<f64>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Record a leaf; it participates in gradients iff the tensor requires grad.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        let rg = t.requires_grad();
        self.push(t.with_requires_grad(false), Op::Leaf, rg)
    }

    pub fn variable(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t.with_requires_grad(false), Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn data(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        self.data(v)[0]
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return dim_err(format!("{what}: shapes {:?} and {:?} differ", self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn unary_map(&self, x: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let t = self.value(x);
        Tensor::new(t.shape().to_vec(), t.data().iter().map(|&v| f(v)).collect()).expect("shape preserved")
    }

    fn binary_map(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(ta.shape().to_vec(), data).expect("shape preserved")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let v = self.binary_map(a, b, |x, y| x + y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        let v = self.binary_map(a, b, |x, y| x - y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let v = self.binary_map(a, b, |x, y| x * y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let v = self.unary_map(x, |a| a * factor);
        let rg = self.rg(x);
        self.push(v, Op::Scale(x, factor), rg)
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Var {
        let v = self.unary_map(x, |a| a + c);
        let rg = self.rg(x);
        self.push(v, Op::AddScalar(x), rg)
    }

    /// Elementwise product with a constant (non-differentiated) buffer.
    pub fn mul_const(&mut self, x: Var, c: Rc<Vec<f64>>) -> Result<Var> {
        if c.len() != self.value(x).numel() {
            return dim_err(format!("mul_const: {} constants for shape {:?}", c.len(), self.shape(x)));
        }
        let t = self.value(x);
        let data = t.data().iter().zip(c.iter()).map(|(a, b)| a * b).collect();
        let v = Tensor::new(t.shape().to_vec(), data)?;
        let rg = self.rg(x);
        Ok(self.push(v, Op::MulConst(x, c), rg))
    }

    pub fn square(&mut self, x: Var) -> Var {
        let v = self.unary_map(x, |a| a * a);
        let rg = self.rg(x);
        self.push(v, Op::Square(x), rg)
    }

    /// `x: [N × M] + bias: [M]` broadcast over rows.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let bs = self.shape(bias).to_vec();
        if xs.len() != 2 || bs != [xs[1]] {
            return dim_err(format!("add_bias: input {xs:?} incompatible with bias {bs:?}"));
        }
        let m = xs[1];
        let b = self.data(bias).to_vec();
        let data = self.data(x).iter().enumerate().map(|(i, v)| v + b[i % m]).collect();
        let v = Tensor::new(xs, data)?;
        let rg = self.rg(x) || self.rg(bias);
        Ok(self.push(v, Op::AddBias { x, bias }, rg))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return dim_err(format!("matmul: cannot multiply {sa:?} by {sb:?}"));
        }
        let data = kernels::matmul(self.data(a), self.data(b), sa[0], sa[1], sb[1]);
        let v = Tensor::new(vec![sa[0], sb[1]], data)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::MatMul(a, b), rg))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() != 2 {
            return dim_err(format!("transpose expects rank 2, got {s:?}"));
        }
        let (r, c) = (s[0], s[1]);
        let src = self.data(x);
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = src[i * c + j];
            }
        }
        let v = Tensor::new(vec![c, r], data)?;
        let rg = self.rg(x);
        Ok(self.push(v, Op::Transpose(x), rg))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let v = self.value(x).clone().reshape(shape.to_vec())?;
        let rg = self.rg(x);
        Ok(self.push(v, Op::Reshape(x), rg))
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = self.shape(*parts.first().ok_or_else(|| Error::Dimension("concat of nothing".into()))?).to_vec();
        if axis >= first.len() {
            return dim_err(format!("concat axis {axis} out of range for {first:?}"));
        }
        let mut total = 0;
        for &p in parts {
            let s = self.shape(p);
            if s.len() != first.len() || s.iter().enumerate().any(|(i, &d)| i != axis && d != first[i]) {
                return dim_err(format!("concat: {:?} incompatible with {first:?} on axis {axis}", s));
            }
            total += s[axis];
        }
        let mut shape = first.clone();
        shape[axis] = total;
        let (outer, _, inner) = axis_split(&shape, axis);
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &p in parts {
                let len = self.shape(p)[axis] * inner;
                data.extend_from_slice(&self.data(p)[o * len..(o + 1) * len]);
            }
        }
        let v = Tensor::new(shape, data)?;
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(v, Op::Concat { parts: parts.to_vec(), axis }, rg))
    }

    pub fn narrow(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if axis >= s.len() || len == 0 || start + len > s[axis] {
            return dim_err(format!("narrow [{start}, {}) on axis {axis} out of range for {s:?}", start + len));
        }
        let (outer, mid, inner) = axis_split(&s, axis);
        let src = self.data(x);
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * mid * inner + start * inner;
            data.extend_from_slice(&src[base..base + len * inner]);
        }
        let mut shape = s;
        shape[axis] = len;
        let v = Tensor::new(shape, data)?;
        let rg = self.rg(x);
        Ok(self.push(v, Op::Narrow { x, axis, start }, rg))
    }

    /// Zero-pad along one axis.
    pub fn pad(&mut self, x: Var, axis: usize, before: usize, after: usize) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if axis >= s.len() {
            return dim_err(format!("pad axis {axis} out of range for {s:?}"));
        }
        let (outer, mid, inner) = axis_split(&s, axis);
        let new_mid = mid + before + after;
        let src = self.data(x);
        let mut data = vec![0.0; outer * new_mid * inner];
        for o in 0..outer {
            let dst = o * new_mid * inner + before * inner;
            data[dst..dst + mid * inner].copy_from_slice(&src[o * mid * inner..(o + 1) * mid * inner]);
        }
        let mut shape = s;
        shape[axis] = new_mid;
        let v = Tensor::new(shape, data)?;
        let rg = self.rg(x);
        Ok(self.push(v, Op::Pad { x, axis, before }, rg))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.data(x).iter().fold(0.0, |a, v| a + v);
        let rg = self.rg(x);
        self.push(Tensor::scalar(s), Op::Sum(x), rg)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let n = self.value(x).numel() as f64;
        let s = self.data(x).iter().fold(0.0, |a, v| a + v) / n;
        let rg = self.rg(x);
        self.push(Tensor::scalar(s), Op::Mean(x), rg)
    }

    /// Broadcast a one-element tensor to `shape`.
    pub fn expand_scalar(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        if self.value(x).numel() != 1 {
            return dim_err(format!("expand_scalar expects one element, got {:?}", self.shape(x)));
        }
        let v = Tensor::full(shape, self.scalar_value(x));
        let rg = self.rg(x);
        Ok(self.push(v, Op::ExpandScalar(x), rg))
    }

    /// Average over the last axis (global average pooling over time).
    pub fn mean_last_axis(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() < 2 {
            return dim_err(format!("mean_last_axis expects rank >= 2, got {s:?}"));
        }
        let l = *s.last().expect("rank >= 2");
        let data = self.data(x).chunks(l).map(|c| c.iter().fold(0.0, |a, v| a + v) / l as f64).collect();
        let v = Tensor::new(s[..s.len() - 1].to_vec(), data)?;
        let rg = self.rg(x);
        Ok(self.push(v, Op::MeanLastAxis(x), rg))
    }

    /// Euclidean norm of each row of a rank-2 tensor.
    pub fn row_norms(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() != 2 {
            return dim_err(format!("row_norms expects rank 2, got {s:?}"));
        }
        let data = self.data(x).chunks(s[1]).map(|r| r.iter().fold(0.0, |a, v| a + v * v).sqrt()).collect();
        let v = Tensor::new(vec![s[0]], data)?;
        let rg = self.rg(x);
        Ok(self.push(v, Op::RowNorm(x), rg))
    }

    fn conv_geom(&self, x: Var, kernel: Var, bias: Option<Var>, transposed: bool) -> Result<(usize, usize, usize, usize, usize)> {
        let xs = self.shape(x).to_vec();
        let ks = self.shape(kernel).to_vec();
        if xs.len() != 3 || ks.len() != 3 {
            return dim_err(format!("convolution expects input [N,C,L] and kernel rank 3, got {xs:?} and {ks:?}"));
        }
        let (cin_k, cout) = if transposed { (ks[0], ks[1]) } else { (ks[1], ks[0]) };
        if xs[1] != cin_k {
            return dim_err(format!("convolution: input {xs:?} has {} channels, kernel {ks:?} expects {cin_k}", xs[1]));
        }
        if let Some(b) = bias {
            if self.shape(b) != [cout] {
                return dim_err(format!("convolution bias {:?} does not match {cout} output channels", self.shape(b)));
            }
        }
        Ok((xs[0], xs[1], cout, xs[2], ks[2]))
    }

    /// Cross-correlation of `x: [N×Cin×L]` with `kernel: [Cout×Cin×K]`.
    pub fn conv1d(&mut self, x: Var, kernel: Var, bias: Option<Var>, stride: usize, padding: usize) -> Result<Var> {
        if stride == 0 {
            return arg_err("conv1d stride must be positive");
        }
        let (n, cin, cout, l_in, k) = self.conv_geom(x, kernel, bias, false)?;
        if l_in + 2 * padding < k {
            return dim_err(format!(
                "conv1d kernel of length {k} exceeds padded input length {}",
                l_in + 2 * padding
            ));
        }
        let l_out = (l_in + 2 * padding - k) / stride + 1;
        let geom = ConvGeom { n, cin, cout, l_in, l_out, k, stride, padding };
        let data = kernels::conv1d(self.data(x), self.data(kernel), bias.map(|b| self.data(b)), &geom);
        let v = Tensor::new(vec![n, cout, l_out], data)?;
        let rg = self.rg(x) || self.rg(kernel) || bias.is_some_and(|b| self.rg(b));
        Ok(self.push(v, Op::Conv1d { x, kernel, bias, geom }, rg))
    }

    /// Transposed convolution with `kernel: [Cin×Cout×K]`; the adjoint of
    /// [`Tape::conv1d`]. `output_padding` (< stride) extends the output tail.
    pub fn conv_transpose1d(
        &mut self,
        x: Var,
        kernel: Var,
        bias: Option<Var>,
        stride: usize,
        padding: usize,
        output_padding: usize,
    ) -> Result<Var> {
        if stride == 0 || output_padding >= stride {
            return arg_err(format!("conv_transpose1d: need stride > 0 and output_padding < stride (got {stride}, {output_padding})"));
        }
        let (n, cin, cout, l_in, k) = self.conv_geom(x, kernel, bias, true)?;
        let raw = (l_in - 1) * stride + k + output_padding;
        if raw <= 2 * padding {
            return dim_err(format!(
                "conv_transpose1d output length (L-1)*stride - 2*padding + K = {} is below 1",
                raw as isize - 2 * padding as isize
            ));
        }
        let l_out = raw - 2 * padding;
        let geom = ConvGeom { n, cin, cout, l_in, l_out, k, stride, padding };
        let data = kernels::conv_transpose1d(self.data(x), self.data(kernel), bias.map(|b| self.data(b)), &geom);
        let v = Tensor::new(vec![n, cout, l_out], data)?;
        let rg = self.rg(x) || self.rg(kernel) || bias.is_some_and(|b| self.rg(b));
        Ok(self.push(v, Op::ConvTranspose1d { x, kernel, bias, geom }, rg))
    }

    /// Max pooling over time with implicit `-inf` padding.
    pub fn max_pool1d(&mut self, x: Var, size: usize, stride: usize, padding: usize) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() != 3 || size == 0 || stride == 0 || s[2] + 2 * padding < size || padding >= size {
            return dim_err(format!("max_pool1d(size {size}, stride {stride}, pad {padding}) invalid for {s:?}"));
        }
        let (rows, l) = (s[0] * s[1], s[2]);
        let l_out = (l + 2 * padding - size) / stride + 1;
        let src = self.data(x);
        let mut data = Vec::with_capacity(rows * l_out);
        let mut argmax = Vec::with_capacity(rows * l_out);
        for r in 0..rows {
            for t in 0..l_out {
                let start = (t * stride) as isize - padding as isize;
                let mut best = f64::NEG_INFINITY;
                let mut at = 0;
                for j in 0..size as isize {
                    let p = start + j;
                    if p >= 0 && (p as usize) < l {
                        let v = src[r * l + p as usize];
                        if v > best {
                            best = v;
                            at = r * l + p as usize;
                        }
                    }
                }
                data.push(best);
                argmax.push(at);
            }
        }
        let v = Tensor::new(vec![s[0], s[1], l_out], data)?;
        let rg = self.rg(x);
        Ok(self.push(v, Op::MaxPool1d { x, argmax: Rc::new(argmax) }, rg))
    }

    pub fn activation(&mut self, kind: Activation, x: Var) -> Result<Var> {
        let v = match kind {
            Activation::Relu => self.unary_map(x, |a| a.max(0.0)),
            Activation::LeakyRelu(slope) => self.unary_map(x, |a| if a > 0.0 { a } else { slope * a }),
            Activation::Sigmoid => self.unary_map(x, sigmoid),
            Activation::Tanh => self.unary_map(x, f64::tanh),
            Activation::SoftmaxRows => {
                let s = self.shape(x).to_vec();
                if s.len() != 2 {
                    return dim_err(format!("softmax_rows expects rank 2, got {s:?}"));
                }
                let mut data = self.data(x).to_vec();
                for row in data.chunks_mut(s[1]) {
                    softmax_in_place(row);
                }
                Tensor::new(s, data)?
            }
        };
        let rg = self.rg(x);
        Ok(self.push(v, Op::Activation { x, kind }, rg))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.activation(Activation::Relu, x)
    }

    pub fn leaky_relu(&mut self, x: Var) -> Result<Var> {
        self.activation(Activation::LeakyRelu(LEAKY_SLOPE), x)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.activation(Activation::Sigmoid, x)
    }

    /// Negative log-likelihood of the true class under a row softmax,
    /// stabilized by max subtraction.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize], reduction: Reduction) -> Result<Var> {
        let s = self.shape(logits).to_vec();
        if s.len() != 2 || s[0] != labels.len() {
            return dim_err(format!("cross_entropy: logits {s:?} vs {} labels", labels.len()));
        }
        let k = s[1];
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return arg_err(format!("label {bad} out of range for {k} classes"));
        }
        let mut probs = self.data(logits).to_vec();
        let mut total = 0.0;
        for (row, &label) in probs.chunks_mut(k).zip(labels) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            total += lse - row[label];
            softmax_in_place(row);
        }
        if reduction == Reduction::Mean {
            total /= labels.len() as f64;
        }
        let rg = self.rg(logits);
        Ok(self.push(
            Tensor::scalar(total),
            Op::CrossEntropy { logits, labels: Rc::new(labels.to_vec()), probs: Rc::new(probs), reduction },
            rg,
        ))
    }

    /// Gradients of a scalar `loss` with respect to every leaf that requires grad.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).numel() != 1 {
            return arg_err(format!("backward needs a scalar loss, got shape {:?}", self.shape(loss)));
        }
        self.backward_from(loss, vec![1.0])
    }

    /// Backward pass seeded with an explicit upstream gradient for `output`.
    pub fn backward_from(&self, output: Var, seed: Vec<f64>) -> Result<Gradients> {
        if seed.len() != self.value(output).numel() {
            return dim_err(format!("seed of length {} for output {:?}", seed.len(), self.shape(output)));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; output.0 + 1];
        if self.rg(output) {
            grads[output.0] = Some(seed);
        }
        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf) {
                grads[idx] = Some(g);
                continue;
            }
            self.propagate(idx, &g, &mut grads)?;
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], v: Var, contrib: Vec<f64>) {
        if !self.rg(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => {
                for (e, c) in existing.iter_mut().zip(&contrib) {
                    *e += c;
                }
            }
            slot @ None => *slot = Some(contrib),
        }
    }

    fn propagate(&self, idx: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) -> Result<()> {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.to_vec());
                self.accumulate(grads, *b, g.to_vec());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.to_vec());
                self.accumulate(grads, *b, g.iter().map(|v| -v).collect());
            }
            Op::Mul(a, b) => {
                if self.rg(*a) {
                    self.accumulate(grads, *a, g.iter().zip(self.data(*b)).map(|(x, y)| x * y).collect());
                }
                if self.rg(*b) {
                    self.accumulate(grads, *b, g.iter().zip(self.data(*a)).map(|(x, y)| x * y).collect());
                }
            }
            Op::Scale(x, f) => self.accumulate(grads, *x, g.iter().map(|v| v * f).collect()),
            Op::AddScalar(x) | Op::Reshape(x) => self.accumulate(grads, *x, g.to_vec()),
            Op::MulConst(x, c) => self.accumulate(grads, *x, g.iter().zip(c.iter()).map(|(a, b)| a * b).collect()),
            Op::Square(x) => {
                self.accumulate(grads, *x, g.iter().zip(self.data(*x)).map(|(a, v)| 2.0 * v * a).collect());
            }
            Op::AddBias { x, bias } => {
                self.accumulate(grads, *x, g.to_vec());
                if self.rg(*bias) {
                    let m = self.shape(*bias)[0];
                    let mut gb = vec![0.0; m];
                    for row in g.chunks(m) {
                        for (s, v) in gb.iter_mut().zip(row) {
                            *s += v;
                        }
                    }
                    self.accumulate(grads, *bias, gb);
                }
            }
            Op::MatMul(a, b) => {
                let (sa, sb) = (self.shape(*a), self.shape(*b));
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                if self.rg(*a) {
                    self.accumulate(grads, *a, kernels::matmul_grad_a(g, self.data(*b), m, k, n));
                }
                if self.rg(*b) {
                    self.accumulate(grads, *b, kernels::matmul_grad_b(self.data(*a), g, m, k, n));
                }
            }
            Op::Transpose(x) => {
                let s = self.shape(*x);
                let (r, c) = (s[0], s[1]);
                let mut gx = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        gx[i * c + j] = g[j * r + i];
                    }
                }
                self.accumulate(grads, *x, gx);
            }
            Op::Concat { parts, axis } => {
                let shape = node.value.shape();
                let (outer, total, inner) = axis_split(shape, *axis);
                let mut offset = 0;
                for &p in parts {
                    let len = self.shape(p)[*axis];
                    if self.rg(p) {
                        let mut gp = Vec::with_capacity(outer * len * inner);
                        for o in 0..outer {
                            let base = o * total * inner + offset * inner;
                            gp.extend_from_slice(&g[base..base + len * inner]);
                        }
                        self.accumulate(grads, p, gp);
                    }
                    offset += len;
                }
            }
            Op::Narrow { x, axis, start } => {
                let (outer, mid, inner) = axis_split(self.shape(*x), *axis);
                let len = node.value.shape()[*axis];
                let mut gx = vec![0.0; outer * mid * inner];
                for o in 0..outer {
                    let dst = o * mid * inner + start * inner;
                    gx[dst..dst + len * inner].copy_from_slice(&g[o * len * inner..(o + 1) * len * inner]);
                }
                self.accumulate(grads, *x, gx);
            }
            Op::Pad { x, axis, before } => {
                let (outer, mid, inner) = axis_split(self.shape(*x), *axis);
                let new_mid = node.value.shape()[*axis];
                let mut gx = Vec::with_capacity(outer * mid * inner);
                for o in 0..outer {
                    let src = o * new_mid * inner + before * inner;
                    gx.extend_from_slice(&g[src..src + mid * inner]);
                }
                self.accumulate(grads, *x, gx);
            }
            Op::Sum(x) => self.accumulate(grads, *x, vec![g[0]; self.value(*x).numel()]),
            Op::Mean(x) => {
                let n = self.value(*x).numel();
                self.accumulate(grads, *x, vec![g[0] / n as f64; n]);
            }
            Op::ExpandScalar(x) => self.accumulate(grads, *x, vec![g.iter().fold(0.0, |a, v| a + v)]),
            Op::MeanLastAxis(x) => {
                let l = *self.shape(*x).last().expect("rank >= 2");
                let gx = g.iter().flat_map(|&v| std::iter::repeat_n(v / l as f64, l)).collect();
                self.accumulate(grads, *x, gx);
            }
            Op::RowNorm(x) => {
                let d = self.shape(*x)[1];
                let norms = node.value.data();
                let mut gx = vec![0.0; self.value(*x).numel()];
                for (i, (row, out)) in self.data(*x).chunks(d).zip(gx.chunks_mut(d)).enumerate() {
                    if norms[i] > 0.0 {
                        let f = g[i] / norms[i];
                        for (o, v) in out.iter_mut().zip(row) {
                            *o = f * v;
                        }
                    }
                }
                self.accumulate(grads, *x, gx);
            }
            Op::Conv1d { x, kernel, bias, geom } => {
                if self.rg(*x) {
                    self.accumulate(grads, *x, kernels::conv1d_grad_input(g, self.data(*kernel), geom));
                }
                if self.rg(*kernel) {
                    self.accumulate(grads, *kernel, kernels::conv1d_grad_kernel(g, self.data(*x), geom));
                }
                if let Some(b) = bias {
                    if self.rg(*b) {
                        self.accumulate(grads, *b, kernels::channel_bias_grad(g, geom.n, geom.cout, geom.l_out));
                    }
                }
            }
            Op::ConvTranspose1d { x, kernel, bias, geom } => {
                if self.rg(*x) {
                    self.accumulate(grads, *x, kernels::conv_transpose1d_grad_input(g, self.data(*kernel), geom));
                }
                if self.rg(*kernel) {
                    self.accumulate(grads, *kernel, kernels::conv_transpose1d_grad_kernel(g, self.data(*x), geom));
                }
                if let Some(b) = bias {
                    if self.rg(*b) {
                        self.accumulate(grads, *b, kernels::channel_bias_grad(g, geom.n, geom.cout, geom.l_out));
                    }
                }
            }
            Op::MaxPool1d { x, argmax } => {
                let mut gx = vec![0.0; self.value(*x).numel()];
                for (&at, &v) in argmax.iter().zip(g) {
                    gx[at] += v;
                }
                self.accumulate(grads, *x, gx);
            }
            Op::Activation { x, kind } => {
                let y = node.value.data();
                let gx: Vec<f64> = match kind {
                    Activation::Relu => g.iter().zip(self.data(*x)).map(|(a, &v)| if v > 0.0 { *a } else { 0.0 }).collect(),
                    Activation::LeakyRelu(slope) => {
                        g.iter().zip(self.data(*x)).map(|(a, &v)| if v > 0.0 { *a } else { slope * a }).collect()
                    }
                    Activation::Sigmoid => g.iter().zip(y).map(|(a, s)| a * s * (1.0 - s)).collect(),
                    Activation::Tanh => g.iter().zip(y).map(|(a, t)| a * (1.0 - t * t)).collect(),
                    Activation::SoftmaxRows => {
                        let k = node.value.shape()[1];
                        let mut gx = vec![0.0; y.len()];
                        for ((grow, yrow), out) in g.chunks(k).zip(y.chunks(k)).zip(gx.chunks_mut(k)) {
                            let dot: f64 = grow.iter().zip(yrow).map(|(a, b)| a * b).sum();
                            for ((o, a), s) in out.iter_mut().zip(grow).zip(yrow) {
                                *o = s * (a - dot);
                            }
                        }
                        gx
                    }
                };
                self.accumulate(grads, *x, gx);
            }
            Op::CrossEntropy { logits, labels, probs, reduction } => {
                let k = self.shape(*logits)[1];
                let scale = match reduction {
                    Reduction::Sum => g[0],
                    Reduction::Mean => g[0] / labels.len() as f64,
                };
                let mut gx = probs.as_ref().clone();
                for (row, &label) in gx.chunks_mut(k).zip(labels.iter()) {
                    row[label] -= 1.0;
                    for v in row.iter_mut() {
                        *v *= scale;
                    }
                }
                self.accumulate(grads, *logits, gx);
            }
        }
        Ok(())
    }

    /// Record `d output / d wrt` as new tape nodes and return it.
    ///
    /// The result is differentiable with respect to every other leaf of the
    /// tape. Supported on piecewise-linear networks: linear maps, convolutions,
    /// (leaky) ReLU, reshaping, concatenation and elementwise arithmetic.
    pub fn grad_graph(&mut self, output: Var, wrt: Var) -> Result<Var> {
        if self.value(output).numel() != 1 {
            return arg_err(format!("grad_graph needs a scalar output, got {:?}", self.shape(output)));
        }
        if wrt.0 > output.0 {
            return arg_err("grad_graph: output does not depend on wrt");
        }
        let span = output.0 - wrt.0 + 1;
        let mut depends = vec![false; span];
        depends[0] = true;
        for idx in wrt.0 + 1..=output.0 {
            depends[idx - wrt.0] = self.inputs(idx).iter().any(|v| v.0 >= wrt.0 && depends[v.0 - wrt.0]);
        }
        let dep = |v: Var| v.0 >= wrt.0 && depends[v.0 - wrt.0];

        let mut gv: Vec<Option<Var>> = vec![None; span];
        let seed = self.constant(Tensor::scalar(1.0));
        gv[span - 1] = Some(seed);

        for idx in (wrt.0 + 1..=output.0).rev() {
            if !depends[idx - wrt.0] {
                continue;
            }
            let Some(g) = gv[idx - wrt.0].take() else { continue };
            let op = self.nodes[idx].op.clone();
            let mut contribs: Vec<(Var, Var)> = Vec::new();
            match op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    contribs.push((a, g));
                    contribs.push((b, g));
                }
                Op::Sub(a, b) => {
                    contribs.push((a, g));
                    if dep(b) {
                        contribs.push((b, self.scale(g, -1.0)));
                    }
                }
                Op::Mul(a, b) => {
                    if dep(a) {
                        contribs.push((a, self.mul(g, b)?));
                    }
                    if dep(b) {
                        contribs.push((b, self.mul(g, a)?));
                    }
                }
                Op::Scale(x, f) => contribs.push((x, self.scale(g, f))),
                Op::AddScalar(x) => contribs.push((x, g)),
                Op::MulConst(x, c) => contribs.push((x, self.mul_const(g, c)?)),
                Op::Square(x) => {
                    let two_x = self.scale(x, 2.0);
                    contribs.push((x, self.mul(g, two_x)?));
                }
                Op::AddBias { x, bias } => {
                    if dep(bias) {
                        return Err(Error::Unsupported("grad_graph through a bias that depends on the input".into()));
                    }
                    contribs.push((x, g));
                }
                Op::MatMul(a, b) => {
                    if dep(a) {
                        let bt = self.transpose(b)?;
                        contribs.push((a, self.matmul(g, bt)?));
                    }
                    if dep(b) {
                        let at = self.transpose(a)?;
                        contribs.push((b, self.matmul(at, g)?));
                    }
                }
                Op::Transpose(x) => contribs.push((x, self.transpose(g)?)),
                Op::Reshape(x) => {
                    let s = self.shape(x).to_vec();
                    contribs.push((x, self.reshape(g, &s)?));
                }
                Op::Concat { parts, axis } => {
                    let mut offset = 0;
                    for p in parts {
                        let len = self.shape(p)[axis];
                        if dep(p) {
                            contribs.push((p, self.narrow(g, axis, offset, len)?));
                        }
                        offset += len;
                    }
                }
                Op::Narrow { x, axis, start } => {
                    let total = self.shape(x)[axis];
                    let len = self.shape(g)[axis];
                    contribs.push((x, self.pad(g, axis, start, total - start - len)?));
                }
                Op::Pad { x, axis, before } => {
                    let len = self.shape(x)[axis];
                    contribs.push((x, self.narrow(g, axis, before, len)?));
                }
                Op::Sum(x) => {
                    let s = self.shape(x).to_vec();
                    contribs.push((x, self.expand_scalar(g, &s)?));
                }
                Op::Mean(x) => {
                    let s = self.shape(x).to_vec();
                    let n = self.value(x).numel() as f64;
                    let e = self.expand_scalar(g, &s)?;
                    contribs.push((x, self.scale(e, 1.0 / n)));
                }
                Op::ExpandScalar(x) => contribs.push((x, self.sum(g))),
                Op::Conv1d { x, kernel, bias, geom } => {
                    if dep(kernel) || bias.is_some_and(dep) {
                        return Err(Error::Unsupported("grad_graph through input-dependent conv kernels".into()));
                    }
                    let raw = (geom.l_out - 1) * geom.stride + geom.k - 2 * geom.padding;
                    let out_pad = geom.l_in - raw;
                    contribs.push((x, self.conv_transpose1d(g, kernel, None, geom.stride, geom.padding, out_pad)?));
                }
                Op::ConvTranspose1d { x, kernel, bias, geom } => {
                    if dep(kernel) || bias.is_some_and(dep) {
                        return Err(Error::Unsupported("grad_graph through input-dependent conv kernels".into()));
                    }
                    contribs.push((x, self.conv1d(g, kernel, None, geom.stride, geom.padding)?));
                }
                Op::Activation { x, kind: Activation::Relu } => {
                    let mask = self.data(x).iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
                    contribs.push((x, self.mul_const(g, Rc::new(mask))?));
                }
                Op::Activation { x, kind: Activation::LeakyRelu(slope) } => {
                    let mask = self.data(x).iter().map(|&v| if v > 0.0 { 1.0 } else { slope }).collect();
                    contribs.push((x, self.mul_const(g, Rc::new(mask))?));
                }
                other => {
                    return Err(Error::Unsupported(format!("grad_graph through {}", op_name(&other))));
                }
            }
            for (target, c) in contribs {
                if !dep(target) {
                    continue;
                }
                let slot = &mut gv[target.0 - wrt.0];
                *slot = Some(match *slot {
                    None => c,
                    Some(prev) => self.add(prev, c)?,
                });
            }
        }
        match gv[0] {
            Some(g) => Ok(g),
            None => {
                let zeros = Tensor::zeros(self.shape(wrt));
                Ok(self.constant(zeros))
            }
        }
    }

    fn inputs(&self, idx: usize) -> Vec<Var> {
        match &self.nodes[idx].op {
            Op::Leaf => vec![],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::MatMul(a, b) => vec![*a, *b],
            Op::AddBias { x, bias } => vec![*x, *bias],
            Op::Scale(x, _)
            | Op::AddScalar(x)
            | Op::MulConst(x, _)
            | Op::Square(x)
            | Op::Transpose(x)
            | Op::Reshape(x)
            | Op::Sum(x)
            | Op::Mean(x)
            | Op::ExpandScalar(x)
            | Op::MeanLastAxis(x)
            | Op::RowNorm(x)
            | Op::Narrow { x, .. }
            | Op::Pad { x, .. }
            | Op::MaxPool1d { x, .. }
            | Op::Activation { x, .. } => vec![*x],
            Op::Concat { parts, .. } => parts.clone(),
            Op::Conv1d { x, kernel, bias, .. } | Op::ConvTranspose1d { x, kernel, bias, .. } => {
                let mut v = vec![*x, *kernel];
                v.extend(bias);
                v
            }
            Op::CrossEntropy { logits, .. } => vec![*logits],
        }
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::MeanLastAxis(_) => "mean_last_axis",
        Op::RowNorm(_) => "row_norms",
        Op::MaxPool1d { .. } => "max_pool1d",
        Op::CrossEntropy { .. } => "cross_entropy",
        Op::Activation { .. } => "a smooth activation",
        _ => "this operation",
    }
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}
