//! Reverse-mode differentiation over an explicit operation record.
//!
//! A `Tape` is an append-only arena of nodes. Forward evaluation happens as
//! ops are recorded; `backward` walks the record in reverse and accumulates
//! gradients per node. Leaves are inputs, constants, or parameters — a leaf's
//! gradient is read back through the `Var` handle that registered it.

use super::tensor::{self, Result, Tensor, TensorError};

/// Handle to a node on a tape. Only valid for the tape that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Affine { x: Var, mul: f64, add: f64 },
    AddRowVec(Var, Var),
    AddColVec(Var, Var),
    Matmul(Var, Var),
    MatVec(Var, Var),
    Transpose(Var),
    Tanh(Var),
    Sigmoid(Var),
    Abs(Var),
    Softmax(Var),
    LogSumExp { x: Var, axis: usize },
    L2Normalize(Var),
    CosineDistance(Var, Var),
    Dot(Var, Var),
    SoftmaxCrossEntropy { logits: Var, target: usize },
    SelectRow { m: Var, row: usize },
    GatherSum { x: Var, indices: Vec<usize> },
    Concat(Var, Var),
    StackRows(Vec<Var>),
}

struct Node {
    op: Op,
    value: Tensor,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Per-node gradient accumulators produced by `backward`.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
    }

    /// Gradient for `v`, or zeros of `shape` when nothing flowed into it.
    pub fn take(&self, v: Var, shape: &[usize]) -> Tensor {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(shape),
        }
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

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    /// Register an input/parameter/constant.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn scalar(&mut self, v: f64) -> Result<Var> {
        Ok(self.leaf(Tensor::scalar(v)?))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = tensor::add(self.value(a), self.value(b))?;
        Ok(self.push(Op::Add(a, b), value))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = tensor::sub(self.value(a), self.value(b))?;
        Ok(self.push(Op::Sub(a, b), value))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = tensor::mul(self.value(a), self.value(b))?;
        Ok(self.push(Op::Mul(a, b), value))
    }

    pub fn affine(&mut self, x: Var, mul: f64, add: f64) -> Result<Var> {
        let value = tensor::affine(self.value(x), mul, add)?;
        Ok(self.push(Op::Affine { x, mul, add }, value))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        self.affine(x, c, 0.0)
    }

    pub fn add_row_vec(&mut self, m: Var, v: Var) -> Result<Var> {
        let value = tensor::add_row_vec(self.value(m), self.value(v))?;
        Ok(self.push(Op::AddRowVec(m, v), value))
    }

    pub fn add_col_vec(&mut self, m: Var, v: Var) -> Result<Var> {
        let value = tensor::add_col_vec(self.value(m), self.value(v))?;
        Ok(self.push(Op::AddColVec(m, v), value))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = tensor::matmul(self.value(a), self.value(b))?;
        Ok(self.push(Op::Matmul(a, b), value))
    }

    pub fn matvec(&mut self, a: Var, v: Var) -> Result<Var> {
        let value = tensor::matvec(self.value(a), self.value(v))?;
        Ok(self.push(Op::MatVec(a, v), value))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let value = tensor::transpose(self.value(a))?;
        Ok(self.push(Op::Transpose(a), value))
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        let value = tensor::tanh(self.value(x))?;
        Ok(self.push(Op::Tanh(x), value))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let value = tensor::sigmoid(self.value(x))?;
        Ok(self.push(Op::Sigmoid(x), value))
    }

    pub fn abs(&mut self, x: Var) -> Result<Var> {
        let value = tensor::abs(self.value(x))?;
        Ok(self.push(Op::Abs(x), value))
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let value = tensor::softmax_vec(self.value(x))?;
        Ok(self.push(Op::Softmax(x), value))
    }

    pub fn logsumexp(&mut self, x: Var, axis: usize) -> Result<Var> {
        let value = tensor::logsumexp(self.value(x), axis)?;
        Ok(self.push(Op::LogSumExp { x, axis }, value))
    }

    pub fn l2_normalize(&mut self, x: Var) -> Result<Var> {
        let value = tensor::l2_normalize(self.value(x))?;
        Ok(self.push(Op::L2Normalize(x), value))
    }

    pub fn cosine_distance(&mut self, u: Var, v: Var) -> Result<Var> {
        let value = tensor::cosine_distance(self.value(u), self.value(v))?;
        Ok(self.push(Op::CosineDistance(u, v), value))
    }

    pub fn dot(&mut self, u: Var, v: Var) -> Result<Var> {
        let value = tensor::dot(self.value(u), self.value(v))?;
        Ok(self.push(Op::Dot(u, v), value))
    }

    pub fn softmax_cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let value = tensor::softmax_cross_entropy(self.value(logits), target)?;
        Ok(self.push(Op::SoftmaxCrossEntropy { logits, target }, value))
    }

    pub fn select_row(&mut self, m: Var, row: usize) -> Result<Var> {
        let value = tensor::select_row(self.value(m), row)?;
        Ok(self.push(Op::SelectRow { m, row }, value))
    }

    pub fn gather_sum(&mut self, x: Var, indices: Vec<usize>) -> Result<Var> {
        let value = tensor::gather_sum(self.value(x), &indices)?;
        Ok(self.push(Op::GatherSum { x, indices }, value))
    }

    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = tensor::concat(self.value(a), self.value(b))?;
        Ok(self.push(Op::Concat(a, b), value))
    }

    pub fn stack_rows(&mut self, rows: Vec<Var>) -> Result<Var> {
        let tensors: Vec<&Tensor> = rows.iter().map(|&r| self.value(r)).collect();
        let value = tensor::stack_rows(&tensors)?;
        Ok(self.push(Op::StackRows(rows), value))
    }

    /// Sum a nonempty list of same-shaped vars.
    pub fn sum_vars(&mut self, vars: &[Var]) -> Result<Var> {
        let mut it = vars.iter();
        let first = *it.next().ok_or_else(|| {
            TensorError::Invalid("sum_vars needs at least one var".into())
        })?;
        let mut acc = first;
        for &v in it {
            acc = self.add(acc, v)?;
        }
        Ok(acc)
    }

    /// Recompute every node's value from the leaves, in record order.
    /// Uses the same kernels as the forward pass, so results are
    /// bit-identical to the recorded values.
    pub fn replay(&self) -> Result<Vec<Tensor>> {
        let mut vals: Vec<Tensor> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = |x: Var| &vals[x.0];
            let out = match &node.op {
                Op::Leaf => node.value.clone(),
                Op::Add(a, b) => tensor::add(v(*a), v(*b))?,
                Op::Sub(a, b) => tensor::sub(v(*a), v(*b))?,
                Op::Mul(a, b) => tensor::mul(v(*a), v(*b))?,
                Op::Affine { x, mul, add } => tensor::affine(v(*x), *mul, *add)?,
                Op::AddRowVec(m, x) => tensor::add_row_vec(v(*m), v(*x))?,
                Op::AddColVec(m, x) => tensor::add_col_vec(v(*m), v(*x))?,
                Op::Matmul(a, b) => tensor::matmul(v(*a), v(*b))?,
                Op::MatVec(a, x) => tensor::matvec(v(*a), v(*x))?,
                Op::Transpose(a) => tensor::transpose(v(*a))?,
                Op::Tanh(x) => tensor::tanh(v(*x))?,
                Op::Sigmoid(x) => tensor::sigmoid(v(*x))?,
                Op::Abs(x) => tensor::abs(v(*x))?,
                Op::Softmax(x) => tensor::softmax_vec(v(*x))?,
                Op::LogSumExp { x, axis } => tensor::logsumexp(v(*x), *axis)?,
                Op::L2Normalize(x) => tensor::l2_normalize(v(*x))?,
                Op::CosineDistance(a, b) => tensor::cosine_distance(v(*a), v(*b))?,
                Op::Dot(a, b) => tensor::dot(v(*a), v(*b))?,
                Op::SoftmaxCrossEntropy { logits, target } => {
                    tensor::softmax_cross_entropy(v(*logits), *target)?
                }
                Op::SelectRow { m, row } => tensor::select_row(v(*m), *row)?,
                Op::GatherSum { x, indices } => tensor::gather_sum(v(*x), indices)?,
                Op::Concat(a, b) => tensor::concat(v(*a), v(*b))?,
                Op::StackRows(rows) => {
                    let ts: Vec<&Tensor> = rows.iter().map(|r| &vals[r.0]).collect();
                    tensor::stack_rows(&ts)?
                }
            };
            vals.push(out);
        }
        Ok(vals)
    }

    /// Reverse-mode gradients of a scalar `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let loss_value = self.value(loss);
        if loss_value.numel() != 1 || loss_value.rank() > 1 {
            return Err(TensorError::NonScalarLoss {
                got: loss_value.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::from_parts(
            loss_value.shape().to_vec(),
            vec![1.0],
        ));

        for idx in (0..self.nodes.len()).rev() {
            let g = match grads[idx].clone() {
                Some(g) => g,
                None => continue,
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, scale_tensor(&g, -1.0));
                }
                Op::Mul(a, b) => {
                    let ga = tensor::mul(&g, self.value(*b))?;
                    let gb = tensor::mul(&g, self.value(*a))?;
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Affine { x, mul, .. } => {
                    accumulate(&mut grads, *x, scale_tensor(&g, *mul));
                }
                Op::AddRowVec(m, v) => {
                    let cols = self.value(*v).numel();
                    let rows = g.numel() / cols;
                    let mut vg = vec![0.0; cols];
                    for i in 0..rows {
                        for j in 0..cols {
                            vg[j] += g.data()[i * cols + j];
                        }
                    }
                    accumulate(&mut grads, *m, g.clone());
                    accumulate(&mut grads, *v, Tensor::from_parts(vec![cols], vg));
                }
                Op::AddColVec(m, v) => {
                    let rows = self.value(*v).numel();
                    let cols = g.numel() / rows;
                    let mut vg = vec![0.0; rows];
                    for i in 0..rows {
                        for j in 0..cols {
                            vg[i] += g.data()[i * cols + j];
                        }
                    }
                    accumulate(&mut grads, *m, g.clone());
                    accumulate(&mut grads, *v, Tensor::from_parts(vec![rows], vg));
                }
                Op::Matmul(a, b) => {
                    let bt = tensor::transpose(self.value(*b))?;
                    let at = tensor::transpose(self.value(*a))?;
                    let ga = tensor::matmul(&g, &bt)?;
                    let gb = tensor::matmul(&at, &g)?;
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::MatVec(a, v) => {
                    // out[i] = sum_k a[i][k] v[k]
                    let av = self.value(*a);
                    let vv = self.value(*v);
                    let (m, k) = (av.shape()[0], av.shape()[1]);
                    let mut ga = vec![0.0; m * k];
                    for i in 0..m {
                        let gi = g.data()[i];
                        for (j, vj) in vv.data().iter().enumerate() {
                            ga[i * k + j] = gi * vj;
                        }
                    }
                    let mut gv = vec![0.0; k];
                    for i in 0..m {
                        let gi = g.data()[i];
                        let row = &av.data()[i * k..(i + 1) * k];
                        for (j, aij) in row.iter().enumerate() {
                            gv[j] += gi * aij;
                        }
                    }
                    accumulate(&mut grads, *a, Tensor::from_parts(vec![m, k], ga));
                    accumulate(&mut grads, *v, Tensor::from_parts(vec![k], gv));
                }
                Op::Transpose(a) => {
                    accumulate(&mut grads, *a, tensor::transpose(&g)?);
                }
                Op::Tanh(x) => {
                    let y = &node.value;
                    let data = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(gi, yi)| gi * (1.0 - yi * yi))
                        .collect();
                    accumulate(
                        &mut grads,
                        *x,
                        Tensor::from_parts(y.shape().to_vec(), data),
                    );
                }
                Op::Sigmoid(x) => {
                    let y = &node.value;
                    let data = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(gi, yi)| gi * yi * (1.0 - yi))
                        .collect();
                    accumulate(
                        &mut grads,
                        *x,
                        Tensor::from_parts(y.shape().to_vec(), data),
                    );
                }
                Op::Abs(x) => {
                    let xv = self.value(*x);
                    let data = g
                        .data()
                        .iter()
                        .zip(xv.data())
                        .map(|(gi, xi)| gi * sign(*xi))
                        .collect();
                    accumulate(
                        &mut grads,
                        *x,
                        Tensor::from_parts(xv.shape().to_vec(), data),
                    );
                }
                Op::Softmax(x) => {
                    // dx = y ⊙ (g - <g, y>)
                    let y = &node.value;
                    let gy: f64 = g.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
                    let data = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(gi, yi)| yi * (gi - gy))
                        .collect();
                    accumulate(
                        &mut grads,
                        *x,
                        Tensor::from_parts(y.shape().to_vec(), data),
                    );
                }
                Op::LogSumExp { x, axis } => {
                    let xv = self.value(*x);
                    let gx = lse_backward(xv, &node.value, &g, *axis);
                    accumulate(&mut grads, *x, gx);
                }
                Op::L2Normalize(x) => {
                    let xv = self.value(*x);
                    let y = &node.value;
                    let norm = tensor::l2_norm(xv.data());
                    let gy: f64 = g.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
                    let data = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(gi, yi)| (gi - yi * gy) / norm)
                        .collect();
                    accumulate(
                        &mut grads,
                        *x,
                        Tensor::from_parts(xv.shape().to_vec(), data),
                    );
                }
                Op::CosineDistance(u, v) => {
                    let uv = self.value(*u);
                    let vv = self.value(*v);
                    let gs = g.scalar_value();
                    let nu = tensor::l2_norm(uv.data());
                    let nv = tensor::l2_norm(vv.data());
                    let dot: f64 = uv.data().iter().zip(vv.data()).map(|(a, b)| a * b).sum();
                    let cos = dot / (nu * nv);
                    // d(1 - cos)/du = -(v/(|u||v|) - cos * u/|u|^2)
                    let gu: Vec<f64> = uv
                        .data()
                        .iter()
                        .zip(vv.data())
                        .map(|(ui, vi)| -gs * (vi / (nu * nv) - cos * ui / (nu * nu)))
                        .collect();
                    let gv: Vec<f64> = uv
                        .data()
                        .iter()
                        .zip(vv.data())
                        .map(|(ui, vi)| -gs * (ui / (nu * nv) - cos * vi / (nv * nv)))
                        .collect();
                    accumulate(
                        &mut grads,
                        *u,
                        Tensor::from_parts(uv.shape().to_vec(), gu),
                    );
                    accumulate(
                        &mut grads,
                        *v,
                        Tensor::from_parts(vv.shape().to_vec(), gv),
                    );
                }
                Op::Dot(u, v) => {
                    let gs = g.scalar_value();
                    let gu = scale_tensor(self.value(*v), gs);
                    let gv = scale_tensor(self.value(*u), gs);
                    accumulate(&mut grads, *u, gu);
                    accumulate(&mut grads, *v, gv);
                }
                Op::SoftmaxCrossEntropy { logits, target } => {
                    let gs = g.scalar_value();
                    let lv = self.value(*logits);
                    let mut data = tensor::softmax_slice(lv.data());
                    data[*target] -= 1.0;
                    for d in &mut data {
                        *d *= gs;
                    }
                    accumulate(
                        &mut grads,
                        *logits,
                        Tensor::from_parts(lv.shape().to_vec(), data),
                    );
                }
                Op::SelectRow { m, row } => {
                    let mv = self.value(*m);
                    let cols = mv.shape()[1];
                    let mut data = vec![0.0; mv.numel()];
                    data[row * cols..(row + 1) * cols].copy_from_slice(g.data());
                    accumulate(
                        &mut grads,
                        *m,
                        Tensor::from_parts(mv.shape().to_vec(), data),
                    );
                }
                Op::GatherSum { x, indices } => {
                    let xv = self.value(*x);
                    let gs = g.scalar_value();
                    let mut data = vec![0.0; xv.numel()];
                    for &i in indices {
                        data[i] += gs;
                    }
                    accumulate(
                        &mut grads,
                        *x,
                        Tensor::from_parts(xv.shape().to_vec(), data),
                    );
                }
                Op::Concat(a, b) => {
                    let na = self.value(*a).numel();
                    let ga = Tensor::from_parts(vec![na], g.data()[..na].to_vec());
                    let gb = Tensor::from_parts(
                        vec![g.numel() - na],
                        g.data()[na..].to_vec(),
                    );
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::StackRows(rows) => {
                    let cols = g.numel() / rows.len();
                    for (i, r) in rows.iter().enumerate() {
                        let slice = g.data()[i * cols..(i + 1) * cols].to_vec();
                        accumulate(&mut grads, *r, Tensor::from_parts(vec![cols], slice));
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn scale_tensor(t: &Tensor, c: f64) -> Tensor {
    Tensor::from_parts(t.shape().to_vec(), t.data().iter().map(|v| c * v).collect())
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(acc) => {
            for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

fn lse_backward(x: &Tensor, y: &Tensor, g: &Tensor, axis: usize) -> Tensor {
    match x.shape() {
        [n] => {
            let gs = g.scalar_value();
            let ys = y.scalar_value();
            let data = x.data().iter().map(|xi| gs * (xi - ys).exp()).collect();
            Tensor::from_parts(vec![*n], data)
        }
        [rows, cols] => {
            let (rows, cols) = (*rows, *cols);
            let mut data = vec![0.0; rows * cols];
            match axis {
                0 => {
                    for j in 0..cols {
                        let gj = g.data()[j];
                        let yj = y.data()[j];
                        for i in 0..rows {
                            data[i * cols + j] = gj * (x.data()[i * cols + j] - yj).exp();
                        }
                    }
                }
                1 => {
                    for i in 0..rows {
                        let gi = g.data()[i];
                        let yi = y.data()[i];
                        for j in 0..cols {
                            data[i * cols + j] = gi * (x.data()[i * cols + j] - yi).exp();
                        }
                    }
                }
                _ => unreachable!("validated at forward time"),
            }
            Tensor::from_parts(vec![rows, cols], data)
        }
        _ => unreachable!("validated at forward time"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gradient() {
        // f(x) = x * x at x = 3 has gradient 6
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(3.0).unwrap());
        let y = tape.mul(x, x).unwrap();
        let grads = tape.backward(y).unwrap();
        assert_eq!(grads.get(x).unwrap().scalar_value(), 6.0);
    }

    #[test]
    fn softmax_ce_uniform_gradient() {
        let mut tape = Tape::new();
        let logits = tape.leaf(Tensor::vector(vec![0.0, 0.0]).unwrap());
        let loss = tape.softmax_cross_entropy(logits, 0).unwrap();
        let grads = tape.backward(loss).unwrap();
        let g = grads.get(logits).unwrap();
        assert!((g.data()[0] + 0.5).abs() < 1e-15);
        assert!((g.data()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::vector(vec![1.0, 2.0]).unwrap());
        assert!(matches!(
            tape.backward(x),
            Err(TensorError::NonScalarLoss { .. })
        ));
    }

    #[test]
    fn gradient_accumulation_is_additive() {
        // grad of (f + g) equals grad f plus grad g
        let build = |with_f: bool, with_g: bool| -> (f64, f64) {
            let mut tape = Tape::new();
            let x = tape.leaf(Tensor::scalar(1.7).unwrap());
            let f = tape.mul(x, x).unwrap();
            let t = tape.tanh(x).unwrap();
            let loss = match (with_f, with_g) {
                (true, true) => tape.add(f, t).unwrap(),
                (true, false) => f,
                (false, true) => t,
                _ => unreachable!(),
            };
            let grads = tape.backward(loss).unwrap();
            (
                tape.value(loss).scalar_value(),
                grads.get(x).unwrap().scalar_value(),
            )
        };
        let (_, g_sum) = build(true, true);
        let (_, g_f) = build(true, false);
        let (_, g_g) = build(false, true);
        assert!((g_sum - (g_f + g_g)).abs() < 1e-12);
    }

    #[test]
    fn replay_is_bit_identical() {
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::matrix(2, 3, vec![0.3, -1.2, 0.7, 2.0, 0.1, -0.4]).unwrap());
        let v = tape.leaf(Tensor::vector(vec![0.5, -0.25, 1.5]).unwrap());
        let h = tape.matvec(a, v).unwrap();
        let t = tape.tanh(h).unwrap();
        let n = tape.l2_normalize(t).unwrap();
        let s = tape.logsumexp(n, 0).unwrap();
        let replayed = tape.replay().unwrap();
        for (i, r) in replayed.iter().enumerate() {
            assert_eq!(r, tape.value(Var(i)));
        }
        let _ = s;
    }

    #[test]
    fn forward_is_deterministic() {
        let run = || {
            let mut tape = Tape::new();
            let x = tape.leaf(Tensor::vector(vec![0.1, 0.9, -0.3]).unwrap());
            let s = tape.softmax(x).unwrap();
            let l = tape.logsumexp(s, 0).unwrap();
            tape.value(l).scalar_value()
        };
        assert_eq!(run().to_bits(), run().to_bits());
    }
}
