//! Dense row-major f64 tensors and the forward kernels behind every tape
//! primitive.
//!
//! Scalars are shape `[]`, vectors `[n]`, matrices `[rows, cols]`. Every
//! kernel validates shapes up front and checks that its output is finite, so
//! a `Tensor` produced by a completed operation never carries NaN/Inf.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch, left {left:?} vs right {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("{op}: expected {expected}, got shape {got:?}")]
    BadShape {
        op: &'static str,
        expected: &'static str,
        got: Vec<usize>,
    },
    #[error("{op}: zero-norm vector")]
    ZeroNorm { op: &'static str },
    #[error("{op}: produced a non-finite value")]
    NonFinite { op: &'static str },
    #[error("{op}: index {index} out of bounds for shape {shape:?}")]
    IndexOutOfBounds {
        op: &'static str,
        index: usize,
        shape: Vec<usize>,
    },
    #[error("backward needs a scalar loss, got shape {got:?}")]
    NonScalarLoss { got: Vec<usize> },
    #[error("invalid tensor: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, TensorError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&e| e == 0) {
            return Err(TensorError::Invalid(format!(
                "extents must be positive, got {shape:?}"
            )));
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(TensorError::Invalid(format!(
                "shape {shape:?} wants {numel} values, got {}",
                data.len()
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(TensorError::NonFinite { op: "new" });
        }
        Ok(Self { shape, data })
    }

    pub fn scalar(v: f64) -> Result<Self> {
        Self::new(vec![], vec![v])
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(vec![n], data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; numel],
        }
    }

    /// Internal constructor for kernels that already guarantee the length
    /// invariant; finiteness is checked separately by `finite_or`.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1 && self.shape.len() <= 1
    }

    /// Value of a one-element tensor. Panics on misuse; callers check first.
    pub fn scalar_value(&self) -> f64 {
        assert!(
            self.data.len() == 1,
            "scalar_value on shape {:?}",
            self.shape
        );
        self.data[0]
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }
}

fn finite_or(op: &'static str, t: Tensor) -> Result<Tensor> {
    if t.data.iter().all(|x| x.is_finite()) {
        Ok(t)
    } else {
        Err(TensorError::NonFinite { op })
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape != b.shape {
        return Err(TensorError::ShapeMismatch {
            op,
            left: a.shape.clone(),
            right: b.shape.clone(),
        });
    }
    Ok(())
}

fn as_matrix<'t>(op: &'static str, t: &'t Tensor) -> Result<(usize, usize, &'t [f64])> {
    match t.shape.as_slice() {
        [r, c] => Ok((*r, *c, &t.data)),
        _ => Err(TensorError::BadShape {
            op,
            expected: "matrix",
            got: t.shape.clone(),
        }),
    }
}

fn as_vector<'t>(op: &'static str, t: &'t Tensor) -> Result<&'t [f64]> {
    match t.shape.as_slice() {
        [_] => Ok(&t.data),
        _ => Err(TensorError::BadShape {
            op,
            expected: "vector",
            got: t.shape.clone(),
        }),
    }
}

// ---- forward kernels ------------------------------------------------------
//
// These are shared by the tape's forward pass and by `Tape::replay`, which is
// what makes replay bit-identical.

pub(crate) fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    same_shape("add", a, b)?;
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect();
    finite_or("add", Tensor::from_parts(a.shape.clone(), data))
}

pub(crate) fn sub(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    same_shape("sub", a, b)?;
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect();
    finite_or("sub", Tensor::from_parts(a.shape.clone(), data))
}

pub(crate) fn mul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    same_shape("mul", a, b)?;
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
    finite_or("mul", Tensor::from_parts(a.shape.clone(), data))
}

/// Elementwise `mul * x + add`.
pub(crate) fn affine(x: &Tensor, mul: f64, add: f64) -> Result<Tensor> {
    let data = x.data.iter().map(|v| mul * v + add).collect();
    finite_or("affine", Tensor::from_parts(x.shape.clone(), data))
}

/// `out[i][j] = m[i][j] + v[j]` (vector broadcast along rows).
pub(crate) fn add_row_vec(m: &Tensor, v: &Tensor) -> Result<Tensor> {
    let (rows, cols, md) = as_matrix("add_row_vec", m)?;
    let vd = as_vector("add_row_vec", v)?;
    if vd.len() != cols {
        return Err(TensorError::ShapeMismatch {
            op: "add_row_vec",
            left: m.shape.clone(),
            right: v.shape.clone(),
        });
    }
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            data.push(md[i * cols + j] + vd[j]);
        }
    }
    finite_or("add_row_vec", Tensor::from_parts(m.shape.clone(), data))
}

/// `out[i][j] = m[i][j] + v[i]` (vector broadcast along columns).
pub(crate) fn add_col_vec(m: &Tensor, v: &Tensor) -> Result<Tensor> {
    let (rows, cols, md) = as_matrix("add_col_vec", m)?;
    let vd = as_vector("add_col_vec", v)?;
    if vd.len() != rows {
        return Err(TensorError::ShapeMismatch {
            op: "add_col_vec",
            left: m.shape.clone(),
            right: v.shape.clone(),
        });
    }
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            data.push(md[i * cols + j] + vd[i]);
        }
    }
    finite_or("add_col_vec", Tensor::from_parts(m.shape.clone(), data))
}

pub(crate) fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, ka, ad) = as_matrix("matmul", a)?;
    let (kb, n, bd) = as_matrix("matmul", b)?;
    if ka != kb {
        return Err(TensorError::ShapeMismatch {
            op: "matmul",
            left: a.shape.clone(),
            right: b.shape.clone(),
        });
    }
    let mut data = vec![0.0; m * n];
    for i in 0..m {
        for k in 0..ka {
            let aik = ad[i * ka + k];
            let brow = &bd[k * n..(k + 1) * n];
            let orow = &mut data[i * n..(i + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    finite_or("matmul", Tensor::from_parts(vec![m, n], data))
}

pub(crate) fn matvec(a: &Tensor, v: &Tensor) -> Result<Tensor> {
    let (m, k, ad) = as_matrix("matvec", a)?;
    let vd = as_vector("matvec", v)?;
    if vd.len() != k {
        return Err(TensorError::ShapeMismatch {
            op: "matvec",
            left: a.shape.clone(),
            right: v.shape.clone(),
        });
    }
    let mut data = Vec::with_capacity(m);
    for i in 0..m {
        let row = &ad[i * k..(i + 1) * k];
        data.push(row.iter().zip(vd).map(|(x, y)| x * y).sum());
    }
    finite_or("matvec", Tensor::from_parts(vec![m], data))
}

pub(crate) fn transpose(a: &Tensor) -> Result<Tensor> {
    let (rows, cols, ad) = as_matrix("transpose", a)?;
    let mut data = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            data[j * rows + i] = ad[i * cols + j];
        }
    }
    Ok(Tensor::from_parts(vec![cols, rows], data))
}

pub(crate) fn tanh(x: &Tensor) -> Result<Tensor> {
    let data = x.data.iter().map(|v| v.tanh()).collect();
    finite_or("tanh", Tensor::from_parts(x.shape.clone(), data))
}

pub(crate) fn sigmoid(x: &Tensor) -> Result<Tensor> {
    let data = x
        .data
        .iter()
        .map(|&v| {
            if v >= 0.0 {
                1.0 / (1.0 + (-v).exp())
            } else {
                let e = v.exp();
                e / (1.0 + e)
            }
        })
        .collect();
    finite_or("sigmoid", Tensor::from_parts(x.shape.clone(), data))
}

pub(crate) fn abs(x: &Tensor) -> Result<Tensor> {
    let data = x.data.iter().map(|v| v.abs()).collect();
    finite_or("abs", Tensor::from_parts(x.shape.clone(), data))
}

pub(crate) fn softmax_vec(x: &Tensor) -> Result<Tensor> {
    let xd = as_vector("softmax", x)?;
    Ok(Tensor::from_parts(x.shape.clone(), softmax_slice(xd)))
}

pub(crate) fn softmax_slice(xd: &[f64]) -> Vec<f64> {
    let max = xd.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xd.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

pub(crate) fn logsumexp_slice(xd: &[f64]) -> f64 {
    let max = xd.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + xd.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Log-sum-exp reduction. Vectors reduce to a scalar (axis 0); matrices
/// reduce over `axis` (0 = over rows, giving one value per column).
pub(crate) fn logsumexp(x: &Tensor, axis: usize) -> Result<Tensor> {
    match x.shape.as_slice() {
        [_n] => {
            if axis != 0 {
                return Err(TensorError::BadShape {
                    op: "logsumexp",
                    expected: "axis 0 for vectors",
                    got: x.shape.clone(),
                });
            }
            finite_or(
                "logsumexp",
                Tensor::from_parts(vec![], vec![logsumexp_slice(&x.data)]),
            )
        }
        [rows, cols] => {
            let (rows, cols) = (*rows, *cols);
            let out = match axis {
                0 => {
                    let mut data = Vec::with_capacity(cols);
                    for j in 0..cols {
                        let col: Vec<f64> = (0..rows).map(|i| x.data[i * cols + j]).collect();
                        data.push(logsumexp_slice(&col));
                    }
                    Tensor::from_parts(vec![cols], data)
                }
                1 => {
                    let mut data = Vec::with_capacity(rows);
                    for i in 0..rows {
                        data.push(logsumexp_slice(&x.data[i * cols..(i + 1) * cols]));
                    }
                    Tensor::from_parts(vec![rows], data)
                }
                _ => {
                    return Err(TensorError::BadShape {
                        op: "logsumexp",
                        expected: "axis 0 or 1",
                        got: x.shape.clone(),
                    })
                }
            };
            finite_or("logsumexp", out)
        }
        _ => Err(TensorError::BadShape {
            op: "logsumexp",
            expected: "vector or matrix",
            got: x.shape.clone(),
        }),
    }
}

pub(crate) fn l2_norm(xd: &[f64]) -> f64 {
    xd.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn l2_normalize(x: &Tensor) -> Result<Tensor> {
    let xd = as_vector("l2_normalize", x)?;
    let norm = l2_norm(xd);
    if norm == 0.0 {
        return Err(TensorError::ZeroNorm { op: "l2_normalize" });
    }
    let data = xd.iter().map(|v| v / norm).collect();
    finite_or("l2_normalize", Tensor::from_parts(x.shape.clone(), data))
}

/// Cosine distance `1 - cos_sim(u, v)`, in [0, 2].
pub(crate) fn cosine_distance(u: &Tensor, v: &Tensor) -> Result<Tensor> {
    let ud = as_vector("cosine_distance", u)?;
    let vd = as_vector("cosine_distance", v)?;
    if ud.len() != vd.len() {
        return Err(TensorError::ShapeMismatch {
            op: "cosine_distance",
            left: u.shape.clone(),
            right: v.shape.clone(),
        });
    }
    let nu = l2_norm(ud);
    let nv = l2_norm(vd);
    if nu == 0.0 || nv == 0.0 {
        return Err(TensorError::ZeroNorm {
            op: "cosine_distance",
        });
    }
    let dot: f64 = ud.iter().zip(vd).map(|(x, y)| x * y).sum();
    finite_or(
        "cosine_distance",
        Tensor::from_parts(vec![], vec![1.0 - dot / (nu * nv)]),
    )
}

pub(crate) fn dot(u: &Tensor, v: &Tensor) -> Result<Tensor> {
    let ud = as_vector("dot", u)?;
    let vd = as_vector("dot", v)?;
    if ud.len() != vd.len() {
        return Err(TensorError::ShapeMismatch {
            op: "dot",
            left: u.shape.clone(),
            right: v.shape.clone(),
        });
    }
    let s: f64 = ud.iter().zip(vd).map(|(x, y)| x * y).sum();
    finite_or("dot", Tensor::from_parts(vec![], vec![s]))
}

/// Fused softmax + cross-entropy over a logit vector: `lse(logits) - logits[target]`.
pub(crate) fn softmax_cross_entropy(logits: &Tensor, target: usize) -> Result<Tensor> {
    let xd = as_vector("softmax_cross_entropy", logits)?;
    if target >= xd.len() {
        return Err(TensorError::IndexOutOfBounds {
            op: "softmax_cross_entropy",
            index: target,
            shape: logits.shape.clone(),
        });
    }
    let loss = logsumexp_slice(xd) - xd[target];
    finite_or(
        "softmax_cross_entropy",
        Tensor::from_parts(vec![], vec![loss]),
    )
}

pub(crate) fn select_row(m: &Tensor, row: usize) -> Result<Tensor> {
    let (rows, cols, md) = as_matrix("select_row", m)?;
    if row >= rows {
        return Err(TensorError::IndexOutOfBounds {
            op: "select_row",
            index: row,
            shape: m.shape.clone(),
        });
    }
    Ok(Tensor::from_parts(
        vec![cols],
        md[row * cols..(row + 1) * cols].to_vec(),
    ))
}

/// Sum of the flat-indexed elements; duplicate indices count multiply.
pub(crate) fn gather_sum(x: &Tensor, indices: &[usize]) -> Result<Tensor> {
    for &i in indices {
        if i >= x.data.len() {
            return Err(TensorError::IndexOutOfBounds {
                op: "gather_sum",
                index: i,
                shape: x.shape.clone(),
            });
        }
    }
    let s: f64 = indices.iter().map(|&i| x.data[i]).sum();
    finite_or("gather_sum", Tensor::from_parts(vec![], vec![s]))
}

pub(crate) fn concat(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let ad = as_vector("concat", a)?;
    let bd = as_vector("concat", b)?;
    let mut data = Vec::with_capacity(ad.len() + bd.len());
    data.extend_from_slice(ad);
    data.extend_from_slice(bd);
    Ok(Tensor::from_parts(vec![ad.len() + bd.len()], data))
}

pub(crate) fn stack_rows(rows: &[&Tensor]) -> Result<Tensor> {
    if rows.is_empty() {
        return Err(TensorError::Invalid("stack_rows of zero rows".into()));
    }
    let cols = as_vector("stack_rows", rows[0])?.len();
    let mut data = Vec::with_capacity(rows.len() * cols);
    for r in rows {
        let rd = as_vector("stack_rows", r)?;
        if rd.len() != cols {
            return Err(TensorError::ShapeMismatch {
                op: "stack_rows",
                left: vec![cols],
                right: r.shape.clone(),
            });
        }
        data.extend_from_slice(rd);
    }
    Ok(Tensor::from_parts(vec![rows.len(), cols], data))
}
