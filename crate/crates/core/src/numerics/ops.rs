//! Built-in differentiable operations.

use ndarray::{concatenate, Axis};

use super::autodiff::Op;
use super::tensor::{reshape, Matrix};
use crate::error::{QuarkError, Result};

fn same_shape(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(QuarkError::Shape {
            op,
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    Ok(())
}

/// Dense matrix product with an explicit shape check.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.ncols() != b.nrows() {
        return Err(QuarkError::Shape {
            op: "matmul",
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    Ok(a.dot(b))
}

pub fn relu(a: &Matrix) -> Matrix {
    a.mapv(|v| v.max(0.0))
}

/// Divide each row by its sum; rows summing to zero stay zero.
pub fn row_normalize(a: &Matrix) -> Matrix {
    let mut out = a.clone();
    for mut row in out.rows_mut() {
        let s: f64 = row.sum();
        if s != 0.0 {
            row.mapv_inplace(|v| v / s);
        } else {
            row.fill(0.0);
        }
    }
    out
}

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub struct MatMul;

impl Op for MatMul {
    fn name(&self) -> &'static str {
        "matmul"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        matmul(inputs[0], inputs[1])
    }

    fn backward(&self, inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        vec![grad.dot(&inputs[1].t()), inputs[0].t().dot(grad)]
    }
}

pub struct Transpose;

impl Op for Transpose {
    fn name(&self) -> &'static str {
        "transpose"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        Ok(inputs[0].t().as_standard_layout().into_owned())
    }

    fn backward(&self, _inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        vec![grad.t().as_standard_layout().into_owned()]
    }
}

pub struct Add;

impl Op for Add {
    fn name(&self) -> &'static str {
        "add"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        same_shape("add", inputs[0], inputs[1])?;
        Ok(inputs[0] + inputs[1])
    }

    fn backward(&self, _inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        vec![grad.clone(), grad.clone()]
    }
}

pub struct Sub;

impl Op for Sub {
    fn name(&self) -> &'static str {
        "sub"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        same_shape("sub", inputs[0], inputs[1])?;
        Ok(inputs[0] - inputs[1])
    }

    fn backward(&self, _inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        vec![grad.clone(), -grad]
    }
}

/// Elementwise (Hadamard) product.
pub struct Mul;

impl Op for Mul {
    fn name(&self) -> &'static str {
        "mul"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        same_shape("mul", inputs[0], inputs[1])?;
        Ok(inputs[0] * inputs[1])
    }

    fn backward(&self, inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        vec![grad * inputs[1], grad * inputs[0]]
    }
}

pub struct Scale(pub f64);

impl Op for Scale {
    fn name(&self) -> &'static str {
        "scale"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        Ok(inputs[0] * self.0)
    }

    fn backward(&self, _inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        vec![grad * self.0]
    }
}

/// `max(0, v)`; the subgradient at exactly zero is zero.
pub struct Relu;

impl Op for Relu {
    fn name(&self) -> &'static str {
        "relu"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        Ok(relu(inputs[0]))
    }

    fn backward(&self, inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        let mut g = grad.clone();
        g.zip_mut_with(inputs[0], |g, &x| {
            if x <= 0.0 {
                *g = 0.0
            }
        });
        vec![g]
    }
}

pub struct Sum;

impl Op for Sum {
    fn name(&self) -> &'static str {
        "sum"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        Ok(Matrix::from_elem((1, 1), inputs[0].sum()))
    }

    fn backward(&self, inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        vec![Matrix::from_elem(inputs[0].dim(), grad[[0, 0]])]
    }
}

pub struct Reshape {
    pub rows: usize,
    pub cols: usize,
}

impl Op for Reshape {
    fn name(&self) -> &'static str {
        "reshape"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        reshape(inputs[0], self.rows, self.cols)
    }

    fn backward(&self, inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        let (r, c) = inputs[0].dim();
        vec![reshape(grad, r, c).expect("same element count")]
    }
}

/// Concatenate along the feature (column) axis.
pub struct ConcatCols;

impl Op for ConcatCols {
    fn name(&self) -> &'static str {
        "concat_cols"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        let views: Vec<_> = inputs.iter().map(|m| m.view()).collect();
        concatenate(Axis(1), &views).map_err(|_| QuarkError::Shape {
            op: "concat_cols",
            left: inputs[0].shape().to_vec(),
            right: inputs.iter().map(|m| m.nrows()).collect(),
        })
    }

    fn backward(&self, inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        let mut start = 0;
        inputs
            .iter()
            .map(|m| {
                let w = m.ncols();
                let part = grad.slice(ndarray::s![.., start..start + w]).to_owned();
                start += w;
                part
            })
            .collect()
    }
}

/// Stack along the row axis.
pub struct ConcatRows;

impl Op for ConcatRows {
    fn name(&self) -> &'static str {
        "concat_rows"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        let views: Vec<_> = inputs.iter().map(|m| m.view()).collect();
        concatenate(Axis(0), &views).map_err(|_| QuarkError::Shape {
            op: "concat_rows",
            left: inputs[0].shape().to_vec(),
            right: inputs.iter().map(|m| m.ncols()).collect(),
        })
    }

    fn backward(&self, inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        let mut start = 0;
        inputs
            .iter()
            .map(|m| {
                let h = m.nrows();
                let part = grad.slice(ndarray::s![start..start + h, ..]).to_owned();
                start += h;
                part
            })
            .collect()
    }
}

/// Row-sum normalization with a zero-row guard.
pub struct RowNormalize;

impl Op for RowNormalize {
    fn name(&self) -> &'static str {
        "row_normalize"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        Ok(row_normalize(inputs[0]))
    }

    fn backward(&self, inputs: &[&Matrix], output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        // y = a / s, s = sum(a)  =>  da_k = (g_k - sum_j g_j y_j) / s
        let a = inputs[0];
        let mut out = Matrix::zeros(a.dim());
        for (i, mut row) in out.rows_mut().into_iter().enumerate() {
            let s: f64 = a.row(i).sum();
            if s == 0.0 {
                continue;
            }
            let gy: f64 = grad.row(i).dot(&output.row(i));
            for (k, v) in row.iter_mut().enumerate() {
                *v = (grad[[i, k]] - gy) / s;
            }
        }
        vec![out]
    }
}

pub struct Softplus;

impl Op for Softplus {
    fn name(&self) -> &'static str {
        "softplus"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        Ok(inputs[0].mapv(softplus))
    }

    fn backward(&self, inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        let mut g = grad.clone();
        g.zip_mut_with(inputs[0], |g, &x| *g *= sigmoid(x));
        vec![g]
    }
}

/// `sqrt(sum(a^2))`. The gradient at the origin is taken as zero.
pub struct FrobeniusNorm;

impl Op for FrobeniusNorm {
    fn name(&self) -> &'static str {
        "frobenius_norm"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        Ok(Matrix::from_elem((1, 1), super::tensor::frobenius_norm(inputs[0])))
    }

    fn backward(&self, inputs: &[&Matrix], output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        let n = output[[0, 0]];
        if n == 0.0 {
            return vec![Matrix::zeros(inputs[0].dim())];
        }
        vec![inputs[0] * (grad[[0, 0]] / n)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::autodiff::ComputeGraph;
    use crate::numerics::gradcheck::{central_differences, relative_error};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn matmul_examples() {
        let id = Matrix::eye(2);
        let m = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(matmul(&id, &m).unwrap(), m);
        assert_eq!(matmul(&array![[1.0, 2.0]], &array![[3.0], [4.0]]).unwrap(), array![[11.0]]);
        let z = Matrix::zeros((2, 2));
        assert_eq!(matmul(&z, &random(&mut ChaCha8Rng::seed_from_u64(1), 2, 5)).unwrap(), Matrix::zeros((2, 5)));
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let err = matmul(&Matrix::zeros((2, 3)), &Matrix::zeros((2, 3))).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]"), "{msg}");
        match err {
            QuarkError::Shape { left, right, .. } => {
                assert_eq!(left, vec![2, 3]);
                assert_eq!(right, vec![2, 3]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn relu_examples() {
        assert_eq!(relu(&array![[-1.0, 0.0, 2.0]]), array![[0.0, 0.0, 2.0]]);
        let pos = array![[0.1, 3.0]];
        assert_eq!(relu(&pos), pos);
        assert_eq!(relu(&array![[-0.1, -3.0]]), array![[0.0, 0.0]]);
    }

    #[test]
    fn relu_gradient_zero_at_origin() {
        let mut g = ComputeGraph::new();
        let x = g.leaf(array![[-1.0, 0.0, 2.0]], true);
        let y = g.relu(x).unwrap();
        let loss = g.sum(y).unwrap();
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap(), &array![[0.0, 0.0, 1.0]]);
    }

    #[test]
    fn row_normalize_examples() {
        assert_eq!(row_normalize(&array![[1.0, 3.0], [0.0, 0.0]]), array![[0.25, 0.75], [0.0, 0.0]]);
        let onehot = array![[0.0, 1.0, 0.0]];
        assert_eq!(row_normalize(&onehot), onehot);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    // Composed loss exercising every built-in op, checked against central
    // differences at random inputs in [-1, 1].
    fn composed(params: &[Matrix]) -> (ComputeGraph, Vec<super::super::autodiff::Var>, super::super::autodiff::Var) {
        let mut g = ComputeGraph::new();
        let a = g.leaf(params[0].clone(), true);
        let b = g.leaf(params[1].clone(), true);
        let c = g.leaf(params[2].clone(), true);
        let ab = g.matmul(a, b).unwrap(); // 3x4
        let r = g.relu(ab).unwrap();
        let rt = g.transpose(r).unwrap(); // 4x3
        let sq = g.mul(rt, rt).unwrap();
        let norm = g.row_normalize(sq).unwrap();
        let cat = g.concat_cols(&[norm, c]).unwrap(); // 4x5
        let rs = g.reshape(cat, 2, 10).unwrap();
        let stacked = g.concat_rows(&[rs, rs]).unwrap();
        let sp = g.softplus(stacked).unwrap();
        let sc = g.scale(sp, 0.7).unwrap();
        let s = g.sum(sc).unwrap();
        let f = g.frobenius_norm(cat).unwrap();
        let d = g.sub(s, f).unwrap();
        let loss = g.add(d, f).unwrap();
        let loss2 = g.mul(loss, loss).unwrap();
        (g, vec![a, b, c], loss2)
    }

    #[test]
    fn composed_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let params = vec![random(&mut rng, 3, 2), random(&mut rng, 2, 4), random(&mut rng, 4, 2)];
            let (g, vars, loss) = composed(&params);
            let grads = g.backward(loss).unwrap();
            let fd = central_differences(&params, 1e-5, |p| {
                let (g, _, l) = composed(p);
                g.scalar(l)
            });
            for (v, numeric) in vars.iter().zip(&fd) {
                let err = relative_error(grads.get(*v).unwrap(), numeric);
                assert!(err < 1e-4, "relative error {err}");
            }
        }
    }
}
