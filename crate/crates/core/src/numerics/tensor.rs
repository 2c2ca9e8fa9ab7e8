use ndarray::Array2;

use crate::error::{QuarkError, Result};

/// Dense row-major matrix of 64-bit floats. Vectors are `1 × n` rows.
pub type Matrix = Array2<f64>;

/// Reshape preserving row-major element order.
pub fn reshape(m: &Matrix, rows: usize, cols: usize) -> Result<Matrix> {
    if rows * cols != m.len() {
        return Err(QuarkError::Shape {
            op: "reshape",
            left: m.shape().to_vec(),
            right: vec![rows, cols],
        });
    }
    let values: Vec<f64> = m.iter().copied().collect();
    Ok(Matrix::from_shape_vec((rows, cols), values).expect("element count checked"))
}

pub fn row_vector(values: &[f64]) -> Matrix {
    Matrix::from_shape_vec((1, values.len()), values.to_vec()).expect("1 x n")
}

pub fn frobenius_norm(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// A value with an optional gradient buffer of identical shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    value: Matrix,
    requires_grad: bool,
    grad: Option<Matrix>,
}

impl Tensor {
    pub fn new(value: Matrix, requires_grad: bool) -> Self {
        Self {
            value,
            requires_grad,
            grad: None,
        }
    }

    pub fn zeros(rows: usize, cols: usize, requires_grad: bool) -> Self {
        Self::new(Matrix::zeros((rows, cols)), requires_grad)
    }

    pub fn from_vec(shape: (usize, usize), values: Vec<f64>, requires_grad: bool) -> Result<Self> {
        let len = values.len();
        let value = Matrix::from_shape_vec(shape, values).map_err(|_| QuarkError::Shape {
            op: "tensor",
            left: vec![shape.0, shape.1],
            right: vec![len],
        })?;
        Ok(Self::new(value, requires_grad))
    }

    pub fn shape(&self) -> [usize; 2] {
        let (r, c) = self.value.dim();
        [r, c]
    }

    pub fn value(&self) -> &Matrix {
        &self.value
    }

    pub fn value_mut(&mut self) -> &mut Matrix {
        &mut self.value
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn grad(&self) -> Option<&Matrix> {
        self.grad.as_ref()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.fill(0.0);
        }
    }

    /// Add `g` into the gradient buffer, allocating it on first use.
    pub fn accumulate_grad(&mut self, g: &Matrix) -> Result<()> {
        if g.dim() != self.value.dim() {
            return Err(QuarkError::Shape {
                op: "accumulate_grad",
                left: self.value.shape().to_vec(),
                right: g.shape().to_vec(),
            });
        }
        match self.grad.as_mut() {
            Some(buf) => *buf += g,
            None => self.grad = Some(g.clone()),
        }
        Ok(())
    }

    pub fn set_grad(&mut self, g: Option<Matrix>) {
        self.grad = g;
    }

    pub fn reshape(&self, rows: usize, cols: usize) -> Result<Tensor> {
        Ok(Tensor {
            value: reshape(&self.value, rows, cols)?,
            requires_grad: self.requires_grad,
            grad: self
                .grad
                .as_ref()
                .map(|g| reshape(g, rows, cols))
                .transpose()?,
        })
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.value)
    }
}

/// A named learnable tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub tensor: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Matrix) -> Self {
        Self {
            name: name.into(),
            tensor: Tensor::new(value, true),
        }
    }

    pub fn value(&self) -> &Matrix {
        self.tensor.value()
    }
}
