//! Reverse-mode differentiation over dense matrices.
//!
//! A [`ComputeGraph`] records every operation applied during a forward
//! pass. Nodes are appended in evaluation order, so the node list is
//! already a topological order and [`ComputeGraph::backward`] walks it
//! in reverse, visiting each node once. Gradients from fan-out are summed.
//!
//! Operations implement [`Op`]; modules outside `numerics` register fused
//! operations (the quantum projection and interference kernels) the same
//! way the built-in ones are registered.

use std::fmt;

use super::ops;
use super::tensor::Matrix;
use crate::error::{QuarkError, Result};

/// Handle to a node in a [`ComputeGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A differentiable operation.
pub trait Op {
    fn name(&self) -> &'static str;

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix>;

    /// Gradient of the loss with respect to each input, given the
    /// gradient with respect to the output.
    fn backward(&self, inputs: &[&Matrix], output: &Matrix, grad_output: &Matrix) -> Vec<Matrix>;
}

struct Node {
    value: Matrix,
    inputs: Vec<Var>,
    op: Option<Box<dyn Op>>,
    requires_grad: bool,
}

#[derive(Default)]
pub struct ComputeGraph {
    nodes: Vec<Node>,
}

impl fmt::Debug for ComputeGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComputeGraph")
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

impl ComputeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Matrix, requires_grad: bool) -> Var {
        self.push(value, Vec::new(), None, requires_grad)
    }

    pub fn constant(&mut self, value: Matrix) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// Scalar value of a `1 × 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Matrix, inputs: Vec<Var>, op: Option<Box<dyn Op>>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            inputs,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Evaluate `op` on `inputs` and record it.
    pub fn apply(&mut self, op: Box<dyn Op>, inputs: &[Var]) -> Result<Var> {
        let value = {
            let values: Vec<&Matrix> = inputs.iter().map(|v| &self.nodes[v.0].value).collect();
            op.forward(&values)?
        };
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        Ok(self.push(value, inputs.to_vec(), Some(op), requires_grad))
    }

    /// Propagate gradients from a scalar `loss` back to every node that
    /// requires them.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let out = &self.nodes[loss.0].value;
        if out.dim() != (1, 1) {
            return Err(QuarkError::contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                out.shape()
            )));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Matrix::from_elem((1, 1), 1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(op) = node.op.as_ref() else { continue };
            let Some(grad_out) = grads[idx].take() else { continue };
            let inputs: Vec<&Matrix> = node.inputs.iter().map(|v| &self.nodes[v.0].value).collect();
            let input_grads = op.backward(&inputs, &node.value, &grad_out);
            debug_assert_eq!(input_grads.len(), node.inputs.len(), "{}", op.name());
            for (input, g) in node.inputs.iter().zip(input_grads) {
                if !self.nodes[input.0].requires_grad {
                    continue;
                }
                debug_assert_eq!(g.dim(), self.nodes[input.0].value.dim(), "{}", op.name());
                match grads[input.0].as_mut() {
                    Some(acc) => *acc += &g,
                    None => grads[input.0] = Some(g),
                }
            }
        }
        Ok(Gradients { grads })
    }

    // Built-in operations.

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Box::new(ops::MatMul), &[a, b])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        self.apply(Box::new(ops::Transpose), &[a])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Box::new(ops::Add), &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Box::new(ops::Sub), &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Box::new(ops::Mul), &[a, b])
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        self.apply(Box::new(ops::Scale(factor)), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.apply(Box::new(ops::Relu), &[a])
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.apply(Box::new(ops::Sum), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).len() as f64;
        let s = self.sum(a)?;
        self.scale(s, 1.0 / n)
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var> {
        self.apply(Box::new(ops::Reshape { rows, cols }), &[a])
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        self.apply(Box::new(ops::ConcatCols), parts)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        self.apply(Box::new(ops::ConcatRows), parts)
    }

    pub fn row_normalize(&mut self, a: Var) -> Result<Var> {
        self.apply(Box::new(ops::RowNormalize), &[a])
    }

    /// `log(1 + e^x)` elementwise.
    pub fn softplus(&mut self, a: Var) -> Result<Var> {
        self.apply(Box::new(ops::Softplus), &[a])
    }

    pub fn frobenius_norm(&mut self, a: Var) -> Result<Var> {
        self.apply(Box::new(ops::FrobeniusNorm), &[a])
    }
}

/// Per-node gradients produced by [`ComputeGraph::backward`]. Interior
/// buffers are released during the sweep; leaves keep theirs.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Matrix> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}
