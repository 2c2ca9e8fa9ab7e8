//! Real Hilbert-space machinery for segment states.
//!
//! Each segment owns a basis matrix `B` whose rows `b_j` are latent
//! factors. A unit state collapses onto `b_j` with probability
//! `(b_j · x)²`; the `c` most and `c` least likely factors define the
//! "event occurs" and "event does not occur" operators
//! `o = Σ |b_j⟩⟨b_j|`. Interference between a past and a future event is
//! `η = 2 ⟨x| o_past_not · o_future · o_future · o_past |x⟩`.
//!
//! Everything here is real-valued, so conjugate transposes are plain
//! transposes. Index sets are 0-based.

use ndarray::{Array1, ArrayView1};

use crate::error::{QuarkError, Result};
use crate::numerics::{Matrix, Op};

/// Norms below this are treated as zero by [`to_unit_state`].
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct UnitState {
    pub vector: Array1<f64>,
    /// The input had (near) zero norm and carries no signal.
    pub degenerate: bool,
}

/// `v / ‖v‖₂`, or the zero vector flagged degenerate.
pub fn to_unit_state(v: ArrayView1<'_, f64>) -> UnitState {
    let norm = v.dot(&v).sqrt();
    if !(norm >= DEGENERATE_NORM) {
        return UnitState {
            vector: Array1::zeros(v.len()),
            degenerate: true,
        };
    }
    UnitState {
        vector: v.mapv(|x| x / norm),
        degenerate: false,
    }
}

/// Unit-revise every row of a `|Φ| × Λ` segment matrix. Degenerate rows
/// become zero; their flags are returned alongside.
pub fn unit_rows(segments: &Matrix) -> (Matrix, Vec<bool>) {
    let mut out = Matrix::zeros(segments.dim());
    let mut flags = Vec::with_capacity(segments.nrows());
    for (j, row) in segments.rows().into_iter().enumerate() {
        let u = to_unit_state(row);
        out.row_mut(j).assign(&u.vector);
        flags.push(u.degenerate);
    }
    (out, flags)
}

/// Basis of one segment's space, rows are basis vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumSpace {
    pub basis: Matrix,
    /// 1-based `(m, i)` of the segment this space belongs to.
    pub event: (usize, usize),
}

impl QuantumSpace {
    pub fn new(basis: Matrix, event: (usize, usize)) -> Self {
        Self { basis, event }
    }

    pub fn size(&self) -> usize {
        self.basis.nrows()
    }

    pub fn collapse(&self, state: ArrayView1<'_, f64>, c: usize) -> Result<CollapseResult> {
        collapse_probabilities(state, &self.basis, c)
    }

    pub fn orthogonality_penalty(&self) -> f64 {
        orthogonality_penalty(&self.basis)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollapseResult {
    pub probabilities: Vec<f64>,
    /// Indices of the `c` most probable factors.
    pub top: Vec<usize>,
    /// Indices of the `c` least probable factors, disjoint from `top`.
    pub bottom: Vec<usize>,
}

/// `P_j = (b_j · state)²` for every basis row, then [`select_indices`].
pub fn collapse_probabilities(state: ArrayView1<'_, f64>, basis: &Matrix, c: usize) -> Result<CollapseResult> {
    if basis.ncols() != state.len() {
        return Err(QuarkError::Shape {
            op: "collapse_probabilities",
            left: basis.shape().to_vec(),
            right: vec![state.len()],
        });
    }
    if 2 * c > basis.nrows() {
        return Err(QuarkError::config(format!(
            "selection size c={c} needs at least {} basis vectors, space has {}",
            2 * c,
            basis.nrows()
        )));
    }
    let probabilities: Vec<f64> = basis
        .rows()
        .into_iter()
        .map(|b| {
            let amp = b.dot(&state);
            amp * amp
        })
        .collect();
    let (top, bottom) = select_indices(&probabilities, c);
    Ok(CollapseResult {
        probabilities,
        top,
        bottom,
    })
}

/// The `c` largest and `c` smallest entries of `p`. Ties go to the lowest
/// index; the bottom set is drawn from indices not already in the top set.
///
/// Requires `p.len() >= 2c`.
pub fn select_indices(p: &[f64], c: usize) -> (Vec<usize>, Vec<usize>) {
    assert!(2 * c <= p.len(), "select_indices needs |P| >= 2c");
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    let top: Vec<usize> = order[..c].to_vec();

    let mut rest: Vec<usize> = (0..p.len()).filter(|j| !top.contains(j)).collect();
    rest.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let bottom = rest[..c].to_vec();
    (top, bottom)
}

/// `Σ_{j ∈ indices} b_j b_jᵀ` as a `Λ × Λ` projector.
#[derive(Clone, Debug, PartialEq)]
pub struct EventOperator {
    pub matrix: Matrix,
}

impl EventOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: Matrix::zeros((dim, dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: Matrix::eye(dim),
        }
    }

    pub fn apply(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        self.matrix.dot(&v)
    }
}

/// Sum of outer products of the selected rows. Entry `(r, c)` is
/// accumulated in index order, so the result is exactly symmetric.
pub fn event_operator(basis: &Matrix, indices: &[usize]) -> EventOperator {
    let dim = basis.ncols();
    let mut m = Matrix::zeros((dim, dim));
    for &j in indices {
        let b = basis.row(j);
        for r in 0..dim {
            for c in 0..dim {
                m[[r, c]] += b[r] * b[c];
            }
        }
    }
    EventOperator { matrix: m }
}

/// Mixed state via the summed operator: `(Σ_j b_j b_jᵀ) · state`.
pub fn project_mixed_state(state: ArrayView1<'_, f64>, basis: &Matrix, indices: &[usize]) -> Array1<f64> {
    if indices.is_empty() {
        log::warn!("mixed-state projection with empty index set");
        return Array1::zeros(state.len());
    }
    event_operator(basis, indices).apply(state)
}

/// Mixed state term by term: `Σ_j b_j (b_j · state)`.
pub fn project_mixed_state_termwise(state: ArrayView1<'_, f64>, basis: &Matrix, indices: &[usize]) -> Array1<f64> {
    let mut out = Array1::zeros(state.len());
    for &j in indices {
        let b = basis.row(j);
        out.scaled_add(b.dot(&state), &b);
    }
    out
}

/// `η = 2 · stateᵀ · o_past_not · o_future · o_future · o_past · state`.
pub fn interference_value(
    state: ArrayView1<'_, f64>,
    o_past: &EventOperator,
    o_past_not: &EventOperator,
    o_future: &EventOperator,
) -> f64 {
    let v = o_past.apply(state);
    let v = o_future.apply(v.view());
    let v = o_future.apply(v.view());
    let v = o_past_not.apply(v.view());
    2.0 * state.dot(&v)
}

/// `‖o · state‖²`.
pub fn event_probability(state: ArrayView1<'_, f64>, op: &EventOperator) -> f64 {
    let v = op.apply(state);
    v.dot(&v)
}

/// Probability of the future event under the classical two-path
/// assumption: `‖o_f o_p x‖² + ‖o_f o_p̄ x‖²`.
pub fn classical_probability(
    state: ArrayView1<'_, f64>,
    o_past: &EventOperator,
    o_past_not: &EventOperator,
    o_future: &EventOperator,
) -> f64 {
    let through = o_future.apply(o_past.apply(state).view());
    let around = o_future.apply(o_past_not.apply(state).view());
    through.dot(&through) + around.dot(&around)
}

/// `‖B Bᵀ − I‖_F`.
pub fn orthogonality_penalty(basis: &Matrix) -> f64 {
    let gram = basis.dot(&basis.t());
    let mut sum = 0.0;
    for ((r, c), v) in gram.indexed_iter() {
        let d = if r == c { v - 1.0 } else { *v };
        sum += d * d;
    }
    sum.sqrt()
}

// Differentiable kernels used by the model. Inputs are the per-segment
// basis matrices; states and selections are constants of the forward pass.

/// Gradient of `f(o)` w.r.t. the basis rows feeding `o = Σ b_r b_rᵀ`:
/// `df/db_r = (G + Gᵀ) b_r` where `G = df/do`.
fn operator_grad_to_basis(grad_op: &Matrix, basis: &Matrix, indices: &[usize], out: &mut Matrix) {
    let sym = grad_op + &grad_op.t();
    for &r in indices {
        let g = sym.dot(&basis.row(r));
        let mut row = out.row_mut(r);
        row += &g;
    }
}

/// Row `j` of the output is `(Σ_{r ∈ sel_j} b_r b_rᵀ) s_j` using segment
/// `j`'s basis.
pub struct MixedStatesOp {
    pub states: Matrix,
    pub selections: Vec<Vec<usize>>,
}

impl Op for MixedStatesOp {
    fn name(&self) -> &'static str {
        "mixed_states"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        check_bases("mixed_states", inputs, &self.states, self.selections.len())?;
        let mut out = Matrix::zeros(self.states.dim());
        for (j, basis) in inputs.iter().enumerate() {
            let x = project_mixed_state(self.states.row(j), basis, &self.selections[j]);
            out.row_mut(j).assign(&x);
        }
        Ok(out)
    }

    fn backward(&self, inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        inputs
            .iter()
            .enumerate()
            .map(|(j, basis)| {
                let s = self.states.row(j);
                let g = grad.row(j);
                let mut out = Matrix::zeros(basis.dim());
                for &r in &self.selections[j] {
                    let b = basis.row(r);
                    // d(gᵀ b bᵀ s)/db = (b·s) g + (b·g) s
                    let mut row = out.row_mut(r);
                    row.scaled_add(b.dot(&s), &g);
                    row.scaled_add(b.dot(&g), &s);
                }
                out
            })
            .collect()
    }
}

/// `ã(j, k) = 2 · s_jᵀ · ō_k · o_j · o_j · o_k · s_j`, where `o` is built
/// from a segment's top selection and `ō` from its bottom selection.
pub struct InterferenceOp {
    pub states: Matrix,
    pub top: Vec<Vec<usize>>,
    pub bottom: Vec<Vec<usize>>,
}

impl InterferenceOp {
    fn operators(&self, inputs: &[&Matrix]) -> (Vec<Matrix>, Vec<Matrix>) {
        let occur = inputs
            .iter()
            .zip(&self.top)
            .map(|(b, idx)| event_operator(b, idx).matrix)
            .collect();
        let absent = inputs
            .iter()
            .zip(&self.bottom)
            .map(|(b, idx)| event_operator(b, idx).matrix)
            .collect();
        (occur, absent)
    }
}

impl Op for InterferenceOp {
    fn name(&self) -> &'static str {
        "interference"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        check_bases("interference", inputs, &self.states, self.top.len())?;
        if self.bottom.len() != self.top.len() {
            return Err(QuarkError::contract("interference: missing collapse result"));
        }
        let n = inputs.len();
        let (occur, absent) = self.operators(inputs);
        let squared: Vec<Matrix> = occur.iter().map(|o| o.dot(o)).collect();
        let mut out = Matrix::zeros((n, n));
        for j in 0..n {
            let s = self.states.row(j);
            for k in 0..n {
                let a = occur[k].dot(&s);
                let b = absent[k].dot(&s);
                out[[j, k]] = 2.0 * b.dot(&squared[j].dot(&a));
            }
        }
        Ok(out)
    }

    fn backward(&self, inputs: &[&Matrix], _output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        let n = inputs.len();
        let dim = self.states.ncols();
        let (occur, absent) = self.operators(inputs);
        let squared: Vec<Matrix> = occur.iter().map(|o| o.dot(o)).collect();
        let mut g_occur = vec![Matrix::zeros((dim, dim)); n];
        let mut g_absent = vec![Matrix::zeros((dim, dim)); n];

        for j in 0..n {
            let s = self.states.row(j);
            for k in 0..n {
                let gjk = grad[[j, k]];
                if gjk == 0.0 {
                    continue;
                }
                let w = 2.0 * gjk;
                let a = occur[k].dot(&s);
                let b = absent[k].dot(&s);
                let oa = occur[j].dot(&a);
                let ob = occur[j].dot(&b);
                let ga = squared[j].dot(&a);
                let gb = squared[j].dot(&b);
                // w.r.t. o_j (appears twice): b (o_j a)ᵀ + (o_j b) aᵀ
                add_outer(&mut g_occur[j], w, &b, &oa);
                add_outer(&mut g_occur[j], w, &ob, &a);
                // w.r.t. o_k: (G_j b) sᵀ
                add_outer(&mut g_occur[k], w, &gb, &s.to_owned());
                // w.r.t. ō_k: s (G_j a)ᵀ
                add_outer(&mut g_absent[k], w, &s.to_owned(), &ga);
            }
        }

        inputs
            .iter()
            .enumerate()
            .map(|(j, basis)| {
                let mut out = Matrix::zeros(basis.dim());
                operator_grad_to_basis(&g_occur[j], basis, &self.top[j], &mut out);
                operator_grad_to_basis(&g_absent[j], basis, &self.bottom[j], &mut out);
                out
            })
            .collect()
    }
}

fn add_outer(target: &mut Matrix, w: f64, u: &Array1<f64>, v: &Array1<f64>) {
    for (r, &ur) in u.iter().enumerate() {
        if ur == 0.0 {
            continue;
        }
        let mut row = target.row_mut(r);
        row.scaled_add(w * ur, v);
    }
}

fn check_bases(op: &'static str, inputs: &[&Matrix], states: &Matrix, selections: usize) -> Result<()> {
    if inputs.len() != states.nrows() || selections != states.nrows() {
        return Err(QuarkError::contract(format!(
            "{op}: {} bases and {selections} selections for {} segments",
            inputs.len(),
            states.nrows()
        )));
    }
    for b in inputs {
        if b.ncols() != states.ncols() {
            return Err(QuarkError::Shape {
                op,
                left: b.shape().to_vec(),
                right: states.shape().to_vec(),
            });
        }
    }
    Ok(())
}

/// `‖B Bᵀ − I‖_F` as a graph operation on one basis.
pub struct OrthogonalityPenaltyOp;

impl Op for OrthogonalityPenaltyOp {
    fn name(&self) -> &'static str {
        "orthogonality_penalty"
    }

    fn forward(&self, inputs: &[&Matrix]) -> Result<Matrix> {
        Ok(Matrix::from_elem((1, 1), orthogonality_penalty(inputs[0])))
    }

    fn backward(&self, inputs: &[&Matrix], output: &Matrix, grad: &Matrix) -> Vec<Matrix> {
        // f = ‖E‖, E = B Bᵀ − I symmetric  =>  df/dB = 2 E B / f
        let b = inputs[0];
        let f = output[[0, 0]];
        if f == 0.0 {
            return vec![Matrix::zeros(b.dim())];
        }
        let e = b.dot(&b.t()) - Matrix::eye(b.nrows());
        vec![e.dot(b) * (2.0 * grad[[0, 0]] / f)]
    }
}
