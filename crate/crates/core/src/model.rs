//! The forward pass: segments → quantum spaces → adjacency pair → two
//! approximate-GCN branches → fusion head.
//!
//! Every stage after preprocessing is recorded on a [`ComputeGraph`] so
//! the training objective can be differentiated with respect to every
//! learnable tensor. Collapse index selection and the adjacency keep
//! masks are recomputed on each pass and treated as constants.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QuarkError, Result, StageExt};
use crate::graph::{keep_mask, AdjacencyPair};
use crate::numerics::ops::{matmul, relu};
use crate::numerics::tensor::frobenius_norm;
use crate::numerics::{xavier_uniform, ComputeGraph, Matrix, Parameter, Var};
use crate::preprocess::{mean_normalize, segment_count, sliding_window, segment_coords, EegRecording, SegmentSet};
use crate::quantum::{collapse_probabilities, unit_rows, CollapseResult, InterferenceOp, MixedStatesOp};

/// Shape and hyperparameters of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    /// Electrodes `M`.
    pub electrodes: usize,
    /// Samples per electrode `N`.
    pub samples: usize,
    /// Window width `Λ`.
    pub window: usize,
    /// Sliding step `Δ`.
    pub step: usize,
    /// Basis vectors per space `|B|`.
    pub basis_size: usize,
    /// Factors selected on each side of the collapse `c`.
    pub select: usize,
    /// Continuity filter ratio `α`.
    pub alpha: f64,
    /// Interference filter ratio `β`.
    pub beta: f64,
    /// GCN depth `D`.
    pub depth: usize,
    /// Teleport ratio `ξ`.
    pub teleport: f64,
    /// Fusion hidden width.
    pub hidden: usize,
    /// Item embedding width `E`.
    pub embedding: usize,
    /// Also concatenate the depth-0 input block before the layer outputs.
    pub include_initial_block: bool,
    pub use_continuity: bool,
    pub use_interference: bool,
    /// Enforce `i > w` when filtering adjacency entries.
    pub temporal_mask: bool,
}

impl ModelConfig {
    /// Hyperparameters used for normally distributed class counts.
    pub fn normal() -> Self {
        Self {
            electrodes: 5,
            samples: 360,
            window: 15,
            step: 25,
            basis_size: 15,
            select: 2,
            alpha: 0.8,
            beta: 0.4,
            depth: 5,
            teleport: 0.3,
            hidden: 128,
            embedding: 64,
            include_initial_block: false,
            use_continuity: true,
            use_interference: true,
            temporal_mask: true,
        }
    }

    /// Hyperparameters used for long-tailed class counts.
    pub fn long_tail() -> Self {
        Self {
            window: 10,
            step: 20,
            basis_size: 10,
            alpha: 0.9,
            beta: 0.7,
            ..Self::normal()
        }
    }

    /// Small configuration for gradient checks: one electrode, three
    /// segments of width four.
    pub fn toy() -> Self {
        Self {
            electrodes: 1,
            samples: 12,
            window: 4,
            step: 4,
            basis_size: 4,
            select: 2,
            depth: 2,
            hidden: 16,
            embedding: 8,
            ..Self::normal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(QuarkError::config(msg));
        if self.electrodes == 0 || self.samples == 0 {
            return fail("electrodes and samples must be positive".into());
        }
        if self.window == 0 || self.window > self.samples {
            return fail(format!("window {} must be in 1..={}", self.window, self.samples));
        }
        if self.step == 0 || self.step > self.samples {
            return fail(format!("step {} must be in 1..={}", self.step, self.samples));
        }
        if self.select == 0 || 2 * self.select > self.basis_size {
            return fail(format!(
                "need 1 <= c and 2c <= |B| (c={}, |B|={})",
                self.select, self.basis_size
            ));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("teleport", self.teleport)] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if self.depth == 0 {
            return fail("depth must be at least 1".into());
        }
        if self.hidden == 0 || self.embedding == 0 {
            return fail("hidden and embedding widths must be positive".into());
        }
        Ok(())
    }

    /// `℧`.
    pub fn per_electrode(&self) -> usize {
        segment_count(self.samples, self.window, self.step)
    }

    /// `|Φ| = M · ℧`.
    pub fn segments(&self) -> usize {
        self.electrodes * self.per_electrode()
    }

    /// Blocks concatenated per branch.
    pub fn blocks(&self) -> usize {
        self.depth + usize::from(self.include_initial_block)
    }

    /// Width of a flattened branch output, `|Φ| · blocks · Λ`.
    pub fn branch_width(&self) -> usize {
        self.segments() * self.blocks() * self.window
    }
}

/// Which tensor a parameter slot holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    /// Basis of segment `j` (0-based flat index).
    Basis(usize),
    ContinuityLayer(usize),
    InterferenceLayer(usize),
    /// Fusion layer `H1..=H6`.
    Fusion(usize),
}

/// Every learnable tensor, in a fixed order: bases, continuity layers,
/// interference layers, fusion layers.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    params: Vec<Parameter>,
    segments: usize,
    depth: usize,
}

fn expected_layout(config: &ModelConfig) -> Vec<(String, (usize, usize))> {
    let mut out = Vec::new();
    let per = config.per_electrode();
    for j in 0..config.segments() {
        let (m, i) = segment_coords(j + 1, per);
        out.push((format!("basis.{m}.{i}"), (config.basis_size, config.window)));
    }
    for d in 1..=config.depth {
        out.push((format!("continuity.h{d}"), (config.window, config.window)));
    }
    for d in 1..=config.depth {
        out.push((format!("interference.h{d}"), (config.window, config.window)));
    }
    let (f, h, e) = (config.branch_width(), config.hidden, config.embedding);
    let fusion = [(f, h), (h, h), (f, h), (h, h), (2 * h, h), (h, e)];
    for (n, shape) in fusion.into_iter().enumerate() {
        out.push((format!("fusion.h{}", n + 1), shape));
    }
    out
}

impl ModelParams {
    /// Xavier-uniform initialization of every tensor from one seed.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = expected_layout(config)
            .into_iter()
            .map(|(name, (r, c))| Parameter::new(name, xavier_uniform(r, c, &mut rng)))
            .collect();
        Ok(Self {
            params,
            segments: config.segments(),
            depth: config.depth,
        })
    }

    /// Rebuild from named tensors (e.g. a checkpoint), checking names and
    /// shapes against `config`.
    pub fn from_parameters(config: &ModelConfig, params: Vec<Parameter>) -> Result<Self> {
        config.validate()?;
        let layout = expected_layout(config);
        if layout.len() != params.len() {
            return Err(QuarkError::Format(format!(
                "expected {} parameters, found {}",
                layout.len(),
                params.len()
            )));
        }
        for ((name, shape), p) in layout.iter().zip(&params) {
            if &p.name != name || p.value().dim() != *shape {
                return Err(QuarkError::Format(format!(
                    "parameter {} {:?} does not match expected {} {:?}",
                    p.name,
                    p.value().shape(),
                    name,
                    shape
                )));
            }
        }
        Ok(Self {
            params,
            segments: config.segments(),
            depth: config.depth,
        })
    }

    pub fn parameters(&self) -> &[Parameter] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [Parameter] {
        &mut self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn index_of(&self, kind: ParamKind) -> usize {
        match kind {
            ParamKind::Basis(j) => j,
            ParamKind::ContinuityLayer(d) => self.segments + d,
            ParamKind::InterferenceLayer(d) => self.segments + self.depth + d,
            ParamKind::Fusion(n) => self.segments + 2 * self.depth + (n - 1),
        }
    }

    pub fn kind_of(&self, index: usize) -> ParamKind {
        let s = self.segments;
        let d = self.depth;
        if index < s {
            ParamKind::Basis(index)
        } else if index < s + d {
            ParamKind::ContinuityLayer(index - s)
        } else if index < s + 2 * d {
            ParamKind::InterferenceLayer(index - s - d)
        } else {
            ParamKind::Fusion(index - s - 2 * d + 1)
        }
    }

    pub fn get(&self, kind: ParamKind) -> &Matrix {
        self.params[self.index_of(kind)].value()
    }

    pub fn bases(&self) -> impl Iterator<Item = &Matrix> {
        self.params[..self.segments].iter().map(|p| p.value())
    }

    /// `Σ ‖Γ_t‖_F` over every tensor.
    pub fn norm_sum(&self) -> f64 {
        self.params.iter().map(|p| frobenius_norm(p.value())).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.tensor.is_finite())
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.tensor.set_grad(None);
        }
    }
}

/// Parameter-independent preprocessing of one recording.
#[derive(Clone, Debug)]
pub struct PreparedInput {
    pub segments: SegmentSet,
    /// Unit-revised segment states, `|Φ| × Λ`.
    pub states: Matrix,
    pub degenerate_states: Vec<bool>,
    pub degenerate_recording: bool,
}

pub fn prepare(recording: &EegRecording, config: &ModelConfig) -> Result<PreparedInput> {
    if recording.signal.dim() != (config.electrodes, config.samples) {
        return Err(QuarkError::Shape {
            op: "prepare",
            left: recording.signal.shape().to_vec(),
            right: vec![config.electrodes, config.samples],
        }
        .in_stage("preprocess"));
    }
    let normalized = mean_normalize(&recording.signal);
    if normalized.degenerate {
        log::warn!("recording {} is constant; normalized to zeros", recording.recording_id);
    }
    let segments = sliding_window(&normalized.signal, config.window, config.step).stage("preprocess")?;
    let (states, degenerate_states) = unit_rows(segments.matrix());
    Ok(PreparedInput {
        segments,
        states,
        degenerate_states,
        degenerate_recording: normalized.degenerate,
    })
}

/// Values retained from a forward pass for inspection and losses.
#[derive(Clone, Debug)]
pub struct Intermediates {
    pub collapses: Vec<CollapseResult>,
    /// Mixed states `x°`, `|Φ| × Λ`.
    pub mixed: Matrix,
    pub raw_continuity: Matrix,
    pub raw_interference: Matrix,
    pub adjacency: AdjacencyPair,
    /// `x̂■`, `|Φ| × (blocks·Λ)`.
    pub continuity_repr: Matrix,
    /// `x̃■`, `|Φ| × (blocks·Λ)`.
    pub interference_repr: Matrix,
    /// `x̄`.
    pub output: Array1<f64>,
}

/// A recorded forward pass.
pub struct ForwardGraph {
    pub graph: ComputeGraph,
    /// One leaf per parameter, in [`ModelParams`] order.
    pub params: Vec<Var>,
    /// Mixed states `x°`.
    pub mixed: Var,
    /// Unit states `x*` (constant).
    pub states: Var,
    /// `x̄` as a `1 × E` row.
    pub output: Var,
}

impl ForwardGraph {
    pub fn intermediates(&self, collapses: Vec<CollapseResult>, parts: BranchParts) -> Intermediates {
        let v = |x: Var| self.graph.value(x).clone();
        Intermediates {
            collapses,
            mixed: v(self.mixed),
            raw_continuity: v(parts.raw_continuity),
            raw_interference: v(parts.raw_interference),
            adjacency: AdjacencyPair {
                continuity: v(parts.continuity),
                interference: v(parts.interference),
                continuity_normalized: v(parts.continuity_normalized),
                interference_normalized: v(parts.interference_normalized),
                alpha: parts.alpha,
                beta: parts.beta,
            },
            continuity_repr: v(parts.continuity_repr),
            interference_repr: v(parts.interference_repr),
            output: self.graph.value(self.output).row(0).to_owned(),
        }
    }
}

/// Graph nodes of the adjacency and GCN stages, kept for inspection.
#[derive(Clone, Copy, Debug)]
pub struct BranchParts {
    pub raw_continuity: Var,
    pub raw_interference: Var,
    pub continuity: Var,
    pub interference: Var,
    pub continuity_normalized: Var,
    pub interference_normalized: Var,
    pub continuity_repr: Var,
    pub interference_repr: Var,
    pub alpha: f64,
    pub beta: f64,
}

/// One approximate-GCN layer:
/// `[ξ·x° + (1 − ξ)·(A•·x_d)]·H`.
pub fn gcn_layer(mixed: &Matrix, previous: &Matrix, adjacency: &Matrix, layer: &Matrix, teleport: f64) -> Result<Matrix> {
    if mixed.dim() != previous.dim() {
        return Err(QuarkError::Shape {
            op: "gcn_layer",
            left: mixed.shape().to_vec(),
            right: previous.shape().to_vec(),
        });
    }
    let aggregated = matmul(adjacency, previous)?;
    let blend = mixed * teleport + aggregated * (1.0 - teleport);
    matmul(&blend, layer)
}

/// Concatenate depth outputs along the feature axis.
pub fn depth_concat(blocks: &[Matrix]) -> Result<Matrix> {
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    ndarray::concatenate(ndarray::Axis(1), &views).map_err(|_| QuarkError::Shape {
        op: "depth_concat",
        left: blocks.first().map(|b| b.shape().to_vec()).unwrap_or_default(),
        right: blocks.iter().map(|b| b.nrows()).collect(),
    })
}

/// Record one GCN branch on `graph`; returns the `|Φ| × (blocks·Λ)`
/// concatenation.
pub fn gcn_branch(
    graph: &mut ComputeGraph,
    mixed: Var,
    adjacency: Var,
    layers: &[Var],
    teleport: f64,
    include_initial_block: bool,
) -> Result<Var> {
    let mut blocks = Vec::with_capacity(layers.len() + 1);
    if include_initial_block {
        blocks.push(mixed);
    }
    let kept = graph.scale(mixed, teleport)?;
    let mut current = mixed;
    for &h in layers {
        let agg = graph.matmul(adjacency, current)?;
        let agg = graph.scale(agg, 1.0 - teleport)?;
        let blend = graph.add(kept, agg)?;
        current = graph.matmul(blend, h)?;
        blocks.push(current);
    }
    if blocks.len() == 1 {
        return Ok(blocks[0]);
    }
    graph.concat_cols(&blocks)
}

/// `ReLU(x·H_a)·H_b`.
fn sequence(graph: &mut ComputeGraph, x: Var, first: Var, second: Var) -> Result<Var> {
    let h = graph.matmul(x, first)?;
    let h = graph.relu(h)?;
    graph.matmul(h, second)
}

/// `Seq₃(Seq₁(flat x̂■) ⊕ Seq₂(flat x̃■))` on a graph. `fusion` holds the
/// six layer nodes in order.
pub fn fuse_final(graph: &mut ComputeGraph, continuity_repr: Var, interference_repr: Var, fusion: &[Var; 6]) -> Result<Var> {
    let (r1, c1) = graph.value(continuity_repr).dim();
    let (r2, c2) = graph.value(interference_repr).dim();
    if (r1, c1) != (r2, c2) {
        return Err(QuarkError::Shape {
            op: "fuse_final",
            left: vec![r1, c1],
            right: vec![r2, c2],
        });
    }
    let flat_c = graph.reshape(continuity_repr, 1, r1 * c1)?;
    let flat_i = graph.reshape(interference_repr, 1, r2 * c2)?;
    let a = sequence(graph, flat_c, fusion[0], fusion[1])?;
    let b = sequence(graph, flat_i, fusion[2], fusion[3])?;
    let joined = graph.concat_cols(&[a, b])?;
    sequence(graph, joined, fusion[4], fusion[5])
}

/// Filter + normalize an adjacency node. Returns (filtered, normalized).
fn filtered_adjacency(
    graph: &mut ComputeGraph,
    raw: Var,
    ratio: f64,
    per_electrode: usize,
    temporal: bool,
    enabled: bool,
) -> Result<(Var, Var)> {
    let rectified = graph.relu(raw)?;
    let mask = if enabled {
        keep_mask(graph.value(rectified), ratio, per_electrode, temporal)?
    } else {
        Matrix::zeros(graph.value(rectified).dim())
    };
    let mask = graph.constant(mask);
    let filtered = graph.mul(rectified, mask)?;
    let normalized = graph.row_normalize(filtered)?;
    Ok((filtered, normalized))
}

/// Record the full forward pass for a prepared input.
pub fn build_forward(
    prepared: &PreparedInput,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<(ForwardGraph, Vec<CollapseResult>, BranchParts)> {
    let n = config.segments();
    if prepared.states.dim() != (n, config.window) {
        return Err(QuarkError::Shape {
            op: "forward",
            left: prepared.states.shape().to_vec(),
            right: vec![n, config.window],
        }
        .in_stage("preprocess"));
    }
    let mut graph = ComputeGraph::new();
    let vars: Vec<Var> = params
        .parameters()
        .iter()
        .map(|p| graph.leaf(p.value().clone(), true))
        .collect();
    let basis_vars = &vars[..n];
    let states = graph.constant(prepared.states.clone());

    // Quantum stage: collapse (detached selection), mixed states.
    let collapses: Vec<CollapseResult> = params
        .bases()
        .enumerate()
        .map(|(j, b)| collapse_probabilities(prepared.states.row(j), b, config.select))
        .collect::<Result<_>>()
        .stage("quantum")?;
    let top: Vec<Vec<usize>> = collapses.iter().map(|c| c.top.clone()).collect();
    let bottom: Vec<Vec<usize>> = collapses.iter().map(|c| c.bottom.clone()).collect();
    let mixed = graph
        .apply(
            Box::new(MixedStatesOp {
                states: prepared.states.clone(),
                selections: top.clone(),
            }),
            basis_vars,
        )
        .stage("quantum")?;

    // Adjacency stage.
    let per = config.per_electrode();
    let mixed_t = graph.transpose(mixed)?;
    let raw_continuity = graph.matmul(mixed, mixed_t).stage("graph")?;
    let raw_interference = graph
        .apply(
            Box::new(InterferenceOp {
                states: prepared.states.clone(),
                top,
                bottom,
            }),
            basis_vars,
        )
        .stage("graph")?;
    let (continuity, continuity_normalized) = filtered_adjacency(
        &mut graph,
        raw_continuity,
        config.alpha,
        per,
        config.temporal_mask,
        config.use_continuity,
    )
    .stage("graph")?;
    let (interference, interference_normalized) = filtered_adjacency(
        &mut graph,
        raw_interference,
        config.beta,
        per,
        config.temporal_mask,
        config.use_interference,
    )
    .stage("graph")?;

    // GCN branches.
    let d = config.depth;
    let cont_layers: Vec<Var> = (0..d).map(|i| vars[params.index_of(ParamKind::ContinuityLayer(i))]).collect();
    let intf_layers: Vec<Var> = (0..d).map(|i| vars[params.index_of(ParamKind::InterferenceLayer(i))]).collect();
    let continuity_repr = gcn_branch(
        &mut graph,
        mixed,
        continuity_normalized,
        &cont_layers,
        config.teleport,
        config.include_initial_block,
    )
    .stage("gcn")?;
    let interference_repr = gcn_branch(
        &mut graph,
        mixed,
        interference_normalized,
        &intf_layers,
        config.teleport,
        config.include_initial_block,
    )
    .stage("gcn")?;

    let fusion: [Var; 6] = std::array::from_fn(|i| vars[params.index_of(ParamKind::Fusion(i + 1))]);
    let output = fuse_final(&mut graph, continuity_repr, interference_repr, &fusion).stage("fusion")?;

    let parts = BranchParts {
        raw_continuity,
        raw_interference,
        continuity,
        interference,
        continuity_normalized,
        interference_normalized,
        continuity_repr,
        interference_repr,
        alpha: config.alpha,
        beta: config.beta,
    };
    Ok((
        ForwardGraph {
            graph,
            params: vars,
            mixed,
            states,
            output,
        },
        collapses,
        parts,
    ))
}

/// Run the whole pipeline on one recording, returning `x̄` and every
/// intermediate.
pub fn forward(recording: &EegRecording, params: &ModelParams, config: &ModelConfig) -> Result<(Array1<f64>, Intermediates)> {
    config.validate()?;
    let prepared = prepare(recording, config)?;
    let (fg, collapses, parts) = build_forward(&prepared, params, config)?;
    let inter = fg.intermediates(collapses, parts);
    Ok((inter.output.clone(), inter))
}

/// `x̄` for a prepared input without keeping the graph.
pub fn represent(prepared: &PreparedInput, params: &ModelParams, config: &ModelConfig) -> Result<Array1<f64>> {
    let (fg, _, _) = build_forward(prepared, params, config)?;
    Ok(fg.graph.value(fg.output).row(0).to_owned())
}

/// Plain (non-recorded) fusion head, for inspection and tests.
pub fn fuse_plain(continuity_repr: &Matrix, interference_repr: &Matrix, fusion: [&Matrix; 6]) -> Result<Array1<f64>> {
    let flat = |m: &Matrix| crate::numerics::tensor::reshape(m, 1, m.len());
    let seq = |x: &Matrix, a: &Matrix, b: &Matrix| -> Result<Matrix> { matmul(&relu(&matmul(x, a)?), b) };
    let a = seq(&flat(continuity_repr)?, fusion[0], fusion[1])?;
    let b = seq(&flat(interference_repr)?, fusion[2], fusion[3])?;
    let joined = depth_concat(&[a, b])?;
    Ok(seq(&joined, fusion[4], fusion[5])?.row(0).to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::Label;
    use ndarray::array;
    use rand::Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0))
    }

    fn toy_recording(seed: u64) -> EegRecording {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        EegRecording::new(random(&mut rng, 1, 12), Label(0), "toy").unwrap()
    }

    #[test]
    fn teleport_one_ignores_adjacency() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(&mut rng, 3, 4);
        let prev = random(&mut rng, 3, 4);
        let h = random(&mut rng, 4, 4);
        let a1 = random(&mut rng, 3, 3);
        let a2 = random(&mut rng, 3, 3);
        let out1 = gcn_layer(&x, &prev, &a1, &h, 1.0).unwrap();
        let out2 = gcn_layer(&x, &prev, &a2, &h, 1.0).unwrap();
        assert_eq!(out1, out2);
        assert!((&out1 - &x.dot(&h)).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn identity_propagation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random(&mut rng, 3, 4);
        let prev = random(&mut rng, 3, 4);
        let out = gcn_layer(&x, &prev, &Matrix::eye(3), &Matrix::eye(4), 0.0).unwrap();
        assert_eq!(out, prev);
    }

    #[test]
    fn zero_adjacency_row_keeps_teleport_share() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let prev = array![[5.0, 6.0], [7.0, 8.0]];
        let adj = array![[0.0, 0.0], [0.5, 0.5]];
        let h = array![[1.0, 1.0], [0.0, 2.0]];
        let out = gcn_layer(&x, &prev, &adj, &h, 0.3).unwrap();
        // row 0: 0.3 * [1, 2] · H = [0.3, 0.3 + 1.2]
        assert!((out[[0, 0]] - 0.3).abs() < 1e-12);
        assert!((out[[0, 1]] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn depth_concat_ordering() {
        let a = array![[1.0, 2.0]];
        let b = array![[3.0, 4.0]];
        assert_eq!(depth_concat(&[a.clone()]).unwrap(), a);
        assert_eq!(depth_concat(&[a, b]).unwrap(), array![[1.0, 2.0, 3.0, 4.0]]);
        let cfg = ModelConfig::normal();
        assert_eq!((cfg.segments(), cfg.blocks() * cfg.window), (70, 75));
    }

    #[test]
    fn fusion_zero_inputs_give_zero() {
        let cfg = ModelConfig::toy();
        let params = ModelParams::init(&cfg, 4).unwrap();
        let z = Matrix::zeros((cfg.segments(), cfg.blocks() * cfg.window));
        let f: [&Matrix; 6] = std::array::from_fn(|i| params.get(ParamKind::Fusion(i + 1)));
        let out = fuse_plain(&z, &z, f).unwrap();
        assert_eq!(out.len(), cfg.embedding);
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn fusion_symmetric_branches_match() {
        let cfg = ModelConfig::toy();
        let mut params = ModelParams::init(&cfg, 4).unwrap();
        let h1 = params.get(ParamKind::Fusion(1)).clone();
        let h2 = params.get(ParamKind::Fusion(2)).clone();
        let i3 = params.index_of(ParamKind::Fusion(3));
        let i4 = params.index_of(ParamKind::Fusion(4));
        *params.parameters_mut()[i3].tensor.value_mut() = h1.clone();
        *params.parameters_mut()[i4].tensor.value_mut() = h2.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random(&mut rng, cfg.segments(), cfg.blocks() * cfg.window);
        let flat = crate::numerics::tensor::reshape(&x, 1, x.len()).unwrap();
        let seq1 = relu(&flat.dot(&h1)).dot(&h2);
        let seq2 = relu(&flat.dot(params.get(ParamKind::Fusion(3)))).dot(params.get(ParamKind::Fusion(4)));
        assert_eq!(seq1, seq2);
    }

    #[test]
    fn toy_shapes_follow_the_shape_table() {
        let cfg = ModelConfig::toy();
        let params = ModelParams::init(&cfg, 9).unwrap();
        let rec = toy_recording(3);
        let prepared = prepare(&rec, &cfg).unwrap();
        assert_eq!(prepared.segments.per_electrode(), 3);
        assert_eq!(prepared.states.dim(), (3, 4));
        let (x, inter) = forward(&rec, &params, &cfg).unwrap();
        assert_eq!(inter.collapses.len(), 3);
        assert!(inter.collapses.iter().all(|c| c.probabilities.len() == 4 && c.top.len() == 2 && c.bottom.len() == 2));
        assert_eq!(inter.mixed.dim(), (3, 4));
        assert_eq!(inter.raw_continuity.dim(), (3, 3));
        assert_eq!(inter.raw_interference.dim(), (3, 3));
        assert_eq!(inter.adjacency.continuity_normalized.dim(), (3, 3));
        assert_eq!(inter.continuity_repr.dim(), (3, 8));
        assert_eq!(inter.interference_repr.dim(), (3, 8));
        assert_eq!(x.len(), 8);
        assert_eq!(params.get(ParamKind::Fusion(1)).dim(), (24, 16));
        assert_eq!(params.get(ParamKind::Fusion(5)).dim(), (32, 16));
        assert_eq!(params.get(ParamKind::Fusion(6)).dim(), (16, 8));
    }

    #[test]
    fn forward_is_deterministic() {
        let cfg = ModelConfig::toy();
        let rec = toy_recording(7);
        let a = forward(&rec, &ModelParams::init(&cfg, 1).unwrap(), &cfg).unwrap().0;
        let b = forward(&rec, &ModelParams::init(&cfg, 1).unwrap(), &cfg).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_recording_shape_names_stage() {
        let cfg = ModelConfig::toy();
        let params = ModelParams::init(&cfg, 1).unwrap();
        let rec = EegRecording::new(Matrix::ones((2, 12)), Label(0), "bad").unwrap();
        let err = forward(&rec, &params, &cfg).unwrap_err();
        assert!(err.to_string().starts_with("preprocess"), "{err}");
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = ModelConfig::toy();
        cfg.select = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::toy();
        cfg.alpha = 1.2;
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::toy();
        cfg.window = 13;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn parameter_registry_round_trip() {
        let cfg = ModelConfig::toy();
        let params = ModelParams::init(&cfg, 2).unwrap();
        assert_eq!(params.len(), 3 + 2 * 2 + 6);
        for i in 0..params.len() {
            assert_eq!(params.index_of(params.kind_of(i)), i);
        }
        let rebuilt = ModelParams::from_parameters(&cfg, params.parameters().to_vec()).unwrap();
        assert_eq!(rebuilt, params);
        let mut wrong = params.parameters().to_vec();
        wrong.swap(0, 1);
        wrong[0].name = "nope".into();
        assert!(ModelParams::from_parameters(&cfg, wrong).is_err());
    }
}
