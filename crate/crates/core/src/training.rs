//! Objective terms, BPR pair sampling and the mini-batch Adam loop.
//!
//! Per instance the objective is
//! `L = L_bpr + L_orth + L_cont + ρ·Σ‖Γ_t‖_F`; a batch step averages
//! instance gradients. Instances in a batch are evaluated in parallel and
//! reduced in batch order, so results do not depend on thread count.

use std::time::Instant;

use ndarray::ArrayView1;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::ItemCatalog;
use crate::error::{QuarkError, Result};
use crate::model::{build_forward, ModelConfig, ModelParams, PreparedInput};
use crate::numerics::ops::softplus;
use crate::numerics::{AdamConfig, AdamState, ComputeGraph, Matrix, Var};
use crate::preprocess::Label;
use crate::quantum::OrthogonalityPenaltyOp;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Weight `ρ` of the parameter-norm regularizer.
    pub rho: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Liked items per instance per step.
    pub positives: usize,
    /// Disliked items per instance per step.
    pub negatives: usize,
    pub continuity_loss: bool,
    /// Basis orthogonality term.
    pub qm_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 16,
            rho: 1e-4,
            epochs: 30,
            seed: 0,
            positives: 1,
            negatives: 1,
            continuity_loss: true,
            qm_loss: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(QuarkError::config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(QuarkError::config("batch size must be at least 1"));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(QuarkError::config(format!("rho {} must be non-negative", self.rho)));
        }
        if self.positives == 0 || self.negatives == 0 {
            return Err(QuarkError::config("need at least one positive and one negative per step"));
        }
        Ok(())
    }
}

/// Catalog positions of the liked (same class) and disliked items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSample {
    pub liked: Vec<usize>,
    pub disliked: Vec<usize>,
}

/// Uniform draws without replacement: `n_pos` items of `label`'s class and
/// `n_neg` items from all other classes.
pub fn sample_pairs<R: Rng>(label: Label, catalog: &ItemCatalog, n_pos: usize, n_neg: usize, rng: &mut R) -> Result<PairSample> {
    let same = catalog.class_indices(label);
    if same.len() < n_pos {
        return Err(QuarkError::Sampling {
            class: label.to_string(),
            message: format!("{} liked items available, {n_pos} needed", same.len()),
        });
    }
    let others = catalog.other_indices(label);
    if others.len() < n_neg {
        return Err(QuarkError::Sampling {
            class: label.to_string(),
            message: format!("{} disliked items available, {n_neg} needed", others.len()),
        });
    }
    let liked = sample(rng, same.len(), n_pos).into_iter().map(|i| same[i]).collect();
    let disliked = sample(rng, others.len(), n_neg).into_iter().map(|i| others[i]).collect();
    Ok(PairSample { liked, disliked })
}

/// `Σ_{y◁, y▷} −log σ(x̄·y◁ − x̄·y▷)` for one instance.
pub fn bpr_loss(x: ArrayView1<'_, f64>, liked: &[ArrayView1<'_, f64>], disliked: &[ArrayView1<'_, f64>]) -> Result<f64> {
    if liked.is_empty() || disliked.is_empty() {
        return Err(QuarkError::contract("BPR loss needs at least one liked and one disliked item"));
    }
    let mut total = 0.0;
    for l in liked {
        for d in disliked {
            if l.len() != x.len() || d.len() != x.len() {
                return Err(QuarkError::Shape {
                    op: "bpr_loss",
                    left: vec![x.len()],
                    right: vec![l.len(), d.len()],
                });
            }
            total += softplus(-(x.dot(l) - x.dot(d)));
        }
    }
    Ok(total)
}

/// Rows `j` whose successor `j + 1` is the next segment on the same
/// electrode.
fn successor_rows(segments: usize, per_electrode: usize) -> Vec<usize> {
    (0..segments).filter(|j| (j + 1) % per_electrode != 0).collect()
}

/// `Σ_m Σ_{i<℧} −log σ(x°(m,i) · x*(m,i+1))`.
pub fn continuity_loss(mixed: &Matrix, states: &Matrix, per_electrode: usize) -> Result<f64> {
    if mixed.dim() != states.dim() {
        return Err(QuarkError::Shape {
            op: "continuity_loss",
            left: mixed.shape().to_vec(),
            right: states.shape().to_vec(),
        });
    }
    if per_electrode < 2 {
        log::warn!("one segment per electrode; continuity loss is 0");
        return Ok(0.0);
    }
    Ok(successor_rows(mixed.nrows(), per_electrode)
        .into_iter()
        .map(|j| softplus(-mixed.row(j).dot(&states.row(j + 1))))
        .sum())
}

/// `ρ · Σ_t ‖Γ_t‖_F`.
pub fn regularizer<'a>(params: impl IntoIterator<Item = &'a Matrix>, rho: f64) -> f64 {
    rho * params
        .into_iter()
        .map(crate::numerics::tensor::frobenius_norm)
        .sum::<f64>()
}

/// The four objective terms of one instance (or their batch means).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub bpr: f64,
    pub orthogonality: f64,
    pub continuity: f64,
    pub regularizer: f64,
}

impl LossTerms {
    /// Sum of the terms; fails naming the first non-finite one.
    pub fn total(&self) -> Result<f64> {
        for (name, v) in [
            ("bpr loss", self.bpr),
            ("orthogonality loss", self.orthogonality),
            ("continuity loss", self.continuity),
            ("regularizer", self.regularizer),
        ] {
            if !v.is_finite() {
                return Err(QuarkError::NonFinite(name.into()));
            }
        }
        Ok(self.bpr + self.orthogonality + self.continuity + self.regularizer)
    }

    fn add_scaled(&mut self, other: &LossTerms, w: f64) {
        self.bpr += w * other.bpr;
        self.orthogonality += w * other.orthogonality;
        self.continuity += w * other.continuity;
        self.regularizer += w * other.regularizer;
    }
}

/// Nodes of the recorded objective.
pub struct Objective {
    pub graph: ComputeGraph,
    pub params: Vec<Var>,
    pub total: Var,
    pub terms: LossTerms,
}

fn scalar_or_zero(graph: &mut ComputeGraph, v: Option<Var>) -> Var {
    v.unwrap_or_else(|| graph.constant(Matrix::zeros((1, 1))))
}

/// Record the full per-instance objective on top of a forward pass.
pub fn record_objective(
    prepared: &PreparedInput,
    params: &ModelParams,
    model: &ModelConfig,
    train: &TrainConfig,
    catalog: &ItemCatalog,
    pairs: &PairSample,
) -> Result<Objective> {
    if catalog.embedding_dim() != model.embedding {
        return Err(QuarkError::config(format!(
            "catalog embeddings have width {}, model outputs {}",
            catalog.embedding_dim(),
            model.embedding
        )));
    }
    if pairs.liked.is_empty() || pairs.disliked.is_empty() {
        return Err(QuarkError::contract("BPR loss needs at least one liked and one disliked item"));
    }
    let (fg, _, _) = build_forward(prepared, params, model)?;
    let mut g = fg.graph;
    let items = catalog.items();

    // BPR: margins x̄·(y◁ − y▷) for every liked × disliked pair.
    let n_pairs = pairs.liked.len() * pairs.disliked.len();
    let mut diffs = Matrix::zeros((model.embedding, n_pairs));
    let mut col = 0;
    for &l in &pairs.liked {
        for &d in &pairs.disliked {
            let diff = &items[l].embedding - &items[d].embedding;
            diffs.column_mut(col).assign(&diff);
            col += 1;
        }
    }
    let diffs = g.constant(diffs);
    let margins = g.matmul(fg.output, diffs)?;
    let neg = g.scale(margins, -1.0)?;
    let sp = g.softplus(neg)?;
    let bpr = g.sum(sp)?;

    // Orthogonality, averaged over quantum spaces.
    let n = model.segments();
    let orth = if train.qm_loss {
        let mut acc: Option<Var> = None;
        for &b in &fg.params[..n] {
            let p = g.apply(Box::new(OrthogonalityPenaltyOp), &[b])?;
            acc = Some(match acc {
                Some(a) => g.add(a, p)?,
                None => p,
            });
        }
        let sum = scalar_or_zero(&mut g, acc);
        Some(g.scale(sum, 1.0 / n as f64)?)
    } else {
        None
    };

    // Continuity between each mixed state and the next unit state.
    let per = model.per_electrode();
    let cont = if train.continuity_loss && per >= 2 {
        let rows = successor_rows(n, per);
        let mut next = Matrix::zeros((n, model.window));
        let mut mask = Matrix::zeros((n, 1));
        for &j in &rows {
            next.row_mut(j).assign(&prepared.states.row(j + 1));
            mask[[j, 0]] = 1.0;
        }
        let next = g.constant(next);
        let prod = g.mul(fg.mixed, next)?;
        let ones = g.constant(Matrix::ones((model.window, 1)));
        let dots = g.matmul(prod, ones)?;
        let neg = g.scale(dots, -1.0)?;
        let sp = g.softplus(neg)?;
        let mask = g.constant(mask);
        let kept = g.mul(sp, mask)?;
        Some(g.sum(kept)?)
    } else {
        if train.continuity_loss {
            log::warn!("one segment per electrode; continuity loss is 0");
        }
        None
    };

    let reg = if train.rho > 0.0 {
        let mut acc: Option<Var> = None;
        for &p in &fg.params {
            let norm = g.frobenius_norm(p)?;
            acc = Some(match acc {
                Some(a) => g.add(a, norm)?,
                None => norm,
            });
        }
        let sum = scalar_or_zero(&mut g, acc);
        Some(g.scale(sum, train.rho)?)
    } else {
        None
    };

    let value = |g: &ComputeGraph, v: Option<Var>| v.map(|v| g.scalar(v)).unwrap_or(0.0);
    let terms = LossTerms {
        bpr: g.scalar(bpr),
        orthogonality: value(&g, orth),
        continuity: value(&g, cont),
        regularizer: value(&g, reg),
    };
    terms.total()?;

    let mut total = bpr;
    for t in [orth, cont, reg].into_iter().flatten() {
        total = g.add(total, t)?;
    }
    Ok(Objective {
        graph: g,
        params: fg.params,
        total,
        terms,
    })
}

/// Loss terms and per-parameter gradients for one instance.
pub fn instance_gradients(
    prepared: &PreparedInput,
    params: &ModelParams,
    model: &ModelConfig,
    train: &TrainConfig,
    catalog: &ItemCatalog,
    pairs: &PairSample,
) -> Result<(LossTerms, Vec<Matrix>)> {
    let obj = record_objective(prepared, params, model, train, catalog, pairs)?;
    let mut grads = obj.graph.backward(obj.total)?;
    let out = obj
        .params
        .iter()
        .zip(params.parameters())
        .map(|(v, p)| grads.take(*v).unwrap_or_else(|| Matrix::zeros(p.value().dim())))
        .collect();
    Ok((obj.terms, out))
}

/// A training instance: prepared input plus its class.
#[derive(Clone, Debug)]
pub struct Example {
    pub input: PreparedInput,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Epoch means of the instance terms.
    pub terms: LossTerms,
    pub total: f64,
    pub validation_p10: Option<f64>,
}

impl EpochRecord {
    /// Tab-separated `epoch L1 L2 L3 L [P@10]`, shortest round-trip floats.
    pub fn to_line(&self) -> String {
        let mut line = format!(
            "{}\t{}\t{}\t{}\t{}",
            self.epoch, self.terms.bpr, self.terms.orthogonality, self.terms.continuity, self.total
        );
        if let Some(p) = self.validation_p10 {
            line.push_str(&format!("\t{p}"));
        }
        line
    }
}

pub const EPOCH_LOG_HEADER: &str = "epoch\tbpr\torthogonality\tcontinuity\ttotal";

#[derive(Debug)]
pub struct TrainOutcome {
    /// Final parameters, or the last finite ones if training halted.
    pub params: ModelParams,
    pub log: Vec<EpochRecord>,
    /// Seconds per epoch, kept apart from the log so the log itself is
    /// reproducible.
    pub wall_times: Vec<f64>,
    /// Set when training stopped early on a non-finite value.
    pub halted: Option<String>,
}

/// Validation hook run after each epoch, returning P@10.
pub type Validator<'a> = dyn Fn(&ModelParams) -> Result<f64> + Sync + 'a;

/// Mini-batch training from `init`.
pub fn train(
    examples: &[Example],
    catalog: &ItemCatalog,
    model: &ModelConfig,
    config: &TrainConfig,
    init: ModelParams,
    validator: Option<&Validator<'_>>,
) -> Result<TrainOutcome> {
    model.validate()?;
    config.validate()?;
    let mut params = init;
    let mut adam = AdamState::new(
        AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
        params.parameters(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(7);
    let mut outcome = TrainOutcome {
        params: params.clone(),
        log: Vec::new(),
        wall_times: Vec::new(),
        halted: None,
    };
    let mut order: Vec<usize> = (0..examples.len()).collect();

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut epoch_terms = LossTerms::default();
        let mut epoch_total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let pairs: Vec<PairSample> = batch
                .iter()
                .map(|&i| sample_pairs(examples[i].label, catalog, config.positives, config.negatives, &mut rng))
                .collect::<Result<_>>()?;
            let results: Vec<Result<(LossTerms, Vec<Matrix>)>> = batch
                .par_iter()
                .zip(pairs.par_iter())
                .map(|(&i, p)| instance_gradients(&examples[i].input, &params, model, config, catalog, p))
                .collect();

            let w = 1.0 / batch.len() as f64;
            let mut sums: Vec<Matrix> = params.parameters().iter().map(|p| Matrix::zeros(p.value().dim())).collect();
            let mut failure = None;
            for r in results {
                match r {
                    Ok((terms, grads)) => {
                        epoch_terms.add_scaled(&terms, 1.0 / examples.len() as f64);
                        epoch_total += terms.total()? / examples.len() as f64;
                        for (s, g) in sums.iter_mut().zip(&grads) {
                            s.scaled_add(w, g);
                        }
                    }
                    Err(e @ QuarkError::NonFinite(_)) => {
                        failure = Some(e);
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if failure.is_none() {
                for (p, g) in params.parameters_mut().iter_mut().zip(sums) {
                    p.tensor.set_grad(Some(g));
                }
                if let Err(e) = adam.step(params.parameters_mut()) {
                    failure = Some(e);
                }
                params.zero_grad();
            }
            if let Some(e) = failure {
                log::error!("epoch {epoch}: {e}; keeping last finite parameters");
                outcome.params = params;
                outcome.halted = Some(format!("epoch {epoch}: {e}"));
                return Ok(outcome);
            }
        }
        let validation_p10 = validator.map(|v| v(&params)).transpose()?;
        let record = EpochRecord {
            epoch,
            terms: epoch_terms,
            total: epoch_total,
            validation_p10,
        };
        log::info!("{}", record.to_line());
        outcome.log.push(record);
        outcome.wall_times.push(started.elapsed().as_secs_f64());
    }
    outcome.params = params;
    Ok(outcome)
}

/// Total objective without gradients (used for finite differences).
pub fn objective_value(
    prepared: &PreparedInput,
    params: &ModelParams,
    model: &ModelConfig,
    train: &TrainConfig,
    catalog: &ItemCatalog,
    pairs: &PairSample,
) -> Result<f64> {
    record_objective(prepared, params, model, train, catalog, pairs)?.terms.total()
}

/// Embedding of a catalog item as a view.
pub fn embedding_of(catalog: &ItemCatalog, position: usize) -> ArrayView1<'_, f64> {
    catalog.items()[position].embedding.view()
}
