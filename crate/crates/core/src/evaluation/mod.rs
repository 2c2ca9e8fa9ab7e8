//! Top-k recommendation protocol and metrics.
//!
//! For every test recording, 100 candidates are drawn: 15 items of the
//! recording's class and 85 from other classes. Candidates are ranked by
//! `x̄·y` and the top `k` are scored against the 15 positives.

pub mod similarity;
pub mod style;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use ndarray::Array1;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{ItemCatalog, ItemId};
use crate::error::{QuarkError, Result};
use crate::preprocess::Label;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub k: usize,
    pub positives: usize,
    pub negatives: usize,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            k: 10,
            positives: 15,
            negatives: 85,
            seed: 0,
        }
    }
}

/// Catalog positions of sampled candidates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

impl CandidateSet {
    pub fn all(&self) -> Vec<usize> {
        self.positives.iter().chain(&self.negatives).copied().collect()
    }
}

pub fn sample_candidates<R: Rng>(label: Label, catalog: &ItemCatalog, cfg: &ProtocolConfig, rng: &mut R) -> Result<CandidateSet> {
    let same = catalog.class_indices(label);
    let others = catalog.other_indices(label);
    if same.len() < cfg.positives || others.len() < cfg.negatives {
        return Err(QuarkError::Evaluation(format!(
            "class {label} has {} items (needs {}) and {} outside (needs {})",
            same.len(),
            cfg.positives,
            others.len(),
            cfg.negatives
        )));
    }
    Ok(CandidateSet {
        positives: sample(rng, same.len(), cfg.positives).into_iter().map(|i| same[i]).collect(),
        negatives: sample(rng, others.len(), cfg.negatives).into_iter().map(|i| others[i]).collect(),
    })
}

/// Classes that cannot supply a candidate set.
pub fn infeasible_classes(labels: impl IntoIterator<Item = Label>, catalog: &ItemCatalog, cfg: &ProtocolConfig) -> Vec<Label> {
    let unique: BTreeSet<Label> = labels.into_iter().collect();
    unique
        .into_iter()
        .filter(|l| catalog.class_size(*l) < cfg.positives || catalog.outside_count(*l) < cfg.negatives)
        .collect()
}

/// Top `k` candidates by descending `x̄·y`; equal scores go to the lower
/// item id.
pub fn recommend_topk(x: &Array1<f64>, candidates: &[usize], catalog: &ItemCatalog, k: usize) -> Vec<usize> {
    let items = catalog.items();
    let mut scored: Vec<(f64, ItemId, usize)> = candidates
        .iter()
        .map(|&c| (x.dot(&items[c].embedding), items[c].id, c))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|s| s.2).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn precision_recall_f1(recommended: &[usize], positives: &[usize], k: usize) -> Prf {
    let hits = recommended.iter().filter(|r| positives.contains(r)).count() as f64;
    let precision = hits / k as f64;
    let recall = if positives.is_empty() { 0.0 } else { hits / positives.len() as f64 };
    Prf {
        precision,
        recall,
        f1: f1(precision, recall),
    }
}

/// What the protocol needs from one test recording.
#[derive(Clone, Debug)]
pub struct Query {
    pub recording_id: String,
    pub label: Label,
    pub representation: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceResult {
    pub recording_id: String,
    pub label: Label,
    pub metrics: Prf,
    /// Catalog positions, best first.
    pub recommended: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub k: usize,
    pub instances: Vec<InstanceResult>,
    pub mean: Prf,
}

impl MetricReport {
    /// Human-readable summary.
    pub fn table(&self) -> String {
        let k = self.k;
        format!(
            "instances  P@{k}    R@{k}    F1@{k}\n{:<10} {:.4} {:.4} {:.4}\n",
            self.instances.len(),
            self.mean.precision,
            self.mean.recall,
            self.mean.f1
        )
    }

    /// Tab-separated per-instance rows followed by a `mean` row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("recording_id\tlabel\tprecision\trecall\tf1\n");
        for r in &self.instances {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.recording_id, r.label, r.metrics.precision, r.metrics.recall, r.metrics.f1
            );
        }
        let _ = writeln!(out, "mean\t-\t{}\t{}\t{}", self.mean.precision, self.mean.recall, self.mean.f1);
        out
    }
}

/// Run the protocol over `queries`. Each query uses its own random stream
/// derived from the seed, so results are independent of evaluation order.
pub fn evaluate(queries: &[Query], catalog: &ItemCatalog, cfg: &ProtocolConfig) -> Result<MetricReport> {
    if cfg.k == 0 || cfg.k > cfg.positives + cfg.negatives {
        return Err(QuarkError::config(format!("k = {} outside 1..={}", cfg.k, cfg.positives + cfg.negatives)));
    }
    let bad = infeasible_classes(queries.iter().map(|q| q.label), catalog, cfg);
    if !bad.is_empty() {
        let names: Vec<String> = bad.iter().map(|l| l.to_string()).collect();
        return Err(QuarkError::Evaluation(format!(
            "too few items for candidate sampling in classes: {}",
            names.join(", ")
        )));
    }
    if let Some(q) = queries.iter().find(|q| q.representation.len() != catalog.embedding_dim()) {
        return Err(QuarkError::Shape {
            op: "evaluate",
            left: vec![q.representation.len()],
            right: vec![catalog.embedding_dim()],
        });
    }
    let instances: Vec<InstanceResult> = queries
        .par_iter()
        .enumerate()
        .map(|(n, q)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(n as u64);
            let cands = sample_candidates(q.label, catalog, cfg, &mut rng)?;
            let recommended = recommend_topk(&q.representation, &cands.all(), catalog, cfg.k);
            Ok(InstanceResult {
                recording_id: q.recording_id.clone(),
                label: q.label,
                metrics: precision_recall_f1(&recommended, &cands.positives, cfg.k),
                recommended,
            })
        })
        .collect::<Result<_>>()?;
    let n = instances.len().max(1) as f64;
    let mut mean = Prf::default();
    for r in &instances {
        mean.precision += r.metrics.precision;
        mean.recall += r.metrics.recall;
        mean.f1 += r.metrics.f1;
    }
    mean.precision /= n;
    mean.recall /= n;
    mean.f1 /= n;
    Ok(MetricReport {
        k: cfg.k,
        instances,
        mean,
    })
}

/// Monte-Carlo P@k of uniformly random rankings under the protocol.
pub fn random_guess_precision(trials: usize, cfg: &ProtocolConfig) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total = cfg.positives + cfg.negatives;
    let mut hits = 0usize;
    for _ in 0..trials {
        hits += sample(&mut rng, total, cfg.k).into_iter().filter(|&i| i < cfg.positives).count();
    }
    hits as f64 / (trials * cfg.k) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Item;
    use ndarray::array;

    fn catalog(sizes: &[usize], dim: usize) -> ItemCatalog {
        let mut items = Vec::new();
        let mut id = 0;
        for (c, &n) in sizes.iter().enumerate() {
            for _ in 0..n {
                items.push(Item {
                    id,
                    label: Label(c as i64),
                    embedding: Array1::from_elem(dim, (id % 7) as f64),
                    image: None,
                });
                id += 1;
            }
        }
        ItemCatalog::new(items).unwrap()
    }

    #[test]
    fn hand_metrics() {
        let rec: Vec<usize> = (0..10).collect();
        let pos: Vec<usize> = vec![0, 1, 2, 50, 51, 52, 53, 54, 55, 56, 57, 58, 59, 60, 61];
        let m = precision_recall_f1(&rec, &pos, 10);
        assert!((m.precision - 0.3).abs() < 1e-15);
        assert!((m.recall - 0.2).abs() < 1e-15);
        assert!((m.f1 - 0.24).abs() < 1e-15);
        let none = precision_recall_f1(&rec, &[99], 10);
        assert_eq!(none, Prf::default());
    }

    #[test]
    fn forced_stratum_and_determinism() {
        let cat = catalog(&[15, 90], 2);
        let cfg = ProtocolConfig::default();
        let a = sample_candidates(Label(0), &cat, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let mut pos = a.positives.clone();
        pos.sort_unstable();
        assert_eq!(pos, (0..15).collect::<Vec<_>>());
        let b = sample_candidates(Label(0), &cat, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        let all: BTreeSet<usize> = a.all().into_iter().collect();
        assert_eq!(all.len(), 100);
    }

    #[test]
    fn negative_classes_proportional() {
        let cat = catalog(&[15, 30, 60, 90], 2);
        let cfg = ProtocolConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0f64; 4];
        let trials = 1000;
        for _ in 0..trials {
            for n in sample_candidates(Label(0), &cat, &cfg, &mut rng).unwrap().negatives {
                counts[cat.items()[n].label.0 as usize] += 1.0;
            }
        }
        let draws = (trials * 85) as f64;
        for (c, size) in [(1, 30.0), (2, 60.0), (3, 90.0)] {
            let p: f64 = size / 180.0;
            // hypergeometric per trial; variance bounded by the binomial one
            let sigma = (draws * p * (1.0 - p)).sqrt();
            assert!((counts[c] - draws * p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn infeasible_class_named() {
        let cat = catalog(&[10, 100], 2);
        let q = Query {
            recording_id: "r".into(),
            label: Label(0),
            representation: array![1.0, 0.0],
        };
        let err = evaluate(&[q], &cat, &ProtocolConfig::default()).unwrap_err();
        assert!(err.to_string().contains("classes: 0"), "{err}");
    }

    #[test]
    fn topk_ties_and_oracle() {
        let items = (0..4)
            .map(|i| Item {
                id: 10 - i,
                label: Label(0),
                embedding: array![1.0, 1.0],
                image: None,
            })
            .collect();
        let cat = ItemCatalog::new(items).unwrap();
        let top = recommend_topk(&array![1.0, 0.0], &[0, 1, 2, 3], &cat, 2);
        assert_eq!(top, vec![3, 2]);
        assert_eq!(recommend_topk(&array![1.0, 0.0], &[1], &cat, 1), vec![1]);

        let eye: Vec<Item> = (0..3)
            .map(|i| {
                let mut e = Array1::zeros(3);
                e[i] = 1.0;
                Item {
                    id: i as u64,
                    label: Label(0),
                    embedding: e,
                    image: None,
                }
            })
            .collect();
        let cat = ItemCatalog::new(eye).unwrap();
        assert_eq!(recommend_topk(&array![0.0, 0.0, 1.0], &[0, 1, 2], &cat, 1), vec![2]);
    }

    #[test]
    fn protocol_identities_hold_per_instance() {
        let cat = catalog(&[20, 20, 20, 20, 20, 20], 3);
        let queries: Vec<Query> = (0..40)
            .map(|n| Query {
                recording_id: n.to_string(),
                label: Label(n % 6),
                representation: array![(n as f64).sin(), (n as f64).cos(), 0.3],
            })
            .collect();
        let report = evaluate(&queries, &cat, &ProtocolConfig::default()).unwrap();
        for r in &report.instances {
            assert!((r.metrics.recall - 2.0 / 3.0 * r.metrics.precision).abs() < 1e-15);
            assert!((r.metrics.f1 - 0.8 * r.metrics.precision).abs() < 1e-15);
        }
        assert!(report.to_tsv().lines().count() == 42);
    }

    #[test]
    fn random_guess_is_fifteen_percent() {
        let p = random_guess_precision(10_000, &ProtocolConfig::default());
        assert!((p - 0.15).abs() < 0.01, "{p}");
    }
}
