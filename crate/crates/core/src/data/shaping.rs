//! Per-class instance-count shaping and the stratified train/test split.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{QuarkError, Result};
use crate::preprocess::{EegRecording, Label};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DistributionSpec {
    AsIs,
    /// Class counts follow a discretized standard-normal density, summing
    /// to `total`.
    Normal { total: usize },
    /// Keep source counts (the source itself is long-tailed).
    LongTail,
}

impl std::str::FromStr for DistributionSpec {
    type Err = QuarkError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "as-is" | "asis" => Ok(Self::AsIs),
            "long-tail" | "longtail" => Ok(Self::LongTail),
            _ => {
                let total = s
                    .strip_prefix("normal:")
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| QuarkError::config(format!("unknown distribution {s:?} (as-is, long-tail, normal:<total>)")))?;
                Ok(Self::Normal { total })
            }
        }
    }
}

fn class_members(recordings: &[EegRecording]) -> BTreeMap<Label, Vec<usize>> {
    let mut map: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (n, r) in recordings.iter().enumerate() {
        map.entry(r.label).or_default().push(n);
    }
    map
}

/// Split `total` proportionally to `weights` with largest-remainder
/// rounding; ties go to the earlier entry.
pub fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut remaining = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    counts
}

/// Normal-shaped targets. Classes are ranked by available count (ties by
/// label) and placed center-out on a grid over `[−3, 3]`; the returned
/// list is in grid order, so the middle entry holds the largest target.
pub fn normal_targets(available: &BTreeMap<Label, usize>, total: usize) -> Result<Vec<(Label, usize)>> {
    let k = available.len();
    let density = |z: f64| (-0.5 * z * z).exp();
    let grid: Vec<f64> = (0..k).map(|p| -3.0 + 6.0 * (p as f64 + 0.5) / k as f64).collect();
    let mut positions: Vec<usize> = (0..k).collect();
    positions.sort_by(|&a, &b| grid[a].abs().total_cmp(&grid[b].abs()).then(a.cmp(&b)));
    let mut ranked: Vec<(Label, usize)> = available.iter().map(|(l, c)| (*l, *c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut placed = vec![(Label(0), 0usize); k];
    for (rank, &pos) in positions.iter().enumerate() {
        placed[pos] = ranked[rank];
    }
    let weights: Vec<f64> = grid.iter().map(|z| density(*z)).collect();
    let counts = apportion(&weights, total);
    let offending: Vec<String> = placed
        .iter()
        .zip(&counts)
        .filter(|((_, avail), want)| *want > avail)
        .map(|((l, avail), want)| format!("{l} (wants {want}, has {avail})"))
        .collect();
    if !offending.is_empty() {
        return Err(QuarkError::config(format!(
            "normal shaping to {total} is infeasible for classes: {}",
            offending.join(", ")
        )));
    }
    Ok(placed.into_iter().zip(counts).map(|((l, _), c)| (l, c)).collect())
}

/// Subsample to the spec's per-class targets. Kept recordings retain their
/// original relative order.
pub fn shape_distribution<R: Rng>(recordings: Vec<EegRecording>, spec: DistributionSpec, rng: &mut R) -> Result<Vec<EegRecording>> {
    let total = match spec {
        DistributionSpec::AsIs | DistributionSpec::LongTail => return Ok(recordings),
        DistributionSpec::Normal { total } => total,
    };
    let members = class_members(&recordings);
    let available = members.iter().map(|(l, v)| (*l, v.len())).collect();
    let targets: BTreeMap<Label, usize> = normal_targets(&available, total)?.into_iter().collect();
    let mut keep = vec![false; recordings.len()];
    for (label, idx) in &members {
        for i in sample(rng, idx.len(), targets[label]) {
            keep[idx[i]] = true;
        }
    }
    Ok(recordings
        .into_iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then_some(r))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stratum {
    pub label: Label,
    pub train: usize,
    pub test: usize,
}

/// Indices into the split recordings.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub strata: Vec<Stratum>,
}

/// Per-class stratified split with `round(ratio · n)` training instances.
pub fn split<R: Rng>(recordings: &[EegRecording], ratio: f64, rng: &mut R) -> Result<DatasetSplit> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(QuarkError::config(format!("split ratio {ratio} outside [0, 1]")));
    }
    let mut out = DatasetSplit {
        train: Vec::new(),
        test: Vec::new(),
        strata: Vec::new(),
    };
    for (label, mut idx) in class_members(recordings) {
        let n = idx.len();
        let n_train = if n == 1 {
            log::warn!("class {label} has a single instance; placing it in the training set");
            1
        } else {
            (ratio * n as f64).round() as usize
        };
        idx.shuffle(rng);
        out.train.extend_from_slice(&idx[..n_train]);
        out.test.extend_from_slice(&idx[n_train..]);
        out.strata.push(Stratum {
            label,
            train: n_train,
            test: n - n_train,
        });
    }
    out.train.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn recs(counts: &[(i64, usize)]) -> Vec<EegRecording> {
        let mut out = Vec::new();
        for &(label, n) in counts {
            for k in 0..n {
                out.push(EegRecording::new(Matrix::ones((1, 1)) * k as f64, Label(label), format!("{label}-{k}")).unwrap());
            }
        }
        out
    }

    #[test]
    fn as_is_is_identity() {
        let r = recs(&[(1, 3), (2, 5)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(shape_distribution(r.clone(), DistributionSpec::AsIs, &mut rng).unwrap(), r);
        assert_eq!(shape_distribution(r.clone(), DistributionSpec::LongTail, &mut rng).unwrap(), r);
    }

    #[test]
    fn normal_middle_class_largest() {
        let available: BTreeMap<Label, usize> = [(Label(0), 30), (Label(1), 30), (Label(2), 30)].into();
        let t = normal_targets(&available, 30).unwrap();
        assert_eq!(t.iter().map(|x| x.1).sum::<usize>(), 30);
        assert!(t[1].1 > t[0].1 && t[1].1 > t[2].1, "{t:?}");
        // weights exp(-2), 1, exp(-2) → 30 · [0.1064, 0.7871, 0.1064]
        assert_eq!(t.iter().map(|x| x.1).collect::<Vec<_>>(), vec![3, 24, 3]);
    }

    #[test]
    fn normal_shaping_hits_total() {
        let r = recs(&[(1, 30), (2, 40), (3, 50), (4, 35), (5, 20)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shaped = shape_distribution(r, DistributionSpec::Normal { total: 60 }, &mut rng).unwrap();
        assert_eq!(shaped.len(), 60);
    }

    #[test]
    fn infeasible_normal_lists_classes() {
        let r = recs(&[(1, 2), (2, 2), (3, 2)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = shape_distribution(r, DistributionSpec::Normal { total: 6 }, &mut rng).unwrap_err();
        assert!(err.to_string().contains("infeasible"), "{err}");
    }

    #[test]
    fn split_one_class_hundred() {
        let r = recs(&[(1, 100)]);
        let s = split(&r, 0.85, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (85, 15));
    }

    #[test]
    fn split_deterministic_and_singleton_in_train() {
        let r = recs(&[(1, 10), (2, 1)]);
        let a = split(&r, 0.85, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = split(&r, 0.85, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.train.contains(&10));
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("normal:700".parse::<DistributionSpec>().unwrap(), DistributionSpec::Normal { total: 700 });
        assert!("gaussian".parse::<DistributionSpec>().is_err());
    }

    proptest! {
        #[test]
        fn split_is_stratified_partition(counts in proptest::collection::vec(2usize..40, 1..6), seed in 0u64..1000) {
            let spec: Vec<(i64, usize)> = counts.iter().enumerate().map(|(i, c)| (i as i64, *c)).collect();
            let r = recs(&spec);
            let s = split(&r, 0.85, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..r.len()).collect::<Vec<_>>());
            for st in &s.strata {
                let n = (st.train + st.test) as f64;
                prop_assert!((st.train as f64 - 0.85 * n).abs() <= 1.0);
            }
        }

        #[test]
        fn apportion_sums_to_total(weights in proptest::collection::vec(0.01f64..5.0, 1..30), total in 0usize..5000) {
            prop_assert_eq!(apportion(&weights, total).iter().sum::<usize>(), total);
        }
    }
}
