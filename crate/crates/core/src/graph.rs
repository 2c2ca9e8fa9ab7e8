//! Continuity and interference adjacency matrices over segments.
//!
//! Row `j` is the "future" segment `(m, i)` and column `k` the "past"
//! segment `(v, w)`. After ReLU, an entry survives only if it reaches the
//! ratio threshold computed over the whole matrix and `i > w` (strictly
//! later segment index; electrodes are not compared). Rows are then
//! normalized to sum to one, all-zero rows excepted.

use std::io::Write;
use std::path::Path;

use crate::error::{QuarkError, Result};
use crate::numerics::ops::{relu, row_normalize};
use crate::numerics::Matrix;
use crate::preprocess::segment_coords;
use crate::quantum::{event_operator, CollapseResult};

/// Gram matrix of the learned segment rows: `Â = X Xᵀ`.
pub fn continuity_matrix(mixed: &Matrix) -> Matrix {
    mixed.dot(&mixed.t())
}

/// `ã(j, k) = 2 ⟨s_j| ō_k o_j o_j o_k |s_j⟩` for unit states `s` and the
/// per-segment bases and collapse results.
pub fn interference_matrix(states: &Matrix, bases: &[Matrix], collapses: &[CollapseResult]) -> Result<Matrix> {
    let n = states.nrows();
    if bases.len() != n || collapses.len() != n {
        return Err(QuarkError::contract(format!(
            "interference matrix needs one basis and collapse result per segment: {} segments, {} bases, {} results",
            n,
            bases.len(),
            collapses.len()
        )));
    }
    let occur: Vec<Matrix> = bases
        .iter()
        .zip(collapses)
        .map(|(b, c)| event_operator(b, &c.top).matrix)
        .collect();
    let absent: Vec<Matrix> = bases
        .iter()
        .zip(collapses)
        .map(|(b, c)| event_operator(b, &c.bottom).matrix)
        .collect();
    let mut out = Matrix::zeros((n, n));
    for j in 0..n {
        let s = states.row(j);
        for k in 0..n {
            let v = occur[k].dot(&s);
            let v = occur[j].dot(&v);
            let v = occur[j].dot(&v);
            let v = absent[k].dot(&v);
            out[[j, k]] = 2.0 * s.dot(&v);
        }
    }
    Ok(out)
}

/// `t = ratio · (max − min) + min` over every entry of `a`.
pub fn filter_threshold(a: &Matrix, ratio: f64) -> f64 {
    let (min, max) = a
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    ratio * (max - min) + min
}

/// 1 where `i > w` for row segment `i` and column segment `w`, else 0.
pub fn temporal_mask(segments: usize, per_electrode: usize) -> Matrix {
    Matrix::from_shape_fn((segments, segments), |(j, k)| {
        let (_, i) = segment_coords(j + 1, per_electrode);
        let (_, w) = segment_coords(k + 1, per_electrode);
        if i > w {
            1.0
        } else {
            0.0
        }
    })
}

/// Keep/drop indicator for the ReLU'd matrix `rectified`.
///
/// With `temporal` off every position passes the time test, which is the
/// ablation that drops the `i > w` requirement.
pub fn keep_mask(rectified: &Matrix, ratio: f64, per_electrode: usize, temporal: bool) -> Result<Matrix> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(QuarkError::config(format!("filter ratio {ratio} outside [0, 1]")));
    }
    let n = rectified.nrows();
    let t = filter_threshold(rectified, ratio);
    let time = if temporal {
        temporal_mask(n, per_electrode)
    } else {
        Matrix::ones((n, n))
    };
    Ok(Matrix::from_shape_fn((n, n), |(j, k)| {
        if time[[j, k]] > 0.0 && rectified[[j, k]] >= t {
            1.0
        } else {
            0.0
        }
    }))
}

/// `A° = relu(A)` restricted to entries at or above the ratio threshold
/// with `i > w`.
pub fn apply_filter(a: &Matrix, ratio: f64, per_electrode: usize, temporal: bool) -> Result<Matrix> {
    let rectified = relu(a);
    let mask = keep_mask(&rectified, ratio, per_electrode, temporal)?;
    Ok(rectified * mask)
}

pub use crate::numerics::ops::row_normalize as normalize_rows;

#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyPair {
    pub continuity: Matrix,
    pub interference: Matrix,
    pub continuity_normalized: Matrix,
    pub interference_normalized: Matrix,
    pub alpha: f64,
    pub beta: f64,
}

impl AdjacencyPair {
    /// Filter and normalize raw continuity and interference matrices.
    pub fn build(
        raw_continuity: &Matrix,
        raw_interference: &Matrix,
        alpha: f64,
        beta: f64,
        per_electrode: usize,
        temporal: bool,
    ) -> Result<Self> {
        let continuity = apply_filter(raw_continuity, alpha, per_electrode, temporal)?;
        let interference = apply_filter(raw_interference, beta, per_electrode, temporal)?;
        Ok(Self {
            continuity_normalized: row_normalize(&continuity),
            interference_normalized: row_normalize(&interference),
            continuity,
            interference,
            alpha,
            beta,
        })
    }
}

/// Write a matrix as whitespace-separated rows.
pub fn write_matrix_text(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| QuarkError::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| QuarkError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{collapse_probabilities, interference_value, unit_rows};
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn continuity_examples() {
        let h = 0.5f64.sqrt();
        let same = array![[h, h], [h, h]];
        let a = continuity_matrix(&same);
        assert!(a.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let orth = array![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(continuity_matrix(&orth), Matrix::eye(2));
    }

    #[test]
    fn continuity_is_a_gram_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random(&mut rng, 6, 4);
        let a = continuity_matrix(&x);
        for j in 0..6 {
            assert!((a[[j, j]] - x.row(j).dot(&x.row(j))).abs() < 1e-12);
            for k in 0..6 {
                assert!((a[[j, k]] - a[[k, j]]).abs() < 1e-12);
                assert!((a[[j, k]] - x.row(j).dot(&x.row(k))).abs() < 1e-12);
            }
        }
    }

    fn collapses(states: &Matrix, bases: &[Matrix], c: usize) -> Vec<CollapseResult> {
        bases
            .iter()
            .enumerate()
            .map(|(j, b)| collapse_probabilities(states.row(j), b, c).unwrap())
            .collect()
    }

    #[test]
    fn interference_zero_state_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let bases: Vec<Matrix> = (0..3).map(|_| random(&mut rng, 4, 3)).collect();
        let mut states = unit_rows(&random(&mut rng, 3, 3)).0;
        states.row_mut(1).fill(0.0);
        let cs = collapses(&states, &bases, 2);
        let a = interference_matrix(&states, &bases, &cs).unwrap();
        assert!(a.row(1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn interference_single_segment_delegates() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let basis = random(&mut rng, 4, 3);
        let states = unit_rows(&random(&mut rng, 1, 3)).0;
        let cs = collapses(&states, std::slice::from_ref(&basis), 1);
        let a = interference_matrix(&states, std::slice::from_ref(&basis), &cs).unwrap();
        let eta = interference_value(
            states.row(0),
            &event_operator(&basis, &cs[0].top),
            &event_operator(&basis, &cs[0].bottom),
            &event_operator(&basis, &cs[0].top),
        );
        assert_eq!(a.dim(), (1, 1));
        assert!((a[[0, 0]] - eta).abs() < 1e-15);
    }

    #[test]
    fn interference_two_segment_hand_case() {
        // Segment 0: standard basis, state e1 -> top {0}, bottom {1}.
        // Segment 1: basis rows [h, h], [h, -h]; state [h, h] -> top {0}, bottom {1}.
        let h = 0.5f64.sqrt();
        let bases = vec![Matrix::eye(2), array![[h, h], [h, -h]]];
        let states = array![[1.0, 0.0], [h, h]];
        let cs = collapses(&states, &bases, 1);
        let a = interference_matrix(&states, &bases, &cs).unwrap();
        // Brute-force chain products with explicit operators.
        let o0 = array![[1.0, 0.0], [0.0, 0.0]];
        let n0 = array![[0.0, 0.0], [0.0, 1.0]];
        let o1 = array![[0.5, 0.5], [0.5, 0.5]];
        let n1 = array![[0.5, -0.5], [-0.5, 0.5]];
        let chain = |s: ndarray::ArrayView1<f64>, past: &Matrix, not: &Matrix, fut: &Matrix| {
            2.0 * s.dot(&not.dot(&fut.dot(&fut.dot(&past.dot(&s)))))
        };
        let expect = array![
            [chain(states.row(0), &o0, &n0, &o0), chain(states.row(0), &o1, &n1, &o0)],
            [chain(states.row(1), &o0, &n0, &o1), chain(states.row(1), &o1, &n1, &o1)],
        ];
        // (0,1): n1 o0 o0 o1 e1 = [0.25, -0.25], times 2 e1 -> 0.5
        assert!((expect[[0, 1]] - 0.5).abs() < 1e-12);
        // (1,0): n0 o1 o1 o0 s = [0, h/2], times 2 s -> 0.5
        assert!((expect[[1, 0]] - 0.5).abs() < 1e-12);
        assert!((&a - &expect).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn interference_requires_collapse_per_segment() {
        let states = Matrix::eye(2);
        let bases = vec![Matrix::eye(2), Matrix::eye(2)];
        let cs = collapses(&states, &bases[..1], 1);
        assert!(matches!(
            interference_matrix(&states, &bases, &cs),
            Err(QuarkError::Contract(_))
        ));
    }

    #[test]
    fn ratio_zero_keeps_all_masked_nonnegative() {
        // one electrode, 3 segments
        let a = array![[1.0, -2.0, 3.0], [4.0, 5.0, 0.5], [0.0, 7.0, 8.0]];
        let f = apply_filter(&a, 0.0, 3, true).unwrap();
        assert_eq!(f, array![[0.0, 0.0, 0.0], [4.0, 0.0, 0.0], [0.0, 7.0, 0.0]]);
    }

    #[test]
    fn ratio_one_keeps_only_maximum() {
        let a = array![[1.0, 2.0, 3.0], [9.0, 5.0, 0.5], [9.0, 7.0, 8.0]];
        let f = apply_filter(&a, 1.0, 3, true).unwrap();
        assert_eq!(f, array![[0.0, 0.0, 0.0], [9.0, 0.0, 0.0], [9.0, 0.0, 0.0]]);
    }

    #[test]
    fn mask_ignores_electrodes() {
        // two electrodes, two segments each: j = (m-1)*2 + i
        let mask = temporal_mask(4, 2);
        // row j=2 is (1,2): keeps columns with w=1 -> k=1 and k=3
        assert_eq!(mask.row(1).to_vec(), vec![1.0, 0.0, 1.0, 0.0]);
        // same-time cross-electrode pair (1,1)-(2,1) is masked
        assert_eq!(mask[[2, 0]], 0.0);
    }

    #[test]
    fn ratio_out_of_range_rejected() {
        assert!(apply_filter(&Matrix::eye(2), 1.5, 2, true).is_err());
    }

    #[test]
    fn row_normalize_zero_rows_kept() {
        let n = normalize_rows(&array![[1.0, 3.0], [0.0, 0.0]]);
        assert_eq!(n, array![[0.25, 0.75], [0.0, 0.0]]);
    }

    proptest! {
        #[test]
        fn filtered_invariants(seed in 0u64..500, electrodes in 1usize..4, per in 1usize..6, ratio in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = electrodes * per;
            let a = random(&mut rng, n, n);
            let f = apply_filter(&a, ratio, per, true).unwrap();
            let norm = normalize_rows(&f);
            for j in 0..n {
                let (_, i) = segment_coords(j + 1, per);
                for k in 0..n {
                    let (_, w) = segment_coords(k + 1, per);
                    prop_assert!(f[[j, k]] >= 0.0);
                    if i <= w {
                        prop_assert_eq!(f[[j, k]], 0.0);
                    }
                }
                let s: f64 = norm.row(j).sum();
                prop_assert!(s.abs() < 1e-12 || (s - 1.0).abs() < 1e-12);
                prop_assert!(norm.row(j).iter().all(|v| v.is_finite()));
            }
        }

        #[test]
        fn nonzero_count_monotone_in_ratio(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random(&mut rng, 8, 8);
            let mut prev = usize::MAX;
            for step in 0..=20 {
                let ratio = step as f64 / 20.0;
                let count = apply_filter(&a, ratio, 4, true).unwrap().iter().filter(|v| **v != 0.0).count();
                prop_assert!(count <= prev);
                prev = count;
            }
        }
    }
}
