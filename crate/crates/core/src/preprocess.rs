//! Mean normalization and sliding-window segmentation of raw EEG.
//!
//! Coordinates follow the usual 1-based convention: electrode `m` in
//! `1..=M`, segment `i` in `1..=℧`, and flat segment index
//! `j = (m − 1)·℧ + i` in `1..=|Φ|`. Storage is 0-based; row `j − 1` of
//! [`SegmentSet::matrix`] holds segment `j`.

use std::fmt;

use ndarray::{s, ArrayView1};

use crate::error::{QuarkError, Result};
use crate::numerics::Matrix;

/// Class identifier attached to a recording or an item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub i64);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::str::FromStr for Label {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().parse().map(Label)
    }
}

/// One `M × N` raw signal matrix with its class.
#[derive(Clone, Debug, PartialEq)]
pub struct EegRecording {
    pub signal: Matrix,
    pub label: Label,
    pub recording_id: String,
}

impl EegRecording {
    pub fn new(signal: Matrix, label: Label, recording_id: impl Into<String>) -> Result<Self> {
        let recording_id = recording_id.into();
        if signal.nrows() == 0 || signal.ncols() == 0 {
            return Err(QuarkError::contract(format!(
                "recording {recording_id} has empty signal {:?}",
                signal.shape()
            )));
        }
        if !signal.iter().all(|v| v.is_finite()) {
            return Err(QuarkError::NonFinite(format!("signal of recording {recording_id}")));
        }
        Ok(Self {
            signal,
            label,
            recording_id,
        })
    }

    pub fn electrodes(&self) -> usize {
        self.signal.nrows()
    }

    pub fn samples(&self) -> usize {
        self.signal.ncols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub signal: Matrix,
    /// Set when the whole recording is constant.
    pub degenerate: bool,
}

/// `(x − mean(x)) / (max(x) − min(x))` with statistics over the whole
/// matrix. Outputs lie in `[−1, 1]`. A constant recording maps to zeros.
pub fn mean_normalize(signal: &Matrix) -> Normalized {
    let n = signal.len() as f64;
    let mean = signal.sum() / n;
    let (min, max) = signal
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;
    if !(range > 0.0) {
        return Normalized {
            signal: Matrix::zeros(signal.dim()),
            degenerate: true,
        };
    }
    Normalized {
        signal: signal.mapv(|v| ((v - mean) / range).clamp(-1.0, 1.0)),
        degenerate: false,
    }
}

/// Segments per electrode, `℧ = ⌊(N − Λ + Δ) / Δ⌋`.
pub fn segment_count(samples: usize, width: usize, step: usize) -> usize {
    if width == 0 || step == 0 || width > samples {
        return 0;
    }
    (samples - width + step) / step
}

/// All windows of a normalized recording, indexed by `(m, i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentSet {
    segments: Matrix,
    electrodes: usize,
    per_electrode: usize,
    width: usize,
    step: usize,
}

impl SegmentSet {
    /// `|Φ| × Λ` matrix, rows in flat-index order.
    pub fn matrix(&self) -> &Matrix {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn electrodes(&self) -> usize {
        self.electrodes
    }

    /// `℧`.
    pub fn per_electrode(&self) -> usize {
        self.per_electrode
    }

    /// `Λ`.
    pub fn width(&self) -> usize {
        self.width
    }

    /// `Δ`.
    pub fn step(&self) -> usize {
        self.step
    }

    /// Segment `(m, i)`, both 1-based.
    pub fn get(&self, m: usize, i: usize) -> Result<ArrayView1<'_, f64>> {
        let j = flat_index(m, i, self.electrodes, self.per_electrode)?;
        Ok(self.segments.row(j - 1))
    }
}

/// Cut each electrode row into `℧` windows of `width` samples, starting
/// every `step` samples. Gaps between windows (step > width) are allowed.
pub fn sliding_window(x: &Matrix, width: usize, step: usize) -> Result<SegmentSet> {
    let (electrodes, samples) = x.dim();
    if width == 0 || step == 0 {
        return Err(QuarkError::config("window width and step must be at least 1"));
    }
    if width > samples {
        return Err(QuarkError::config(format!(
            "window width {width} exceeds signal length {samples}"
        )));
    }
    if step > samples {
        return Err(QuarkError::config(format!(
            "sliding step {step} exceeds signal length {samples}"
        )));
    }
    let per_electrode = segment_count(samples, width, step);
    assert!((per_electrode - 1) * step + width <= samples);

    let mut segments = Matrix::zeros((electrodes * per_electrode, width));
    for m in 0..electrodes {
        for i in 0..per_electrode {
            let start = i * step;
            segments
                .row_mut(m * per_electrode + i)
                .assign(&x.slice(s![m, start..start + width]));
        }
    }
    Ok(SegmentSet {
        segments,
        electrodes,
        per_electrode,
        width,
        step,
    })
}

/// `j = (m − 1)·℧ + i`, all 1-based.
pub fn flat_index(m: usize, i: usize, electrodes: usize, per_electrode: usize) -> Result<usize> {
    if m == 0 || m > electrodes || i == 0 || i > per_electrode {
        return Err(QuarkError::contract(format!(
            "segment ({m}, {i}) outside 1..={electrodes} x 1..={per_electrode}"
        )));
    }
    Ok((m - 1) * per_electrode + i)
}

/// Inverse of [`flat_index`]: `(m, i)` for 1-based `j`.
pub fn segment_coords(j: usize, per_electrode: usize) -> (usize, usize) {
    debug_assert!(j >= 1 && per_electrode >= 1);
    ((j - 1) / per_electrode + 1, (j - 1) % per_electrode + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn constant_signal_is_degenerate() {
        let n = mean_normalize(&array![[5.0, 5.0, 5.0]]);
        assert!(n.degenerate);
        assert_eq!(n.signal, array![[0.0, 0.0, 0.0]]);
    }

    #[test]
    fn normalize_hand_case() {
        let n = mean_normalize(&array![[1.0, 2.0, 3.0]]);
        assert!(!n.degenerate);
        assert_eq!(n.signal, array![[-0.5, 0.0, 0.5]]);
    }

    #[test]
    fn stats_span_whole_matrix() {
        // Per-electrode stats would map both rows to [-0.5, 0, 0.5].
        let n = mean_normalize(&array![[0.0, 1.0, 2.0], [10.0, 11.0, 12.0]]);
        assert!((n.signal[[0, 0]] - (-6.0 / 12.0)).abs() < 1e-15);
        assert!((n.signal[[1, 2]] - (6.0 / 12.0)).abs() < 1e-15);
    }

    #[test]
    fn windows_by_hand() {
        let x = array![[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]];
        let set = sliding_window(&x, 3, 2).unwrap();
        assert_eq!(set.per_electrode(), 3);
        assert_eq!(set.matrix(), &array![[1.0, 2.0, 3.0], [3.0, 4.0, 5.0], [5.0, 6.0, 7.0]]);
    }

    #[test]
    fn whole_row_window() {
        let x = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let set = sliding_window(&x, 3, 3).unwrap();
        assert_eq!(set.per_electrode(), 1);
        assert_eq!(set.matrix(), &x);
    }

    #[test]
    fn default_config_segment_counts() {
        let x = Matrix::zeros((5, 360));
        let set = sliding_window(&x, 15, 25).unwrap();
        assert_eq!(set.per_electrode(), 14);
        assert_eq!(set.len(), 70);
        // last window ends at 13 * 25 + 15 = 340 <= 360
        assert!((set.per_electrode() - 1) * 25 + 15 <= 360);
    }

    #[test]
    fn width_longer_than_signal_is_config_error() {
        let err = sliding_window(&Matrix::zeros((1, 4)), 5, 1).unwrap_err();
        assert!(matches!(err, QuarkError::Config(_)));
    }

    #[test]
    fn flat_index_examples() {
        assert_eq!(flat_index(1, 1, 5, 14).unwrap(), 1);
        assert_eq!(flat_index(2, 1, 5, 14).unwrap(), 15);
        assert_eq!(flat_index(5, 14, 5, 14).unwrap(), 70);
        assert!(flat_index(0, 1, 5, 14).is_err());
        assert!(flat_index(6, 1, 5, 14).is_err());
        assert!(flat_index(1, 15, 5, 14).is_err());
    }

    #[test]
    fn get_uses_one_based_coordinates() {
        let x = array![[1.0, 2.0, 3.0, 4.0], [5.0, 6.0, 7.0, 8.0]];
        let set = sliding_window(&x, 2, 2).unwrap();
        assert_eq!(set.get(2, 1).unwrap().to_vec(), vec![5.0, 6.0]);
        assert_eq!(set.get(1, 2).unwrap().to_vec(), vec![3.0, 4.0]);
        assert!(set.get(3, 1).is_err());
    }

    fn brute_force_count(n: usize, width: usize, step: usize) -> usize {
        let mut count = 0;
        let mut start = 0;
        while start + width <= n {
            count += 1;
            start += step;
        }
        count
    }

    proptest! {
        #[test]
        fn normalized_range_bounded(values in proptest::collection::vec(-1e6f64..1e6, 1..60)) {
            let m = Matrix::from_shape_vec((1, values.len()), values).unwrap();
            let n = mean_normalize(&m);
            prop_assert!(n.signal.iter().all(|v| (-1.0..=1.0).contains(v)));
        }

        #[test]
        fn segment_count_matches_enumeration(n in 1usize..200, width in 1usize..60, step in 1usize..60) {
            prop_assume!(width <= n && step <= n);
            let x = Matrix::zeros((2, n));
            let set = sliding_window(&x, width, step).unwrap();
            prop_assert_eq!(set.per_electrode(), brute_force_count(n, width, step));
            prop_assert_eq!(set.len(), 2 * set.per_electrode());
            prop_assert!((set.per_electrode() - 1) * step + width <= n);
        }

        #[test]
        fn tiling_windows_reconstruct_prefix(n in 1usize..120, width in 1usize..30) {
            prop_assume!(width <= n);
            let row: Vec<f64> = (0..n).map(|v| v as f64 * 0.25 - 3.0).collect();
            let x = Matrix::from_shape_vec((1, n), row.clone()).unwrap();
            let set = sliding_window(&x, width, width).unwrap();
            let joined: Vec<f64> = set.matrix().iter().copied().collect();
            prop_assert_eq!(&joined[..], &row[..joined.len()]);
        }

        #[test]
        fn flat_index_is_a_bijection(electrodes in 1usize..8, per in 1usize..20) {
            let mut seen = vec![false; electrodes * per];
            for m in 1..=electrodes {
                for i in 1..=per {
                    let j = flat_index(m, i, electrodes, per).unwrap();
                    prop_assert!(!seen[j - 1]);
                    seen[j - 1] = true;
                    prop_assert_eq!(segment_coords(j, per), (m, i));
                }
            }
            prop_assert!(seen.into_iter().all(|s| s));
        }
    }
}
