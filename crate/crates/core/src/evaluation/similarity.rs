//! Content, color and structural similarity between items.

use ndarray::{Array2, ArrayView1};

use crate::error::{QuarkError, Result};
use crate::numerics::Matrix;

/// Cosine of two representations; 0 if either is zero.
pub fn content_similarity(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(&b) / (na * nb)
}

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

/// Mean over pixels of `1 − |a − b| / max(a, b)`; pixel pairs that are both
/// zero count as identical.
pub fn color_similarity(a: &Matrix, b: &Matrix) -> Result<f64> {
    same_shape("color_similarity", a, b)?;
    if a.is_empty() {
        return Err(QuarkError::contract("color similarity of empty images"));
    }
    if a.iter().chain(b.iter()).any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(QuarkError::contract("pixel values must be finite and non-negative"));
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let m = x.max(y);
            if m == 0.0 {
                1.0
            } else {
                1.0 - (x - y).abs() / m
            }
        })
        .sum();
    Ok(sum / a.len() as f64)
}

/// 3×3 Sobel gradient magnitude with edge-replicated borders.
pub fn gradient_magnitude(img: &Matrix) -> Matrix {
    let (h, w) = img.dim();
    let at = |r: isize, c: isize| img[[r.clamp(0, h as isize - 1) as usize, c.clamp(0, w as isize - 1) as usize]];
    Array2::from_shape_fn((h, w), |(r, c)| {
        let (r, c) = (r as isize, c as isize);
        let gx = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1))
            - (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
        let gy = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1))
            - (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
        (gx * gx + gy * gy).sqrt()
    })
}

pub const EDGE_PERCENTILE: f64 = 0.9;

/// Binary edge map: nonzero magnitude at or above the image's 90th
/// percentile (nearest-rank). Flat images have no edges.
pub fn edge_map(img: &Matrix) -> Array2<bool> {
    let mag = gradient_magnitude(img);
    let mut sorted: Vec<f64> = mag.iter().copied().collect();
    if sorted.is_empty() {
        return Array2::from_elem(mag.dim(), false);
    }
    sorted.sort_by(f64::total_cmp);
    let rank = ((EDGE_PERCENTILE * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let threshold = sorted[rank - 1];
    mag.mapv(|m| m > 0.0 && m >= threshold)
}

/// `1 − |edge_a XOR edge_b| / pixels`.
pub fn edge_similarity(a: &Array2<bool>, b: &Array2<bool>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(QuarkError::Shape {
            op: "edge_similarity",
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    if a.is_empty() {
        return Ok(1.0);
    }
    let differing = a.iter().zip(b).filter(|(x, y)| x != y).count();
    Ok(1.0 - differing as f64 / a.len() as f64)
}

pub fn structural_similarity(a: &Matrix, b: &Matrix) -> Result<f64> {
    same_shape("structural_similarity", a, b)?;
    edge_similarity(&edge_map(a), &edge_map(b))
}
