use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::Matrix;

/// Glorot-uniform draw for a `rows × cols` weight: values in
/// `±sqrt(6 / (rows + cols))`.
pub fn xavier_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let bound = xavier_bound(rows, cols);
    Matrix::from_shape_fn((rows, cols), |_| rng.random_range(-bound..=bound))
}

pub fn xavier_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

/// Seeded [`xavier_uniform`].
pub fn xavier_init(shape: (usize, usize), seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    xavier_uniform(shape.0, shape.1, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_is_bit_identical() {
        let a = xavier_init((7, 5), 3);
        let b = xavier_init((7, 5), 3);
        assert_eq!(a, b);
        assert_ne!(a, xavier_init((7, 5), 4));
    }

    #[test]
    fn values_within_bound() {
        let m = xavier_init((100, 100), 7);
        let bound = (6.0f64 / 200.0).sqrt();
        assert!(m.iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn empirical_mean_near_zero() {
        // Uniform(-a, a): sigma = a / sqrt(3).
        let m = xavier_init((100, 100), 99);
        let a = (6.0f64 / 200.0).sqrt();
        let sigma = a / 3f64.sqrt();
        let mean = m.mean().unwrap();
        assert!(mean.abs() < 3.0 * sigma / 100.0, "mean {mean}");
    }
}
