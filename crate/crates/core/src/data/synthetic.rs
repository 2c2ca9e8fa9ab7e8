//! Synthetic EEG + item catalog with known class structure.
//!
//! Each class gets a per-electrode mixture of sinusoids; recordings are
//! that template plus Gaussian noise. Items of a class share a mean
//! embedding (plus jitter) and a striped texture image.

use std::f64::consts::PI;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::catalog::{Item, ItemCatalog};
use crate::data::recordings::ViewedItems;
use crate::data::Dataset;
use crate::error::{QuarkError, Result};
use crate::numerics::Matrix;
use crate::preprocess::{EegRecording, Label};

/// Candidate sampling needs this many same-class items...
pub const MIN_POSITIVES: usize = 15;
/// ...and this many items outside any class.
pub const MIN_NEGATIVES: usize = 85;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub per_class: usize,
    pub electrodes: usize,
    pub samples: usize,
    pub embedding: usize,
    /// Requested items per class; raised if needed for candidate sampling.
    pub items_per_class: usize,
    /// Noise standard deviation relative to the template RMS.
    pub noise: f64,
    /// Norm of each class-mean embedding.
    pub separation: f64,
    /// Per-item embedding jitter (expected norm).
    pub jitter: f64,
    pub image_size: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            classes: 8,
            per_class: 50,
            electrodes: 5,
            samples: 360,
            embedding: 64,
            items_per_class: 20,
            noise: 0.1,
            separation: 1.0,
            jitter: 0.5,
            image_size: 32,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// Items per class actually generated.
    pub fn effective_items_per_class(&self) -> usize {
        let outside = MIN_NEGATIVES.div_ceil(self.classes.saturating_sub(1).max(1));
        self.items_per_class.max(MIN_POSITIVES).max(outside)
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Per-class, per-electrode signal templates.
fn templates(cfg: &SyntheticConfig) -> Vec<Matrix> {
    let mut rng = stream(cfg.seed, 1);
    (0..cfg.classes)
        .map(|_| {
            let mut t = Matrix::zeros((cfg.electrodes, cfg.samples));
            for mut row in t.rows_mut() {
                for _ in 0..3 {
                    let freq: f64 = rng.random_range(1.0..40.0);
                    let phase: f64 = rng.random_range(0.0..2.0 * PI);
                    let amp: f64 = rng.random_range(0.5..1.5);
                    for (n, v) in row.iter_mut().enumerate() {
                        *v += amp * (2.0 * PI * freq * n as f64 / cfg.samples as f64 + phase).sin();
                    }
                }
            }
            t
        })
        .collect()
}

fn texture<R: Rng>(size: usize, angle: f64, freq: f64, rng: &mut R) -> Matrix {
    let phase: f64 = rng.random_range(0.0..2.0 * PI);
    let (c, s) = (angle.cos(), angle.sin());
    Matrix::from_shape_fn((size, size), |(y, x)| {
        let u = (x as f64 * c + y as f64 * s) / size as f64;
        let v = 127.5 + 100.0 * (2.0 * PI * freq * u + phase).sin() + 8.0 * gaussian(rng);
        v.clamp(0.0, 255.0).round()
    })
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Dataset> {
    if cfg.classes < 2 {
        return Err(QuarkError::config("synthetic data needs at least 2 classes"));
    }
    if cfg.per_class == 0 || cfg.embedding == 0 || cfg.electrodes == 0 || cfg.samples == 0 {
        return Err(QuarkError::config("synthetic counts and sizes must be positive"));
    }
    if cfg.noise < 0.0 || !cfg.noise.is_finite() {
        return Err(QuarkError::config(format!("noise {} must be a finite non-negative number", cfg.noise)));
    }

    let templates = templates(cfg);
    let mut noise_rng = stream(cfg.seed, 2);
    let mut recordings = Vec::with_capacity(cfg.classes * cfg.per_class);
    for (k, t) in templates.iter().enumerate() {
        let rms = (t.iter().map(|v| v * v).sum::<f64>() / t.len() as f64).sqrt();
        for n in 0..cfg.per_class {
            let signal = t.mapv(|v| v + cfg.noise * rms * gaussian(&mut noise_rng));
            recordings.push(EegRecording::new(signal, Label(k as i64), format!("c{k}-r{n}"))?);
        }
    }

    let mut item_rng = stream(cfg.seed, 3);
    let per = cfg.effective_items_per_class();
    let scale = 1.0 / (cfg.embedding as f64).sqrt();
    let mut items = Vec::with_capacity(cfg.classes * per);
    for k in 0..cfg.classes {
        let center: Array1<f64> =
            Array1::from_shape_fn(cfg.embedding, |_| gaussian(&mut item_rng) * scale * cfg.separation);
        let angle = item_rng.random_range(0.0..PI);
        let freq = item_rng.random_range(1.0..8.0);
        for n in 0..per {
            let embedding = center.mapv(|c| c + gaussian(&mut item_rng) * scale * cfg.jitter);
            let image = (cfg.image_size > 0).then(|| texture(cfg.image_size, angle, freq, &mut item_rng));
            items.push(Item {
                id: (k * per + n + 1) as u64,
                label: Label(k as i64),
                embedding,
                image,
            });
        }
    }
    let catalog = ItemCatalog::new(items)?;

    let mut view_rng = stream(cfg.seed, 4);
    let viewed: ViewedItems = recordings
        .iter()
        .map(|r| {
            let class = catalog.class_indices(r.label);
            let item = &catalog.items()[class[view_rng.random_range(0..class.len())]];
            (r.recording_id.clone(), item.id)
        })
        .collect();

    Ok(Dataset {
        recordings,
        catalog,
        viewed,
    })
}

/// Parse `CxN` (classes × recordings per class).
pub fn parse_shape(spec: &str) -> Result<(usize, usize)> {
    let bad = || QuarkError::config(format!("expected CLASSESxPER_CLASS, got {spec:?}"));
    let (c, n) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((c.trim().parse().map_err(|_| bad())?, n.trim().parse().map_err(|_| bad())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(noise: f64) -> SyntheticConfig {
        SyntheticConfig {
            classes: 3,
            per_class: 6,
            samples: 60,
            embedding: 8,
            image_size: 8,
            noise,
            ..Default::default()
        }
    }

    fn correlation(a: &Matrix, b: &Matrix) -> f64 {
        let ma = a.mean().unwrap();
        let mb = b.mean().unwrap();
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn zero_noise_instances_identical() {
        let d = generate_synthetic(&small(0.0)).unwrap();
        let c = correlation(&d.recordings[0].signal, &d.recordings[1].signal);
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eight_by_fifty_counts() {
        let d = generate_synthetic(&SyntheticConfig {
            image_size: 4,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(d.recordings.len(), 400);
        for label in d.catalog.labels() {
            assert!(d.catalog.class_size(label) >= MIN_POSITIVES);
            assert!(d.catalog.outside_count(label) >= MIN_NEGATIVES);
        }
        assert_eq!(d.viewed.len(), 400);
    }

    #[test]
    fn two_classes_still_feasible() {
        let d = generate_synthetic(&SyntheticConfig {
            classes: 2,
            per_class: 2,
            samples: 20,
            image_size: 0,
            ..Default::default()
        })
        .unwrap();
        assert!(d.catalog.outside_count(Label(0)) >= MIN_NEGATIVES);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(&small(0.3)).unwrap();
        let b = generate_synthetic(&small(0.3)).unwrap();
        assert_eq!(a.recordings, b.recordings);
        assert_eq!(a.catalog, b.catalog);
        let c = generate_synthetic(&SyntheticConfig { seed: 1, ..small(0.3) }).unwrap();
        assert_ne!(a.recordings, c.recordings);
    }

    #[test]
    fn perceptron_separates_high_snr() {
        let d = generate_synthetic(&SyntheticConfig {
            classes: 4,
            per_class: 20,
            samples: 80,
            image_size: 0,
            noise: 0.1,
            ..Default::default()
        })
        .unwrap();
        let dim = d.recordings[0].signal.len();
        let mut w = vec![vec![0.0; dim]; 4];
        let score = |w: &[f64], x: &Matrix| w.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
        for _ in 0..20 {
            for r in &d.recordings {
                let y = r.label.0 as usize;
                let pred = (0..4).max_by(|&a, &b| score(&w[a], &r.signal).total_cmp(&score(&w[b], &r.signal))).unwrap();
                if pred != y {
                    for (k, x) in r.signal.iter().enumerate() {
                        w[y][k] += x;
                        w[pred][k] -= x;
                    }
                }
            }
        }
        let correct = d
            .recordings
            .iter()
            .filter(|r| {
                let pred = (0..4).max_by(|&a, &b| score(&w[a], &r.signal).total_cmp(&score(&w[b], &r.signal))).unwrap();
                pred == r.label.0 as usize
            })
            .count();
        assert!(correct as f64 / d.recordings.len() as f64 > 0.9, "{correct}");
    }

    #[test]
    fn shape_spec() {
        assert_eq!(parse_shape("8x50").unwrap(), (8, 50));
        assert!(parse_shape("8*50").is_err());
    }
}
