use super::tensor::{all_finite, Matrix, Parameter};
use crate::error::{QuarkError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam with one moment pair per parameter.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[Parameter]) -> Self {
        Self {
            config,
            step: 0,
            first: params.iter().map(|p| Matrix::zeros(p.value().dim())).collect(),
            second: params.iter().map(|p| Matrix::zeros(p.value().dim())).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one update from each parameter's gradient buffer. Parameters
    /// without a gradient are treated as having zero gradient. If any
    /// gradient is non-finite no parameter is touched.
    pub fn step(&mut self, params: &mut [Parameter]) -> Result<()> {
        if params.len() != self.first.len() {
            return Err(QuarkError::contract(format!(
                "optimizer tracks {} parameters, got {}",
                self.first.len(),
                params.len()
            )));
        }
        for (p, m) in params.iter().zip(&self.first) {
            if let Some(g) = p.tensor.grad() {
                if g.dim() != m.dim() {
                    return Err(QuarkError::Shape {
                        op: "adam_step",
                        left: m.shape().to_vec(),
                        right: g.shape().to_vec(),
                    });
                }
                if !all_finite(g) {
                    return Err(QuarkError::NonFinite(format!("gradient of {}", p.name)));
                }
            }
        }

        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);

        for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            let g = p.tensor.grad().cloned().unwrap_or_else(|| Matrix::zeros(m.dim()));
            ndarray::Zip::from(&mut *m)
                .and(&mut *v)
                .and(&g)
                .for_each(|m, v, &g| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                });
            let (m, v) = (&*m, &*v);
            ndarray::Zip::from(p.tensor.value_mut())
                .and(m)
                .and(v)
                .for_each(|w, &m, &v| *w -= learning_rate * (m / c1) / ((v / c2).sqrt() + epsilon));
        }
        Ok(())
    }
}
