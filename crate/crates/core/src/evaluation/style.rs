//! Feeling/style detection: how closely recommended images resemble the
//! image the user was viewing, swept over score thresholds.

use std::fmt::Write as _;

use crate::data::{Item, ItemCatalog, ItemId};
use crate::error::{QuarkError, Result};
use crate::evaluation::similarity::{color_similarity, content_similarity, structural_similarity};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StyleMetric {
    Content,
    Color,
    Structural,
    Synthesis,
    Mixed,
}

impl StyleMetric {
    pub const ALL: [StyleMetric; 5] = [Self::Content, Self::Color, Self::Structural, Self::Synthesis, Self::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            Self::Content => "content",
            Self::Color => "color",
            Self::Structural => "structural",
            Self::Synthesis => "synthesis",
            Self::Mixed => "mixed",
        }
    }
}

/// Scores of one recommended image against the viewed one. Content is
/// clamped to `[0, 1]` before it enters the product.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StyleScores {
    pub content: f64,
    pub color: f64,
    pub structural: f64,
    pub synthesis: f64,
    pub mixed: f64,
}

impl StyleScores {
    pub fn get(&self, metric: StyleMetric) -> f64 {
        match metric {
            StyleMetric::Content => self.content,
            StyleMetric::Color => self.color,
            StyleMetric::Structural => self.structural,
            StyleMetric::Synthesis => self.synthesis,
            StyleMetric::Mixed => self.mixed,
        }
    }
}

/// `None` when either image is missing.
pub fn score_pair(viewed: &Item, recommended: &Item, precision: f64) -> Result<Option<StyleScores>> {
    let (Some(a), Some(b)) = (&viewed.image, &recommended.image) else {
        return Ok(None);
    };
    let content = content_similarity(viewed.embedding.view(), recommended.embedding.view()).clamp(0.0, 1.0);
    let color = color_similarity(a, b)?;
    let structural = structural_similarity(a, b)?;
    let synthesis = content * color * structural;
    Ok(Some(StyleScores {
        content,
        color,
        structural,
        synthesis,
        mixed: synthesis * precision,
    }))
}

/// One test instance: the viewed item, its recommendations (catalog
/// positions) and its P@k.
#[derive(Clone, Debug)]
pub struct StyleInput {
    pub viewed: ItemId,
    pub recommended: Vec<usize>,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StyleReport {
    pub thresholds: Vec<f64>,
    /// Per recommended image.
    pub scores: Vec<StyleScores>,
    /// Recommended images skipped for lack of an image on either side.
    pub missing: usize,
}

pub fn default_thresholds() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

impl StyleReport {
    /// Percentage of scored images with `score ≥ threshold`.
    pub fn percentage(&self, metric: StyleMetric, threshold: f64) -> f64 {
        if self.scores.is_empty() {
            return 0.0;
        }
        let n = self.scores.iter().filter(|s| s.get(metric) >= threshold).count();
        100.0 * n as f64 / self.scores.len() as f64
    }

    pub fn curve(&self, metric: StyleMetric) -> Vec<(f64, f64)> {
        self.thresholds.iter().map(|&t| (t, self.percentage(metric, t))).collect()
    }

    pub fn mean(&self, metric: StyleMetric) -> f64 {
        if self.scores.is_empty() {
            return 0.0;
        }
        self.scores.iter().map(|s| s.get(metric)).sum::<f64>() / self.scores.len() as f64
    }

    /// `threshold` followed by one percentage column per metric.
    pub fn curves_tsv(&self) -> String {
        let mut out = String::from("threshold");
        for m in StyleMetric::ALL {
            out.push('\t');
            out.push_str(m.name());
        }
        out.push('\n');
        for &t in &self.thresholds {
            let _ = write!(out, "{t}");
            for m in StyleMetric::ALL {
                let _ = write!(out, "\t{}", self.percentage(m, t));
            }
            out.push('\n');
        }
        out
    }
}

pub fn style_report(inputs: &[StyleInput], catalog: &ItemCatalog, thresholds: Vec<f64>) -> Result<StyleReport> {
    let mut scores = Vec::new();
    let mut missing = 0;
    for input in inputs {
        let Some(viewed) = catalog.get(input.viewed) else {
            return Err(QuarkError::Evaluation(format!("viewed item {} is not in the catalog", input.viewed)));
        };
        for &r in &input.recommended {
            match score_pair(viewed, &catalog.items()[r], input.precision)? {
                Some(s) => scores.push(s),
                None => missing += 1,
            }
        }
    }
    if missing > 0 {
        log::warn!("{missing} recommended images skipped for missing image data");
    }
    Ok(StyleReport {
        thresholds,
        scores,
        missing,
    })
}
