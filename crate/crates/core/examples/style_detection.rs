//! Feeling/style scores between viewed and recommended items: content,
//! color and structural similarity, and their threshold curves.

use quark::data::{generate_synthetic, SyntheticConfig};
use quark::evaluation::style::{default_thresholds, score_pair, style_report, StyleInput, StyleMetric};
use quark::evaluation::similarity::{color_similarity, structural_similarity};
use quark::numerics::Matrix;

fn main() -> quark::Result<()> {
    let flat100 = Matrix::from_elem((8, 8), 100.0);
    let flat50 = Matrix::from_elem((8, 8), 50.0);
    println!("color(100, 50) = {}", color_similarity(&flat100, &flat50)?);
    let step = Matrix::from_shape_fn((8, 8), |(_, c)| if c < 4 { 0.0 } else { 255.0 });
    println!("structural(step, step) = {}", structural_similarity(&step, &step)?);
    println!("structural(step, flat) = {}", structural_similarity(&step, &flat100)?);

    let data = generate_synthetic(&SyntheticConfig {
        classes: 4,
        per_class: 4,
        embedding: 16,
        ..SyntheticConfig::default()
    })?;
    let items = data.catalog.items();
    if let Some(s) = score_pair(&items[0], &items[1], 0.6)? {
        println!("same-class pair: {s:?}");
    }
    let inputs: Vec<StyleInput> = data
        .viewed
        .values()
        .map(|&viewed| StyleInput {
            viewed,
            recommended: vec![0, 1, 2, 30, 31],
            precision: 0.4,
        })
        .collect();
    let report = style_report(&inputs, &data.catalog, default_thresholds())?;
    for metric in [StyleMetric::Content, StyleMetric::Color, StyleMetric::Structural] {
        println!("{:<12} mean {:.3}  ≥0.5: {:.1}%", metric.name(), report.mean(metric), report.percentage(metric, 0.5));
    }
    Ok(())
}
