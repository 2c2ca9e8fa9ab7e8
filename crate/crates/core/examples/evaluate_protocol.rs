//! The 15-positive / 85-negative top-10 protocol on hand-made queries:
//! an oracle that points at its class mean and one that points away.

use ndarray::Array1;
use quark::data::{generate_synthetic, SyntheticConfig};
use quark::evaluation::{evaluate, random_guess_precision, ProtocolConfig, Query};

fn main() -> quark::Result<()> {
    let data = generate_synthetic(&SyntheticConfig {
        classes: 6,
        per_class: 10,
        embedding: 16,
        ..SyntheticConfig::default()
    })?;
    let cat = &data.catalog;
    let mean_of = |label| {
        let idx = cat.class_indices(label);
        idx.iter().fold(Array1::zeros(cat.embedding_dim()), |acc, &i| acc + &cat.items()[i].embedding) / idx.len() as f64
    };
    let queries = |sign: f64| -> Vec<Query> {
        data.recordings
            .iter()
            .map(|r| Query {
                recording_id: r.recording_id.clone(),
                label: r.label,
                representation: mean_of(r.label) * sign,
            })
            .collect()
    };
    let protocol = ProtocolConfig::default();
    for (name, sign) in [("toward class", 1.0), ("away from class", -1.0)] {
        let report = evaluate(&queries(sign), cat, &protocol)?;
        println!("{name}:");
        print!("{}", report.table());
    }
    println!("random guessing P@10 ≈ {:.4}", random_guess_precision(50_000, &protocol));
    Ok(())
}
