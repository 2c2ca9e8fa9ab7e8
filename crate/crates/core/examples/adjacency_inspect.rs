//! Forward one synthetic recording through an untrained model and print
//! its filtered adjacency matrices.

use quark::data::{generate_synthetic, SyntheticConfig};
use quark::model::{forward, ModelConfig, ModelParams};
use quark::numerics::Matrix;

fn print_matrix(name: &str, m: &Matrix) {
    let nnz = m.iter().filter(|v| **v != 0.0).count();
    println!("{name} ({}x{}, {nnz} nonzero)", m.nrows(), m.ncols());
    for row in m.rows().into_iter().take(6) {
        let cells: Vec<String> = row.iter().take(12).map(|v| format!("{v:6.3}")).collect();
        println!("  {}", cells.join(" "));
    }
}

fn main() -> quark::Result<()> {
    let cfg = ModelConfig {
        electrodes: 2,
        samples: 120,
        ..ModelConfig::normal()
    };
    let data = generate_synthetic(&SyntheticConfig {
        classes: 2,
        per_class: 1,
        electrodes: cfg.electrodes,
        samples: cfg.samples,
        ..SyntheticConfig::default()
    })?;
    let params = ModelParams::init(&cfg, 0)?;
    let (x, inter) = forward(&data.recordings[0], &params, &cfg)?;

    println!("{} segments, {} per electrode", cfg.segments(), cfg.per_electrode());
    print_matrix("continuity (filtered)", &inter.adjacency.continuity);
    print_matrix("interference (filtered)", &inter.adjacency.interference);
    print_matrix("continuity (row-normalized)", &inter.adjacency.continuity_normalized);
    println!("output embedding: {} values, norm {:.4}", x.len(), x.dot(&x).sqrt());
    Ok(())
}
