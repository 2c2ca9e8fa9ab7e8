//! Train every single-switch variant on the same synthetic split and print
//! a metric table.
//!
//! `cargo run --release --example ablation -- [epochs]`

use quark::config::RunConfig;
use quark::pipeline::{ablation_table, load_dataset, run_ablations, Ablation};

fn main() -> quark::Result<()> {
    let epochs = std::env::args().nth(1).map_or(2, |v| v.parse().expect("epochs"));
    let mut cfg = RunConfig::default();
    cfg.synthetic = Some((8, 50));
    cfg.train.epochs = epochs;
    let data = load_dataset(&cfg)?;
    let rows = run_ablations(&cfg, &data, &Ablation::ALL)?;
    print!("{}", ablation_table(&rows));
    Ok(())
}
