//! Precision of an untrained model on a many-class synthetic set, next to
//! the analytic chance level of the 15-positive / 85-negative protocol.
//!
//! `cargo run --release --example untrained_baseline -- [classes] [per_class] [jitter] [seed]`

use std::time::Instant;

use quark::config::RunConfig;
use quark::data::{generate_synthetic, SyntheticConfig};
use quark::evaluation::random_guess_precision;
use quark::pipeline::Experiment;

fn main() -> quark::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let classes = args.first().map_or(100, |v| v.parse().expect("classes"));
    let per_class = args.get(1).map_or(40, |v| v.parse().expect("per_class"));
    let jitter = args.get(2).map_or(10.0, |v| v.parse().expect("jitter"));
    let seed = args.get(3).map_or(0, |v| v.parse().expect("seed"));

    let start = Instant::now();
    let cfg = RunConfig {
        seed,
        ..RunConfig::default()
    };
    let data = generate_synthetic(&SyntheticConfig {
        classes,
        per_class,
        jitter,
        seed,
        ..SyntheticConfig::default()
    })?;
    let exp = Experiment::new(cfg, data)?;
    let report = exp.evaluate(&exp.init_params()?)?;
    println!("test instances    {}", report.instances.len());
    println!("untrained P@10    {:.4}", report.mean.precision);
    println!("chance P@10       {:.4}", random_guess_precision(20_000, &exp.config.protocol));
    println!("elapsed           {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
