//! Train on a generated 8-class dataset and report P@10 before and after.
//!
//! ```text
//! cargo run --release --example train_synthetic -- [epochs] [learning_rate]
//! ```

use std::time::Instant;

use quark::config::RunConfig;
use quark::pipeline::Experiment;

fn main() -> quark::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map_or(Ok(10), |a| a.parse()).expect("epochs");
    let lr: f64 = args.next().map_or(Ok(1e-4), |a| a.parse()).expect("learning rate");

    let mut cfg = RunConfig::default();
    cfg.synthetic = Some((8, 50));
    cfg.train.epochs = epochs;
    cfg.train.learning_rate = lr;

    let started = Instant::now();
    let exp = Experiment::from_config(cfg)?;
    let init = exp.init_params()?;
    let before = exp.evaluate(&init)?;
    println!("untrained P@10 = {:.4}", before.mean.precision);

    let outcome = exp.train(init)?;
    println!("epoch\tbpr\torth\tcont\ttotal\tseconds");
    for (rec, secs) in outcome.log.iter().zip(&outcome.wall_times) {
        println!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.1}",
            rec.epoch, rec.terms.bpr, rec.terms.orthogonality, rec.terms.continuity, rec.total, secs
        );
    }
    let after = exp.evaluate(&outcome.params)?;
    println!("trained P@10 = {:.4}  R@10 = {:.4}  F1@10 = {:.4}", after.mean.precision, after.mean.recall, after.mean.f1);
    println!("total time {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}
