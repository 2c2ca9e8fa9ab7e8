//! Mean-normalize a recording and cut it into sliding-window segments.
//!
//! `cargo run --example preprocess_segments -- [window] [step]`

use quark::numerics::Matrix;
use quark::preprocess::{mean_normalize, segment_count, sliding_window, EegRecording, Label};
use quark::quantum::unit_rows;

fn main() -> quark::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer")).collect();
    let window = args.first().copied().unwrap_or(15);
    let step = args.get(1).copied().unwrap_or(25);

    // Two electrodes, 360 samples of a slow and a fast sine.
    let signal = Matrix::from_shape_fn((2, 360), |(m, t)| {
        let f = if m == 0 { 0.02 } else { 0.11 };
        (2.0 * std::f64::consts::PI * f * t as f64).sin() * 40.0 + 4200.0
    });
    let rec = EegRecording::new(signal, Label(3), "demo")?;
    let norm = mean_normalize(&rec.signal);
    println!("row means after normalization: {:?}", norm.signal.rows().into_iter().map(|r| r.mean().unwrap()).collect::<Vec<_>>());

    let segs = sliding_window(&norm.signal, window, step)?;
    println!(
        "window {window}, step {step}: {} segments per electrode (formula {}), {} total",
        segs.per_electrode(),
        segment_count(360, window, step),
        segs.len()
    );
    let (states, degenerate) = unit_rows(segs.matrix());
    for i in 1..=3.min(segs.per_electrode()) {
        let s = segs.get(1, i)?;
        println!("segment (1,{i}) first values {:.3?}", &s.to_vec()[..4.min(window)]);
    }
    let norms: Vec<f64> = states.rows().into_iter().take(4).map(|r| r.dot(&r).sqrt()).collect();
    println!("unit state norms {norms:.6?}; degenerate segments: {}", degenerate.iter().filter(|d| **d).count());
    Ok(())
}
