//! Compare analytic gradients of the full training objective with central
//! finite differences on a toy configuration.

use quark::data::{Item, ItemCatalog};
use quark::model::{prepare, ModelConfig, ModelParams};
use quark::numerics::gradcheck::{central_differences, relative_error};
use quark::numerics::Matrix;
use quark::preprocess::{EegRecording, Label};
use quark::training::{instance_gradients, objective_value, PairSample, TrainConfig};

fn main() -> quark::Result<()> {
    let cfg = ModelConfig::toy();
    let params = ModelParams::init(&cfg, 1)?;
    let signal = Matrix::from_shape_fn((1, 12), |(_, t)| (t as f64 * 0.9).sin() + 0.1 * t as f64);
    let prepared = prepare(&EegRecording::new(signal, Label(0), "toy")?, &cfg)?;
    let items = (0..4)
        .map(|i| Item {
            id: i,
            label: Label(i as i64 % 2),
            embedding: (0..cfg.embedding).map(|e| ((i * 7 + e as u64) as f64).cos()).collect(),
            image: None,
        })
        .collect();
    let catalog = ItemCatalog::new(items)?;
    let pairs = PairSample { liked: vec![0], disliked: vec![1] };
    let train = TrainConfig::default();

    let (terms, grads) = instance_gradients(&prepared, &params, &cfg, &train, &catalog, &pairs)?;
    println!("loss terms {terms:?}");
    let values: Vec<Matrix> = params.parameters().iter().map(|p| p.value().clone()).collect();
    let numeric = central_differences(&values, 1e-5, |vals| {
        let mut p = params.clone();
        for (dst, v) in p.parameters_mut().iter_mut().zip(vals) {
            *dst.tensor.value_mut() = v.clone();
        }
        objective_value(&prepared, &p, &cfg, &train, &catalog, &pairs).expect("finite objective")
    });
    for ((a, n), p) in grads.iter().zip(&numeric).zip(params.parameters()) {
        println!("{:<18} relative error {:.2e}", p.name, relative_error(a, n));
    }
    Ok(())
}
