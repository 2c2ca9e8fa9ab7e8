//! Collapse a unit state onto a random basis and project it to a mixed
//! state, via the summed operator and term by term.

use ndarray::Array1;
use quark::numerics::init::xavier_init;
use quark::quantum::{
    collapse_probabilities, orthogonality_penalty, project_mixed_state, project_mixed_state_termwise, to_unit_state,
};

fn main() -> quark::Result<()> {
    let basis = xavier_init((6, 6), 4);
    let raw = Array1::from_iter((0..6).map(|i| (i as f64 * 0.7).cos()));
    let state = to_unit_state(raw.view()).vector;

    let c = collapse_probabilities(state.view(), &basis, 2)?;
    println!("collapse probabilities {:.4?}", c.probabilities);
    println!("top {:?}  bottom {:?}", c.top, c.bottom);
    println!("orthogonality penalty ‖BBᵀ − I‖ = {:.4}", orthogonality_penalty(&basis));

    let summed = project_mixed_state(state.view(), &basis, &c.top);
    let termwise = project_mixed_state_termwise(state.view(), &basis, &c.top);
    let gap = (&summed - &termwise).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("mixed state {:.4?}", summed.to_vec());
    println!("max |summed − termwise| = {gap:.2e}");
    Ok(())
}
