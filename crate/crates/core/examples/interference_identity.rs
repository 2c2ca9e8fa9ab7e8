//! With complementary past events (top and bottom together cover the whole
//! basis), the probability of a future event equals its classical two-path
//! probability plus the interference value.

use ndarray::Array1;
use quark::numerics::{xavier_init, Matrix};
use quark::quantum::{classical_probability, event_operator, event_probability, interference_value, to_unit_state};

/// Gram-Schmidt on a random matrix.
fn orthonormal(n: usize, seed: u64) -> Matrix {
    let mut b = xavier_init((n, n), seed);
    for r in 0..n {
        for q in 0..r {
            let d = b.row(r).dot(&b.row(q));
            let prev = b.row(q).to_owned();
            b.row_mut(r).scaled_add(-d, &prev);
        }
        let norm = b.row(r).dot(&b.row(r)).sqrt();
        b.row_mut(r).mapv_inplace(|v| v / norm);
    }
    b
}

fn main() {
    let past = orthonormal(6, 1);
    let future = orthonormal(6, 2);
    let state = to_unit_state(Array1::from_iter((0..6).map(|i| 1.0 + i as f64)).view()).vector;

    let o_past = event_operator(&past, &[0, 1, 2]);
    let o_past_not = event_operator(&past, &[3, 4, 5]);
    let o_future = event_operator(&future, &[0, 1]);

    let p = event_probability(state.view(), &o_future);
    let classical = classical_probability(state.view(), &o_past, &o_past_not, &o_future);
    let eta = interference_value(state.view(), &o_past, &o_past_not, &o_future);
    println!("p(future)          = {p:.12}");
    println!("classical p'       = {classical:.12}");
    println!("interference η     = {eta:.12}");
    println!("p − (p' + η)       = {:.3e}", p - classical - eta);
}
