pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod preprocess;
pub mod quantum;
pub mod training;

pub use error::{QuarkError, Result};
