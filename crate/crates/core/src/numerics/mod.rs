//! Dense float arithmetic, reverse-mode differentiation, initialization
//! and the Adam optimizer.

pub mod adam;
pub mod autodiff;
pub mod gradcheck;
pub mod init;
pub mod ops;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use autodiff::{ComputeGraph, Gradients, Op, Var};
pub use init::{xavier_init, xavier_uniform};
pub use tensor::{Matrix, Parameter, Tensor};
