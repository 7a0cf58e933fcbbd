//! Simulation and verification toolkit for exchangeable coalescent
//! genealogies: the Ξ-lookdown model, decomposed ultrametrics, finite
//! marked metric measure spaces, flows of bridges and a statistical harness.

pub mod bridges;
pub mod checks;
pub mod error;
pub mod lookdown;
pub mod partitions;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod treespace;
pub mod xi;

pub use error::{Error, Result};
pub use scalar::{Exact, Scalar};

pub type DistanceMatrixF64 = treespace::DistanceMatrix<f64>;
pub type DistanceMatrixF32 = treespace::DistanceMatrix<f32>;
pub type ExactDistanceMatrix = treespace::DistanceMatrix<Exact>;
pub type MarkedMatrixF64 = treespace::MarkedMatrix<f64>;
pub type ExactMarkedMatrix = treespace::MarkedMatrix<Exact>;
pub type XiSpecF64 = xi::XiSpec<f64>;
pub type ExactXiSpec = xi::XiSpec<Exact>;
pub type ExactBridge = bridges::Bridge<Exact>;
