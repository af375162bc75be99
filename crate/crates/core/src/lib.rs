//! Distillation of graph neural network teachers into feature-only MLP
//! students, with graph structure injected through propagation of the
//! teacher's soft labels (or inverse propagation of the student's output).
//!
//! The numeric core is generic over [`Scalar`] (`f32`/`f64`); the aliases at
//! the crate root fix the precision used by the command-line tool.

pub mod data;
pub mod distill;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod nn;
pub mod prob;
pub mod propagation;
pub mod rng;
pub mod scalar;
pub mod theory;

pub use error::{Error, Result};
pub use graph::{Graph, NormAdj};
pub use prob::ProbMatrix;
pub use propagation::{PropVariant, PropagationSpec};
pub use scalar::{Field, Scalar};

pub type Graph64 = Graph<f64>;
pub type Graph32 = Graph<f32>;
pub type NormAdj64 = NormAdj<f64>;
pub type NormAdj32 = NormAdj<f32>;
pub type ProbMatrix64 = ProbMatrix<f64>;
pub type ProbMatrix32 = ProbMatrix<f32>;
pub type MlpModel64 = nn::MlpModel<f64>;
pub type MlpModel32 = nn::MlpModel<f32>;
pub type SageModel64 = nn::SageModel<f64>;
pub type AppnpModel64 = nn::AppnpModel<f64>;
/// Exact rational used to cross-check the closed-form correction analysis.
pub type Rational = num_rational::BigRational;
