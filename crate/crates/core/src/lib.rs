//! Probabilistic model of progressive filtering over a taxonomy.
//!
//! A taxonomy unfolds into pipelines (rooted chains of categories). Given
//! the conditional probabilities along each pipeline and the normalized
//! confusion matrix of each classifier, the [`model`] module predicts the
//! joint matrix `Ω` of true label versus pipeline decision, factorizes it
//! into an input prior and a deterioration matrix, and exposes the
//! distribution-independent matrix `Ψ`. [`metrics`] derives taxonomic
//! precision, recall, F1 and accuracy; [`simulator`] checks every
//! prediction against exact enumeration and seeded Monte-Carlo runs.

pub mod cli;
pub mod error;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod simulator;
pub mod taxonomy;

pub use error::{Error, Result};
pub use matrix::{JointMatrix, Mat2, NormalizedConfusionMatrix, PsiMatrix, NEUTRAL, ROOT_JOINT};
pub use model::{ClassifierProfileSet, Factorization, Stage, StageChain};
pub use taxonomy::{CategoryId, Pipeline, Taxonomy};
