//! Differentially private SVM release with noise-robust counterfactual explanations.
//!
//! The pipeline: load and standardize a dataset ([`data`]), map it through an
//! explicit feature map ([`features`]), train a bias-free SVM on the dual
//! ([`svm`]), publish Laplace-perturbed weights ([`privacy`]), and explain the
//! released classifier's predictions robustly to that noise ([`explain`]).
//! [`experiment`] drives the trade-off sweeps used by the CLI.

pub mod data;
pub mod error;
pub mod experiment;
pub mod explain;
pub mod features;
pub mod privacy;
pub mod rng;
pub mod svm;
mod wire;

pub use data::{Dataset, Label, NormalizationParams, SplitSpec};
pub use error::{Error, ErrorKind, Result};
pub use explain::{BisectionConfig, Explanation, ExplanationRequest, Method, PrototypeSet};
pub use features::{FeatureMap, MapBounds};
pub use privacy::{NoiseSpec, PrivateRelease};
pub use svm::{SvmConfig, SvmModel};
