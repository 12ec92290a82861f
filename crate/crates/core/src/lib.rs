//! Exploratory item factor analysis by two-stage singular value
//! decomposition.
//!
//! The estimator denoises a binary (or dichotomized ordinal) response
//! matrix with a thresholded SVD, maps the denoised probabilities through
//! the inverse link, and recovers loadings and person scores from a second
//! SVD of the centered, linearized matrix. Missing responses are handled by
//! zero-filling and rescaling by the observed fraction.

pub mod error;
pub mod estimator;
pub mod evaluate;
pub mod links;
pub mod lowrank;
pub mod rankselect;
pub mod simulate;

pub use error::{IfaError, Result};
pub use estimator::{
    estimate, estimate_binary, estimate_missing, estimate_ordinal, recover_probability_matrix, EstimationConfig,
    IfaEstimate, ResponseMatrix, TruncationPolicy,
};
pub use evaluate::{alignment_loss, probability_mse, AlignmentResult};
pub use links::LinkFunction;
pub use lowrank::{SvdFactors, SvdMethod, ThresholdRule};
pub use rankselect::{scree, ScreeResult};
pub use simulate::{GroundTruth, ItemParameters, SimulatedData, SimulationScenario};
