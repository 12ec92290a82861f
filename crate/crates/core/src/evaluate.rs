//! Accuracy measures: loading recovery up to an invertible rotation, and
//! mean squared error of a recovered probability matrix.

use ndarray::{Array2, ArrayView2};

use crate::error::{IfaError, Result};
use crate::lowrank;

/// Best least-squares alignment of an estimated loading matrix to a
/// reference.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    /// `||reference - estimate * rotation||_F^2 / (J K)`.
    pub loss: f64,
    /// The minimizing `K x K` matrix. Not constrained to be orthogonal.
    pub rotation: Array2<f64>,
    /// `estimate * rotation`.
    pub aligned_loadings: Array2<f64>,
}

/// Minimizes `||reference - estimate O||_F^2 / (J K)` over all real `K x K`
/// matrices `O`.
///
/// The minimizer is `pinv(estimate) reference`, computed from an SVD of the
/// estimate so that rank-deficient estimates get the minimum-norm rotation.
pub fn alignment_loss(reference: ArrayView2<f64>, estimate: ArrayView2<f64>) -> Result<AlignmentResult> {
    if reference.dim() != estimate.dim() {
        return Err(IfaError::Input(format!(
            "reference loadings are {:?} but estimate is {:?}",
            reference.dim(),
            estimate.dim()
        )));
    }
    let (j, k) = estimate.dim();
    if j == 0 || k == 0 {
        return Err(IfaError::Input(format!("loading matrices must be non-empty, got {j}x{k}")));
    }
    if reference.iter().any(|x| !x.is_finite()) {
        return Err(IfaError::Input("reference loadings contain non-finite entries".into()));
    }

    let factors = lowrank::svd(estimate)?;
    let largest = factors.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = largest * (j.max(k) as f64) * f64::EPSILON;
    // pinv(estimate) = V S^+ U'
    let projected = factors.left_vectors.t().dot(&reference);
    let mut scaled = projected;
    for (mut row, &s) in scaled.rows_mut().into_iter().zip(factors.singular_values.iter()) {
        if s > cutoff {
            row.mapv_inplace(|x| x / s);
        } else {
            row.fill(0.0);
        }
    }
    let rotation = factors.right_vectors.dot(&scaled);
    let aligned_loadings = estimate.dot(&rotation);
    let loss = squared_distance(reference, aligned_loadings.view()) / (j * k) as f64;
    Ok(AlignmentResult { loss, rotation, aligned_loadings })
}

fn squared_distance(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `(1 / N J) sum (x* - x)^2` between two probability matrices.
pub fn probability_mse(true_probs: ArrayView2<f64>, estimated_probs: ArrayView2<f64>) -> Result<f64> {
    if true_probs.dim() != estimated_probs.dim() {
        return Err(IfaError::Input(format!(
            "probability matrices differ in shape: {:?} vs {:?}",
            true_probs.dim(),
            estimated_probs.dim()
        )));
    }
    let count = true_probs.len();
    if count == 0 {
        return Err(IfaError::Input("probability matrices are empty".into()));
    }
    Ok(squared_distance(true_probs, estimated_probs) / count as f64)
}
