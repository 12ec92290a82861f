//! Scree diagnostic for choosing the number of factors.
//!
//! The estimator is run with a generous input dimension and the second-stage
//! singular values, standardized by `sqrt(N J)`, are inspected for a gap.
//! The automatic pick is the largest consecutive ratio; both the ratio and
//! difference series are returned so callers can judge the gap themselves.

use crate::error::{IfaError, Result};
use crate::estimator::{self, EstimationConfig, ResponseMatrix};

const MAX_DEFAULT_INPUT_DIM: usize = 15;
const RATIO_FLOOR: f64 = 1e-12;
const RATIO_CAP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct ScreeResult {
    /// `sigma_k / sqrt(N J)` for `k = 1..=K_dagger`.
    pub standardized_values: Vec<f64>,
    /// `sigma_k / sigma_{k+1}` for `k = 1..K_dagger`.
    pub gap_ratios: Vec<f64>,
    /// Standardized `sigma_k - sigma_{k+1}` for `k = 1..K_dagger`.
    pub gap_diffs: Vec<f64>,
    /// 1-based position of the largest ratio (earliest on ties).
    pub suggested_k: usize,
}

impl ScreeResult {
    /// Builds the gap series from standardized values (at least two).
    pub fn from_values(standardized_values: Vec<f64>) -> Result<Self> {
        if standardized_values.len() < 2 {
            return Err(IfaError::Config("scree needs at least two singular values".into()));
        }
        let gap_ratios: Vec<f64> = standardized_values
            .windows(2)
            .map(|w| if w[1] < RATIO_FLOOR { RATIO_CAP } else { (w[0] / w[1]).min(RATIO_CAP) })
            .collect();
        let gap_diffs = standardized_values.windows(2).map(|w| w[0] - w[1]).collect();
        let mut suggested_k = 1;
        for (i, &r) in gap_ratios.iter().enumerate() {
            if r > gap_ratios[suggested_k - 1] {
                suggested_k = i + 1;
            }
        }
        Ok(Self { standardized_values, gap_ratios, gap_diffs, suggested_k })
    }

    pub fn input_dim(&self) -> usize {
        self.standardized_values.len()
    }
}

/// `min(15, min(N, J) - 2)`.
pub fn default_input_dim(n_persons: usize, n_items: usize) -> usize {
    MAX_DEFAULT_INPUT_DIM.min(n_persons.min(n_items).saturating_sub(2))
}

/// Runs the estimator matching the data with `config.input_dim` factors
/// and returns its scree series.
pub fn scree(data: &ResponseMatrix, config: &EstimationConfig) -> Result<ScreeResult> {
    let (n, j) = (data.n_persons(), data.n_items());
    let input_dim = config.input_dim.unwrap_or_else(|| default_input_dim(n, j));
    if input_dim < 2 {
        return Err(IfaError::Config(format!("input dimension must be at least 2, got {input_dim}")));
    }
    if input_dim + 1 > n.min(j) {
        return Err(IfaError::Config(format!("input dimension {input_dim} too large for a {n}x{j} matrix")));
    }
    let run_config = EstimationConfig { n_factors: input_dim, input_dim: Some(input_dim), ..config.clone() };
    let estimate = estimator::estimate(data, &run_config)?;
    let values = estimate.singular_values_std.iter().take(input_dim).copied().collect();
    ScreeResult::from_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate, SimulationScenario};
    use ndarray::Array2;

    #[test]
    fn gap_series_and_pick() {
        let res = ScreeResult::from_values(vec![4.0, 2.0, 1.9, 0.2, 0.19]).unwrap();
        assert_eq!(res.gap_ratios.len(), 4);
        assert_eq!(res.gap_ratios[0], 2.0);
        assert_eq!(res.gap_diffs[2], 1.9 - 0.2);
        assert_eq!(res.suggested_k, 3);
    }

    #[test]
    fn ties_go_to_smaller_k() {
        let res = ScreeResult::from_values(vec![8.0, 4.0, 2.0, 1.0]).unwrap();
        assert_eq!(res.suggested_k, 1);
    }

    #[test]
    fn tiny_trailing_value_is_capped() {
        let res = ScreeResult::from_values(vec![1.0, 0.5, 0.0]).unwrap();
        assert_eq!(res.gap_ratios[1], 1e12);
        assert_eq!(res.suggested_k, 2);
    }

    #[test]
    fn default_input_dim_rule() {
        assert_eq!(default_input_dim(4000, 200), 15);
        assert_eq!(default_input_dim(100, 10), 8);
        assert_eq!(default_input_dim(3, 2), 0);
    }

    #[test]
    fn input_dim_preconditions() {
        let data = ResponseMatrix::binary(Array2::from_shape_fn((40, 6), |(i, j)| ((i + j) % 2) as u16)).unwrap();
        let one = EstimationConfig::new(1).with_input_dim(1);
        assert!(matches!(scree(&data, &one), Err(IfaError::Config(_))));
        let big = EstimationConfig::new(1).with_input_dim(6);
        assert!(matches!(scree(&data, &big), Err(IfaError::Config(_))));
        assert!(scree(&data, &EstimationConfig::new(1).with_input_dim(5)).is_ok());
    }

    #[test]
    fn values_are_second_stage_singular_values() {
        let s = SimulationScenario::new(2, 20).with_persons(50).with_seeds(5, 6);
        let data = simulate(&s, 0.0).unwrap().responses;
        let config = EstimationConfig::new(1).with_input_dim(6);
        let res = scree(&data, &config).unwrap();
        let direct = estimator::estimate_binary(&data, &EstimationConfig::new(6).with_input_dim(6)).unwrap();
        // independent recomputation: second-stage sigma_k / sqrt(N J) from loadings
        for k in 0..6 {
            let sigma = (direct.loadings.column(k).dot(&direct.loadings.column(k)) * 50.0).sqrt();
            assert!((res.standardized_values[k] - sigma / (50.0f64 * 20.0).sqrt()).abs() < 1e-10);
            assert_eq!(res.standardized_values[k], direct.singular_values_std[k]);
        }
        for w in res.standardized_values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }
}
