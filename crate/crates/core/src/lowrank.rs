//! Low-rank kernel shared by every estimator: SVD, singular-value
//! thresholding, rank-truncated reconstruction, interval clamping and
//! column centering.

use faer::{Mat, MatRef};
use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{IfaError, Result};

/// Inputs with more entries than this go through the randomized SVD when
/// the method is [`SvdMethod::Auto`].
pub const RANDOMIZED_MIN_ENTRIES: usize = 10_000_000;
pub const RANDOMIZED_OVERSAMPLING: usize = 10;
pub const RANDOMIZED_POWER_ITERATIONS: usize = 2;
/// Smallest number of factors the randomized path computes.
pub const RANDOMIZED_MIN_FACTORS: usize = 50;
/// Seed of the Gaussian sketch used by the randomized path.
pub const RANDOMIZED_SEED: u64 = 0x5eed_1fa0;

/// Which SVD backend to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvdMethod {
    /// Dense below [`RANDOMIZED_MIN_ENTRIES`], randomized above.
    #[default]
    Auto,
    Dense,
    Randomized,
}

/// Thin singular value decomposition, possibly truncated.
///
/// `singular_values` is nonincreasing. Column `k` of `left_vectors` and
/// `right_vectors` pairs with `singular_values[k]`. The sign of each pair
/// is fixed so that the largest-magnitude entry of the right vector is
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub singular_values: Array1<f64>,
    pub left_vectors: Array2<f64>,
    pub right_vectors: Array2<f64>,
}

impl SvdFactors {
    /// Number of stored singular triples.
    pub fn len(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singular_values.is_empty()
    }
}

/// Rank selection rule: keep every singular value at or above `threshold`,
/// but never fewer than `k_floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRule {
    k_floor: usize,
    threshold: f64,
}

impl ThresholdRule {
    pub fn new(k_floor: usize, threshold: f64) -> Result<Self> {
        if k_floor < 2 {
            return Err(IfaError::Config(format!("rank floor must be at least 2, got {k_floor}")));
        }
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(IfaError::Config(format!("threshold must be positive, got {threshold}")));
        }
        Ok(Self { k_floor, threshold })
    }

    /// Rule for `n_factors` factors on an `n_persons`-row matrix whose
    /// observed proportion is `p_hat` (1 for complete data):
    /// threshold `constant * sqrt(N (p + 3 p (1 - p)))`.
    pub fn for_observed_fraction(n_factors: usize, n_persons: usize, p_hat: f64, constant: f64) -> Result<Self> {
        let variance_proxy = p_hat + 3.0 * p_hat * (1.0 - p_hat);
        Self::new(n_factors + 1, constant * (n_persons as f64 * variance_proxy).sqrt())
    }

    pub fn k_floor(&self) -> usize {
        self.k_floor
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

fn check_finite(matrix: &ArrayView2<f64>) -> Result<()> {
    let (n, j) = matrix.dim();
    if n == 0 || j == 0 {
        return Err(IfaError::Input(format!("cannot decompose an empty {n}x{j} matrix")));
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(IfaError::Input(format!("{n}x{j} matrix contains non-finite entries")));
    }
    Ok(())
}

fn with_faer<T>(matrix: &ArrayView2<f64>, f: impl FnOnce(MatRef<'_, f64>) -> T) -> T {
    let (n, j) = matrix.dim();
    match matrix.as_slice() {
        Some(slice) => f(MatRef::from_row_major_slice(slice, n, j)),
        None => {
            let owned = matrix.as_standard_layout();
            f(MatRef::from_row_major_slice(owned.as_slice().expect("standard layout"), n, j))
        }
    }
}

fn to_ndarray(m: MatRef<'_, f64>, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), cols), |(i, k)| m[(i, k)])
}

/// Flip each singular pair so the largest-magnitude entry of the right
/// vector is positive (first such entry on ties).
fn fix_signs(left: &mut Array2<f64>, right: &mut Array2<f64>) {
    for k in 0..right.ncols() {
        let mut best = 0.0_f64;
        let mut best_val = 0.0_f64;
        for &v in right.column(k).iter() {
            if v.abs() > best {
                best = v.abs();
                best_val = v;
            }
        }
        if best_val < 0.0 {
            right.column_mut(k).mapv_inplace(|v| -v);
            left.column_mut(k).mapv_inplace(|v| -v);
        }
    }
}

/// Full thin SVD through the dense backend.
pub fn svd(matrix: ArrayView2<f64>) -> Result<SvdFactors> {
    check_finite(&matrix)?;
    let (n, j) = matrix.dim();
    let r = n.min(j);
    let decomposition = with_faer(&matrix, |m| m.thin_svd())
        .map_err(|e| IfaError::Numerical(format!("SVD of {n}x{j} matrix failed to converge: {e:?}")))?;
    let sv = decomposition.S().column_vector();
    let singular_values = Array1::from_shape_fn(r, |k| sv[k].max(0.0));
    let mut left_vectors = to_ndarray(decomposition.U(), r);
    let mut right_vectors = to_ndarray(decomposition.V(), r);
    fix_signs(&mut left_vectors, &mut right_vectors);
    Ok(SvdFactors { singular_values, left_vectors, right_vectors })
}

fn thin_q(m: &Mat<f64>) -> Mat<f64> {
    m.qr().compute_thin_Q()
}

/// Randomized range-finder SVD returning the leading `n_factors` triples.
///
/// Uses a Gaussian sketch with `oversampling` extra columns and
/// `power_iterations` rounds of subspace iteration, re-orthonormalized at
/// each step. The sketch is drawn from a fixed seed, so the result is
/// deterministic.
pub fn randomized_svd(
    matrix: ArrayView2<f64>,
    n_factors: usize,
    oversampling: usize,
    power_iterations: usize,
) -> Result<SvdFactors> {
    check_finite(&matrix)?;
    let (n, j) = matrix.dim();
    let full = n.min(j);
    if n_factors == 0 || n_factors > full {
        return Err(IfaError::Input(format!("requested {n_factors} factors from a {n}x{j} matrix")));
    }
    let width = (n_factors + oversampling).min(full);
    let mut rng = ChaCha8Rng::seed_from_u64(RANDOMIZED_SEED);
    let omega = Mat::<f64>::from_fn(j, width, |_, _| StandardNormal.sample(&mut rng));

    let decomposition = with_faer(&matrix, |a| {
        let mut q = thin_q(&(a * &omega));
        for _ in 0..power_iterations {
            let z = thin_q(&(a.transpose() * &q));
            q = thin_q(&(a * &z));
        }
        let b = q.transpose() * a;
        b.thin_svd().map(|svd| (q, svd))
    });
    let (q, small) =
        decomposition.map_err(|e| IfaError::Numerical(format!("randomized SVD of {n}x{j} matrix failed: {e:?}")))?;
    let left = &q * small.U();
    let sv = small.S().column_vector();
    let singular_values = Array1::from_shape_fn(n_factors, |k| sv[k].max(0.0));
    let mut left_vectors = to_ndarray(left.as_ref(), n_factors);
    let mut right_vectors = to_ndarray(small.V(), n_factors);
    fix_signs(&mut left_vectors, &mut right_vectors);
    Ok(SvdFactors { singular_values, left_vectors, right_vectors })
}

/// Leading singular triples, enough for rank selection against `threshold`.
///
/// The dense path returns every factor. The randomized path computes at
/// least `max(min_factors, RANDOMIZED_MIN_FACTORS)` and doubles the count
/// while the smallest computed value still reaches `threshold`, so that
/// thresholding sees every value that could pass it.
pub fn leading_svd(
    matrix: ArrayView2<f64>,
    method: SvdMethod,
    min_factors: usize,
    threshold: Option<f64>,
) -> Result<SvdFactors> {
    let (n, j) = matrix.dim();
    let full = n.min(j);
    let randomized = match method {
        SvdMethod::Dense => false,
        SvdMethod::Randomized => true,
        SvdMethod::Auto => n.saturating_mul(j) > RANDOMIZED_MIN_ENTRIES,
    };
    if !randomized {
        return svd(matrix);
    }
    let mut count = min_factors.max(RANDOMIZED_MIN_FACTORS).min(full);
    loop {
        if count + RANDOMIZED_OVERSAMPLING >= full {
            log::debug!("randomized SVD would need {count} of {full} factors; using dense path");
            return svd(matrix);
        }
        let factors = randomized_svd(matrix, count, RANDOMIZED_OVERSAMPLING, RANDOMIZED_POWER_ITERATIONS)?;
        let smallest = factors.singular_values[count - 1];
        match threshold {
            Some(t) if smallest >= t => {
                log::debug!("smallest of {count} factors ({smallest}) reaches {t}; escalating");
                count = (2 * count).min(full);
            }
            _ => return Ok(factors),
        }
    }
}

/// `max(k_floor, #{sigma_k >= threshold})`, capped at the number of factors.
pub fn select_rank(factors: &SvdFactors, rule: &ThresholdRule) -> usize {
    let above = factors.singular_values.iter().take_while(|&&s| s >= rule.threshold).count();
    rule.k_floor.max(above).min(factors.len())
}

/// `scale * sum_{k < rank} sigma_k u_k v_k'`.
pub fn truncated_reconstruction(factors: &SvdFactors, rank: usize, scale: f64) -> Result<Array2<f64>> {
    if rank == 0 || rank > factors.len() {
        return Err(IfaError::Input(format!("reconstruction rank {rank} outside 1..={}", factors.len())));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(IfaError::Input(format!("reconstruction scale must be positive, got {scale}")));
    }
    let weights = factors.singular_values.slice(s![..rank]).mapv(|s| s * scale);
    let left = &factors.left_vectors.slice(s![.., ..rank]) * &weights;
    Ok(left.dot(&factors.right_vectors.slice(s![.., ..rank]).t()))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 0.5 {
        Ok(())
    } else {
        Err(IfaError::Config(format!("truncation epsilon must lie in (0, 0.5), got {epsilon}")))
    }
}

/// Entrywise clamp into `[epsilon, 1 - epsilon]`.
pub fn clamp_to_interval(matrix: ArrayView2<f64>, epsilon: f64) -> Result<Array2<f64>> {
    let mut out = matrix.to_owned();
    clamp_in_place(&mut out, epsilon)?;
    Ok(out)
}

pub(crate) fn clamp_in_place(matrix: &mut Array2<f64>, epsilon: f64) -> Result<()> {
    check_epsilon(epsilon)?;
    let upper = 1.0 - epsilon;
    matrix.mapv_inplace(|x| x.clamp(epsilon, upper));
    Ok(())
}

/// Subtract column means; returns the centered matrix and the means.
pub fn center_columns(matrix: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>) {
    let mut out = matrix.to_owned();
    let means = center_in_place(&mut out);
    (out, means)
}

pub(crate) fn center_in_place(matrix: &mut Array2<f64>) -> Array1<f64> {
    let n = matrix.nrows().max(1) as f64;
    let means = matrix.sum_axis(Axis(0)) / n;
    *matrix -= &means;
    means
}
