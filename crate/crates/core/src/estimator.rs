//! Two-stage SVD estimators for binary, incomplete binary and ordinal
//! response matrices.
//!
//! All three share one pipeline. The first stage takes a zero-filled
//! response matrix, keeps the leading singular triples above the noise
//! threshold, rescales by the inverse observed fraction, clamps into
//! `[eps, 1 - eps]` and applies the inverse link. The linearized matrix is
//! column-centered (the column means are the intercepts) and the second SVD
//! yields loadings and scores.

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{IfaError, Result};
use crate::links::LinkFunction;
use crate::lowrank::{self, SvdMethod, ThresholdRule};

/// Upper bound on the truncation level.
pub const MAX_EPSILON: f64 = 0.2;
pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_THRESHOLD_CONSTANT: f64 = 1.01;

/// Observed responses with an observation mask.
///
/// Values are categories `0..=n_categories`; binary data has one category
/// above zero. Cells with a false mask are stored as zero and carry no
/// information.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    values: Array2<u16>,
    mask: Array2<bool>,
    n_categories: u16,
}

impl ResponseMatrix {
    pub fn new(mut values: Array2<u16>, mask: Array2<bool>, n_categories: u16) -> Result<Self> {
        if n_categories == 0 {
            return Err(IfaError::Input("number of categories must be at least 1".into()));
        }
        if values.dim() != mask.dim() {
            return Err(IfaError::Input(format!("responses are {:?} but mask is {:?}", values.dim(), mask.dim())));
        }
        let mut observed = 0usize;
        for ((i, j), &seen) in mask.indexed_iter() {
            if seen {
                observed += 1;
                if values[[i, j]] > n_categories {
                    return Err(IfaError::Input(format!(
                        "response {} at row {}, column {} exceeds the top category {n_categories}",
                        values[[i, j]],
                        i + 1,
                        j + 1
                    )));
                }
            } else {
                values[[i, j]] = 0;
            }
        }
        if observed == 0 {
            return Err(IfaError::Input("no observed responses".into()));
        }
        Ok(Self { values, mask, n_categories })
    }

    /// Fully observed responses.
    pub fn complete(values: Array2<u16>, n_categories: u16) -> Result<Self> {
        let mask = Array2::from_elem(values.dim(), true);
        Self::new(values, mask, n_categories)
    }

    /// Fully observed 0/1 responses.
    pub fn binary(values: Array2<u16>) -> Result<Self> {
        Self::complete(values, 1)
    }

    pub fn values(&self) -> ArrayView2<'_, u16> {
        self.values.view()
    }

    pub fn mask(&self) -> ArrayView2<'_, bool> {
        self.mask.view()
    }

    pub fn n_categories(&self) -> u16 {
        self.n_categories
    }

    pub fn n_persons(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_items(&self) -> usize {
        self.values.ncols()
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// `1{Y >= t}` on observed cells, zero elsewhere.
    pub fn dichotomize(&self, t: u16) -> Array2<f64> {
        Array2::from_shape_fn(
            self.values.dim(),
            |(i, j)| {
                if self.mask[[i, j]] && self.values[[i, j]] >= t {
                    1.0
                } else {
                    0.0
                }
            },
        )
    }

    /// Same responses with rows and columns reordered:
    /// row `i` of the result is row `rows[i]` of `self`.
    pub fn permuted(&self, rows: &[usize], cols: &[usize]) -> Self {
        let values = Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| self.values[[rows[i], cols[j]]]);
        let mask = Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| self.mask[[rows[i], cols[j]]]);
        Self { values, mask, n_categories: self.n_categories }
    }
}

/// How the truncation level is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationPolicy {
    Constant(f64),
    /// `gamma0 * J^(-gamma1)`, clamped to at most [`MAX_EPSILON`].
    PowerDecay {
        gamma0: f64,
        gamma1: f64,
    },
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::Constant(DEFAULT_EPSILON)
    }
}

impl TruncationPolicy {
    /// Realized truncation level for `n_items` items and `n_factors` factors.
    pub fn epsilon(&self, n_items: usize, n_factors: usize) -> Result<f64> {
        match *self {
            TruncationPolicy::Constant(eps) => {
                if eps > 0.0 && eps <= MAX_EPSILON {
                    Ok(eps)
                } else {
                    Err(IfaError::Config(format!("epsilon must lie in (0, {MAX_EPSILON}], got {eps}")))
                }
            }
            TruncationPolicy::PowerDecay { gamma0, gamma1 } => {
                let upper = 1.0 / (4.0 * (n_factors as f64 + 3.0));
                if !(gamma0 > 0.0 && gamma0.is_finite()) {
                    return Err(IfaError::Config(format!("gamma0 must be positive, got {gamma0}")));
                }
                if !(gamma1 > 0.0 && gamma1 < upper) {
                    return Err(IfaError::Config(format!(
                        "gamma1 must lie in (0, {upper}) for {n_factors} factors, got {gamma1}"
                    )));
                }
                Ok((gamma0 * (n_items as f64).powf(-gamma1)).min(MAX_EPSILON))
            }
        }
    }
}

/// Estimation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    pub n_factors: usize,
    /// Input dimension for scree runs; `None` means the default.
    pub input_dim: Option<usize>,
    pub link: LinkFunction,
    pub truncation: TruncationPolicy,
    /// Multiplier on the noise level in the rank threshold, in `(1, 1.5)`.
    pub threshold_constant: f64,
    pub svd_method: SvdMethod,
}

impl EstimationConfig {
    pub fn new(n_factors: usize) -> Self {
        Self {
            n_factors,
            input_dim: None,
            link: LinkFunction::Logistic,
            truncation: TruncationPolicy::default(),
            threshold_constant: DEFAULT_THRESHOLD_CONSTANT,
            svd_method: SvdMethod::Auto,
        }
    }

    pub fn with_link(mut self, link: LinkFunction) -> Self {
        self.link = link;
        self
    }

    pub fn with_truncation(mut self, truncation: TruncationPolicy) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        self.with_truncation(TruncationPolicy::Constant(epsilon))
    }

    pub fn with_input_dim(mut self, input_dim: usize) -> Self {
        self.input_dim = Some(input_dim);
        self
    }

    pub fn with_threshold_constant(mut self, constant: f64) -> Self {
        self.threshold_constant = constant;
        self
    }

    pub fn with_svd_method(mut self, method: SvdMethod) -> Self {
        self.svd_method = method;
        self
    }

    /// Checks the settings against an `n_persons x n_items` matrix and
    /// returns the realized truncation level.
    pub fn validate(&self, n_persons: usize, n_items: usize) -> Result<f64> {
        let smaller = n_persons.min(n_items);
        if self.n_factors == 0 {
            return Err(IfaError::Config("number of factors must be at least 1".into()));
        }
        if self.n_factors + 1 > smaller {
            return Err(IfaError::Config(format!(
                "{} factors need at least {} rows and columns, data is {n_persons}x{n_items}",
                self.n_factors,
                self.n_factors + 1
            )));
        }
        if let Some(dim) = self.input_dim {
            if dim < self.n_factors {
                return Err(IfaError::Config(format!(
                    "input dimension {dim} is below the number of factors {}",
                    self.n_factors
                )));
            }
        }
        if !(self.threshold_constant > 1.0 && self.threshold_constant < 1.5) {
            return Err(IfaError::Config(format!(
                "threshold constant must lie in (1, 1.5), got {}",
                self.threshold_constant
            )));
        }
        self.truncation.epsilon(n_items, self.n_factors)
    }
}

/// Wall-clock time spent in one pipeline stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Default)]
struct StageClock {
    timings: Vec<StageTiming>,
}

impl StageClock {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        let seconds = start.elapsed().as_secs_f64();
        match self.timings.iter_mut().find(|t| t.stage == stage) {
            Some(t) => t.seconds += seconds,
            None => self.timings.push(StageTiming { stage, seconds }),
        }
        out
    }
}

/// Output of an estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct IfaEstimate {
    /// `J x K`, column `k` is `sigma_k v_k / sqrt(N)`.
    pub loadings: Array2<f64>,
    /// `N x K`, `sqrt(N)` times the leading left singular vectors.
    pub scores: Array2<f64>,
    /// `J x T` item intercepts, one column per dichotomization level
    /// (a single column for binary data).
    pub intercepts: Array2<f64>,
    /// Every singular value computed in the second SVD, over `sqrt(N J)`.
    pub singular_values_std: Array1<f64>,
    /// First-stage rank used for each dichotomization level.
    pub k_tilde: Vec<usize>,
    pub epsilon_used: f64,
    pub timings: Vec<StageTiming>,
}

impl IfaEstimate {
    pub fn n_factors(&self) -> usize {
        self.loadings.ncols()
    }

    /// Intercepts of the first (or only) dichotomization level.
    pub fn item_intercepts(&self) -> Array1<f64> {
        self.intercepts.column(0).to_owned()
    }

    /// Checks the structural identities every estimate satisfies:
    /// `scores' scores = N I`, squared loading column norms equal to
    /// `sigma_k^2 / N`, and `scores loadings'` equal to the rank-K part of
    /// the second SVD. Returns the worst relative deviation found.
    pub fn invariant_violation(&self) -> f64 {
        let n = self.scores.nrows() as f64;
        let j = self.loadings.nrows() as f64;
        let k = self.n_factors();
        let gram = self.scores.t().dot(&self.scores);
        let mut worst = 0.0_f64;
        for a in 0..k {
            for b in 0..k {
                let target = if a == b { n } else { 0.0 };
                worst = worst.max((gram[[a, b]] - target).abs() / n);
            }
            let sigma = self.singular_values_std[a] * (n * j).sqrt();
            let want = sigma * sigma / n;
            let got = self.loadings.column(a).dot(&self.loadings.column(a));
            if want > 0.0 {
                worst = worst.max((got - want).abs() / want);
            } else {
                worst = worst.max(got.abs());
            }
        }
        worst
    }
}

fn warn_if_wide(n_persons: usize, n_items: usize) {
    if n_persons < n_items {
        log::warn!("fewer persons ({n_persons}) than items ({n_items}); proceeding without transposing");
    }
}

/// Centered linearized matrix from one first-stage pass.
struct Linearized {
    centered: Array2<f64>,
    intercepts: Array1<f64>,
    k_tilde: usize,
}

/// First stage on a zero-filled matrix with observed fraction `p_hat`.
fn linearize(
    zero_filled: Array2<f64>,
    p_hat: f64,
    config: &EstimationConfig,
    epsilon: f64,
    clock: &mut StageClock,
) -> Result<Linearized> {
    let (n, j) = zero_filled.dim();
    let rule = ThresholdRule::for_observed_fraction(config.n_factors, n, p_hat, config.threshold_constant)?;
    let min_factors = rule.k_floor().max(config.input_dim.unwrap_or(0) + 5);
    let factors = clock.time("first_svd", || {
        lowrank::leading_svd(zero_filled.view(), config.svd_method, min_factors, Some(rule.threshold()))
    })?;
    drop(zero_filled);
    let k_tilde = lowrank::select_rank(&factors, &rule);
    log::debug!("first stage keeps {k_tilde} of {} factors ({n}x{j})", factors.len());
    let mut x = clock.time("reconstruct", || lowrank::truncated_reconstruction(&factors, k_tilde, 1.0 / p_hat))?;
    drop(factors);

    let link = config.link;
    clock.time("linearize", || -> Result<()> {
        lowrank::clamp_in_place(&mut x, epsilon)?;
        let upper = 1.0 - epsilon;
        if let Some(bad) = x.iter().find(|&&v| !(v >= epsilon && v <= upper)) {
            return Err(IfaError::Numerical(format!(
                "entry {bad} escaped the truncation interval [{epsilon}, {upper}]"
            )));
        }
        x.mapv_inplace(|v| link.quantile(v));
        Ok(())
    })?;
    let intercepts = clock.time("center", || lowrank::center_in_place(&mut x));
    Ok(Linearized { centered: x, intercepts, k_tilde })
}

/// Second SVD and output assembly.
fn assemble(
    centered: Array2<f64>,
    intercepts: Array2<f64>,
    k_tilde: Vec<usize>,
    config: &EstimationConfig,
    epsilon: f64,
    mut clock: StageClock,
) -> Result<IfaEstimate> {
    let (n, j) = centered.dim();
    let k = config.n_factors;
    let min_factors = (k + 5).max(config.input_dim.unwrap_or(0) + 5);
    let factors =
        clock.time("second_svd", || lowrank::leading_svd(centered.view(), config.svd_method, min_factors, None))?;
    drop(centered);
    let (loadings, scores, singular_values_std) = clock.time("assemble", || {
        let root_n = (n as f64).sqrt();
        let root_nj = (n as f64 * j as f64).sqrt();
        let loadings =
            Array2::from_shape_fn((j, k), |(r, c)| factors.singular_values[c] * factors.right_vectors[[r, c]] / root_n);
        let scores = Array2::from_shape_fn((n, k), |(r, c)| root_n * factors.left_vectors[[r, c]]);
        (loadings, scores, factors.singular_values.mapv(|s| s / root_nj))
    });
    Ok(IfaEstimate {
        loadings,
        scores,
        intercepts,
        singular_values_std,
        k_tilde,
        epsilon_used: epsilon,
        timings: clock.timings,
    })
}

fn observed_fraction(data: &ResponseMatrix) -> f64 {
    data.observed_count() as f64 / (data.n_persons() as f64 * data.n_items() as f64)
}

fn estimate_dichotomous(data: &ResponseMatrix, p_hat: f64, config: &EstimationConfig) -> Result<IfaEstimate> {
    let (n, j) = (data.n_persons(), data.n_items());
    let epsilon = config.validate(n, j)?;
    warn_if_wide(n, j);
    let mut clock = StageClock::default();
    let z = clock.time("prepare", || data.dichotomize(1));
    let stage = linearize(z, p_hat, config, epsilon, &mut clock)?;
    let intercepts = stage.intercepts.insert_axis(Axis(1));
    assemble(stage.centered, intercepts, vec![stage.k_tilde], config, epsilon, clock)
}

/// Estimator for complete binary data.
pub fn estimate_binary(data: &ResponseMatrix, config: &EstimationConfig) -> Result<IfaEstimate> {
    if data.n_categories() != 1 {
        return Err(IfaError::Input(format!(
            "binary estimation needs 0/1 data, got {} categories above zero",
            data.n_categories()
        )));
    }
    if !data.is_complete() {
        return Err(IfaError::Input("binary estimation needs a full mask; use the missing-data estimator".into()));
    }
    estimate_dichotomous(data, 1.0, config)
}

/// Estimator for binary data with responses missing completely at random.
///
/// Missing cells are zero-filled and the first-stage reconstruction is
/// rescaled by the inverse observed fraction. With a full mask this is the
/// complete-data estimator.
pub fn estimate_missing(data: &ResponseMatrix, config: &EstimationConfig) -> Result<IfaEstimate> {
    if data.n_categories() != 1 {
        return Err(IfaError::Input(format!(
            "missing-data estimation needs 0/1 data, got {} categories above zero",
            data.n_categories()
        )));
    }
    let p_hat = observed_fraction(data);
    if p_hat <= 0.0 {
        return Err(IfaError::Input("no observed responses".into()));
    }
    estimate_dichotomous(data, p_hat, config)
}

/// Estimator for ordinal data in `0..=T`.
///
/// Runs the first stage on every dichotomization `1{Y >= t}`, averages the
/// centered linearized matrices with equal weights, and takes one SVD of
/// the average. Intercepts are reported per level.
pub fn estimate_ordinal(data: &ResponseMatrix, config: &EstimationConfig) -> Result<IfaEstimate> {
    if !data.is_complete() {
        return Err(IfaError::Config("ordinal estimation with missing responses is not supported".into()));
    }
    let (n, j) = (data.n_persons(), data.n_items());
    let epsilon = config.validate(n, j)?;
    warn_if_wide(n, j);
    let levels = data.n_categories();
    let mut clock = StageClock::default();
    let mut sum = Array2::<f64>::zeros((n, j));
    let mut intercepts = Array2::<f64>::zeros((j, levels as usize));
    let mut k_tilde = Vec::with_capacity(levels as usize);
    for t in 1..=levels {
        let z = clock.time("prepare", || data.dichotomize(t));
        let stage = linearize(z, 1.0, config, epsilon, &mut clock)?;
        sum += &stage.centered;
        intercepts.column_mut(t as usize - 1).assign(&stage.intercepts);
        k_tilde.push(stage.k_tilde);
    }
    let average = clock.time("aggregate", || sum / levels as f64);
    assemble(average, intercepts, k_tilde, config, epsilon, clock)
}

/// Dispatches on the data: ordinal when there are several categories,
/// missing-data when the mask is partial, complete binary otherwise.
pub fn estimate(data: &ResponseMatrix, config: &EstimationConfig) -> Result<IfaEstimate> {
    if data.n_categories() > 1 {
        estimate_ordinal(data, config)
    } else if data.is_complete() {
        estimate_binary(data, config)
    } else {
        estimate_missing(data, config)
    }
}

/// `f(scores loadings' + 1 d')` using the first intercept column.
pub fn recover_probability_matrix(estimate: &IfaEstimate, link: LinkFunction) -> Array2<f64> {
    let mut eta = estimate.scores.dot(&estimate.loadings.t());
    eta += &estimate.intercepts.column(0);
    eta.mapv_inplace(|x| link.cdf(x));
    eta
}

/// `Pr(Y >= level)` implied by an ordinal estimate, `level` in `1..=T`.
pub fn recover_cumulative_probabilities(
    estimate: &IfaEstimate,
    link: LinkFunction,
    level: usize,
) -> Result<Array2<f64>> {
    if level == 0 || level > estimate.intercepts.ncols() {
        return Err(IfaError::Input(format!("level {level} outside 1..={}", estimate.intercepts.ncols())));
    }
    let mut eta = estimate.scores.dot(&estimate.loadings.t());
    eta += &estimate.intercepts.column(level - 1);
    eta.mapv_inplace(|x| link.cdf(x));
    Ok(eta)
}
