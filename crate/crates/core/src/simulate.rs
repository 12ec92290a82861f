//! Seeded data generator for benchmarking and acceptance checks.
//!
//! Items follow the standard sparse design: intercepts uniform on
//! `[-1, 1]`, slopes uniform on `[1, 2]` masked by a loading pattern drawn
//! uniformly from all 0/1 vectors with between 1 and `q_max_active` active
//! factors. In tiling mode a base block of [`BASE_BLOCK_ITEMS`] items is
//! generated once and repeated, so larger test lengths reuse the same item
//! parameters. Persons are multivariate normal with compound-symmetry
//! covariance `(1 - rho) I + rho 11'`.
//!
//! Items and persons draw from two streams of a ChaCha20 generator, so
//! fixing `item_seed` and varying `person_seed` gives replications with
//! fixed items.

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{IfaError, Result};
use crate::estimator::ResponseMatrix;
use crate::links::LinkFunction;

pub const BASE_BLOCK_ITEMS: usize = 200;
pub const DEFAULT_Q_MAX_ACTIVE: usize = 3;
pub const PERSONS_PER_ITEM: usize = 20;
const ITEM_STREAM: u64 = 0;
const PERSON_STREAM: u64 = 1;

/// Generative setting for one simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationScenario {
    pub n_factors: usize,
    pub n_items: usize,
    pub n_persons: usize,
    /// Common latent correlation, in `[0, 1)`.
    pub latent_correlation: f64,
    pub link: LinkFunction,
    pub q_max_active: usize,
    /// Repeat a base block of [`BASE_BLOCK_ITEMS`] items; requires
    /// `n_items` to be a multiple of the block size.
    pub tile_items: bool,
    pub item_seed: u64,
    pub person_seed: u64,
}

impl SimulationScenario {
    /// `n_persons = 20 n_items`, independent logistic factors, at most 3
    /// active factors per item, tiling whenever `n_items` is a multiple of
    /// the base block.
    pub fn new(n_factors: usize, n_items: usize) -> Self {
        Self {
            n_factors,
            n_items,
            n_persons: PERSONS_PER_ITEM * n_items,
            latent_correlation: 0.0,
            link: LinkFunction::Logistic,
            q_max_active: DEFAULT_Q_MAX_ACTIVE.min(n_factors.max(1)),
            tile_items: n_items > 0 && n_items.is_multiple_of(BASE_BLOCK_ITEMS),
            item_seed: 0,
            person_seed: 1,
        }
    }

    pub fn with_persons(mut self, n_persons: usize) -> Self {
        self.n_persons = n_persons;
        self
    }

    pub fn with_correlation(mut self, rho: f64) -> Self {
        self.latent_correlation = rho;
        self
    }

    pub fn with_link(mut self, link: LinkFunction) -> Self {
        self.link = link;
        self
    }

    pub fn with_seeds(mut self, item_seed: u64, person_seed: u64) -> Self {
        self.item_seed = item_seed;
        self.person_seed = person_seed;
        self
    }

    pub fn with_tiling(mut self, tile: bool) -> Self {
        self.tile_items = tile;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_factors == 0 || self.n_items == 0 || self.n_persons == 0 {
            return Err(IfaError::Config(format!(
                "scenario needs positive sizes, got K={} J={} N={}",
                self.n_factors, self.n_items, self.n_persons
            )));
        }
        if !(self.latent_correlation >= 0.0 && self.latent_correlation < 1.0) {
            return Err(IfaError::Config(format!(
                "latent correlation must lie in [0, 1), got {}",
                self.latent_correlation
            )));
        }
        if self.q_max_active < 1 || self.q_max_active > self.n_factors {
            return Err(IfaError::Config(format!(
                "active factors per item must lie in 1..={}, got {}",
                self.n_factors, self.q_max_active
            )));
        }
        if self.tile_items && !self.n_items.is_multiple_of(BASE_BLOCK_ITEMS) {
            return Err(IfaError::Config(format!(
                "tiling needs a multiple of {BASE_BLOCK_ITEMS} items, got {}",
                self.n_items
            )));
        }
        Ok(())
    }

    /// `(1 - rho) I + rho 11'`.
    pub fn latent_covariance(&self) -> Array2<f64> {
        let rho = self.latent_correlation;
        Array2::from_shape_fn((self.n_factors, self.n_factors), |(a, b)| if a == b { 1.0 } else { rho })
    }

    /// Symmetric square root of the latent covariance (closed form for
    /// compound symmetry: eigenvalue `1 - rho + K rho` along `1`, `1 - rho`
    /// elsewhere).
    fn covariance_root(&self) -> Array2<f64> {
        let k = self.n_factors as f64;
        let rho = self.latent_correlation;
        let off = (1.0 - rho).sqrt();
        let along = (1.0 - rho + k * rho).sqrt();
        let shift = (along - off) / k;
        Array2::from_shape_fn((self.n_factors, self.n_factors), |(a, b)| if a == b { off + shift } else { shift })
    }

    fn item_rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.item_seed);
        rng.set_stream(ITEM_STREAM);
        rng
    }

    fn person_rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.person_seed);
        rng.set_stream(PERSON_STREAM);
        rng
    }
}

/// True item parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemParameters {
    /// `J x K`.
    pub loadings: Array2<f64>,
    pub intercepts: Array1<f64>,
}

/// Everything needed to score a binary estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub loadings: Array2<f64>,
    pub intercepts: Array1<f64>,
    /// `N x K`.
    pub thetas: Array2<f64>,
    /// `f(thetas loadings' + 1 intercepts')`.
    pub probabilities: Array2<f64>,
}

/// Ground truth for graded responses.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalTruth {
    pub loadings: Array2<f64>,
    /// `J x T`, strictly decreasing along each row.
    pub thresholds: Array2<f64>,
    pub thetas: Array2<f64>,
    /// `Pr(Y >= t)` for `t = 1..=T`.
    pub cumulative: Vec<Array2<f64>>,
}

impl OrdinalTruth {
    /// Category probabilities `Pr(Y = 0), ..., Pr(Y = T)` at one cell.
    pub fn category_probabilities(&self, person: usize, item: usize) -> Vec<f64> {
        let levels = self.cumulative.len();
        let at = |t: usize| -> f64 {
            match t {
                0 => 1.0,
                t if t > levels => 0.0,
                t => self.cumulative[t - 1][[person, item]],
            }
        };
        (0..=levels).map(|t| at(t) - at(t + 1)).collect()
    }
}

/// Simulated responses with their ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub truth: GroundTruth,
    pub responses: ResponseMatrix,
}

/// All 0/1 loading patterns with `1..=q_max` active factors, in
/// lexicographic order of their bit masks.
pub fn loading_patterns(n_factors: usize, q_max: usize) -> Vec<Vec<bool>> {
    (1u64..(1u64 << n_factors))
        .filter(|bits| (bits.count_ones() as usize) <= q_max)
        .map(|bits| (0..n_factors).map(|k| bits >> k & 1 == 1).collect())
        .collect()
}

/// Draws item parameters; deterministic in `item_seed`.
pub fn generate_items(scenario: &SimulationScenario) -> Result<ItemParameters> {
    scenario.validate()?;
    let k = scenario.n_factors;
    let patterns = loading_patterns(k, scenario.q_max_active);
    let block = if scenario.tile_items { BASE_BLOCK_ITEMS } else { scenario.n_items };
    let mut rng = scenario.item_rng();
    let mut base_loadings = Array2::<f64>::zeros((block, k));
    let mut base_intercepts = Array1::<f64>::zeros(block);
    for j in 0..block {
        base_intercepts[j] = rng.random_range(-1.0..=1.0);
        let pattern = &patterns[rng.random_range(0..patterns.len())];
        for (c, &active) in pattern.iter().enumerate() {
            let slope: f64 = rng.random_range(1.0..=2.0);
            if active {
                base_loadings[[j, c]] = slope;
            }
        }
    }
    let loadings = Array2::from_shape_fn((scenario.n_items, k), |(j, c)| base_loadings[[j % block, c]]);
    let intercepts = Array1::from_shape_fn(scenario.n_items, |j| base_intercepts[j % block]);
    Ok(ItemParameters { loadings, intercepts })
}

fn check_items(scenario: &SimulationScenario, items: &ItemParameters) -> Result<()> {
    let want = (scenario.n_items, scenario.n_factors);
    if items.loadings.dim() != want || items.intercepts.len() != scenario.n_items {
        return Err(IfaError::Input(format!(
            "item parameters are {:?} with {} intercepts, scenario needs {want:?}",
            items.loadings.dim(),
            items.intercepts.len()
        )));
    }
    Ok(())
}

fn draw_thetas(scenario: &SimulationScenario, rng: &mut ChaCha20Rng) -> Array2<f64> {
    let root = scenario.covariance_root();
    let z =
        Array2::from_shape_simple_fn((scenario.n_persons, scenario.n_factors), || rng.sample::<f64, _>(StandardNormal));
    z.dot(&root)
}

fn linear_predictor(thetas: &Array2<f64>, loadings: ArrayView2<f64>, intercepts: &Array1<f64>) -> Array2<f64> {
    let mut eta = thetas.dot(&loadings.t());
    eta += intercepts;
    eta
}

fn check_missing_rate(missing_rate: f64) -> Result<()> {
    if (0.0..1.0).contains(&missing_rate) {
        Ok(())
    } else {
        Err(IfaError::Config(format!("missing rate must lie in [0, 1), got {missing_rate}")))
    }
}

/// Draws persons, binary responses and (when `missing_rate > 0`) an MCAR
/// mask; deterministic in `person_seed`.
///
/// Responses are drawn before the mask, so the observed cells of a run with
/// missingness agree with the complete run under the same seed.
pub fn generate_responses(
    scenario: &SimulationScenario,
    items: &ItemParameters,
    missing_rate: f64,
) -> Result<SimulatedData> {
    scenario.validate()?;
    check_items(scenario, items)?;
    check_missing_rate(missing_rate)?;
    let mut rng = scenario.person_rng();
    let thetas = draw_thetas(scenario, &mut rng);
    let mut probabilities = linear_predictor(&thetas, items.loadings.view(), &items.intercepts);
    let link = scenario.link;
    probabilities.mapv_inplace(|x| link.cdf(x));
    let values = probabilities.mapv(|p| u16::from(rng.random::<f64>() < p));
    let mask = draw_mask(values.dim(), missing_rate, &mut rng);
    let responses = ResponseMatrix::new(values, mask, 1)?;
    Ok(SimulatedData {
        truth: GroundTruth {
            loadings: items.loadings.clone(),
            intercepts: items.intercepts.clone(),
            thetas,
            probabilities,
        },
        responses,
    })
}

fn draw_mask(dim: (usize, usize), missing_rate: f64, rng: &mut ChaCha20Rng) -> Array2<bool> {
    if missing_rate == 0.0 {
        Array2::from_elem(dim, true)
    } else {
        Array2::from_shape_simple_fn(dim, || rng.random::<f64>() >= missing_rate)
    }
}

/// Items then responses in one call.
pub fn simulate(scenario: &SimulationScenario, missing_rate: f64) -> Result<SimulatedData> {
    let items = generate_items(scenario)?;
    generate_responses(scenario, &items, missing_rate)
}

/// Graded responses in `0..=n_categories`.
///
/// Level thresholds are `d_j + spread ((T + 1) / 2 - t)`, strictly
/// decreasing in `t`. One uniform per cell is compared against every
/// cumulative probability, so `Y = #{t : U < Pr(Y >= t)}`. With a single
/// level this reproduces [`generate_responses`] exactly.
pub fn generate_ordinal(
    scenario: &SimulationScenario,
    items: &ItemParameters,
    n_categories: u16,
    threshold_spread: f64,
) -> Result<(OrdinalTruth, ResponseMatrix)> {
    scenario.validate()?;
    check_items(scenario, items)?;
    if n_categories == 0 {
        return Err(IfaError::Config("ordinal data needs at least one level".into()));
    }
    if !(threshold_spread > 0.0 && threshold_spread.is_finite()) {
        return Err(IfaError::Config(format!("threshold spread must be positive, got {threshold_spread}")));
    }
    let levels = n_categories as usize;
    let centre = (levels as f64 + 1.0) / 2.0;
    let thresholds = Array2::from_shape_fn((scenario.n_items, levels), |(j, t)| {
        items.intercepts[j] + threshold_spread * (centre - (t + 1) as f64)
    });
    for row in thresholds.rows() {
        if row.iter().zip(row.iter().skip(1)).any(|(a, b)| a <= b) {
            return Err(IfaError::Numerical(format!("thresholds not strictly decreasing: {row}")));
        }
    }

    let mut rng = scenario.person_rng();
    let thetas = draw_thetas(scenario, &mut rng);
    let slopes = thetas.dot(&items.loadings.t());
    let link = scenario.link;
    let cumulative: Vec<Array2<f64>> = (0..levels)
        .map(|t| {
            let mut p = slopes.clone();
            p += &thresholds.column(t);
            p.mapv_inplace(|x| link.cdf(x));
            p
        })
        .collect();
    let values = Array2::from_shape_fn(slopes.dim(), |(i, j)| {
        let u: f64 = rng.random();
        cumulative.iter().filter(|p| u < p[[i, j]]).count() as u16
    });
    let responses = ResponseMatrix::complete(values, n_categories)?;
    Ok((OrdinalTruth { loadings: items.loadings.clone(), thresholds, thetas, cumulative }, responses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pattern_counts() {
        assert_eq!(loading_patterns(4, 3).len(), 14);
        assert_eq!(loading_patterns(8, 3).len(), 92);
        assert_eq!(loading_patterns(1, 1), vec![vec![true]]);
        for p in loading_patterns(5, 2) {
            let active = p.iter().filter(|&&b| b).count();
            assert!((1..=2).contains(&active));
        }
    }

    #[test]
    fn scenario_defaults_and_validation() {
        let s = SimulationScenario::new(4, 200);
        assert_eq!(s.n_persons, 4000);
        assert!(s.tile_items);
        assert_eq!(s.q_max_active, 3);
        assert!(s.validate().is_ok());
        assert!(!SimulationScenario::new(4, 150).tile_items);
        assert!(SimulationScenario::new(4, 150).with_tiling(true).validate().is_err());
        assert!(SimulationScenario::new(4, 200).with_correlation(1.0).validate().is_err());
        let mut s = SimulationScenario::new(4, 200);
        s.q_max_active = 5;
        assert!(matches!(generate_items(&s), Err(IfaError::Config(_))));
        s.q_max_active = 0;
        assert!(generate_items(&s).is_err());
        assert_eq!(SimulationScenario::new(1, 10).q_max_active, 1);
    }

    #[test]
    fn items_follow_sparse_design() {
        let items = generate_items(&SimulationScenario::new(4, 200)).unwrap();
        for row in items.loadings.rows() {
            let active: Vec<f64> = row.iter().copied().filter(|&a| a != 0.0).collect();
            assert!((1..=3).contains(&active.len()));
            assert!(active.iter().all(|&a| (1.0..=2.0).contains(&a)));
        }
        assert!(items.intercepts.iter().all(|&d| (-1.0..=1.0).contains(&d)));
    }

    #[test]
    fn tiling_repeats_the_base_block() {
        let base = generate_items(&SimulationScenario::new(4, 200)).unwrap();
        let items = generate_items(&SimulationScenario::new(4, 400)).unwrap();
        for j in 0..200 {
            assert_eq!(items.loadings.row(j + 200), items.loadings.row(j));
            assert_eq!(items.intercepts[j + 200], items.intercepts[j]);
            assert_eq!(items.loadings.row(j), base.loadings.row(j));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let s = SimulationScenario::new(3, 200).with_seeds(11, 12);
        let a = simulate(&s, 0.1).unwrap();
        let b = simulate(&s, 0.1).unwrap();
        assert_eq!(a, b);
        let c = simulate(&s.clone().with_seeds(11, 13), 0.1).unwrap();
        assert_eq!(a.truth.loadings, c.truth.loadings);
        assert_ne!(a.responses, c.responses);
    }

    #[test]
    fn probabilities_match_link_of_linear_predictor() {
        let s = SimulationScenario::new(3, 200).with_persons(50).with_correlation(0.3);
        let data = simulate(&s, 0.0).unwrap();
        let t = &data.truth;
        let eta = t.thetas.dot(&t.loadings.t()) + &t.intercepts;
        for (p, e) in t.probabilities.iter().zip(eta.iter()) {
            assert_abs_diff_eq!(*p, 1.0 / (1.0 + (-e).exp()), epsilon = 1e-12);
        }
        assert!(data.responses.is_complete());
    }

    #[test]
    fn missing_rate_bounds() {
        let s = SimulationScenario::new(2, 200).with_persons(20);
        assert!(matches!(simulate(&s, 1.0), Err(IfaError::Config(_))));
        assert!(simulate(&s, -0.1).is_err());
        let full = simulate(&s, 0.0).unwrap();
        let partial = simulate(&s, 0.3).unwrap();
        // responses are drawn before the mask
        for ((i, j), &seen) in partial.responses.mask().indexed_iter() {
            if seen {
                assert_eq!(partial.responses.values()[[i, j]], full.responses.values()[[i, j]]);
            }
        }
        let rate = 1.0 - partial.responses.observed_count() as f64 / 4000.0;
        assert!((rate - 0.3).abs() < 0.05);
    }

    #[test]
    fn ordinal_with_one_level_reduces_to_binary() {
        let s = SimulationScenario::new(2, 200).with_persons(30).with_seeds(3, 4);
        let items = generate_items(&s).unwrap();
        let binary = generate_responses(&s, &items, 0.0).unwrap();
        let (truth, ordinal) = generate_ordinal(&s, &items, 1, 0.7).unwrap();
        assert_eq!(binary.responses, ordinal);
        assert_eq!(truth.cumulative[0], binary.truth.probabilities);
    }

    #[test]
    fn ordinal_categories_are_proper() {
        let s = SimulationScenario::new(2, 200).with_persons(20);
        let items = generate_items(&s).unwrap();
        let (truth, data) = generate_ordinal(&s, &items, 4, 0.8).unwrap();
        assert_eq!(data.n_categories(), 4);
        for row in truth.thresholds.rows() {
            for t in 1..4 {
                assert!(row[t - 1] > row[t]);
            }
        }
        for i in 0..20 {
            for j in 0..200 {
                let probs = truth.category_probabilities(i, j);
                assert_eq!(probs.len(), 5);
                assert!(probs.iter().all(|&p| p >= 0.0));
                assert_abs_diff_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
            }
        }
        assert!(generate_ordinal(&s, &items, 0, 0.8).is_err());
        assert!(generate_ordinal(&s, &items, 3, 0.0).is_err());
    }

    #[test]
    fn covariance_root_squares_to_covariance() {
        for (k, rho) in [(1, 0.0), (4, 0.3), (8, 0.3), (3, 0.9)] {
            let s = SimulationScenario::new(k, 200).with_correlation(rho);
            let root = s.covariance_root();
            let square = root.dot(&root);
            for (x, y) in square.iter().zip(s.latent_covariance().iter()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-14);
            }
        }
    }
}
