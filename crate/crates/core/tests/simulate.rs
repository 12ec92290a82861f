mod common;

use common::ITEM_SEED;
use ndarray::{Array1, Array2};
use svd_ifa::simulate::{generate_items, generate_ordinal, generate_responses, loading_patterns, ItemParameters};
use svd_ifa::{LinkFunction, SimulationScenario};

const CHI2_13_DF_999: f64 = 34.52817897487089;
const CHI2_91_DF_999: f64 = 138.437863782331;

fn flat_items(intercepts: &[f64], k: usize) -> ItemParameters {
    ItemParameters { loadings: Array2::zeros((intercepts.len(), k)), intercepts: Array1::from(intercepts.to_vec()) }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[test]
fn bernoulli_frequencies_match_probabilities() {
    let d = [-1.0, -0.3, 0.0, 0.5, 1.0];
    let n = 100_000;
    let scenario = SimulationScenario::new(2, d.len()).with_persons(n).with_seeds(ITEM_SEED, 77);
    let sim = generate_responses(&scenario, &flat_items(&d, 2), 0.0).unwrap();
    for (j, &dj) in d.iter().enumerate() {
        let p = logistic(dj);
        assert!((sim.truth.probabilities[[0, j]] - p).abs() < 1e-15);
        let freq = sim.responses.values().column(j).iter().map(|&y| f64::from(y)).sum::<f64>() / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "item {j}: {freq} vs {p}");
    }
}

#[test]
fn latent_covariance_matches_compound_symmetry() {
    let n = 100_000;
    let scenario = SimulationScenario::new(4, 4).with_persons(n).with_correlation(0.3).with_seeds(ITEM_SEED, 78);
    let sim = generate_responses(&scenario, &flat_items(&[0.0; 4], 4), 0.0).unwrap();
    let theta = &sim.truth.thetas;
    let mean = theta.mean_axis(ndarray::Axis(0)).unwrap();
    let centered = theta - &mean;
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    for a in 0..4 {
        for b in 0..4 {
            let want = if a == b { 1.0 } else { 0.3 };
            assert!((cov[[a, b]] - want).abs() < 0.02, "cov[{a},{b}] = {}", cov[[a, b]]);
        }
    }
}

#[test]
fn ordinal_cumulative_frequencies_match_the_model() {
    let d = [-0.5, 0.0, 0.8];
    let n = 100_000;
    let scenario = SimulationScenario::new(1, d.len()).with_persons(n).with_seeds(ITEM_SEED, 79);
    let (truth, data) = generate_ordinal(&scenario, &flat_items(&d, 1), 3, 1.0).unwrap();
    for j in 0..d.len() {
        for t in 1..=3u16 {
            let p = logistic(truth.thresholds[[j, t as usize - 1]]);
            let freq = data.values().column(j).iter().filter(|&&y| y >= t).count() as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 4.0 * se, "item {j} level {t}: {freq} vs {p}");
        }
        let probs = truth.category_probabilities(0, j);
        assert_eq!(probs.len(), 4);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn single_level_ordinal_reproduces_binary_draws() {
    let scenario = SimulationScenario::new(3, 50).with_persons(300).with_seeds(ITEM_SEED, 80);
    let items = generate_items(&scenario).unwrap();
    let binary = generate_responses(&scenario, &items, 0.0).unwrap();
    let (_, ordinal) = generate_ordinal(&scenario, &items, 1, 1.0).unwrap();
    assert_eq!(binary.responses.values(), ordinal.values());
}

fn pattern_chi_square(k: usize) -> (f64, usize) {
    let scenario = SimulationScenario::new(k, 2000).with_tiling(false).with_seeds(ITEM_SEED, 0);
    let items = generate_items(&scenario).unwrap();
    let patterns = loading_patterns(k, scenario.q_max_active);
    let mut counts = vec![0usize; patterns.len()];
    for row in items.loadings.rows() {
        let active: Vec<bool> = row.iter().map(|&a| a != 0.0).collect();
        let idx = patterns.iter().position(|p| *p == active).expect("admissible pattern");
        counts[idx] += 1;
    }
    let expected = 2000.0 / patterns.len() as f64;
    let stat = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    (stat, patterns.len())
}

#[test]
fn loading_patterns_are_uniform_over_admissible_set() {
    let (stat4, n4) = pattern_chi_square(4);
    assert_eq!(n4, 14);
    assert!(stat4 < CHI2_13_DF_999, "K=4 chi-square {stat4}");
    let (stat8, n8) = pattern_chi_square(8);
    assert_eq!(n8, 92);
    assert!(stat8 < CHI2_91_DF_999, "K=8 chi-square {stat8}");
}

#[test]
fn tiled_loadings_keep_smallest_singular_value_proportional_to_sqrt_j() {
    let scaled: Vec<f64> = [200usize, 400, 800]
        .iter()
        .map(|&j| {
            let items = generate_items(&SimulationScenario::new(4, j).with_seeds(ITEM_SEED, 0)).unwrap();
            let s = svd_ifa::lowrank::svd(items.loadings.view()).unwrap().singular_values;
            s[3] / (j as f64).sqrt()
        })
        .collect();
    for x in &scaled[1..] {
        assert!((x / scaled[0] - 1.0).abs() < 0.05, "{scaled:?}");
    }
}

#[test]
fn probit_scenario_uses_normal_cdf() {
    let scenario =
        SimulationScenario::new(2, 3).with_persons(10).with_link(LinkFunction::Probit).with_seeds(ITEM_SEED, 81);
    let sim = generate_responses(&scenario, &flat_items(&[0.0, 1.0, -1.0], 2), 0.0).unwrap();
    assert!((sim.truth.probabilities[[0, 0]] - 0.5).abs() < 1e-15);
    assert!((sim.truth.probabilities[[0, 1]] - 0.841_344_746_068_542_9).abs() < 1e-12);
}

#[test]
fn same_seeds_reproduce_and_new_person_seed_changes_responses() {
    let s = SimulationScenario::new(4, 200).with_seeds(ITEM_SEED, 9);
    let a = svd_ifa::simulate::simulate(&s, 0.1).unwrap();
    let b = svd_ifa::simulate::simulate(&s, 0.1).unwrap();
    assert_eq!(a.responses, b.responses);
    let c = svd_ifa::simulate::simulate(&s.clone().with_seeds(ITEM_SEED, 10), 0.1).unwrap();
    assert_eq!(a.truth.loadings, c.truth.loadings);
    assert_ne!(a.responses.values(), c.responses.values());
}
