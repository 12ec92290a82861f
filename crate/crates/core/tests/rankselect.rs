mod common;

use common::{items, replicate, ITEM_SEED};
use svd_ifa::{scree, EstimationConfig, ResponseMatrix, SimulationScenario};

#[test]
fn five_factor_scree_picks_five() {
    let scenario = SimulationScenario::new(5, 200);
    let item_params = items(&scenario.clone().with_seeds(ITEM_SEED, 0));
    let data = replicate(&scenario, &item_params, 500, 0.0).responses;
    let res = scree(&data, &EstimationConfig::new(5).with_input_dim(10)).unwrap();
    assert_eq!(res.input_dim(), 10);
    assert_eq!(res.suggested_k, 5, "{:?}", res.gap_ratios);
    // the gap is the only pronounced one
    for (k, r) in res.gap_ratios.iter().enumerate().filter(|(k, _)| *k != 4) {
        assert!(*r < res.gap_ratios[4], "ratio {k} = {r}");
    }
}

#[test]
fn one_factor_data_picks_one() {
    let scenario = SimulationScenario::new(1, 100).with_persons(20_000);
    let item_params = items(&scenario.clone().with_seeds(ITEM_SEED, 0));
    for seed in 0..10 {
        let data = replicate(&scenario, &item_params, 600 + seed, 0.0).responses;
        let res = scree(&data, &EstimationConfig::new(1)).unwrap();
        assert_eq!(res.suggested_k, 1, "seed {seed}: {:?}", res.gap_ratios);
    }
}

#[test]
fn suggestion_ignores_how_responses_are_stored() {
    let scenario = SimulationScenario::new(3, 60).with_persons(1200).with_seeds(ITEM_SEED, 4);
    let data = replicate(&scenario, &items(&scenario), 4, 0.0).responses;
    let relabelled = ResponseMatrix::new(data.values().to_owned(), data.mask().to_owned(), 1).unwrap();
    let config = EstimationConfig::new(3).with_input_dim(8);
    assert_eq!(scree(&data, &config).unwrap(), scree(&relabelled, &config).unwrap());
}

/// Leading gap at the true dimension, over 20 replications with N = 20 J.
#[test]
fn true_dimension_gap_dominates_next_value() {
    let k = 4;
    let mut short = Vec::new();
    for j in [200usize, 400] {
        let scenario = SimulationScenario::new(k, j);
        let item_params = items(&scenario.clone().with_seeds(ITEM_SEED, 0));
        let ratios: Vec<f64> = (0..20)
            .map(|rep| {
                let data = replicate(&scenario, &item_params, 3000 + rep, 0.0).responses;
                let res = scree(&data, &EstimationConfig::new(k).with_input_dim(k + 5)).unwrap();
                res.gap_ratios[k - 1]
            })
            .collect();
        let hits = ratios.iter().filter(|&&r| r >= 5.0).count();
        println!("J={j}: sigma_K/sigma_K+1 = {ratios:.2?}");
        if hits < 18 {
            short.push(format!("J={j}: {hits}/20 replications reach a 5x gap"));
        }
    }
    assert!(short.is_empty(), "{}", short.join("; "));
}
