#![allow(dead_code)]

use svd_ifa::simulate::{generate_items, generate_responses, ItemParameters};
use svd_ifa::{EstimationConfig, SimulatedData, SimulationScenario};

pub const ITEM_SEED: u64 = 20_200_601;

pub fn items(scenario: &SimulationScenario) -> ItemParameters {
    generate_items(scenario).expect("item generation")
}

/// One replication with fixed items and a per-replication person seed.
pub fn replicate(
    scenario: &SimulationScenario,
    items: &ItemParameters,
    person_seed: u64,
    missing: f64,
) -> SimulatedData {
    let s = scenario.clone().with_seeds(ITEM_SEED, person_seed);
    generate_responses(&s, items, missing).expect("response generation")
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub fn config(k: usize) -> EstimationConfig {
    EstimationConfig::new(k)
}
