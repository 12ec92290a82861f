mod common;

use common::{items, median, replicate, ITEM_SEED};
use ndarray::Array2;
use proptest::prelude::*;
use svd_ifa::{alignment_loss, estimate_binary, probability_mse, recover_probability_matrix, EstimationConfig};
use svd_ifa::{LinkFunction, SimulationScenario};

fn condition_number(q: &Array2<f64>) -> f64 {
    let s = svd_ifa::lowrank::svd(q.view()).unwrap().singular_values;
    s[0] / s[s.len() - 1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn any_invertible_rotation_is_undone(
        a in prop::collection::vec(-2.0f64..2.0, 40 * 3),
        q in prop::collection::vec(-1.0f64..1.0, 9),
    ) {
        let a = Array2::from_shape_vec((40, 3), a).unwrap();
        let q = Array2::from_shape_vec((3, 3), q).unwrap();
        prop_assume!(condition_number(&q) <= 1e3);
        let res = alignment_loss(a.view(), a.dot(&q).view()).unwrap();
        prop_assert!(res.loss <= 1e-12, "loss {}", res.loss);
    }

    #[test]
    fn loss_is_nonnegative(
        a in prop::collection::vec(-2.0f64..2.0, 20 * 2),
        b in prop::collection::vec(-2.0f64..2.0, 20 * 2),
    ) {
        let a = Array2::from_shape_vec((20, 2), a).unwrap();
        let b = Array2::from_shape_vec((20, 2), b).unwrap();
        prop_assert!(alignment_loss(a.view(), b.view()).unwrap().loss >= 0.0);
    }
}

#[test]
fn probability_error_shrinks_with_more_items() {
    let medians: Vec<f64> = [200usize, 400]
        .iter()
        .map(|&j| {
            let scenario = SimulationScenario::new(4, j);
            let item_params = items(&scenario.clone().with_seeds(ITEM_SEED, 0));
            let errors = (0..5)
                .map(|rep| {
                    let sim = replicate(&scenario, &item_params, 1000 + rep, 0.0);
                    let est = estimate_binary(&sim.responses, &EstimationConfig::new(4)).unwrap();
                    let probs = recover_probability_matrix(&est, LinkFunction::Logistic);
                    probability_mse(sim.truth.probabilities.view(), probs.view()).unwrap()
                })
                .collect();
            median(errors)
        })
        .collect();
    println!("median probability error at J=200, 400: {medians:?}");
    assert!(medians[1] < medians[0]);
}
