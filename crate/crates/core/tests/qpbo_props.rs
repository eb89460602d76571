mod common;

use common::*;
use cutlearn::energy::BinaryEnergy;
use cutlearn::maxflow::minimize_submodular;
use cutlearn::qpbo::{doubled_energy, pair_products, qpbo_r, qpbo_solve, PartialLabel, RelaxedValue};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn labeled_nodes_extend_to_a_minimizer(seed in any::<u64>(), n in 1usize..=9) {
        let e = random_binary_energy(&mut rng(seed), n, 20, false);
        let partial = qpbo_solve(&e);
        let (_, minimizers) = all_binary_minimizers(&e, 1e-9);
        prop_assert!(minimizers
            .iter()
            .any(|m| partial.iter().zip(m).all(|(p, &b)| p.value().is_none_or(|v| v == b))));
    }

    #[test]
    fn submodular_inputs_match_graph_cut(seed in any::<u64>(), n in 1usize..=9) {
        let e = random_binary_energy(&mut rng(seed), n, 20, true);
        let bits: Vec<bool> = qpbo_solve(&e).iter().map(|p| p.value().unwrap()).collect();
        let (cut, _) = minimize_submodular(&e).unwrap();
        prop_assert!((binary_value(&e, &bits) - binary_value(&e, &cut)).abs() <= 1e-9);
    }

    #[test]
    fn doubled_energy_is_submodular_and_consistent(seed in any::<u64>(), n in 1usize..=7) {
        let e = random_binary_energy(&mut rng(seed), n, 14, false);
        let d = doubled_energy(&e);
        prop_assert!(d.is_submodular());
        // on consistent pairs (x, 1 - x) the doubled energy equals the original
        for mask in 0..1u64 << n {
            let x = bits_of(mask, n);
            let mut both = x.clone();
            both.extend(x.iter().map(|&b| !b));
            prop_assert!((binary_value(&d, &both) - binary_value(&e, &x)).abs() <= 1e-9);
        }
    }

    #[test]
    fn relaxed_values_and_products_are_valid(seed in any::<u64>(), n in 2usize..=9, heuristic in any::<bool>()) {
        let e = random_binary_energy(&mut rng(seed), n, 20, false);
        let relaxed = qpbo_r(&e);
        let products = pair_products(&relaxed, &e, heuristic);
        prop_assert_eq!(products.len(), e.terms().len());
        for (t, &p) in e.terms().iter().zip(&products) {
            let (a, b) = (relaxed[t.u].as_f64(), relaxed[t.v].as_f64());
            prop_assert!([0.0, 0.25, 0.5, 1.0].contains(&p));
            // never above either factor, and the literal product away from the (0.5, 0.5) case
            prop_assert!(p <= a.min(b) + 1e-12);
            if !(relaxed[t.u] == RelaxedValue::Half && relaxed[t.v] == RelaxedValue::Half) {
                prop_assert_eq!(p, a * b);
            }
        }
    }
}

#[test]
fn rounding_rule_matches_documented_cases() {
    let half = [RelaxedValue::Half, RelaxedValue::Half];
    let one = [RelaxedValue::One, RelaxedValue::One];
    // pair coefficient in the maximized objective is -U(1,1)
    let mut reward = BinaryEnergy::new(2);
    reward.add_pairwise(0, 1, [[0.0, 0.0], [0.0, -2.0]]);
    let mut penalty = BinaryEnergy::new(2);
    penalty.add_pairwise(0, 1, [[0.0, 0.0], [0.0, 2.0]]);
    assert_eq!(pair_products(&one, &reward, true), vec![1.0]);
    assert_eq!(pair_products(&half, &reward, true), vec![0.5]);
    assert_eq!(pair_products(&half, &penalty, true), vec![0.0]);
    assert_eq!(pair_products(&half, &penalty, false), vec![0.25]);
    let mixed = [RelaxedValue::Half, RelaxedValue::One];
    assert_eq!(pair_products(&mixed, &penalty, true), vec![0.5]);
}

#[test]
fn heuristic_products_are_lp_optimal_for_the_pair() {
    // with both ends at 0.5 the LP picks the product in [0, 0.5] that lowers the energy
    for c in [-3.0, -0.1, 0.1, 3.0] {
        let mut e = BinaryEnergy::new(2);
        e.add_pairwise(0, 1, [[0.0, 0.0], [0.0, c]]);
        let p = pair_products(&[RelaxedValue::Half; 2], &e, true)[0];
        let best = if c < 0.0 { 0.5 } else { 0.0 };
        assert_eq!(p, best, "c = {c}");
    }
}

#[test]
fn single_frustrated_cycle_leaves_everything_open() {
    let mut e = BinaryEnergy::new(3);
    for (u, v) in [(0, 1), (1, 2), (0, 2)] {
        e.add_pairwise(u, v, [[1.0, 0.0], [0.0, 1.0]]);
    }
    assert_eq!(qpbo_solve(&e), vec![PartialLabel::Unlabeled; 3]);
}
