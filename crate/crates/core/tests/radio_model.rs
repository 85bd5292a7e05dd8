mod common;

use channeg::optimizers::{exhaustive_optimum, EXHAUSTIVE_AP_LIMIT};
use channeg::radio::{is_evaluated, node_utilities, sinr_db, social_welfare, Contract, RadioParams};
use channeg::scenario::Layout;
use channeg::seed::rng_from_seed;
use proptest::prelude::*;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sinr_matches_position_oracle(seed in any::<u64>(), n_aps in 1usize..6, cpa in 1usize..4, side in 20.0f64..120.0) {
        let params = RadioParams::default();
        let s = instance(seed, Layout::Random, n_aps, cpa, side);
        let (g, model) = model_of(&s, &params);
        let mut rng = rng_from_seed(seed);
        let contract = Contract::random(s.n_aps(), &mut rng);
        for i in 0..s.nodes.len() {
            if !is_evaluated(i, &g) {
                continue;
            }
            let want = oracle_sinr_db(&s.nodes, &contract, &params, i);
            let got = sinr_db(i, &contract, &g, &params).unwrap();
            prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "node {i}: {got} vs {want}");
            let fast = model.sinr_db(i, &contract).unwrap();
            prop_assert!((fast - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn welfare_is_sum_of_node_utilities(seed in any::<u64>(), n_aps in 1usize..6) {
        let params = RadioParams::default();
        let s = instance(seed, Layout::Square, n_aps, 2, 60.0);
        let (g, model) = model_of(&s, &params);
        let contract = Contract::random(s.n_aps(), &mut rng_from_seed(seed));
        let utils = node_utilities(&contract, &g, &params).unwrap();
        let sum: f64 = utils.iter().flatten().sum();
        prop_assert!(utils.iter().flatten().all(|u| (0.0..=1.0).contains(u)));
        // the reference route adds the two provider totals, so only rounding differs
        prop_assert!((social_welfare(&contract, &g, &params).unwrap() - sum).abs() <= 1e-12 * sum.max(1.0));
        prop_assert_eq!(model.welfare(&contract).unwrap(), sum);
    }
}

#[test]
fn exhaustive_search_matches_oracle() {
    let params = RadioParams::default();
    for seed in 0..12 {
        let n_aps = 1 + (seed % 3) as usize;
        let s = instance(seed, Layout::Random, n_aps, 2, 50.0);
        let (g, model) = model_of(&s, &params);
        let (_, want) = oracle_optimum(&g, &params);
        let got = exhaustive_optimum(&model, EXHAUSTIVE_AP_LIMIT).unwrap();
        assert_eq!(got.evaluations, 11usize.pow(s.n_aps() as u32));
        assert!(
            (got.best_welfare - want).abs() < 1e-12,
            "seed {seed}: {} vs {want}",
            got.best_welfare
        );
        assert_eq!(
            social_welfare(&got.best_contract, &g, &params).unwrap(),
            got.best_welfare
        );
    }
}

#[test]
fn clientless_aps_interfere_but_score_nothing() {
    use channeg::scenario::{Node, NodeKind, Point, ProviderId};
    use channeg::{MultilayerGraph, Scenario, ScenarioConfig};
    let mk = |kind, x: f64, provider| Node {
        id: 0,
        kind,
        position: Point::new(x, 0.0),
        activity: 1.0,
        provider,
    };
    // AP 1 sits next to AP 0's client and has no client of its own.
    let nodes = vec![
        mk(NodeKind::AccessPoint, 0.0, Some(ProviderId::P1)),
        mk(NodeKind::AccessPoint, 25.0, Some(ProviderId::P2)),
        mk(NodeKind::WirelessDevice, 10.0, None),
    ];
    let s = Scenario::from_nodes(ScenarioConfig::new(Layout::Random, 2, 1, 0), nodes);
    let params = RadioParams::default();
    let g = MultilayerGraph::build(&s, params.interference_radius_m).unwrap();
    let same = Contract::from_indices(&[1, 1]).unwrap();
    let apart = Contract::from_indices(&[1, 6]).unwrap();
    let u_same = node_utilities(&same, &g, &params).unwrap();
    let u_apart = node_utilities(&apart, &g, &params).unwrap();
    assert_eq!(u_same[1], None);
    assert!(u_same[2].unwrap() < u_apart[2].unwrap());
}
