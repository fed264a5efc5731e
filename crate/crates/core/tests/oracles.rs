mod support;

use pharmslot_core::datagen::{generate_history, GenConfig};
use pharmslot_core::correlation::jaccard_matrix;
use pharmslot_core::model::{MachineLayout, PickerModel, StockState};
use pharmslot_core::picking::{
    evaluate_order, expected_max_sort, route_machine_exact, split_order, PickingConfig, RouteContext,
};
use pharmslot_core::slotting::{
    group_scattered_exact, group_scattered_heuristic, slot, SAParams, StrategyId,
};
use pharmslot_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::gen::{grouping_case, routing_case, split_case};
use support::{brute_force_route, cell, exhaustive_grouping, expected_max_quadrature, min_cover, route_time};

#[test]
fn expected_max_matches_quadrature() {
    for &(t, mu, sigma) in &[(0.0, 5.0, 2.0), (12.5, 10.0, 5.0), (40.0, 15.0, 0.5), (3.0, 0.0, 2.0)] {
        let closed = expected_max_sort(t, &PickerModel::new(mu, sigma).unwrap()).unwrap();
        let numeric = expected_max_quadrature(t, mu, sigma);
        assert!((closed - numeric).abs() < 1e-8, "t={t} mu={mu} sigma={sigma}: {closed} vs {numeric}");
    }
}

#[test]
fn exact_route_matches_brute_force() {
    let layout = MachineLayout::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..40 {
        let case = routing_case(&mut rng, 4, 3);
        let picker = PickerModel::new(rng.random_range(0.0..15.0), rng.random_range(0.0..5.0)).unwrap();
        let ctx = RouteContext::new(&layout, picker);
        let stock = StockState::uniform(&case.assignment, &layout, 50);
        let route = route_machine_exact(&case.lines, 0, &case.assignment.machines[0], &stock, &ctx).unwrap();
        let overlap = |t: f64| expected_max_sort(t, &picker).unwrap();
        let oracle = brute_force_route(&case.cands, &overlap);
        assert!((route.expected_time - oracle).abs() < 1e-9);
        let stops: Vec<_> = route.stops.iter().map(|s| cell(s.location)).collect();
        assert!((route_time(&stops, &overlap) - route.expected_time).abs() < 1e-9);
    }
}

#[test]
fn exact_grouping_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..15 {
        let case = grouping_case(&mut rng);
        let exact = group_scattered_exact(&case.catalog, &case.similarity, case.machines, case.capacity).unwrap();
        exact.validate(&case.catalog, case.capacity).unwrap();
        let oracle = exhaustive_grouping(&case.bins, &case.sim_rows, case.machines, case.capacity as u32).unwrap();
        assert!((exact.objective - oracle).abs() < 1e-9, "{} vs {oracle}", exact.objective);
        let heuristic =
            group_scattered_heuristic(&case.catalog, &case.similarity, case.machines, case.capacity, 1).unwrap();
        heuristic.validate(&case.catalog, case.capacity).unwrap();
        assert!(heuristic.objective <= exact.objective + 1e-9);
    }
}

#[test]
fn split_uses_fewest_machines() {
    let layout = MachineLayout::default();
    let ctx = RouteContext::new(&layout, PickerModel::zero());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..60 {
        let case = split_case(&mut rng, 5, 4);
        let stock = StockState::uniform(&case.assignment, &layout, 50);
        let plan = split_order(&case.order, &case.assignment, &stock, &ctx).unwrap();
        assert_eq!(Some(plan.machine_count()), min_cover(&case.holders, case.machines));
        for (d, line) in case.order.lines().iter().enumerate() {
            let m = plan.machine_of(line.drug).unwrap();
            assert!(case.holders[d].contains(&m));
        }
    }
}

fn small_world(seed: u64) -> (pharmslot_core::model::DrugCatalog, pharmslot_core::model::OrderHistory) {
    let cfg = GenConfig {
        drugs: 40,
        orders: 300,
        machines: 2,
        clique_count: 8,
        clique_size: 4,
        seed,
        ..GenConfig::default()
    };
    generate_history(&cfg).unwrap()
}

#[test]
fn zero_picker_time_is_pure_travel() {
    let layout = MachineLayout::default();
    let (catalog, history) = small_world(5);
    let s = jaccard_matrix(&history, catalog.len()).unwrap();
    let config = PickingConfig {
        picker: PickerModel::zero(),
        cross_penalty: 60.0,
        trailing_sort: false,
    };
    for strategy in StrategyId::ALL {
        let a = slot(strategy, &catalog, &s, 2, &layout, &SAParams::default(), 0).unwrap().assignment;
        let mut stock = StockState::uniform(&a, &layout, u32::MAX / 2);
        for order in history.orders.iter().take(50) {
            let (record, routes) = evaluate_order(order, &a, &mut stock, &layout, &config).unwrap();
            let travel: f64 = routes
                .iter()
                .map(|r| route_time(&r.stops.iter().map(|s| cell(s.location)).collect::<Vec<_>>(), &|t| t))
                .sum();
            assert_eq!(record.expected_time, travel);
            let penalty = if routes.len() > 1 { 60.0 } else { 0.0 };
            assert_eq!(record.penalized_time, travel + penalty);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stock_is_conserved(seed in 0u64..1_000, fill in 1u32..6) {
        let layout = MachineLayout::default();
        let (catalog, history) = small_world(seed);
        let s = jaccard_matrix(&history, catalog.len()).unwrap();
        let a = slot(StrategyId::Ssca, &catalog, &s, 2, &layout, &SAParams::default(), seed)
            .unwrap()
            .assignment;
        let config = PickingConfig::default();
        let mut stock = StockState::uniform(&a, &layout, fill);
        let start = stock.total_units();
        let mut dispensed = 0u64;
        for order in &history.orders {
            let before = stock.clone();
            match evaluate_order(order, &a, &mut stock, &layout, &config) {
                Ok(_) => dispensed += order.lines().iter().map(|l| l.dosage as u64).sum::<u64>(),
                Err(Error::Stockout { .. }) => prop_assert_eq!(&stock, &before),
                Err(e) => panic!("{e}"),
            }
        }
        prop_assert_eq!(start - stock.total_units(), dispensed);
    }
}
