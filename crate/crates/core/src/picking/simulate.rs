//! Order-stream evaluation: split, route, charge the cross-machine penalty
//! and draw down stock, one order at a time in arrival order.

use super::routing::{LegKind, MachineRoute, RouteContext};
use super::split::split_order;
use crate::error::{Error, Result};
use crate::model::{Assignment, MachineLayout, OrderHistory, PickerModel, PrescriptionOrder, StockState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Default units per bin at the start of a simulation.
pub const DEFAULT_FILL_LEVEL: u32 = 50;
/// Default consolidation penalty for an order picked on several machines.
pub const DEFAULT_CROSS_PENALTY: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PickingConfig {
    pub picker: PickerModel,
    /// Seconds added once to every order served by two or more machines.
    pub cross_penalty: f64,
    pub trailing_sort: bool,
}

impl Default for PickingConfig {
    fn default() -> Self {
        Self {
            picker: PickerModel::zero(),
            cross_penalty: DEFAULT_CROSS_PENALTY,
            trailing_sort: false,
        }
    }
}

impl PickingConfig {
    pub fn route_context<'a>(&self, layout: &'a MachineLayout) -> RouteContext<'a> {
        RouteContext {
            layout,
            picker: self.picker,
            trailing_sort: self.trailing_sort,
        }
    }
}

/// How sort times enter the reported times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortTimeMode {
    /// Analytic expectations.
    #[default]
    Expected,
    /// One normal draw per sort; for validating the expectations.
    Sampled { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub picking: PickingConfig,
    pub fill_level: u32,
    pub mode: SortTimeMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            picking: PickingConfig::default(),
            fill_level: DEFAULT_FILL_LEVEL,
            mode: SortTimeMode::Expected,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderRecord {
    pub order_id: u64,
    pub drug_count: usize,
    /// Zero for a stocked-out order.
    pub machine_count: usize,
    pub expected_time: f64,
    pub penalized_time: f64,
    pub stockout: bool,
}

/// Splits, routes and fulfils one order, taking the picked units out of
/// `stock`. On a stockout nothing is taken.
pub fn evaluate_order(
    order: &PrescriptionOrder,
    assignment: &Assignment,
    stock: &mut StockState,
    layout: &MachineLayout,
    config: &PickingConfig,
) -> Result<(OrderRecord, Vec<MachineRoute>)> {
    let ctx = config.route_context(layout);
    let plan = split_order(order, assignment, stock, &ctx)?;
    for route in &plan.routes {
        for stop in &route.stops {
            stock.take(route.machine, stop.location, stop.dosage)?;
        }
    }
    let penalty = if plan.machine_count() >= 2 {
        config.cross_penalty
    } else {
        0.0
    };
    let record = OrderRecord {
        order_id: order.id,
        drug_count: order.drug_count(),
        machine_count: plan.machine_count(),
        expected_time: plan.expected_time,
        penalized_time: plan.expected_time + penalty,
        stockout: false,
    };
    Ok((record, plan.routes))
}

/// Route time with every overlapped sort drawn from the picker model.
pub fn sampled_route_time<R: rand::Rng>(route: &MachineRoute, picker: &PickerModel, rng: &mut R) -> f64 {
    let normal = Normal::new(picker.mean, picker.std_dev).expect("validated picker");
    route
        .legs
        .iter()
        .map(|leg| {
            if !leg.overlapped {
                return leg.travel;
            }
            let x = normal.sample(rng);
            match leg.kind {
                LegKind::TrailingSort => x,
                _ => x.max(leg.travel),
            }
        })
        .sum()
}

/// Aggregate over one order-size range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketStats {
    pub orders: usize,
    pub avg_pick_time: Option<f64>,
    pub cross_machine_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    pub records: Vec<OrderRecord>,
    /// Orders actually picked.
    pub order_count: usize,
    pub stockouts: usize,
    /// Mean penalized time over picked orders; `None` when nothing was picked.
    pub avg_pick_time: Option<f64>,
    pub cross_machine_probability: Option<f64>,
}

impl EvalMetrics {
    fn from_records(records: Vec<OrderRecord>) -> Self {
        let stockouts = records.iter().filter(|r| r.stockout).count();
        let mut m = Self {
            records,
            order_count: 0,
            stockouts,
            avg_pick_time: None,
            cross_machine_probability: None,
        };
        let all = m.bucket(1, None);
        m.order_count = all.orders;
        m.avg_pick_time = all.avg_pick_time;
        m.cross_machine_probability = all.cross_machine_probability;
        m
    }

    /// Statistics for picked orders with `min..=max` drugs (`None` = no cap).
    pub fn bucket(&self, min: usize, max: Option<usize>) -> BucketStats {
        let picked = self
            .records
            .iter()
            .filter(|r| !r.stockout && r.drug_count >= min && max.is_none_or(|m| r.drug_count <= m));
        let (mut n, mut time, mut cross) = (0usize, 0.0, 0usize);
        for r in picked {
            n += 1;
            time += r.penalized_time;
            cross += (r.machine_count >= 2) as usize;
        }
        if n == 0 {
            return BucketStats {
                orders: 0,
                avg_pick_time: None,
                cross_machine_probability: None,
            };
        }
        BucketStats {
            orders: n,
            avg_pick_time: Some(time / n as f64),
            cross_machine_probability: Some(cross as f64 / n as f64),
        }
    }
}

/// Replays `history` against `assignment`, starting every bin at
/// `config.fill_level` units. Orders that hit a stockout are recorded and
/// skipped.
pub fn simulate(
    history: &OrderHistory,
    assignment: &Assignment,
    layout: &MachineLayout,
    config: &SimConfig,
) -> Result<EvalMetrics> {
    for order in &history.orders {
        for drug in order.drugs() {
            if !assignment.machines.iter().any(|m| !m.locations_of(drug).is_empty()) {
                return Err(Error::Infeasible(format!(
                    "order {}: drug {drug} is not slotted on any machine",
                    order.id
                )));
            }
        }
    }
    let mut stock = StockState::uniform(assignment, layout, config.fill_level);
    let mut rng = match config.mode {
        SortTimeMode::Sampled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        SortTimeMode::Expected => None,
    };
    let mut records = Vec::with_capacity(history.len());
    for order in &history.orders {
        match evaluate_order(order, assignment, &mut stock, layout, &config.picking) {
            Ok((mut record, routes)) => {
                if let Some(rng) = rng.as_mut() {
                    let sampled: f64 = routes
                        .iter()
                        .map(|r| sampled_route_time(r, &config.picking.picker, rng))
                        .sum();
                    record.penalized_time += sampled - record.expected_time;
                    record.expected_time = sampled;
                }
                records.push(record);
            }
            Err(Error::Stockout { .. }) => records.push(OrderRecord {
                order_id: order.id,
                drug_count: order.drug_count(),
                machine_count: 0,
                expected_time: 0.0,
                penalized_time: 0.0,
                stockout: true,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(EvalMetrics::from_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DrugId, Location, MachineAssignment, OrderLine};
    use crate::picking::travel::round_trip_time;

    fn fleet(machines: &[&[(u32, Location)]]) -> Assignment {
        Assignment::new(
            machines
                .iter()
                .map(|places| {
                    let mut m = MachineAssignment::new();
                    for &(d, l) in *places {
                        m.place(l, DrugId::new(d)).unwrap();
                    }
                    m
                })
                .collect(),
        )
    }

    fn order(id: u64, lines: &[(u32, u32)]) -> PrescriptionOrder {
        PrescriptionOrder::new(
            id,
            lines
                .iter()
                .map(|&(d, a)| OrderLine {
                    drug: DrugId::new(d),
                    dosage: a,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_stream() {
        let layout = MachineLayout::default();
        let a = fleet(&[&[(1, Location::new(1, 1, 1))]]);
        let m = simulate(&OrderHistory::default(), &a, &layout, &SimConfig::default()).unwrap();
        assert_eq!(m.order_count, 0);
        assert_eq!(m.avg_pick_time, None);
        assert_eq!(m.cross_machine_probability, None);
    }

    #[test]
    fn single_order_single_drug() {
        let layout = MachineLayout::default();
        let loc = Location::new(1, 3, 9);
        let a = fleet(&[&[(1, loc)]]);
        let h = OrderHistory::new(vec![order(1, &[(1, 2)])]);
        let m = simulate(&h, &a, &layout, &SimConfig::default()).unwrap();
        assert_eq!(m.order_count, 1);
        let rt = round_trip_time(loc, layout.io_points[0], &layout);
        assert!((m.avg_pick_time.unwrap() - rt).abs() < 1e-12);
        assert_eq!(m.cross_machine_probability, Some(0.0));
    }

    #[test]
    fn penalty_applies_to_split_orders_only() {
        let layout = MachineLayout::default();
        let la = Location::new(1, 1, 1);
        let lb = Location::new(2, 4, 4);
        let a = fleet(&[&[(1, la)], &[(2, lb)]]);
        let mut stock = StockState::uniform(&a, &layout, 10);
        let config = PickingConfig::default();
        let (rec, _) = evaluate_order(&order(1, &[(1, 1), (2, 1)]), &a, &mut stock, &layout, &config).unwrap();
        let routes = round_trip_time(la, layout.io_points[0], &layout)
            + round_trip_time(lb, layout.io_points[0], &layout);
        assert_eq!(rec.machine_count, 2);
        assert!((rec.expected_time - routes).abs() < 1e-12);
        assert!((rec.penalized_time - routes - 60.0).abs() < 1e-12);

        let free = PickingConfig {
            cross_penalty: 0.0,
            ..config
        };
        let (rec, _) = evaluate_order(&order(2, &[(1, 1), (2, 1)]), &a, &mut stock, &layout, &free).unwrap();
        assert_eq!(rec.penalized_time, rec.expected_time);

        let (rec, _) = evaluate_order(&order(3, &[(1, 1)]), &a, &mut stock, &layout, &config).unwrap();
        assert_eq!(rec.penalized_time, rec.expected_time);
    }

    #[test]
    fn stockouts_are_skipped_and_counted() {
        let layout = MachineLayout::default();
        let a = fleet(&[&[(1, Location::new(1, 1, 1))]]);
        let h = OrderHistory::new(vec![order(1, &[(1, 4)]), order(2, &[(1, 4)]), order(3, &[(1, 1)])]);
        let config = SimConfig {
            fill_level: 5,
            ..SimConfig::default()
        };
        let m = simulate(&h, &a, &layout, &config).unwrap();
        assert_eq!(m.stockouts, 1);
        assert_eq!(m.order_count, 2);
        assert!(m.records[1].stockout);
    }

    #[test]
    fn unslotted_drug_is_an_error() {
        let layout = MachineLayout::default();
        let a = fleet(&[&[(1, Location::new(1, 1, 1))]]);
        let h = OrderHistory::new(vec![order(1, &[(2, 1)])]);
        assert!(simulate(&h, &a, &layout, &SimConfig::default()).is_err());
    }

    #[test]
    fn buckets_split_by_size() {
        let layout = MachineLayout::default();
        let places: Vec<(u32, Location)> = (1..=7).map(|d| (d, Location::new(2, 1, d as u16))).collect();
        let a = fleet(&[&places]);
        let big: Vec<(u32, u32)> = (1..=7).map(|d| (d, 1)).collect();
        let h = OrderHistory::new(vec![order(1, &[(1, 1)]), order(2, &big)]);
        let m = simulate(&h, &a, &layout, &SimConfig::default()).unwrap();
        assert_eq!(m.bucket(1, Some(5)).orders, 1);
        assert_eq!(m.bucket(6, None).orders, 1);
        let small = m.bucket(1, Some(5)).avg_pick_time.unwrap();
        let large = m.bucket(6, None).avg_pick_time.unwrap();
        assert!(large > small);
    }

    #[test]
    fn sampling_agrees_with_expectation_on_average() {
        let layout = MachineLayout::default();
        let places: Vec<(u32, Location)> = (1..=4).map(|d| (d, Location::new(1, 2 * d as u16, 3 * d as u16))).collect();
        let a = fleet(&[&places]);
        let orders: Vec<PrescriptionOrder> =
            (0..4000).map(|q| order(q, &[(1, 1), (2, 1), (3, 1), (4, 1)])).collect();
        let h = OrderHistory::new(orders);
        let picking = PickingConfig {
            picker: PickerModel::new(10.0, 5.0).unwrap(),
            ..PickingConfig::default()
        };
        let expected = simulate(
            &h,
            &a,
            &layout,
            &SimConfig {
                picking,
                fill_level: u32::MAX,
                mode: SortTimeMode::Expected,
            },
        )
        .unwrap();
        let sampled = simulate(
            &h,
            &a,
            &layout,
            &SimConfig {
                picking,
                fill_level: u32::MAX,
                mode: SortTimeMode::Sampled { seed: 3 },
            },
        )
        .unwrap();
        let e = expected.avg_pick_time.unwrap();
        let s = sampled.avg_pick_time.unwrap();
        assert!((e - s).abs() / e < 0.01, "expected {e}, sampled {s}");
    }
}
