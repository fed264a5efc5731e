//! Order picking on a fleet of dispensing machines: crane travel, overlap
//! with pharmacist sorting, order splitting, routing and stream simulation.

mod expectation;
mod routing;
mod simulate;
mod split;
pub mod travel;

pub use expectation::expected_max_sort;
pub use routing::{
    route_machine_exact, route_machine_greedy, LegKind, MachineRoute, RouteContext, RouteLeg,
    RouteStop, EXACT_ROUTE_MAX,
};
pub use simulate::{
    evaluate_order, sampled_route_time, simulate, BucketStats, EvalMetrics, OrderRecord,
    PickingConfig, SimConfig, SortTimeMode, DEFAULT_CROSS_PENALTY, DEFAULT_FILL_LEVEL,
};
pub use split::{feasible_machines, minimal_cover_sets, split_order, SplitPlan, SPLIT_ENUMERATION_LIMIT};
pub use travel::{dual_command_time, io_time, one_way_time, round_trip_time};
