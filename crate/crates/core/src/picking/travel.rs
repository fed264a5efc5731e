//! Crane travel times. Both axes move at once, so a trip takes as long as
//! its slower axis. Rack side does not matter: the crane runs between the
//! two sides.

use crate::model::{Location, MachineLayout};

/// Seconds to move between two positions of one machine.
#[inline]
pub fn one_way_time(a: Location, b: Location, layout: &MachineLayout) -> f64 {
    let rows = a.row.abs_diff(b.row) as f64 * layout.row_pitch;
    let cols = a.col.abs_diff(b.col) as f64 * layout.col_pitch;
    rows.max(cols) / layout.speed
}

/// Dual command cycle `io -> i -> j -> io`: store a bin at `i`, retrieve
/// the bin at `j`. With `i == j` this is the plain round trip to `i`.
#[inline]
pub fn dual_command_time(i: Location, j: Location, io: Location, layout: &MachineLayout) -> f64 {
    one_way_time(io, i, layout) + one_way_time(i, j, layout) + one_way_time(j, io, layout)
}

/// Round trip `io -> i -> io`.
#[inline]
pub fn round_trip_time(i: Location, io: Location, layout: &MachineLayout) -> f64 {
    dual_command_time(i, i, io, layout)
}

/// One-way time from `loc` to the nearer I/O point; the key used to rank
/// storage locations.
#[inline]
pub fn io_time(loc: Location, layout: &MachineLayout) -> f64 {
    let [a, b] = layout.io_points;
    one_way_time(a, loc, layout).min(one_way_time(b, loc, layout))
}

/// Storage locations ordered by ascending [`io_time`]; ties broken by
/// `(row, col, side)` so that both faces of one rack cell sit next to each
/// other.
pub fn locations_by_io_time(layout: &MachineLayout) -> Vec<(Location, f64)> {
    let mut locs: Vec<(Location, f64)> = layout
        .storage_locations()
        .into_iter()
        .map(|l| (l, io_time(l, layout)))
        .collect();
    locs.sort_by(|(a, ta), (b, tb)| {
        ta.total_cmp(tb)
            .then(a.row.cmp(&b.row))
            .then(a.col.cmp(&b.col))
            .then(a.side.cmp(&b.side))
    });
    locs
}
