//! Per-machine picking routes.
//!
//! The crane serves the two I/O points alternately. Drug at global position
//! 1 is fetched to I/O point 1, position 2 to I/O point 2, and every later
//! position `m` is fetched by a dual command cycle that first returns the bin
//! of position `m - 2` at the same I/O point. While the crane runs, the
//! pharmacist sorts the previously delivered drug, so each such step costs
//! `E[max(X, t)]`.
//!
//! Cost terms, for a route of `n` drugs:
//! * fetch of position 1 (plain round trip);
//! * fetch of position 2, overlapped (`n >= 2`);
//! * dual command cycles for positions `3..=n`, overlapped;
//! * return of position `n - 1`, overlapped, when `n - 1 >= 3`;
//! * return of position `n`, plain, when `n >= 3`.
//!
//! The last two only count when they name a position other than 1 and 2;
//! for short routes the opening round trips already stand for them.

use super::expectation::expected_max_unchecked;
use super::travel::{dual_command_time, io_time, round_trip_time};
use crate::error::{Error, Result};
use crate::model::{DrugId, Location, MachineAssignment, MachineLayout, OrderLine, PickerModel, StockState};

/// Largest sub-order routed by full enumeration.
pub const EXACT_ROUTE_MAX: usize = 7;

#[derive(Debug, Clone, Copy)]
pub struct RouteContext<'a> {
    pub layout: &'a MachineLayout,
    pub picker: PickerModel,
    /// Adds one expected sort (`mu`) for the final drug, which no crane
    /// operation overlaps. Off by default.
    pub trailing_sort: bool,
}

impl<'a> RouteContext<'a> {
    pub fn new(layout: &'a MachineLayout, picker: PickerModel) -> Self {
        Self {
            layout,
            picker,
            trailing_sort: false,
        }
    }

    #[inline]
    fn overlap(&self, travel: f64) -> f64 {
        expected_max_unchecked(travel, self.picker.mean, self.picker.std_dev)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteStop {
    pub drug: DrugId,
    pub location: Location,
    pub dosage: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegKind {
    Fetch,
    DualCommand,
    Return,
    TrailingSort,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteLeg {
    pub kind: LegKind,
    /// 0 or 1.
    pub io: usize,
    pub from: Location,
    pub to: Location,
    /// Crane time for the leg.
    pub travel: f64,
    /// Whether a pharmacist sort runs in parallel with this leg.
    pub overlapped: bool,
    /// Contribution to the route's expected time.
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachineRoute {
    pub machine: usize,
    /// Stops by global position; position `p` (0-based) is served at I/O
    /// point `p % 2`.
    pub stops: Vec<RouteStop>,
    pub legs: Vec<RouteLeg>,
    pub expected_time: f64,
}

impl MachineRoute {
    /// Builds the leg timeline for stops already in position order.
    pub fn from_stops(machine: usize, stops: Vec<RouteStop>, ctx: &RouteContext) -> Self {
        let layout = ctx.layout;
        let n = stops.len();
        let io = |p: usize| layout.io_points[p % 2];
        let mut legs = Vec::with_capacity(n + 2);
        let mut push = |kind, p: usize, from: Location, to: Location, travel: f64, overlapped: bool| {
            let expected = if overlapped { ctx.overlap(travel) } else { travel };
            legs.push(RouteLeg {
                kind,
                io: p % 2,
                from,
                to,
                travel,
                overlapped,
                expected,
            });
        };
        for p in 0..n {
            let here = stops[p].location;
            if p < 2 {
                push(LegKind::Fetch, p, here, here, round_trip_time(here, io(p), layout), p == 1);
            } else {
                let prev = stops[p - 2].location;
                push(
                    LegKind::DualCommand,
                    p,
                    prev,
                    here,
                    dual_command_time(prev, here, io(p), layout),
                    true,
                );
            }
        }
        if n >= 4 {
            let l = stops[n - 2].location;
            push(LegKind::Return, n - 2, l, l, round_trip_time(l, io(n - 2), layout), true);
        }
        if n >= 3 {
            let l = stops[n - 1].location;
            push(LegKind::Return, n - 1, l, l, round_trip_time(l, io(n - 1), layout), false);
        }
        if ctx.trailing_sort && n > 0 {
            let l = stops[n - 1].location;
            legs.push(RouteLeg {
                kind: LegKind::TrailingSort,
                io: (n - 1) % 2,
                from: l,
                to: l,
                travel: 0.0,
                overlapped: true,
                expected: ctx.picker.mean,
            });
        }
        let expected_time = legs.iter().map(|l| l.expected).sum();
        Self {
            machine,
            stops,
            legs,
            expected_time,
        }
    }

    /// Stops served at I/O point `io`, in visiting order.
    pub fn io_sequence(&self, io: usize) -> impl Iterator<Item = &RouteStop> {
        self.stops.iter().skip(io).step_by(2)
    }
}

/// Locations of each line's drug whose stock covers the dosage.
fn candidates(
    sub_order: &[OrderLine],
    machine: usize,
    assignment: &MachineAssignment,
    stock: &StockState,
) -> Result<Vec<Vec<Location>>> {
    sub_order
        .iter()
        .map(|line| {
            let locs: Vec<Location> = assignment
                .locations_of(line.drug)
                .iter()
                .copied()
                .filter(|&l| stock.remaining(machine, l) >= line.dosage)
                .collect();
            if locs.is_empty() {
                Err(Error::Stockout {
                    drug: line.drug,
                    dosage: line.dosage,
                })
            } else {
                Ok(locs)
            }
        })
        .collect()
}

/// Rearranges `v` into the next lexicographic permutation; false at the last.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Costs shared by every permutation, indexed by line and candidate.
struct CostTables {
    /// `round_trip[io][line][cand]`
    round_trip: [Vec<Vec<f64>>; 2],
    /// `round_trip_overlap[io][line][cand]`
    round_trip_overlap: [Vec<Vec<f64>>; 2],
    /// `dual[io][(a, ca)][(b, cb)]`, flattened through `offsets`.
    dual: [Vec<f64>; 2],
    offsets: Vec<usize>,
    width: usize,
}

impl CostTables {
    fn new(cands: &[Vec<Location>], ctx: &RouteContext) -> Self {
        let layout = ctx.layout;
        let mut offsets = Vec::with_capacity(cands.len());
        let mut width = 0;
        for c in cands {
            offsets.push(width);
            width += c.len();
        }
        let flat: Vec<Location> = cands.iter().flatten().copied().collect();
        let table = |io: Location| {
            let rt: Vec<Vec<f64>> = cands
                .iter()
                .map(|c| c.iter().map(|&l| round_trip_time(l, io, layout)).collect())
                .collect();
            let over: Vec<Vec<f64>> = rt
                .iter()
                .map(|row| row.iter().map(|&t| ctx.overlap(t)).collect())
                .collect();
            // Dual command cycles only occur from the third position on.
            let mut dual = Vec::new();
            if cands.len() >= 3 {
                dual = vec![0.0; width * width];
                for (a, &la) in flat.iter().enumerate() {
                    for (b, &lb) in flat.iter().enumerate() {
                        dual[a * width + b] = ctx.overlap(dual_command_time(la, lb, io, layout));
                    }
                }
            }
            (rt, over, dual)
        };
        let (rt0, over0, dual0) = table(layout.io_points[0]);
        let (rt1, over1, dual1) = table(layout.io_points[1]);
        Self {
            round_trip: [rt0, rt1],
            round_trip_overlap: [over0, over1],
            dual: [dual0, dual1],
            offsets,
            width,
        }
    }

    /// Unary cost of placing `line`'s candidate `c` at global position `p`.
    fn unary(&self, p: usize, n: usize, line: usize, c: usize) -> f64 {
        let io = p % 2;
        let mut cost = 0.0;
        match p {
            0 => cost += self.round_trip[io][line][c],
            1 => cost += self.round_trip_overlap[io][line][c],
            _ => {}
        }
        if n >= 4 && p == n - 2 {
            cost += self.round_trip_overlap[io][line][c];
        }
        if n >= 3 && p == n - 1 {
            cost += self.round_trip[io][line][c];
        }
        cost
    }

    #[inline]
    fn pair(&self, io: usize, a: usize, ca: usize, b: usize, cb: usize) -> f64 {
        self.dual[io][(self.offsets[a] + ca) * self.width + self.offsets[b] + cb]
    }
}

/// Minimum cost of one I/O chain for a fixed drug order, by dynamic
/// programming over candidate locations. Returns the cost and the chosen
/// candidate per chain element.
fn chain_cost(
    chain: &[(usize, usize)],
    n: usize,
    cands: &[Vec<Location>],
    tables: &CostTables,
    want_choice: bool,
) -> (f64, Vec<usize>) {
    if chain.is_empty() {
        return (0.0, Vec::new());
    }
    let (p0, l0) = chain[0];
    let mut best: Vec<f64> = (0..cands[l0].len()).map(|c| tables.unary(p0, n, l0, c)).collect();
    let mut back: Vec<Vec<usize>> = Vec::new();
    for w in chain.windows(2) {
        let ((_, la), (p, lb)) = (w[0], w[1]);
        let io = p % 2;
        let mut next = Vec::with_capacity(cands[lb].len());
        let mut from = Vec::with_capacity(cands[lb].len());
        for cb in 0..cands[lb].len() {
            let mut value = f64::INFINITY;
            let mut arg = 0;
            for (ca, &prev) in best.iter().enumerate() {
                let v = prev + tables.pair(io, la, ca, lb, cb);
                if v < value {
                    value = v;
                    arg = ca;
                }
            }
            next.push(value + tables.unary(p, n, lb, cb));
            from.push(arg);
        }
        best = next;
        if want_choice {
            back.push(from);
        }
    }
    let (mut arg, value) = best
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (c, &v)| if v < acc.1 { (c, v) } else { acc });
    if !want_choice {
        return (value, Vec::new());
    }
    let mut choice = vec![0; chain.len()];
    for i in (0..chain.len()).rev() {
        choice[i] = arg;
        if i > 0 {
            arg = back[i - 1][arg];
        }
    }
    (value, choice)
}

fn chains(perm: &[usize]) -> [Vec<(usize, usize)>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (p, &line) in perm.iter().enumerate() {
        out[p % 2].push((p, line));
    }
    out
}

/// Minimum expected-time route for one machine's sub-order.
///
/// Enumerates every assignment of drugs to global positions (which fixes
/// both the I/O split and the visiting order) and, for each, picks stocked
/// locations by dynamic programming along each I/O chain. Ties keep the
/// lexicographically first drug order and the lowest locations.
pub fn route_machine_exact(
    sub_order: &[OrderLine],
    machine: usize,
    assignment: &MachineAssignment,
    stock: &StockState,
    ctx: &RouteContext,
) -> Result<MachineRoute> {
    let n = sub_order.len();
    if n > EXACT_ROUTE_MAX {
        return Err(Error::RouteGuard(n));
    }
    let cands = candidates(sub_order, machine, assignment, stock)?;
    let tables = CostTables::new(&cands, ctx);

    // A chain's cost depends only on its own line sequence, and many
    // permutations share each sequence.
    let mut memo = [
        vec![f64::NAN; n.pow(n.div_ceil(2) as u32)],
        vec![f64::NAN; n.pow((n / 2) as u32)],
    ];
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best_perm = perm.clone();
    let mut best = f64::INFINITY;
    loop {
        let mut cost = 0.0;
        for (io, memo) in memo.iter_mut().enumerate() {
            let key = perm.iter().skip(io).step_by(2).fold(0, |k, &line| k * n + line);
            if memo[key].is_nan() {
                memo[key] = chain_cost(&chains(&perm)[io], n, &cands, &tables, false).0;
            }
            cost += memo[key];
        }
        if cost < best {
            best = cost;
            best_perm.copy_from_slice(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }

    let mut stops = vec![None; n];
    for chain in chains(&best_perm) {
        let (_, choice) = chain_cost(&chain, n, &cands, &tables, true);
        for (&(p, line), c) in chain.iter().zip(choice) {
            stops[p] = Some(RouteStop {
                drug: sub_order[line].drug,
                location: cands[line][c],
                dosage: sub_order[line].dosage,
            });
        }
    }
    let stops = stops.into_iter().map(Option::unwrap).collect();
    Ok(MachineRoute::from_stops(machine, stops, ctx))
}

/// Scalable route: each drug takes its stocked bin nearest an I/O point and
/// drugs are visited nearest first, alternating I/O points.
pub fn route_machine_greedy(
    sub_order: &[OrderLine],
    machine: usize,
    assignment: &MachineAssignment,
    stock: &StockState,
    ctx: &RouteContext,
) -> Result<MachineRoute> {
    let cands = candidates(sub_order, machine, assignment, stock)?;
    let mut picks: Vec<(f64, RouteStop)> = sub_order
        .iter()
        .zip(&cands)
        .map(|(line, locs)| {
            let (t, loc) = locs
                .iter()
                .map(|&l| (io_time(l, ctx.layout), l))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("candidates are non-empty");
            (
                t,
                RouteStop {
                    drug: line.drug,
                    location: loc,
                    dosage: line.dosage,
                },
            )
        })
        .collect();
    picks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.drug.cmp(&b.1.drug)));
    let stops = picks.into_iter().map(|(_, s)| s).collect();
    Ok(MachineRoute::from_stops(machine, stops, ctx))
}
