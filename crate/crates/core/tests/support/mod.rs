//! Reference implementations used as test oracles. They share no code with
//! the library beyond its public data types.
#![allow(dead_code)]

use pharmslot_core::model::Location;

const ROW_PITCH: f64 = 0.275;
const COL_PITCH: f64 = 0.168;
const SPEED: f64 = 0.1486;
/// (row, col) of the two I/O points; sides do not affect travel.
const IO: [(u16, u16); 2] = [(8, 6), (9, 6)];

pub fn cell(l: Location) -> (u16, u16) {
    (l.row, l.col)
}

pub fn travel(a: (u16, u16), b: (u16, u16)) -> f64 {
    let dr = (a.0 as f64 - b.0 as f64).abs() * ROW_PITCH;
    let dc = (a.1 as f64 - b.1 as f64).abs() * COL_PITCH;
    dr.max(dc) / SPEED
}

fn round_trip(io: (u16, u16), a: (u16, u16)) -> f64 {
    2.0 * travel(io, a)
}

/// Time of visiting `stops` in the given order, odd positions (1-based) at
/// the first I/O point. `overlap(t)` is the cost of a crane step of `t`
/// seconds running alongside a sort.
pub fn route_time(stops: &[(u16, u16)], overlap: &dyn Fn(f64) -> f64) -> f64 {
    let n = stops.len();
    let io = |p: usize| IO[(p - 1) % 2];
    let at = |p: usize| stops[p - 1];
    let mut legs = Vec::new();
    if n >= 1 {
        legs.push(round_trip(io(1), at(1)));
    }
    if n >= 2 {
        legs.push(overlap(round_trip(io(2), at(2))));
    }
    for p in 3..=n {
        let cycle = travel(io(p), at(p - 2)) + travel(at(p - 2), at(p)) + travel(at(p), io(p));
        legs.push(overlap(cycle));
    }
    if n >= 4 {
        legs.push(overlap(round_trip(io(n - 1), at(n - 1))));
    }
    if n >= 3 {
        legs.push(round_trip(io(n), at(n)));
    }
    legs.iter().sum()
}

/// Minimum of [`route_time`] over every visiting order and every choice of
/// one candidate bin per drug.
pub fn brute_force_route(cands: &[Vec<(u16, u16)>], overlap: &dyn Fn(f64) -> f64) -> f64 {
    fn rec(
        cands: &[Vec<(u16, u16)>],
        used: &mut Vec<bool>,
        path: &mut Vec<(u16, u16)>,
        overlap: &dyn Fn(f64) -> f64,
        best: &mut f64,
    ) {
        if path.len() == cands.len() {
            *best = best.min(route_time(path, overlap));
            return;
        }
        for d in 0..cands.len() {
            if used[d] {
                continue;
            }
            used[d] = true;
            for &c in &cands[d] {
                path.push(c);
                rec(cands, used, path, overlap, best);
                path.pop();
            }
            used[d] = false;
        }
    }
    let mut best = f64::INFINITY;
    rec(cands, &mut vec![false; cands.len()], &mut Vec::new(), overlap, &mut best);
    best
}

/// Best total within-machine similarity over every way of dealing each
/// drug's bins to machines without exceeding `capacity` per machine.
pub fn exhaustive_grouping(bins: &[u32], sim: &[Vec<f64>], machines: usize, capacity: u32) -> Option<f64> {
    struct Ctx<'a> {
        bins: &'a [u32],
        sim: &'a [Vec<f64>],
        machines: usize,
        capacity: u32,
        load: Vec<u32>,
        present: Vec<Vec<bool>>,
        best: Option<f64>,
    }
    fn deal(c: &mut Ctx, drug: usize, machine: usize, left: u32, score: f64) {
        if machine == c.machines - 1 {
            // The last machine takes whatever is left.
            if c.load[machine] + left > c.capacity {
                return;
            }
            place(c, drug, machine, left, score, |c, s| finish_drug(c, drug, s));
            return;
        }
        for take in 0..=left {
            if c.load[machine] + take > c.capacity {
                break;
            }
            place(c, drug, machine, take, score, |c, s| deal(c, drug, machine + 1, left - take, s));
        }
    }
    fn place(c: &mut Ctx, drug: usize, machine: usize, take: u32, score: f64, next: impl FnOnce(&mut Ctx, f64)) {
        let mut gained = 0.0;
        if take > 0 {
            for other in 0..drug {
                if c.present[other][machine] {
                    gained += c.sim[drug][other];
                }
            }
            c.present[drug][machine] = true;
        }
        c.load[machine] += take;
        next(c, score + gained);
        c.load[machine] -= take;
        c.present[drug][machine] = false;
    }
    fn finish_drug(c: &mut Ctx, drug: usize, score: f64) {
        if drug + 1 == c.bins.len() {
            c.best = Some(c.best.map_or(score, |b: f64| b.max(score)));
        } else {
            let next = c.bins[drug + 1];
            deal(c, drug + 1, 0, next, score);
        }
    }
    if bins.is_empty() {
        return Some(0.0);
    }
    let mut c = Ctx {
        bins,
        sim,
        machines,
        capacity,
        load: vec![0; machines],
        present: vec![vec![false; machines]; bins.len()],
        best: None,
    };
    deal(&mut c, 0, 0, bins[0], 0.0);
    c.best
}

/// Fewest machines that together stock every drug; `holders[d]` lists the
/// machines holding drug `d`.
pub fn min_cover(holders: &[Vec<usize>], machines: usize) -> Option<usize> {
    (0u32..1 << machines)
        .filter(|set| holders.iter().all(|h| h.iter().any(|&m| set >> m & 1 == 1)))
        .map(|set| set.count_ones() as usize)
        .min()
}

/// `E[max(X, t)]` for `X ~ N(mu, sigma^2)` by adaptive Simpson quadrature
/// of `max(x, t) * pdf(x)` over `mu +- 14 sigma`, split at the kink `x = t`.
pub fn expected_max_quadrature(t: f64, mu: f64, sigma: f64) -> f64 {
    let pdf = |x: f64| {
        let z = (x - mu) / sigma;
        (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    };
    let f = |x: f64| x.max(t) * pdf(x);
    let (lo, hi) = (mu - 14.0 * sigma, mu + 14.0 * sigma);
    let mut cuts = vec![lo];
    // Extra cuts keep the narrow peak from being stepped over.
    for k in -4..=4 {
        cuts.push(mu + k as f64 * sigma);
    }
    if t > lo && t < hi {
        cuts.push(t);
    }
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += adaptive_simpson(&f, w[0], w[1], 1e-13, 50);
    }
    // Mass outside the window: contributes at most max(|mu|, t) * 1e-44.
    total
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}

pub mod gen {
    use pharmslot_core::correlation::SimilarityMatrix;
    use pharmslot_core::model::{
        Assignment, DrugCatalog, DrugId, Location, MachineAssignment, MachineLayout, OrderLine, PrescriptionOrder,
    };
    use rand::seq::SliceRandom;
    use rand::Rng;

    pub struct RoutingCase {
        pub lines: Vec<OrderLine>,
        pub assignment: Assignment,
        pub cands: Vec<Vec<(u16, u16)>>,
    }

    /// One machine, up to `max_drugs` drugs with 1..=`max_bins` bins each.
    pub fn routing_case(rng: &mut impl Rng, max_drugs: usize, max_bins: usize) -> RoutingCase {
        let mut free = MachineLayout::default().storage_locations();
        free.shuffle(rng);
        let n = rng.random_range(1..=max_drugs);
        let mut m = MachineAssignment::new();
        let mut cands = Vec::new();
        let mut lines = Vec::new();
        for k in 0..n {
            let drug = DrugId::from_index(k);
            let bins = rng.random_range(1..=max_bins);
            let mut cells = Vec::new();
            for _ in 0..bins {
                let l = free.pop().unwrap();
                m.place(l, drug).unwrap();
                cells.push((l.row, l.col));
            }
            cands.push(cells);
            lines.push(OrderLine {
                drug,
                dosage: rng.random_range(1..=3),
            });
        }
        RoutingCase {
            lines,
            assignment: Assignment::new(vec![m]),
            cands,
        }
    }

    pub struct SplitCase {
        pub order: PrescriptionOrder,
        pub assignment: Assignment,
        pub holders: Vec<Vec<usize>>,
        pub machines: usize,
    }

    /// An order whose drugs each sit on a random non-empty set of machines.
    pub fn split_case(rng: &mut impl Rng, max_drugs: usize, max_machines: usize) -> SplitCase {
        let machines = rng.random_range(1..=max_machines);
        let n = rng.random_range(1..=max_drugs);
        let mut fleet: Vec<MachineAssignment> = vec![MachineAssignment::new(); machines];
        let mut free: Vec<Vec<Location>> = (0..machines)
            .map(|_| {
                let mut v = MachineLayout::default().storage_locations();
                v.shuffle(rng);
                v
            })
            .collect();
        let mut holders = Vec::new();
        let mut lines = Vec::new();
        for k in 0..n {
            let drug = DrugId::from_index(k);
            let mask = rng.random_range(1u32..1 << machines);
            let mut on = Vec::new();
            for r in 0..machines {
                if mask >> r & 1 == 1 {
                    for _ in 0..rng.random_range(1..=2) {
                        fleet[r].place(free[r].pop().unwrap(), drug).unwrap();
                    }
                    on.push(r);
                }
            }
            holders.push(on);
            lines.push(OrderLine { drug, dosage: 1 });
        }
        SplitCase {
            order: PrescriptionOrder::new(1, lines).unwrap(),
            assignment: Assignment::new(fleet),
            holders,
            machines,
        }
    }

    pub struct GroupingCase {
        pub catalog: DrugCatalog,
        pub similarity: SimilarityMatrix,
        pub sim_rows: Vec<Vec<f64>>,
        pub bins: Vec<u32>,
        pub machines: usize,
        pub capacity: usize,
    }

    /// Up to eight drugs on up to three machines, with capacity between the
    /// tightest feasible value and two bins more.
    pub fn grouping_case(rng: &mut impl Rng) -> GroupingCase {
        let k = rng.random_range(2..=8);
        let machines = rng.random_range(1..=3);
        let max_bins = if machines == 3 { 2 } else { 3 };
        let bins: Vec<u32> = (0..k).map(|_| rng.random_range(1..=max_bins)).collect();
        let total: u32 = bins.iter().sum();
        let capacity = total.div_ceil(machines as u32) + rng.random_range(0..=2);
        let mut rows = vec![vec![0.0; k]; k];
        #[allow(clippy::needless_range_loop)]
        for a in 0..k {
            for b in a + 1..k {
                if rng.random_bool(0.7) {
                    let v = rng.random_range(0.0..1.0);
                    rows[a][b] = v;
                    rows[b][a] = v;
                }
            }
        }
        GroupingCase {
            catalog: DrugCatalog::from_bin_counts(&bins).unwrap(),
            similarity: SimilarityMatrix::from_rows(&rows).unwrap(),
            sim_rows: rows,
            bins,
            machines,
            capacity: capacity as usize,
        }
    }
}
