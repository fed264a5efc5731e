//! Splitting a prescription across machines.
//!
//! The primary goal is the fewest machines; among splits that reach it, the
//! one with the least total expected route time wins.

use super::routing::{route_machine_exact, route_machine_greedy, MachineRoute, RouteContext, EXACT_ROUTE_MAX};
use super::travel::io_time;
use crate::error::{Error, Result};
use crate::model::{Assignment, DrugId, OrderLine, PrescriptionOrder, StockState};
use std::collections::HashMap;

/// Above this many drug-to-machine combinations for one machine set, drugs
/// stocked on several machines go to the one with the nearest bin.
pub const SPLIT_ENUMERATION_LIMIT: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub order_id: u64,
    /// One route per machine used, ascending machine index.
    pub routes: Vec<MachineRoute>,
    /// Sum of route expected times, without any cross-machine penalty.
    pub expected_time: f64,
}

impl SplitPlan {
    #[inline]
    pub fn machine_count(&self) -> usize {
        self.routes.len()
    }

    pub fn machines(&self) -> impl Iterator<Item = usize> + '_ {
        self.routes.iter().map(|r| r.machine)
    }

    /// Machine serving `drug`, if the drug is in the order.
    pub fn machine_of(&self, drug: DrugId) -> Option<usize> {
        self.routes
            .iter()
            .find(|r| r.stops.iter().any(|s| s.drug == drug))
            .map(|r| r.machine)
    }
}

/// Machines able to serve each line: some bin of the drug holds at least
/// the dosage.
pub fn feasible_machines(
    order: &PrescriptionOrder,
    assignment: &Assignment,
    stock: &StockState,
) -> Result<Vec<Vec<usize>>> {
    order
        .lines()
        .iter()
        .map(|line| {
            let machines: Vec<usize> = assignment
                .machines
                .iter()
                .enumerate()
                .filter(|(r, m)| {
                    m.locations_of(line.drug)
                        .iter()
                        .any(|&l| stock.remaining(*r, l) >= line.dosage)
                })
                .map(|(r, _)| r)
                .collect();
            if machines.is_empty() {
                Err(Error::Stockout {
                    drug: line.drug,
                    dosage: line.dosage,
                })
            } else {
                Ok(machines)
            }
        })
        .collect()
}

/// Size-`m` subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < m - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, m, &mut Vec::with_capacity(m), &mut out);
    out
}

/// Smallest machine sets covering every line, in lexicographic order.
pub fn minimal_cover_sets(feasible: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut universe: Vec<usize> = feasible.iter().flatten().copied().collect();
    universe.sort_unstable();
    universe.dedup();
    for size in 1..=universe.len() {
        let covers: Vec<Vec<usize>> = combinations(universe.len(), size)
            .into_iter()
            .map(|idx| idx.into_iter().map(|i| universe[i]).collect::<Vec<_>>())
            .filter(|set| feasible.iter().all(|f| f.iter().any(|r| set.contains(r))))
            .collect();
        if !covers.is_empty() {
            return covers;
        }
    }
    Vec::new()
}

struct Router<'a> {
    order: &'a PrescriptionOrder,
    assignment: &'a Assignment,
    stock: &'a StockState,
    ctx: &'a RouteContext<'a>,
    exact: bool,
    cache: HashMap<(usize, u64), MachineRoute>,
}

impl Router<'_> {
    fn route(&mut self, machine: usize, mask: u64) -> Result<&MachineRoute> {
        if !self.cache.contains_key(&(machine, mask)) {
            let lines: Vec<OrderLine> = self
                .order
                .lines()
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, l)| *l)
                .collect();
            let m = &self.assignment.machines[machine];
            let route = if self.exact {
                route_machine_exact(&lines, machine, m, self.stock, self.ctx)?
            } else {
                route_machine_greedy(&lines, machine, m, self.stock, self.ctx)?
            };
            self.cache.insert((machine, mask), route);
        }
        Ok(&self.cache[&(machine, mask)])
    }

    /// Total time of a drug-to-machine choice; `choice[i]` indexes `set`.
    fn cost(&mut self, set: &[usize], choice: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for (pos, &machine) in set.iter().enumerate() {
            let mask = choice
                .iter()
                .enumerate()
                .filter(|(_, &c)| c == pos)
                .fold(0u64, |m, (i, _)| m | 1 << i);
            if mask != 0 {
                total += self.route(machine, mask)?.expected_time;
            }
        }
        Ok(total)
    }
}

/// Splits `order` over the fewest machines, then the least expected time.
///
/// Candidate machine sets are enumerated by size over the machines that
/// stock the order's drugs; within the smallest feasible size, every
/// drug-to-machine choice is routed and timed. Routing is exact when the
/// whole order fits [`EXACT_ROUTE_MAX`] and greedy otherwise. Ties go to the
/// lexicographically smallest machine set.
pub fn split_order(
    order: &PrescriptionOrder,
    assignment: &Assignment,
    stock: &StockState,
    ctx: &RouteContext,
) -> Result<SplitPlan> {
    let feasible = feasible_machines(order, assignment, stock)?;
    if order.drug_count() > 64 {
        return Err(Error::InvalidParameter(format!(
            "order {} has {} drugs; at most 64 are supported",
            order.id,
            order.drug_count()
        )));
    }
    let mut router = Router {
        order,
        assignment,
        stock,
        ctx,
        exact: order.drug_count() <= EXACT_ROUTE_MAX,
        cache: HashMap::new(),
    };

    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for set in minimal_cover_sets(&feasible) {
        let options: Vec<Vec<usize>> = feasible
            .iter()
            .map(|f| (0..set.len()).filter(|&p| f.contains(&set[p])).collect())
            .collect();
        let combos = options
            .iter()
            .try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
            .unwrap_or(usize::MAX);

        if combos > SPLIT_ENUMERATION_LIMIT {
            let choice: Vec<usize> = order
                .lines()
                .iter()
                .zip(&options)
                .map(|(line, opts)| nearest_machine(line, opts, &set, assignment, stock, ctx))
                .collect();
            let cost = router.cost(&set, &choice)?;
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, set.clone(), choice));
            }
            continue;
        }

        // odometer over the per-line options
        let mut digits = vec![0usize; options.len()];
        loop {
            let choice: Vec<usize> = digits.iter().zip(&options).map(|(&d, o)| o[d]).collect();
            let cost = router.cost(&set, &choice)?;
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, set.clone(), choice));
            }
            let mut exhausted = true;
            for i in (0..digits.len()).rev() {
                digits[i] += 1;
                if digits[i] < options[i].len() {
                    exhausted = false;
                    break;
                }
                digits[i] = 0;
            }
            if exhausted {
                break;
            }
        }
    }

    let (expected_time, set, choice) =
        best.ok_or_else(|| Error::Infeasible(format!("order {} cannot be split", order.id)))?;
    let mut routes = Vec::with_capacity(set.len());
    for (pos, &machine) in set.iter().enumerate() {
        let mask = choice
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == pos)
            .fold(0u64, |m, (i, _)| m | 1 << i);
        if mask != 0 {
            routes.push(router.route(machine, mask)?.clone());
        }
    }
    Ok(SplitPlan {
        order_id: order.id,
        routes,
        expected_time,
    })
}

fn nearest_machine(
    line: &OrderLine,
    options: &[usize],
    set: &[usize],
    assignment: &Assignment,
    stock: &StockState,
    ctx: &RouteContext,
) -> usize {
    options
        .iter()
        .map(|&p| {
            let machine = set[p];
            let t = assignment.machines[machine]
                .locations_of(line.drug)
                .iter()
                .filter(|&&l| stock.remaining(machine, l) >= line.dosage)
                .map(|&l| io_time(l, ctx.layout))
                .fold(f64::INFINITY, f64::min);
            (t, p)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, p)| p)
        .expect("every line has an option")
}
