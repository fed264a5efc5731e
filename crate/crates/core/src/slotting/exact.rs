//! Certified optimum of the scattered grouping model for small instances.
//!
//! The objective depends only on which machines hold each drug (the presence
//! pattern `x`), so the search enumerates presence rows drug by drug and
//! defers bin counts to a feasibility check. Given `x`, bin counts exist iff
//! every drug has at least one bin per chosen machine and the remaining
//! "extra" bins fit: for every machine subset `T`, the extras of drugs whose
//! machines all lie in `T` must not exceed the spare capacity of `T`.
//!
//! Machines are interchangeable, so only patterns whose columns read
//! top-down are non-decreasing are explored. The lexicographically smallest
//! optimal pattern always has that form, which keeps the tie-break intact.

use super::{check_inputs, grouping_objective};
use crate::correlation::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::model::{DrugCatalog, DrugId, Grouping};
use std::collections::{BTreeMap, VecDeque};

pub const EXACT_MAX_DRUGS: usize = 12;
pub const EXACT_MAX_MACHINES: usize = 3;

const EPS: f64 = 1e-12;

struct Search<'a> {
    similarity: &'a SimilarityMatrix,
    bins: Vec<u32>,
    machines: usize,
    capacity: u32,
    /// Presence masks per drug; bit `machines - 1 - r` is machine `r`, so
    /// ascending mask order is lexicographic row order.
    options: Vec<Vec<u32>>,
    /// Bound on the similarity still available among drugs `k..`.
    tail_bound: Vec<f64>,
    rows: Vec<u32>,
    best_rows: Option<Vec<u32>>,
    best_value: f64,
}

impl Search<'_> {
    #[inline]
    fn holds(&self, mask: u32, machine: usize) -> bool {
        mask >> (self.machines - 1 - machine) & 1 == 1
    }

    /// Hall condition over the rows assigned so far.
    fn feasible(&self) -> bool {
        let mut spare = vec![self.capacity as i64; self.machines];
        for &mask in &self.rows {
            for (r, s) in spare.iter_mut().enumerate() {
                if self.holds(mask, r) {
                    *s -= 1;
                }
            }
        }
        if spare.iter().any(|&s| s < 0) {
            return false;
        }
        let full = (1u32 << self.machines) - 1;
        for subset in 1..=full {
            let cap: i64 = (0..self.machines)
                .filter(|&r| self.holds(subset, r))
                .map(|r| spare[r])
                .sum();
            let need: i64 = self
                .rows
                .iter()
                .enumerate()
                .filter(|(_, &mask)| mask & !subset == 0)
                .map(|(k, &mask)| self.bins[k] as i64 - mask.count_ones() as i64)
                .sum();
            if need > cap {
                return false;
            }
        }
        true
    }

    /// Columns, read top-down over the assigned rows, must be non-decreasing.
    fn columns_sorted(&self) -> bool {
        for c in 0..self.machines.saturating_sub(1) {
            for &mask in &self.rows {
                let (a, b) = (self.holds(mask, c), self.holds(mask, c + 1));
                if a != b {
                    if a {
                        return false;
                    }
                    break;
                }
            }
        }
        true
    }

    fn bound(&self, partial: f64) -> f64 {
        let k = self.rows.len();
        let mut bound = partial + self.tail_bound[k];
        for (i, &mask) in self.rows.iter().enumerate() {
            let copies = mask.count_ones();
            for j in k..self.bins.len() {
                let shared = copies.min(self.bins[j]).min(self.machines as u32);
                bound += self.similarity.by_index(i, j) * shared as f64;
            }
        }
        bound
    }

    fn descend(&mut self, partial: f64) {
        let k = self.rows.len();
        if k == self.bins.len() {
            if self.best_rows.is_none() || partial > self.best_value + EPS {
                self.best_value = partial;
                self.best_rows = Some(self.rows.clone());
            }
            return;
        }
        if self.best_rows.is_some() && self.bound(partial) <= self.best_value + EPS {
            return;
        }
        for n in 0..self.options[k].len() {
            let mask = self.options[k][n];
            let gain: f64 = self
                .rows
                .iter()
                .enumerate()
                .map(|(i, &other)| {
                    self.similarity.by_index(i, k) * (other & mask).count_ones() as f64
                })
                .sum();
            self.rows.push(mask);
            if self.columns_sorted() && self.feasible() {
                self.descend(partial + gain);
            }
            self.rows.pop();
        }
    }
}

/// Maximises total within-machine similarity over all feasible scattered
/// groupings. Ties go to the lexicographically smallest presence matrix
/// (rows by drug id, columns by machine).
pub fn group_scattered_exact(
    catalog: &DrugCatalog,
    similarity: &SimilarityMatrix,
    machines: usize,
    capacity: usize,
) -> Result<Grouping> {
    if catalog.len() > EXACT_MAX_DRUGS || machines > EXACT_MAX_MACHINES {
        return Err(Error::ExactGuard(format!(
            "{} drugs on {machines} machines; limit is {EXACT_MAX_DRUGS} drugs and {EXACT_MAX_MACHINES} machines",
            catalog.len()
        )));
    }
    check_inputs(catalog, similarity, machines, capacity)?;

    let bins: Vec<u32> = catalog.records().iter().map(|r| r.bin_count).collect();
    let full = (1u32 << machines) - 1;
    let options = bins
        .iter()
        .map(|&b| (1..=full).filter(|m| m.count_ones() <= b).collect())
        .collect();
    let k_total = bins.len();
    let mut tail_bound = vec![0.0; k_total + 1];
    for k in (0..k_total).rev() {
        let mut row = 0.0;
        for j in k + 1..k_total {
            let shared = bins[k].min(bins[j]).min(machines as u32);
            row += similarity.by_index(k, j) * shared as f64;
        }
        tail_bound[k] = tail_bound[k + 1] + row;
    }

    let mut search = Search {
        similarity,
        bins,
        machines,
        capacity: capacity as u32,
        options,
        tail_bound,
        rows: Vec::with_capacity(k_total),
        best_rows: None,
        best_value: f64::NEG_INFINITY,
    };
    search.descend(0.0);
    let rows = search
        .best_rows
        .ok_or_else(|| Error::Capacity("no feasible grouping exists".into()))?;

    let present: Vec<Vec<bool>> = rows
        .iter()
        .map(|&mask| (0..machines).map(|r| search_holds(mask, machines, r)).collect())
        .collect();
    let counts = split_bins(&search.bins, &present, capacity as u32)
        .ok_or_else(|| Error::Capacity("presence pattern admits no bin split".into()))?;

    let mut per_machine = vec![BTreeMap::new(); machines];
    for (k, row) in counts.iter().enumerate() {
        for (r, &b) in row.iter().enumerate() {
            if b > 0 {
                per_machine[r].insert(DrugId::from_index(k), b);
            }
        }
    }
    let objective = grouping_objective(&per_machine, similarity);
    Ok(Grouping {
        machines: per_machine,
        objective,
    })
}

#[inline]
fn search_holds(mask: u32, machines: usize, machine: usize) -> bool {
    mask >> (machines - 1 - machine) & 1 == 1
}

/// Bin counts realising a presence pattern: one bin per chosen machine plus
/// the extras routed by max-flow. `None` if the pattern cannot be realised.
pub(crate) fn split_bins(bins: &[u32], present: &[Vec<bool>], capacity: u32) -> Option<Vec<Vec<u32>>> {
    let machines = present.first().map_or(0, Vec::len);
    let k_total = bins.len();
    let mut spare = vec![capacity as i64; machines];
    let mut counts = vec![vec![0u32; machines]; k_total];
    let mut extra = vec![0i64; k_total];
    for k in 0..k_total {
        let copies = present[k].iter().filter(|&&p| p).count() as i64;
        if copies == 0 || copies > bins[k] as i64 {
            return None;
        }
        extra[k] = bins[k] as i64 - copies;
        for r in 0..machines {
            if present[k][r] {
                counts[k][r] = 1;
                spare[r] -= 1;
            }
        }
    }
    if spare.iter().any(|&s| s < 0) {
        return None;
    }

    // source, drugs, machines, sink
    let source = 0;
    let sink = k_total + machines + 1;
    let n = sink + 1;
    let mut cap = vec![vec![0i64; n]; n];
    for k in 0..k_total {
        cap[source][1 + k] = extra[k];
        for r in 0..machines {
            if present[k][r] {
                cap[1 + k][1 + k_total + r] = i64::MAX / 4;
            }
        }
    }
    for r in 0..machines {
        cap[1 + k_total + r][sink] = spare[r];
    }
    let original = cap.clone();
    let demand: i64 = extra.iter().sum();
    let mut flow = 0;
    loop {
        let mut parent = vec![usize::MAX; n];
        parent[source] = source;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if parent[v] == usize::MAX && cap[u][v] > 0 {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            break;
        }
        let mut push = i64::MAX;
        let mut v = sink;
        while v != source {
            let u = parent[v];
            push = push.min(cap[u][v]);
            v = u;
        }
        let mut v = sink;
        while v != source {
            let u = parent[v];
            cap[u][v] -= push;
            cap[v][u] += push;
            v = u;
        }
        flow += push;
    }
    if flow != demand {
        return None;
    }
    for k in 0..k_total {
        for r in 0..machines {
            let used = original[1 + k][1 + k_total + r] - cap[1 + k][1 + k_total + r];
            if used > 0 {
                counts[k][r] += used as u32;
            }
        }
    }
    Some(counts)
}
