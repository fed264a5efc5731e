//! Greedy construction plus first-improvement local search for Stage I.
//!
//! Objective bookkeeping is incremental: `gain[k][r]` holds the similarity
//! drug `k` would collect on machine `r` from the drugs present there, so a
//! move's effect only needs the presence flips it causes.

use super::{check_inputs, grouping_objective};
use crate::correlation::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::model::{DrugCatalog, DrugId, Grouping};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Local search stops after this many accepted moves.
pub const MAX_LOCAL_SEARCH_MOVES: usize = 10_000;

const IMPROVEMENT_EPS: f64 = 1e-12;

struct State<'a> {
    similarity: &'a SimilarityMatrix,
    capacity: u32,
    /// `bins[k][r]`
    bins: Vec<Vec<u32>>,
    load: Vec<u32>,
    gain: Vec<Vec<f64>>,
    /// Drugs present per machine, kept sorted for deterministic scans.
    present: Vec<Vec<usize>>,
}

impl<'a> State<'a> {
    fn new(similarity: &'a SimilarityMatrix, drugs: usize, machines: usize, capacity: u32) -> Self {
        Self {
            similarity,
            capacity,
            bins: vec![vec![0; machines]; drugs],
            load: vec![0; machines],
            gain: vec![vec![0.0; machines]; drugs],
            present: vec![Vec::new(); machines],
        }
    }

    #[inline]
    fn machines(&self) -> usize {
        self.load.len()
    }

    #[inline]
    fn free(&self, r: usize) -> u32 {
        self.capacity - self.load[r]
    }

    fn set_bins(&mut self, k: usize, r: usize, count: u32) {
        let before = self.bins[k][r];
        self.load[r] = self.load[r] - before + count;
        self.bins[k][r] = count;
        match (before > 0, count > 0) {
            (false, true) => {
                let pos = self.present[r].partition_point(|&d| d < k);
                self.present[r].insert(pos, k);
                let row = self.similarity.row(k);
                for (j, g) in self.gain.iter_mut().enumerate() {
                    g[r] += row[j];
                }
            }
            (true, false) => {
                let pos = self.present[r].partition_point(|&d| d < k);
                self.present[r].remove(pos);
                let row = self.similarity.row(k);
                for (j, g) in self.gain.iter_mut().enumerate() {
                    g[r] -= row[j];
                }
            }
            _ => {}
        }
    }

    /// Objective change when drug `k` goes from `bins[k][r]` bins to `kr`
    /// on `r` and to `kq` on `q`, and drug `j` likewise to `jr` and `jq`.
    /// Pass `j == k` with unchanged counts to model a single-drug move.
    fn delta(&self, k: usize, j: usize, r: usize, q: usize, after: [u32; 4]) -> f64 {
        let s_kj = if j == k { 0.0 } else { self.similarity.by_index(k, j) };
        let mut total = 0.0;
        for (m, (ak, aj)) in [(r, (after[0], after[2])), (q, (after[1], after[3]))] {
            let bk = (self.bins[k][m] > 0) as i32 as f64;
            let bj = (self.bins[j][m] > 0) as i32 as f64;
            let ak = (ak > 0) as i32 as f64;
            let aj = (aj > 0) as i32 as f64;
            total += (ak - bk) * (self.gain[k][m] - s_kj * bj);
            if j != k {
                total += (aj - bj) * (self.gain[j][m] - s_kj * bk);
                total += s_kj * (ak * aj - bk * bj);
            }
        }
        total
    }

    fn relocate_delta(&self, k: usize, from: usize, to: usize, n: u32) -> f64 {
        let b_from = self.bins[k][from];
        let b_to = self.bins[k][to];
        self.delta(k, k, from, to, [b_from - n, b_to + n, b_from - n, b_to + n])
    }

    fn apply_relocate(&mut self, k: usize, from: usize, to: usize, n: u32) {
        let (bf, bt) = (self.bins[k][from], self.bins[k][to]);
        self.set_bins(k, from, bf - n);
        self.set_bins(k, to, bt + n);
    }

    /// Moves `nk` bins of `k` from `r` to `q` and `nj` bins of `j` from `q` to `r`.
    fn swap_delta(&self, k: usize, j: usize, r: usize, q: usize, nk: u32, nj: u32) -> f64 {
        self.delta(
            k,
            j,
            r,
            q,
            [
                self.bins[k][r] - nk,
                self.bins[k][q] + nk,
                self.bins[j][r] + nj,
                self.bins[j][q] - nj,
            ],
        )
    }

    fn apply_swap(&mut self, k: usize, j: usize, r: usize, q: usize, nk: u32, nj: u32) {
        let (kr, kq, jr, jq) = (self.bins[k][r], self.bins[k][q], self.bins[j][r], self.bins[j][q]);
        self.set_bins(k, r, kr - nk);
        self.set_bins(j, q, jq - nj);
        self.set_bins(k, q, kq + nk);
        self.set_bins(j, r, jr + nj);
    }

    fn swap_fits(&self, r: usize, q: usize, nk: u32, nj: u32) -> bool {
        self.load[r] - nk + nj <= self.capacity && self.load[q] - nj + nk <= self.capacity
    }

    /// Machines ordered for greedy placement: highest gain, then most free
    /// space, then lowest index.
    fn ranked_machines(&self, k: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.machines()).collect();
        order.sort_by(|&a, &b| {
            self.gain[k][b]
                .total_cmp(&self.gain[k][a])
                .then(self.free(b).cmp(&self.free(a)))
                .then(a.cmp(&b))
        });
        order
    }

    fn into_grouping(self) -> Grouping {
        let machines = self.machines();
        let mut per_machine = vec![BTreeMap::new(); machines];
        for (k, row) in self.bins.iter().enumerate() {
            for (r, &b) in row.iter().enumerate() {
                if b > 0 {
                    per_machine[r].insert(DrugId::from_index(k), b);
                }
            }
        }
        let objective = grouping_objective(&per_machine, self.similarity);
        Grouping {
            machines: per_machine,
            objective,
        }
    }
}

/// Drug indices by descending demand frequency, ties by id.
fn by_frequency(catalog: &DrugCatalog) -> Vec<usize> {
    let mut order: Vec<usize> = (0..catalog.len()).collect();
    let recs = catalog.records();
    order.sort_by(|&a, &b| {
        recs[b]
            .demand_frequency
            .cmp(&recs[a].demand_frequency)
            .then(a.cmp(&b))
    });
    order
}

/// Stage I with scattered storage.
///
/// Drugs are seeded in descending demand frequency, each on the machine
/// where it gains the most similarity; a drug's bins are split only when no
/// single machine has room for all of them. Local search then tries moving
/// one bin or all of a drug's bins on a machine, and swapping one bin or
/// whole holdings between two drugs on different machines, accepting the
/// first improving move. `seed` fixes the scan order.
pub fn group_scattered_heuristic(
    catalog: &DrugCatalog,
    similarity: &SimilarityMatrix,
    machines: usize,
    capacity: usize,
    seed: u64,
) -> Result<Grouping> {
    check_inputs(catalog, similarity, machines, capacity)?;
    let mut state = State::new(similarity, catalog.len(), machines, capacity as u32);

    for k in by_frequency(catalog) {
        let need = catalog.records()[k].bin_count;
        let ranked = state.ranked_machines(k);
        if let Some(&r) = ranked.iter().find(|&&r| state.free(r) >= need) {
            state.set_bins(k, r, need);
            continue;
        }
        let mut left = need;
        for r in ranked {
            let take = left.min(state.free(r));
            if take > 0 {
                state.set_bins(k, r, take);
                left -= take;
            }
            if left == 0 {
                break;
            }
        }
        if left > 0 {
            return Err(Error::Capacity(format!(
                "no room for {left} bins of drug {}",
                DrugId::from_index(k)
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..catalog.len()).collect();
    let mut moves = 0;
    'search: loop {
        order.shuffle(&mut rng);
        let mut improved = false;
        for &k in &order {
            for r in 0..machines {
                for q in 0..machines {
                    if q == r || state.bins[k][r] == 0 {
                        continue;
                    }
                    let held = state.bins[k][r];
                    for n in [1, held] {
                        if n <= state.free(q) && state.relocate_delta(k, r, q, n) > IMPROVEMENT_EPS {
                            state.apply_relocate(k, r, q, n);
                            improved = true;
                            moves += 1;
                            if moves >= MAX_LOCAL_SEARCH_MOVES {
                                break 'search;
                            }
                            break;
                        }
                        if held == 1 {
                            break;
                        }
                    }
                    if state.bins[k][r] == 0 {
                        continue;
                    }
                    let mut n = 0;
                    while n < state.present[q].len() {
                        let j = state.present[q][n];
                        n += 1;
                        if j == k || state.bins[k][r] == 0 {
                            continue;
                        }
                        let candidates = [(1, 1), (state.bins[k][r], state.bins[j][q])];
                        for (nk, nj) in candidates {
                            if state.swap_fits(r, q, nk, nj)
                                && state.swap_delta(k, j, r, q, nk, nj) > IMPROVEMENT_EPS
                            {
                                state.apply_swap(k, j, r, q, nk, nj);
                                improved = true;
                                moves += 1;
                                if moves >= MAX_LOCAL_SEARCH_MOVES {
                                    break 'search;
                                }
                                break;
                            }
                        }
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }

    Ok(state.into_grouping())
}

/// Stage I without scattered storage: each drug keeps all its bins on one
/// machine.
///
/// Same construction and search as the scattered variant, restricted to
/// whole-drug relocations and whole-drug swaps. When similarity-driven
/// seeding cannot pack the drugs, a first-fit-decreasing packing by bin
/// count is tried before giving up.
pub fn group_dedicated(
    catalog: &DrugCatalog,
    similarity: &SimilarityMatrix,
    machines: usize,
    capacity: usize,
    seed: u64,
) -> Result<Grouping> {
    check_inputs(catalog, similarity, machines, capacity)?;
    if let Some(r) = catalog.records().iter().find(|r| r.bin_count as usize > capacity) {
        return Err(Error::Infeasible(format!(
            "drug {} needs {} bins but a machine holds {capacity}",
            r.id, r.bin_count
        )));
    }
    let bins = |k: usize| catalog.records()[k].bin_count;

    let mut state = State::new(similarity, catalog.len(), machines, capacity as u32);
    let mut packed = true;
    for k in by_frequency(catalog) {
        match state
            .ranked_machines(k)
            .into_iter()
            .find(|&r| state.free(r) >= bins(k))
        {
            Some(r) => state.set_bins(k, r, bins(k)),
            None => {
                packed = false;
                break;
            }
        }
    }
    if !packed {
        state = State::new(similarity, catalog.len(), machines, capacity as u32);
        let mut order: Vec<usize> = (0..catalog.len()).collect();
        order.sort_by(|&a, &b| bins(b).cmp(&bins(a)).then(a.cmp(&b)));
        for k in order {
            let r = (0..machines)
                .find(|&r| state.free(r) >= bins(k))
                .ok_or_else(|| {
                    Error::Infeasible(format!(
                        "cannot pack drug {} ({} bins) into {machines} machines of {capacity}",
                        DrugId::from_index(k),
                        bins(k)
                    ))
                })?;
            state.set_bins(k, r, bins(k));
        }
    }

    let home = |state: &State, k: usize| (0..machines).find(|&r| state.bins[k][r] > 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..catalog.len()).collect();
    let mut moves = 0;
    'search: loop {
        order.shuffle(&mut rng);
        let mut improved = false;
        for &k in &order {
            for q in 0..machines {
                let r = home(&state, k);
                if q == r {
                    continue;
                }
                let nk = bins(k);
                if nk <= state.free(q) && state.relocate_delta(k, r, q, nk) > IMPROVEMENT_EPS {
                    state.apply_relocate(k, r, q, nk);
                    improved = true;
                    moves += 1;
                    if moves >= MAX_LOCAL_SEARCH_MOVES {
                        break 'search;
                    }
                    continue;
                }
                let mut n = 0;
                while n < state.present[q].len() {
                    let j = state.present[q][n];
                    n += 1;
                    let nj = bins(j);
                    if state.swap_fits(r, q, nk, nj)
                        && state.swap_delta(k, j, r, q, nk, nj) > IMPROVEMENT_EPS
                    {
                        state.apply_swap(k, j, r, q, nk, nj);
                        improved = true;
                        moves += 1;
                        if moves >= MAX_LOCAL_SEARCH_MOVES {
                            break 'search;
                        }
                        break;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }

    Ok(state.into_grouping())
}
