//! Stage II: placing one machine's bins on rack locations.
//!
//! Both locators consume storage locations in ascending time to the nearer
//! I/O point and differ only in the order drugs are taken.

use super::SAParams;
use crate::correlation::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::model::{DrugCatalog, DrugId, MachineAssignment, MachineLayout};
use crate::picking::travel::locations_by_io_time;
use std::collections::BTreeMap;

fn eta(catalog: &DrugCatalog, drug: DrugId) -> Result<f64> {
    catalog
        .get(drug)
        .map(|r| r.per_bin_frequency())
        .ok_or_else(|| Error::InvalidParameter(format!("drug {drug} not in catalog")))
}

/// Drugs by descending per-bin frequency, ties by id.
fn frequency_order(bins: &BTreeMap<DrugId, u32>, catalog: &DrugCatalog) -> Result<Vec<(DrugId, f64)>> {
    let mut drugs = bins
        .iter()
        .filter(|(_, &b)| b > 0)
        .map(|(&d, _)| Ok((d, eta(catalog, d)?)))
        .collect::<Result<Vec<_>>>()?;
    drugs.sort_by(|(a, ea), (b, eb)| eb.total_cmp(ea).then(a.cmp(b)));
    Ok(drugs)
}

fn place_in_order(
    order: &[DrugId],
    bins: &BTreeMap<DrugId, u32>,
    layout: &MachineLayout,
) -> Result<MachineAssignment> {
    let needed: u64 = bins.values().map(|&b| b as u64).sum();
    if needed > layout.capacity() as u64 {
        return Err(Error::Capacity(format!(
            "{needed} bins exceed the {} storage locations of a machine",
            layout.capacity()
        )));
    }
    let mut free = locations_by_io_time(layout).into_iter().map(|(l, _)| l);
    let mut out = MachineAssignment::new();
    for &drug in order {
        for _ in 0..bins[&drug] {
            let loc = free.next().expect("capacity checked above");
            out.place(loc, drug)?;
        }
    }
    Ok(out)
}

/// Frequency-based locating: the busiest drugs per bin get the closest bins.
pub fn locate_frequency(
    bins: &BTreeMap<DrugId, u32>,
    catalog: &DrugCatalog,
    layout: &MachineLayout,
) -> Result<MachineAssignment> {
    let order: Vec<DrugId> = frequency_order(bins, catalog)?
        .into_iter()
        .map(|(d, _)| d)
        .collect();
    place_in_order(&order, bins, layout)
}

/// Order in which the sequential alternating heuristic takes drugs.
///
/// Each cluster is seeded with the unplaced drug of highest per-bin
/// frequency. Further members are the unplaced drugs most similar to the
/// seed, provided the similarity reaches `threshold`; equal similarity goes
/// to the higher frequency, then the lower id. When no drug qualifies the
/// most frequent unplaced drug joins instead. A cluster closes after
/// `cluster_capacity` drugs.
pub fn sa_placement_order(
    bins: &BTreeMap<DrugId, u32>,
    similarity: &SimilarityMatrix,
    catalog: &DrugCatalog,
    params: &SAParams,
) -> Result<Vec<DrugId>> {
    params.validate()?;
    // Unplaced drugs in frequency order; placement removes them, which also
    // takes them out of every later similarity scan.
    let mut pending: Vec<DrugId> = frequency_order(bins, catalog)?
        .into_iter()
        .map(|(d, _)| d)
        .collect();
    let mut order = Vec::with_capacity(pending.len());
    while !pending.is_empty() {
        let seed = pending.remove(0);
        order.push(seed);
        let mut room = params.cluster_capacity - 1;
        while room > 0 && !pending.is_empty() {
            let mut best: Option<(usize, f64)> = None;
            for (pos, &cand) in pending.iter().enumerate() {
                let s = similarity.get(seed, cand);
                if s >= params.threshold && best.is_none_or(|(_, b)| s > b) {
                    best = Some((pos, s));
                }
            }
            let pos = best.map_or(0, |(pos, _)| pos);
            order.push(pending.remove(pos));
            room -= 1;
        }
    }
    Ok(order)
}

/// Clustered locating: bins are laid out in [`sa_placement_order`].
pub fn locate_sa(
    bins: &BTreeMap<DrugId, u32>,
    similarity: &SimilarityMatrix,
    catalog: &DrugCatalog,
    layout: &MachineLayout,
    params: &SAParams,
) -> Result<MachineAssignment> {
    let order = sa_placement_order(bins, similarity, catalog, params)?;
    place_in_order(&order, bins, layout)
}
