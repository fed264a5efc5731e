//! Domain types shared by the slotting and picking pipeline.
//!
//! Everything here is plain data plus validation. Algorithms live in
//! [`crate::correlation`], [`crate::slotting`] and [`crate::picking`].

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;

/// Dense 1-based drug identifier.
#[repr(transparent)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DrugId(u32);

impl DrugId {
    #[inline]
    pub const fn new(id: u32) -> Self {
        DrugId(id)
    }

    #[inline]
    pub const fn value(self) -> u32 {
        self.0
    }

    /// Zero-based position in a catalog.
    #[inline]
    pub const fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    #[inline]
    pub const fn from_index(index: usize) -> Self {
        DrugId(index as u32 + 1)
    }
}

impl fmt::Display for DrugId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrugRecord {
    pub id: DrugId,
    pub bin_count: u32,
    pub demand_frequency: u64,
}

impl DrugRecord {
    /// Orders served per bin, `f_k / b_k`.
    #[inline]
    pub fn per_bin_frequency(&self) -> f64 {
        self.demand_frequency as f64 / self.bin_count as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrugCatalog {
    records: Vec<DrugRecord>,
}

impl DrugCatalog {
    /// Builds a catalog; ids must be exactly `1..=K` in order and every drug
    /// needs at least one bin.
    pub fn new(records: Vec<DrugRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.id != DrugId::from_index(i) {
                return Err(Error::InvalidParameter(format!(
                    "catalog ids must be contiguous from 1; position {} holds id {}",
                    i + 1,
                    r.id
                )));
            }
            if r.bin_count == 0 {
                return Err(Error::InvalidParameter(format!(
                    "drug {} has zero bins",
                    r.id
                )));
            }
        }
        Ok(Self { records })
    }

    /// Catalog of `bins.len()` drugs with the given bin counts and zero demand.
    pub fn from_bin_counts(bins: &[u32]) -> Result<Self> {
        Self::new(
            bins.iter()
                .enumerate()
                .map(|(i, &b)| DrugRecord {
                    id: DrugId::from_index(i),
                    bin_count: b,
                    demand_frequency: 0,
                })
                .collect(),
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.records.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    #[inline]
    pub fn records(&self) -> &[DrugRecord] {
        &self.records
    }

    #[inline]
    pub fn get(&self, id: DrugId) -> Option<&DrugRecord> {
        if id.value() == 0 {
            return None;
        }
        self.records.get(id.index())
    }

    #[inline]
    pub fn contains(&self, id: DrugId) -> bool {
        self.get(id).is_some()
    }

    pub fn ids(&self) -> impl Iterator<Item = DrugId> + '_ {
        self.records.iter().map(|r| r.id)
    }

    pub fn total_bins(&self) -> u64 {
        self.records.iter().map(|r| r.bin_count as u64).sum()
    }

    pub fn with_frequencies(&self, frequencies: &[u64]) -> Self {
        debug_assert_eq!(frequencies.len(), self.records.len());
        let records = self
            .records
            .iter()
            .zip(frequencies)
            .map(|(r, &f)| DrugRecord {
                demand_frequency: f,
                ..*r
            })
            .collect();
        Self { records }
    }

    /// Fails when the drugs need more bins than `machines` machines of
    /// `capacity` bins each provide.
    pub fn check_fleet_capacity(&self, machines: usize, capacity: usize) -> Result<()> {
        let need = self.total_bins();
        let have = (machines * capacity) as u64;
        if need > have {
            return Err(Error::Capacity(format!(
                "{need} bins requested but {machines} machines hold only {have}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderLine {
    pub drug: DrugId,
    /// Units requested, at least one.
    pub dosage: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrescriptionOrder {
    pub id: u64,
    lines: Vec<OrderLine>,
}

impl PrescriptionOrder {
    pub fn new(id: u64, lines: Vec<OrderLine>) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::Ingestion {
                order: id,
                reason: "order has no lines".into(),
            });
        }
        for (i, line) in lines.iter().enumerate() {
            if line.dosage == 0 {
                return Err(Error::Ingestion {
                    order: id,
                    reason: format!("drug {} has zero dosage", line.drug),
                });
            }
            if lines[..i].iter().any(|l| l.drug == line.drug) {
                return Err(Error::Ingestion {
                    order: id,
                    reason: format!("drug {} listed twice", line.drug),
                });
            }
        }
        Ok(Self { id, lines })
    }

    #[inline]
    pub fn lines(&self) -> &[OrderLine] {
        &self.lines
    }

    /// Number of distinct drug types, `K_q`.
    #[inline]
    pub fn drug_count(&self) -> usize {
        self.lines.len()
    }

    pub fn drugs(&self) -> impl Iterator<Item = DrugId> + '_ {
        self.lines.iter().map(|l| l.drug)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OrderHistory {
    pub orders: Vec<PrescriptionOrder>,
}

impl OrderHistory {
    pub fn new(orders: Vec<PrescriptionOrder>) -> Self {
        Self { orders }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.orders.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// Checks that every referenced drug exists in `catalog`.
    pub fn validate_against(&self, catalog: &DrugCatalog) -> Result<()> {
        for order in &self.orders {
            if let Some(bad) = order.drugs().find(|&d| !catalog.contains(d)) {
                return Err(Error::Ingestion {
                    order: order.id,
                    reason: format!("unknown drug id {bad}"),
                });
            }
        }
        Ok(())
    }
}

/// A rack position. Ordering is `(side, row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub side: u8,
    pub row: u16,
    pub col: u16,
}

impl Location {
    #[inline]
    pub const fn new(side: u8, row: u16, col: u16) -> Self {
        Self { side, row, col }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.side, self.row, self.col)
    }
}

/// Geometry of one dispensing machine. All machines in a fleet share it.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineLayout {
    pub rows: u16,
    pub cols: u16,
    pub sides: u8,
    /// Metres per row step.
    pub row_pitch: f64,
    /// Metres per column step.
    pub col_pitch: f64,
    /// Crane speed in m/s, identical on both axes.
    pub speed: f64,
    pub io_points: [Location; 2],
}

impl Default for MachineLayout {
    fn default() -> Self {
        Self {
            rows: 9,
            cols: 16,
            sides: 2,
            row_pitch: 0.275,
            col_pitch: 0.168,
            speed: 0.1486,
            io_points: [Location::new(1, 8, 6), Location::new(1, 9, 6)],
        }
    }
}

impl MachineLayout {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.sides == 0 {
            return Err(Error::InvalidParameter("layout dimensions must be positive".into()));
        }
        for (name, v) in [
            ("row pitch", self.row_pitch),
            ("column pitch", self.col_pitch),
            ("speed", self.speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        let [a, b] = self.io_points;
        if a == b {
            return Err(Error::InvalidParameter("I/O points must differ".into()));
        }
        for io in self.io_points {
            if !self.contains(io) {
                return Err(Error::InvalidParameter(format!("I/O point {io} outside layout")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn contains(&self, loc: Location) -> bool {
        (1..=self.sides).contains(&loc.side)
            && (1..=self.rows).contains(&loc.row)
            && (1..=self.cols).contains(&loc.col)
    }

    #[inline]
    pub fn is_io(&self, loc: Location) -> bool {
        self.io_points.contains(&loc)
    }

    #[inline]
    pub fn is_storage(&self, loc: Location) -> bool {
        self.contains(loc) && !self.is_io(loc)
    }

    /// Usable storage bins per machine, `Q`.
    #[inline]
    pub fn capacity(&self) -> usize {
        self.position_count() - self.io_points.len()
    }

    /// Number of rack positions including I/O points.
    #[inline]
    pub fn position_count(&self) -> usize {
        self.sides as usize * self.rows as usize * self.cols as usize
    }

    /// Dense index over all positions, in `(side, row, col)` order.
    #[inline]
    pub fn index_of(&self, loc: Location) -> usize {
        debug_assert!(self.contains(loc));
        ((loc.side as usize - 1) * self.rows as usize + (loc.row as usize - 1)) * self.cols as usize
            + (loc.col as usize - 1)
    }

    /// Storage locations in `(side, row, col)` order.
    pub fn storage_locations(&self) -> Vec<Location> {
        let mut out = Vec::with_capacity(self.capacity());
        for side in 1..=self.sides {
            for row in 1..=self.rows {
                for col in 1..=self.cols {
                    let loc = Location::new(side, row, col);
                    if !self.is_io(loc) {
                        out.push(loc);
                    }
                }
            }
        }
        out
    }
}

/// Stage-I result: how many bins of each drug sit on each machine.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    /// `machines[r][k]` is `b_{k,r}`; absent keys mean zero bins.
    pub machines: Vec<BTreeMap<DrugId, u32>>,
    /// Total within-machine similarity.
    pub objective: f64,
}

impl Grouping {
    #[inline]
    pub fn machine_count(&self) -> usize {
        self.machines.len()
    }

    #[inline]
    pub fn bins(&self, drug: DrugId, machine: usize) -> u32 {
        self.machines[machine].get(&drug).copied().unwrap_or(0)
    }

    /// `x_{k,r}`.
    #[inline]
    pub fn holds(&self, drug: DrugId, machine: usize) -> bool {
        self.bins(drug, machine) > 0
    }

    pub fn machines_holding(&self, drug: DrugId) -> Vec<usize> {
        (0..self.machines.len()).filter(|&r| self.holds(drug, r)).collect()
    }

    /// Checks bin conservation, per-machine capacity and the link between
    /// presence and bin counts.
    pub fn validate(&self, catalog: &DrugCatalog, capacity: usize) -> Result<()> {
        for record in catalog.records() {
            let placed: u64 = (0..self.machines.len())
                .map(|r| self.bins(record.id, r) as u64)
                .sum();
            if placed != record.bin_count as u64 {
                return Err(Error::Infeasible(format!(
                    "drug {} has {} bins placed, expected {}",
                    record.id, placed, record.bin_count
                )));
            }
        }
        for (r, machine) in self.machines.iter().enumerate() {
            let load: u64 = machine.values().map(|&b| b as u64).sum();
            if load > capacity as u64 {
                return Err(Error::Infeasible(format!(
                    "machine {} holds {load} bins, capacity {capacity}",
                    r + 1
                )));
            }
            for (&drug, &b) in machine {
                if !catalog.contains(drug) {
                    return Err(Error::Infeasible(format!("unknown drug {drug} on machine {}", r + 1)));
                }
                if b == 0 || b as usize > capacity {
                    return Err(Error::Infeasible(format!(
                        "drug {drug} has {b} bins on machine {}",
                        r + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Stage-II result for one machine: which drug sits in which bin.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MachineAssignment {
    slots: BTreeMap<Location, DrugId>,
    by_drug: BTreeMap<DrugId, Vec<Location>>,
}

impl MachineAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Places `drug` at `loc`; fails if the location is taken.
    pub fn place(&mut self, loc: Location, drug: DrugId) -> Result<()> {
        if let Some(existing) = self.slots.get(&loc) {
            return Err(Error::Infeasible(format!(
                "location {loc} already holds drug {existing}"
            )));
        }
        self.slots.insert(loc, drug);
        let locs = self.by_drug.entry(drug).or_default();
        let pos = locs.partition_point(|&l| l < loc);
        locs.insert(pos, loc);
        Ok(())
    }

    #[inline]
    pub fn drug_at(&self, loc: Location) -> Option<DrugId> {
        self.slots.get(&loc).copied()
    }

    /// `M_k(r)`, sorted ascending.
    #[inline]
    pub fn locations_of(&self, drug: DrugId) -> &[Location] {
        self.by_drug.get(&drug).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn slots(&self) -> impl Iterator<Item = (Location, DrugId)> + '_ {
        self.slots.iter().map(|(&l, &d)| (l, d))
    }

    pub fn drugs(&self) -> impl Iterator<Item = DrugId> + '_ {
        self.by_drug.keys().copied()
    }

    #[inline]
    pub fn occupied(&self) -> usize {
        self.slots.len()
    }
}

/// Fleet-wide Stage-II result.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub machines: Vec<MachineAssignment>,
}

impl Assignment {
    pub fn new(machines: Vec<MachineAssignment>) -> Self {
        Self { machines }
    }

    #[inline]
    pub fn machine_count(&self) -> usize {
        self.machines.len()
    }

    /// Counts `|M_k(r)|` to recover the Stage-I grouping.
    pub fn to_grouping(&self, objective: f64) -> Grouping {
        Grouping {
            machines: self
                .machines
                .iter()
                .map(|m| {
                    m.by_drug
                        .iter()
                        .map(|(&d, locs)| (d, locs.len() as u32))
                        .collect()
                })
                .collect(),
            objective,
        }
    }

    /// Checks layout bounds and that no I/O point is used for storage.
    pub fn validate(&self, layout: &MachineLayout) -> Result<()> {
        for (r, m) in self.machines.iter().enumerate() {
            for (loc, drug) in m.slots() {
                if !layout.is_storage(loc) {
                    return Err(Error::Infeasible(format!(
                        "machine {}: drug {drug} at non-storage location {loc}",
                        r + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Remaining units per bin, per machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StockState {
    units: Vec<Vec<u32>>,
    cols: usize,
    rows: usize,
}

impl StockState {
    /// Every occupied bin starts with `fill` units; empty bins hold nothing.
    pub fn uniform(assignment: &Assignment, layout: &MachineLayout, fill: u32) -> Self {
        let units = assignment
            .machines
            .iter()
            .map(|m| {
                let mut v = vec![0; layout.position_count()];
                for (loc, _) in m.slots() {
                    v[layout.index_of(loc)] = fill;
                }
                v
            })
            .collect();
        Self {
            units,
            cols: layout.cols as usize,
            rows: layout.rows as usize,
        }
    }

    #[inline]
    fn index(&self, loc: Location) -> usize {
        ((loc.side as usize - 1) * self.rows + (loc.row as usize - 1)) * self.cols
            + (loc.col as usize - 1)
    }

    #[inline]
    pub fn remaining(&self, machine: usize, loc: Location) -> u32 {
        self.units[machine][self.index(loc)]
    }

    /// Removes `units` from a bin. Fails without mutating when the bin holds less.
    pub fn take(&mut self, machine: usize, loc: Location, units: u32) -> Result<()> {
        let idx = self.index(loc);
        let slot = &mut self.units[machine][idx];
        if *slot < units {
            return Err(Error::Infeasible(format!(
                "machine {} location {loc} holds {} units, {units} requested",
                machine + 1,
                *slot
            )));
        }
        *slot -= units;
        Ok(())
    }

    pub fn total_units(&self) -> u64 {
        self.units.iter().flatten().map(|&u| u as u64).sum()
    }
}

/// Pharmacist sorting time `X ~ N(mean, std_dev^2)`; zero deviation means a
/// fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PickerModel {
    pub mean: f64,
    pub std_dev: f64,
}

impl PickerModel {
    pub fn new(mean: f64, std_dev: f64) -> Result<Self> {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(Error::InvalidParameter(format!("picker mean {mean} must be >= 0")));
        }
        if !(std_dev.is_finite() && std_dev >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "picker std dev {std_dev} must be >= 0"
            )));
        }
        Ok(Self { mean, std_dev })
    }

    /// Fully automated operation: no sorting time.
    pub const fn zero() -> Self {
        Self {
            mean: 0.0,
            std_dev: 0.0,
        }
    }
}
