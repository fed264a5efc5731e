//! Two-stage slotting.
//!
//! Stage I groups drugs onto machines so that drugs ordered together share a
//! machine. The scattered variant lets one drug's bins span several machines;
//! the dedicated variant keeps every drug on a single machine. Stage II places
//! each machine's bins on rack locations, either by per-bin frequency or by
//! alternating frequency seeding with similarity chaining.
//!
//! | strategy | Stage I   | Stage II  |
//! |----------|-----------|-----------|
//! | FA       | dedicated | frequency |
//! | ICA      | dedicated | clustered |
//! | SSFA     | scattered | frequency |
//! | SSCA     | scattered | clustered |

mod exact;
mod heuristic;
mod locate;

pub use exact::{group_scattered_exact, EXACT_MAX_DRUGS, EXACT_MAX_MACHINES};
pub use heuristic::{group_dedicated, group_scattered_heuristic, MAX_LOCAL_SEARCH_MOVES};
pub use locate::{locate_frequency, locate_sa, sa_placement_order};

use crate::correlation::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::model::{Assignment, DrugCatalog, DrugId, Grouping, MachineLayout};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StrategyId {
    Fa,
    Ica,
    Ssfa,
    Ssca,
}

impl StrategyId {
    pub const ALL: [StrategyId; 4] = [
        StrategyId::Fa,
        StrategyId::Ica,
        StrategyId::Ssfa,
        StrategyId::Ssca,
    ];

    /// Stage I lets one drug span several machines.
    pub const fn scattered(self) -> bool {
        matches!(self, StrategyId::Ssfa | StrategyId::Ssca)
    }

    /// Stage II chains correlated drugs instead of ranking by frequency only.
    pub const fn clustered(self) -> bool {
        matches!(self, StrategyId::Ica | StrategyId::Ssca)
    }

    pub const fn name(self) -> &'static str {
        match self {
            StrategyId::Fa => "FA",
            StrategyId::Ica => "ICA",
            StrategyId::Ssfa => "SSFA",
            StrategyId::Ssca => "SSCA",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FA" => Ok(StrategyId::Fa),
            "ICA" => Ok(StrategyId::Ica),
            "SSFA" | "SFA" => Ok(StrategyId::Ssfa),
            "SSCA" | "CA" => Ok(StrategyId::Ssca),
            other => Err(Error::InvalidParameter(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Parameters of the clustered locating heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SAParams {
    /// Drug types per cluster, seed included.
    pub cluster_capacity: usize,
    /// Minimum similarity for a drug to join the current cluster.
    pub threshold: f64,
}

impl Default for SAParams {
    fn default() -> Self {
        Self {
            cluster_capacity: 3,
            threshold: 0.01,
        }
    }
}

impl SAParams {
    pub fn new(cluster_capacity: usize, threshold: f64) -> Result<Self> {
        let p = Self {
            cluster_capacity,
            threshold,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cluster_capacity == 0 {
            return Err(Error::InvalidParameter("cluster capacity must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!(
                "similarity threshold {} outside [0,1]",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Total within-machine similarity, `sum_r sum_{k<k'} x_kr x_k'r S_kk'`.
pub fn grouping_objective(machines: &[BTreeMap<DrugId, u32>], similarity: &SimilarityMatrix) -> f64 {
    let mut total = 0.0;
    for machine in machines {
        let drugs: Vec<usize> = machine
            .iter()
            .filter(|(_, &b)| b > 0)
            .map(|(d, _)| d.index())
            .collect();
        for (n, &i) in drugs.iter().enumerate() {
            for &j in &drugs[n + 1..] {
                total += similarity.by_index(i, j);
            }
        }
    }
    total
}

pub(crate) fn check_inputs(
    catalog: &DrugCatalog,
    similarity: &SimilarityMatrix,
    machines: usize,
    capacity: usize,
) -> Result<()> {
    if machines == 0 {
        return Err(Error::InvalidParameter("at least one machine is required".into()));
    }
    if similarity.size() != catalog.len() {
        return Err(Error::InvalidParameter(format!(
            "similarity matrix covers {} drugs, catalog has {}",
            similarity.size(),
            catalog.len()
        )));
    }
    catalog.check_fleet_capacity(machines, capacity)
}

/// Output of [`slot`]: both stages, so callers can inspect the grouping.
#[derive(Debug, Clone, PartialEq)]
pub struct Slotting {
    pub strategy: StrategyId,
    pub grouping: Grouping,
    pub assignment: Assignment,
}

/// Runs Stage I and Stage II for `strategy` over a fleet of `machines`
/// identical machines.
pub fn slot(
    strategy: StrategyId,
    catalog: &DrugCatalog,
    similarity: &SimilarityMatrix,
    machines: usize,
    layout: &MachineLayout,
    params: &SAParams,
    seed: u64,
) -> Result<Slotting> {
    layout.validate()?;
    params.validate()?;
    let capacity = layout.capacity();
    let grouping = if strategy.scattered() {
        group_scattered_heuristic(catalog, similarity, machines, capacity, seed)?
    } else {
        group_dedicated(catalog, similarity, machines, capacity, seed)?
    };
    let per_machine = grouping
        .machines
        .iter()
        .map(|bins| {
            if strategy.clustered() {
                locate_sa(bins, similarity, catalog, layout, params)
            } else {
                locate_frequency(bins, catalog, layout)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Slotting {
        strategy,
        grouping,
        assignment: Assignment::new(per_machine),
    })
}
