//! Experiment grids for `compare`.

use pharmslot_core::datagen::GenConfig;
use pharmslot_core::picking::{DEFAULT_CROSS_PENALTY, DEFAULT_FILL_LEVEL};
use pharmslot_core::slotting::{SAParams, StrategyId};
use serde::Deserialize;
use std::path::Path;

/// The ten sort-time settings of the reference comparison: no picker, then
/// every mean in {5, 10, 15} with every deviation in {0, 2, 5}.
pub fn default_picker_grid() -> Vec<(f64, f64)> {
    let mut grid = vec![(0.0, 0.0)];
    for mu in [5.0, 10.0, 15.0] {
        for sigma in [0.0, 2.0, 5.0] {
            grid.push((mu, sigma));
        }
    }
    grid
}

/// Order-size ranges reported next to the overall figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bucket {
    All,
    Small,
    Large,
}

impl Bucket {
    pub const ALL: [Bucket; 3] = [Bucket::All, Bucket::Small, Bucket::Large];

    pub fn label(self) -> &'static str {
        match self {
            Bucket::All => "all",
            Bucket::Small => "1-5",
            Bucket::Large => "6+",
        }
    }

    pub fn range(self) -> (usize, Option<usize>) {
        match self {
            Bucket::All => (1, None),
            Bucket::Small => (1, Some(5)),
            Bucket::Large => (6, None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub strategies: Vec<String>,
    pub cluster_sizes: Vec<usize>,
    pub thresholds: Vec<f64>,
    /// `(mu, sigma)` pairs.
    pub picker: Vec<(f64, f64)>,
    pub cross_penalty: f64,
    pub machines: usize,
    pub seeds: Vec<u64>,
    pub fill_level: u32,
    pub trailing_sort: bool,
    /// Synthetic data settings, used when no order file is given. Each seed
    /// generates its own history.
    pub data: Option<GenConfig>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            strategies: StrategyId::ALL.iter().map(|s| s.name().to_owned()).collect(),
            cluster_sizes: vec![SAParams::default().cluster_capacity],
            thresholds: vec![SAParams::default().threshold],
            picker: default_picker_grid(),
            cross_penalty: DEFAULT_CROSS_PENALTY,
            machines: 3,
            seeds: vec![0],
            fill_level: DEFAULT_FILL_LEVEL,
            trailing_sort: false,
            data: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let spec: Self = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn strategy_ids(&self) -> Result<Vec<StrategyId>, String> {
        let mut out: Vec<StrategyId> = Vec::new();
        for name in &self.strategies {
            let id: StrategyId = name.parse().map_err(|e: pharmslot_core::Error| e.to_string())?;
            if out.contains(&id) {
                return Err(format!("strategy {id} listed twice"));
            }
            out.push(id);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.strategies.is_empty()
            || self.cluster_sizes.is_empty()
            || self.thresholds.is_empty()
            || self.picker.is_empty()
            || self.seeds.is_empty()
        {
            return Err("every grid in the experiment spec needs at least one value".into());
        }
        self.strategy_ids()?;
        for &c in &self.cluster_sizes {
            for &s in &self.thresholds {
                SAParams::new(c, s).map_err(|e| e.to_string())?;
            }
        }
        for &(mu, sigma) in &self.picker {
            pharmslot_core::model::PickerModel::new(mu, sigma).map_err(|e| e.to_string())?;
        }
        if !(self.cross_penalty.is_finite() && self.cross_penalty >= 0.0) {
            return Err(format!("cross penalty {} must be >= 0", self.cross_penalty));
        }
        if self.machines == 0 {
            return Err("at least one machine is required".into());
        }
        if let Some(data) = &self.data {
            data.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_ten_pairs() {
        let want = [
            (0.0, 0.0),
            (5.0, 0.0),
            (5.0, 2.0),
            (5.0, 5.0),
            (10.0, 0.0),
            (10.0, 2.0),
            (10.0, 5.0),
            (15.0, 0.0),
            (15.0, 2.0),
            (15.0, 5.0),
        ];
        assert_eq!(default_picker_grid(), want);
    }

    #[test]
    fn spec_parses_with_defaults() {
        let spec: ExperimentSpec = toml::from_str(
            r#"
            strategies = ["FA", "SSCA"]
            picker = [[0.0, 0.0]]
            [data]
            drugs = 30
            orders = 50
            clique_count = 5
            "#,
        )
        .unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.machines, 3);
        assert_eq!(spec.data.as_ref().unwrap().drugs, 30);
        assert_eq!(spec.strategy_ids().unwrap(), vec![StrategyId::Fa, StrategyId::Ssca]);
    }

    #[test]
    fn spec_rejects_bad_values() {
        let bad = |text: &str| toml::from_str::<ExperimentSpec>(text).map_err(|e| e.to_string()).and_then(|s| s.validate());
        assert!(bad("strategies = []").is_err());
        assert!(bad("strategies = [\"XX\"]").is_err());
        assert!(bad("cluster_sizes = [0]").is_err());
        assert!(bad("picker = [[5.0, -1.0]]").is_err());
        assert!(bad("unknown = 1").is_err());
    }
}
