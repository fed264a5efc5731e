//! Synthetic prescription histories with tunable co-occurrence structure.

use crate::error::{Error, Result};
use crate::model::{DrugCatalog, DrugId, DrugRecord, OrderHistory, OrderLine, PrescriptionOrder};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::path::Path;

/// Generator settings. Every field has a default, so a TOML file only needs
/// the keys it changes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub drugs: usize,
    pub orders: usize,
    /// `size_distribution[i]` is the probability of an order with `i + 1` drugs.
    pub size_distribution: Vec<f64>,
    /// Popularity of the drug at popularity rank `r` is `r^-exponent`.
    pub popularity_exponent: f64,
    pub clique_count: usize,
    pub clique_size: usize,
    /// Probability that each further drug of an order comes from the clique
    /// of its first drug.
    pub co_draw: f64,
    pub max_dosage: u32,
    pub machines: usize,
    pub bins_per_machine: usize,
    /// Share of fleet capacity that bin counts may fill.
    pub bin_utilization: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            drugs: 488,
            orders: 10_000,
            size_distribution: vec![0.22, 0.22, 0.19, 0.15, 0.12, 0.04, 0.025, 0.015, 0.01, 0.01],
            popularity_exponent: 1.0,
            clique_count: 40,
            clique_size: 4,
            co_draw: 0.7,
            max_dosage: 3,
            machines: 3,
            bins_per_machine: 286,
            bin_utilization: 0.9,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.drugs == 0 || self.orders == 0 {
            return bad("drug and order counts must be positive".into());
        }
        if self.size_distribution.is_empty()
            || self.size_distribution.iter().any(|p| !(p.is_finite() && *p >= 0.0))
        {
            return bad("size distribution needs non-negative finite entries".into());
        }
        let total: f64 = self.size_distribution.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("size distribution sums to {total}, not 1"));
        }
        if !(self.popularity_exponent.is_finite() && self.popularity_exponent >= 0.0) {
            return bad("popularity exponent must be finite and non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.co_draw) {
            return bad(format!("co-draw probability {} outside [0, 1]", self.co_draw));
        }
        if self.clique_count * self.clique_size > self.drugs {
            return bad(format!(
                "{} cliques of {} need more than {} drugs",
                self.clique_count, self.clique_size, self.drugs
            ));
        }
        if self.max_dosage == 0 || self.machines == 0 || self.bins_per_machine == 0 {
            return bad("dosage, machine and bin limits must be positive".into());
        }
        if !(self.bin_utilization > 0.0 && self.bin_utilization <= 1.0) {
            return bad(format!("bin utilization {} outside (0, 1]", self.bin_utilization));
        }
        Ok(())
    }

    /// Total bins the generated catalog may use.
    pub fn bin_budget(&self) -> u64 {
        (self.bin_utilization * (self.machines * self.bins_per_machine) as f64).floor() as u64
    }
}

/// Draws an order history and a catalog whose bin counts follow demand.
pub fn generate_history(cfg: &GenConfig) -> Result<(DrugCatalog, OrderHistory)> {
    cfg.validate()?;
    let k = cfg.drugs;
    let budget = cfg.bin_budget();
    if (k as u64) > budget {
        return Err(Error::Capacity(format!(
            "{k} drugs need at least {k} bins but only {budget} fit the fleet"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut ranks: Vec<usize> = (0..k).collect();
    ranks.shuffle(&mut rng);
    let popularity: Vec<f64> = ranks
        .iter()
        .map(|&r| ((r + 1) as f64).powf(-cfg.popularity_exponent))
        .collect();
    let by_popularity = WeightedIndex::new(&popularity).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let sizes = WeightedIndex::new(&cfg.size_distribution).map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let mut members: Vec<usize> = (0..k).collect();
    members.shuffle(&mut rng);
    let mut clique_of = vec![None; k];
    let cliques: Vec<&[usize]> = members
        .chunks(cfg.clique_size.max(1))
        .take(if cfg.clique_size == 0 { 0 } else { cfg.clique_count })
        .collect();
    for (c, clique) in cliques.iter().enumerate() {
        for &d in clique.iter() {
            clique_of[d] = Some(c);
        }
    }

    let mut frequency = vec![0u64; k];
    let mut in_order = vec![false; k];
    let mut orders = Vec::with_capacity(cfg.orders);
    for q in 0..cfg.orders {
        let size = (sizes.sample(&mut rng) + 1).min(k);
        let first = by_popularity.sample(&mut rng);
        let mut picked = vec![first];
        in_order[first] = true;
        while picked.len() < size {
            let mates: Vec<usize> = clique_of[first]
                .map(|c| cliques[c].iter().copied().filter(|&d| !in_order[d]).collect())
                .unwrap_or_default();
            let next = if !mates.is_empty() && rng.random_bool(cfg.co_draw) {
                mates[rng.random_range(0..mates.len())]
            } else {
                draw_new(&by_popularity, &in_order, &mut rng)
            };
            in_order[next] = true;
            picked.push(next);
        }
        let lines = picked
            .iter()
            .map(|&d| {
                in_order[d] = false;
                frequency[d] += 1;
                OrderLine {
                    drug: DrugId::from_index(d),
                    dosage: rng.random_range(1..=cfg.max_dosage),
                }
            })
            .collect();
        orders.push(PrescriptionOrder::new(q as u64 + 1, lines)?);
    }

    let bins = bin_counts(&frequency, budget, cfg.bins_per_machine as u32);
    let catalog = DrugCatalog::new(
        frequency
            .iter()
            .zip(&bins)
            .enumerate()
            .map(|(i, (&f, &b))| DrugRecord {
                id: DrugId::from_index(i),
                bin_count: b,
                demand_frequency: f,
            })
            .collect(),
    )?;
    Ok((catalog, OrderHistory::new(orders)))
}

/// Popularity draw that skips drugs already in the order. Falls back to a
/// uniform choice among the rest if rejection keeps failing.
fn draw_new(dist: &WeightedIndex<f64>, taken: &[bool], rng: &mut ChaCha8Rng) -> usize {
    for _ in 0..256 {
        let d = dist.sample(rng);
        if !taken[d] {
            return d;
        }
    }
    let free: Vec<usize> = (0..taken.len()).filter(|&d| !taken[d]).collect();
    free[rng.random_range(0..free.len())]
}

/// Bin counts proportional to demand, at least one and at most `cap` each,
/// summing to no more than `budget`.
pub(crate) fn bin_counts(frequency: &[u64], budget: u64, cap: u32) -> Vec<u32> {
    let total: u64 = frequency.iter().sum();
    let k = frequency.len();
    let mut bins: Vec<u32> = frequency
        .iter()
        .map(|&f| {
            let share = if total == 0 {
                budget as f64 / k as f64
            } else {
                f as f64 * budget as f64 / total as f64
            };
            (share.floor() as u32).clamp(1, cap.max(1))
        })
        .collect();
    let mut sum: u64 = bins.iter().map(|&b| b as u64).sum();
    while sum > budget {
        // Trim the largest count; the highest id loses ties.
        let (i, _) = bins
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)))
            .expect("non-empty");
        if bins[i] <= 1 {
            break;
        }
        bins[i] -= 1;
        sum -= 1;
    }
    bins
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::jaccard_matrix;
    use proptest::prelude::*;

    fn small() -> GenConfig {
        GenConfig {
            drugs: 60,
            orders: 2_000,
            clique_count: 10,
            clique_size: 3,
            seed: 9,
            ..GenConfig::default()
        }
    }

    #[test]
    fn defaults_are_valid() {
        GenConfig::default().validate().unwrap();
        let mass: f64 = GenConfig::default().size_distribution[..5].iter().sum();
        assert!((mass - 0.9).abs() < 1e-12);
    }

    #[test]
    fn toml_overrides_and_rejects() {
        let cfg = GenConfig::from_toml_str("drugs = 50\norders = 10\nclique_count = 5\nseed = 3\n").unwrap();
        assert_eq!(cfg.drugs, 50);
        assert_eq!(cfg.co_draw, 0.7);
        assert!(GenConfig::from_toml_str("size_distribution = [0.5, 0.4]").is_err());
        assert!(GenConfig::from_toml_str("drugz = 5").is_err());
        assert!(GenConfig::from_toml_str("drugs = 0").is_err());
    }

    #[test]
    fn order_sizes_follow_distribution() {
        let cfg = GenConfig {
            orders: 10_000,
            ..GenConfig::default()
        };
        let (_, h) = generate_history(&cfg).unwrap();
        let mut counts = vec![0usize; cfg.size_distribution.len()];
        for o in &h.orders {
            counts[o.drug_count() - 1] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(&cfg.size_distribution)
            .map(|(&c, &p)| (c as f64 / h.len() as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 0.02, "total variation {tv}");
    }

    #[test]
    fn full_co_draw_stays_in_clique() {
        let cfg = GenConfig {
            drugs: 20,
            orders: 500,
            size_distribution: vec![0.0, 1.0],
            clique_count: 10,
            clique_size: 2,
            co_draw: 1.0,
            seed: 4,
            ..GenConfig::default()
        };
        let (_, h) = generate_history(&cfg).unwrap();
        let s = jaccard_matrix(&h, 20).unwrap();
        // Every drug co-occurs with exactly one partner.
        for a in 0..20 {
            let partners = (0..20).filter(|&b| s.by_index(a, b) > 0.0).count();
            assert!(partners <= 1, "drug {} has {partners} partners", a + 1);
        }
    }

    #[test]
    fn independent_draws_match_baseline() {
        let cfg = GenConfig {
            drugs: 20,
            orders: 10_000,
            size_distribution: vec![0.0, 1.0],
            popularity_exponent: 0.0,
            clique_count: 0,
            co_draw: 0.0,
            seed: 2,
            ..GenConfig::default()
        };
        let (_, h) = generate_history(&cfg).unwrap();
        let s = jaccard_matrix(&h, 20).unwrap();
        let both = 2.0 / (20.0 * 19.0);
        let baseline = both / (2.0 * 0.1 - both);
        let mut sum = 0.0;
        for a in 0..20 {
            for b in a + 1..20 {
                sum += s.by_index(a, b);
            }
        }
        let mean: f64 = sum / 190.0;
        assert!((mean / baseline - 1.0).abs() < 0.1, "mean {mean} vs {baseline}");
    }

    #[test]
    fn catalog_fits_budget_and_matches_history() {
        let cfg = small();
        let (c, h) = generate_history(&cfg).unwrap();
        assert!(c.total_bins() <= cfg.bin_budget());
        assert!(c.records().iter().all(|r| r.bin_count >= 1));
        h.validate_against(&c).unwrap();
        let f = crate::correlation::order_counts(&h, c.len()).unwrap();
        for r in c.records() {
            assert_eq!(f[r.id.index()], r.demand_frequency);
        }
    }

    #[test]
    fn same_seed_same_output() {
        let (c1, h1) = generate_history(&small()).unwrap();
        let (c2, h2) = generate_history(&small()).unwrap();
        assert_eq!((c1, h1), (c2.clone(), h2.clone()));
        let (c3, _) = generate_history(&GenConfig { seed: 10, ..small() }).unwrap();
        assert_ne!(c2, c3);
    }

    #[test]
    fn too_many_drugs_for_fleet() {
        let cfg = GenConfig {
            drugs: 300,
            machines: 1,
            clique_count: 0,
            ..GenConfig::default()
        };
        assert!(matches!(generate_history(&cfg), Err(Error::Capacity(_))));
    }

    proptest! {
        #[test]
        fn bin_counts_respect_limits(
            freq in prop::collection::vec(0u64..500, 1..60),
            extra in 0u64..400,
            cap in 1u32..50,
        ) {
            let budget = freq.len() as u64 + extra;
            let bins = bin_counts(&freq, budget, cap);
            prop_assert!(bins.iter().all(|&b| b >= 1 && b <= cap));
            prop_assert!(bins.iter().map(|&b| b as u64).sum::<u64>() <= budget);
        }
    }
}
