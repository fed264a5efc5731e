//! Strategy comparison over a parameter grid.

use crate::spec::{Bucket, ExperimentSpec};
use pharmslot_core::correlation::{compute_frequencies, jaccard_matrix, SimilarityMatrix};
use pharmslot_core::datagen::{generate_history, read_catalog, read_history};
use pharmslot_core::model::{Assignment, DrugCatalog, MachineLayout, OrderHistory, PickerModel};
use pharmslot_core::picking::{simulate, PickingConfig, SimConfig, SortTimeMode};
use pharmslot_core::slotting::{slot, SAParams, StrategyId};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Where order data comes from.
#[derive(Debug, Clone, Default)]
pub struct DataSource {
    pub orders: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
}

struct World {
    catalog: DrugCatalog,
    history: OrderHistory,
    similarity: SimilarityMatrix,
}

/// One slotting run. Strategies without clustering ignore `(C, s)` and are
/// run once per seed under the first grid values.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SlotKey {
    strategy: StrategyId,
    c: usize,
    s: usize,
    seed: usize,
}

/// Averages for one grid cell, seed and bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellResult {
    pub orders: usize,
    pub avg_time: Option<f64>,
    pub cross_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub strategy: StrategyId,
    pub cluster_size: usize,
    pub threshold: f64,
    pub mu: f64,
    pub sigma: f64,
    pub seed: u64,
    pub bucket: Bucket,
    pub result: CellResult,
}

#[derive(Debug, Clone, Default)]
pub struct CompareReport {
    pub rows: Vec<Row>,
    /// Cells that could not be evaluated, with the reason.
    pub failures: Vec<String>,
}

fn load_worlds(spec: &ExperimentSpec, source: &DataSource) -> Result<Vec<Result<Arc<World>, String>>, String> {
    match (&source.orders, &spec.data) {
        (Some(orders), _) => {
            let catalog = source
                .catalog
                .as_ref()
                .ok_or("--catalog is required together with --orders")?;
            let history = read_history(orders).map_err(|e| e.to_string())?;
            let catalog = read_catalog(catalog).map_err(|e| e.to_string())?;
            history.validate_against(&catalog).map_err(|e| e.to_string())?;
            let catalog = compute_frequencies(&history, &catalog).map_err(|e| e.to_string())?;
            let similarity = jaccard_matrix(&history, catalog.len()).map_err(|e| e.to_string())?;
            let world = Arc::new(World {
                catalog,
                history,
                similarity,
            });
            Ok(spec.seeds.iter().map(|_| Ok(Arc::clone(&world))).collect())
        }
        (None, Some(data)) => Ok(spec
            .seeds
            .par_iter()
            .map(|&seed| {
                let cfg = pharmslot_core::datagen::GenConfig {
                    seed,
                    machines: spec.machines,
                    ..data.clone()
                };
                let (catalog, history) = generate_history(&cfg).map_err(|e| format!("seed {seed}: {e}"))?;
                let similarity = jaccard_matrix(&history, catalog.len()).map_err(|e| e.to_string())?;
                Ok(Arc::new(World {
                    catalog,
                    history,
                    similarity,
                }))
            })
            .collect()),
        (None, None) => Err("compare needs --orders and --catalog, or a [data] section in the spec".into()),
    }
}

/// Runs every strategy, grid cell and seed of `spec` on `workers` threads
/// (0 picks the number of cores). Rows come back in grid order regardless
/// of scheduling.
pub fn run_compare(spec: &ExperimentSpec, source: &DataSource, workers: usize) -> Result<CompareReport, String> {
    spec.validate()?;
    let strategies = spec.strategy_ids()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| run_in_pool(spec, source, &strategies))
}

fn run_in_pool(spec: &ExperimentSpec, source: &DataSource, strategies: &[StrategyId]) -> Result<CompareReport, String> {
    let layout = MachineLayout::default();
    let worlds = load_worlds(spec, source)?;

    let canonical = |strategy: StrategyId, c: usize, s: usize, seed: usize| {
        if strategy.clustered() {
            SlotKey { strategy, c, s, seed }
        } else {
            SlotKey { strategy, c: 0, s: 0, seed }
        }
    };
    let mut keys: Vec<SlotKey> = Vec::new();
    for &strategy in strategies {
        for c in 0..spec.cluster_sizes.len() {
            for s in 0..spec.thresholds.len() {
                for seed in 0..spec.seeds.len() {
                    let key = canonical(strategy, c, s, seed);
                    if !keys.contains(&key) {
                        keys.push(key);
                    }
                }
            }
        }
    }

    let assignments: Vec<Result<(Arc<World>, Assignment), String>> = keys
        .par_iter()
        .map(|k| {
            let world = worlds[k.seed].clone()?;
            let params = SAParams::new(spec.cluster_sizes[k.c], spec.thresholds[k.s]).map_err(|e| e.to_string())?;
            let slotting = slot(
                k.strategy,
                &world.catalog,
                &world.similarity,
                spec.machines,
                &layout,
                &params,
                spec.seeds[k.seed],
            )
            .map_err(|e| e.to_string())?;
            Ok((world, slotting.assignment))
        })
        .collect();

    let sim_jobs: Vec<(usize, usize)> = (0..keys.len())
        .flat_map(|k| (0..spec.picker.len()).map(move |p| (k, p)))
        .collect();
    let results: Vec<Result<[CellResult; 3], String>> = sim_jobs
        .par_iter()
        .map(|&(k, p)| {
            let (world, assignment) = assignments[k].as_ref().map_err(Clone::clone)?;
            let (mu, sigma) = spec.picker[p];
            let config = SimConfig {
                picking: PickingConfig {
                    picker: PickerModel::new(mu, sigma).map_err(|e| e.to_string())?,
                    cross_penalty: spec.cross_penalty,
                    trailing_sort: spec.trailing_sort,
                },
                fill_level: spec.fill_level,
                mode: SortTimeMode::Expected,
            };
            let metrics = simulate(&world.history, assignment, &layout, &config).map_err(|e| e.to_string())?;
            Ok(Bucket::ALL.map(|b| {
                let (min, max) = b.range();
                let stats = metrics.bucket(min, max);
                CellResult {
                    orders: stats.orders,
                    avg_time: stats.avg_pick_time,
                    cross_prob: stats.cross_machine_probability,
                }
            }))
        })
        .collect();

    let mut report = CompareReport::default();
    for &strategy in strategies {
        for (c, &cluster_size) in spec.cluster_sizes.iter().enumerate() {
            for (s, &threshold) in spec.thresholds.iter().enumerate() {
                for (p, &(mu, sigma)) in spec.picker.iter().enumerate() {
                    for (seed_idx, &seed) in spec.seeds.iter().enumerate() {
                        let key = canonical(strategy, c, s, seed_idx);
                        let k = keys.iter().position(|x| *x == key).expect("key enumerated above");
                        match &results[k * spec.picker.len() + p] {
                            Ok(cells) => {
                                for (bucket, result) in Bucket::ALL.into_iter().zip(cells) {
                                    report.rows.push(Row {
                                        strategy,
                                        cluster_size,
                                        threshold,
                                        mu,
                                        sigma,
                                        seed,
                                        bucket,
                                        result: *result,
                                    });
                                }
                            }
                            Err(e) => report.failures.push(format!(
                                "{strategy} C={cluster_size} s={threshold} mu={mu} sigma={sigma} seed={seed}: {e}"
                            )),
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Long format: one line per strategy, cell, seed and bucket.
pub fn results_csv(report: &CompareReport) -> String {
    let mut out = String::from("strategy,C,s,mu,sigma,seed,bucket,avg_time,cross_prob\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.strategy,
            r.cluster_size,
            r.threshold,
            r.mu,
            r.sigma,
            r.seed,
            r.bucket.label(),
            opt(r.result.avg_time),
            opt(r.result.cross_prob)
        );
    }
    out
}

/// Rows sharing everything but the seed, in first-appearance order.
fn cells(report: &CompareReport) -> Vec<Vec<&Row>> {
    let mut groups: Vec<Vec<&Row>> = Vec::new();
    for r in report.rows.iter().filter(|r| r.bucket == Bucket::All) {
        let same = |g: &Vec<&Row>| {
            let h = g[0];
            (h.strategy, h.cluster_size, h.mu, h.sigma) == (r.strategy, r.cluster_size, r.mu, r.sigma)
                && h.threshold == r.threshold
        };
        match groups.iter_mut().find(|g| same(g)) {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    groups
}

fn bucket_of<'a>(report: &'a CompareReport, head: &Row, seed: u64, bucket: Bucket) -> Option<&'a Row> {
    report.rows.iter().find(|r| {
        r.bucket == bucket
            && r.seed == seed
            && r.strategy == head.strategy
            && r.cluster_size == head.cluster_size
            && r.threshold == head.threshold
            && r.mu == head.mu
            && r.sigma == head.sigma
    })
}

/// One line per strategy and cell, averaged over seeds.
pub fn summary_csv(report: &CompareReport) -> String {
    let mut out = String::from(
        "strategy,C,s,mu,sigma,seeds,avg_time,cross_prob,avg_time_1_5,cross_prob_1_5,avg_time_6plus,cross_prob_6plus\n",
    );
    for group in cells(report) {
        let h = group[0];
        let per_bucket = |b: Bucket| {
            let rows: Vec<&Row> = group
                .iter()
                .filter_map(|r| bucket_of(report, h, r.seed, b))
                .collect();
            (
                mean(rows.iter().map(|r| r.result.avg_time)),
                mean(rows.iter().map(|r| r.result.cross_prob)),
            )
        };
        let (all_t, all_p) = per_bucket(Bucket::All);
        let (small_t, small_p) = per_bucket(Bucket::Small);
        let (large_t, large_p) = per_bucket(Bucket::Large);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            h.strategy,
            h.cluster_size,
            h.threshold,
            h.mu,
            h.sigma,
            group.len(),
            opt(all_t),
            opt(all_p),
            opt(small_t),
            opt(small_p),
            opt(large_t),
            opt(large_p)
        );
    }
    out
}

/// Average picking time with one line per `(C, s, mu, sigma)` and one
/// column per strategy.
pub fn pivot_csv(report: &CompareReport) -> String {
    let groups = cells(report);
    let mut strategies: Vec<StrategyId> = Vec::new();
    let mut settings: Vec<(usize, f64, f64, f64)> = Vec::new();
    for g in &groups {
        let h = g[0];
        if !strategies.contains(&h.strategy) {
            strategies.push(h.strategy);
        }
        let setting = (h.cluster_size, h.threshold, h.mu, h.sigma);
        if !settings.contains(&setting) {
            settings.push(setting);
        }
    }
    let mut out = String::from("C,s,mu,sigma");
    for s in &strategies {
        let _ = write!(out, ",{s}");
    }
    out.push('\n');
    for &(c, s, mu, sigma) in &settings {
        let _ = write!(out, "{c},{s},{mu},{sigma}");
        for &strategy in &strategies {
            let value = groups
                .iter()
                .find(|g| {
                    let h = g[0];
                    h.strategy == strategy && h.cluster_size == c && h.threshold == s && h.mu == mu && h.sigma == sigma
                })
                .and_then(|g| mean(g.iter().map(|r| r.result.avg_time)));
            let _ = write!(out, ",{}", opt(value));
        }
        out.push('\n');
    }
    out
}

/// Writes `results.csv`, `summary.csv`, `table.csv` and, when some cells
/// failed, `failures.txt` into `dir`.
pub fn write_report(report: &CompareReport, dir: &Path) -> Result<Vec<PathBuf>, String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let mut files = vec![
        ("results.csv", results_csv(report)),
        ("summary.csv", summary_csv(report)),
        ("table.csv", pivot_csv(report)),
    ];
    if !report.failures.is_empty() {
        files.push(("failures.txt", report.failures.join("\n") + "\n"));
    }
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| format!("{}: {e}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
