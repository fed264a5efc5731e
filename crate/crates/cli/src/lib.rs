//! Command implementations behind the `pharmslot` binary.

pub mod compare;
pub mod spec;

use compare::{run_compare, write_report, DataSource};
use pharmslot_core::correlation::{compute_frequencies, jaccard_matrix};
use pharmslot_core::datagen::{
    generate_history, read_assignment, read_catalog, read_history, write_assignment, write_catalog, write_history,
    write_order_records, GenConfig,
};
use pharmslot_core::model::{DrugCatalog, MachineLayout, OrderHistory};
use pharmslot_core::picking::{simulate, SimConfig};
use pharmslot_core::slotting::{slot, SAParams, StrategyId};
use serde::Serialize;
use spec::ExperimentSpec;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub type CliResult<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))
}

/// Writes `orders.csv` and `catalog.csv` into `out`.
pub fn cmd_gen(config: &GenConfig, out: &Path) -> CliResult<(PathBuf, PathBuf)> {
    let (catalog, history) = generate_history(config).map_err(err)?;
    ensure_dir(out)?;
    let orders_path = out.join("orders.csv");
    let catalog_path = out.join("catalog.csv");
    write_history(&history, &orders_path).map_err(err)?;
    write_catalog(&catalog, &catalog_path).map_err(err)?;
    Ok((orders_path, catalog_path))
}

/// Reads an order file and its catalog, refreshing demand frequencies from
/// the orders.
pub fn load_inputs(orders: &Path, catalog: &Path) -> CliResult<(DrugCatalog, OrderHistory)> {
    let history = read_history(orders).map_err(err)?;
    let catalog = read_catalog(catalog).map_err(err)?;
    history.validate_against(&catalog).map_err(err)?;
    let catalog = compute_frequencies(&history, &catalog).map_err(err)?;
    Ok((catalog, history))
}

/// Writes the pairwise similarity matrix as CSV. Without a catalog the drug
/// range is `1..=` the largest id in the orders.
pub fn cmd_similarity(orders: &Path, catalog: Option<&Path>, out: &Path) -> CliResult<()> {
    let history = read_history(orders).map_err(err)?;
    let drugs = match catalog {
        Some(c) => {
            let catalog = read_catalog(c).map_err(err)?;
            history.validate_against(&catalog).map_err(err)?;
            catalog.len()
        }
        None => history
            .orders
            .iter()
            .flat_map(|o| o.drugs())
            .map(|d| d.value() as usize)
            .max()
            .unwrap_or(0),
    };
    let matrix = jaccard_matrix(&history, drugs).map_err(err)?;
    let file = fs::File::create(out).map_err(|e| format!("{}: {e}", out.display()))?;
    matrix
        .write_csv(BufWriter::new(file))
        .map_err(|e| format!("{}: {e}", out.display()))
}

pub struct SlotArgs<'a> {
    pub orders: &'a Path,
    pub catalog: &'a Path,
    pub strategy: StrategyId,
    pub machines: usize,
    pub params: SAParams,
    pub seed: u64,
}

/// Slots the catalog and writes the assignment. Returns the Stage I
/// objective.
pub fn cmd_slot(args: &SlotArgs, out: &Path) -> CliResult<f64> {
    let (catalog, history) = load_inputs(args.orders, args.catalog)?;
    let similarity = jaccard_matrix(&history, catalog.len()).map_err(err)?;
    let layout = MachineLayout::default();
    let result = slot(
        args.strategy,
        &catalog,
        &similarity,
        args.machines,
        &layout,
        &args.params,
        args.seed,
    )
    .map_err(err)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_assignment(&result.assignment, out).map_err(err)?;
    Ok(result.grouping.objective)
}

#[derive(Debug, Serialize)]
pub struct SimulationParameters {
    pub mu: f64,
    pub sigma: f64,
    pub cross_penalty: f64,
    pub fill_level: u32,
    pub machines: usize,
    pub trailing_sort: bool,
    pub sampled_seed: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub strategy: Option<String>,
    pub parameters: SimulationParameters,
    pub avg_pick_time: Option<f64>,
    pub cross_machine_probability: Option<f64>,
    pub order_count: usize,
    pub stockouts: usize,
}

pub struct SimulateArgs<'a> {
    pub orders: &'a Path,
    pub assignment: &'a Path,
    pub machines: Option<usize>,
    pub strategy: Option<String>,
    pub config: SimConfig,
}

/// Replays the orders and writes `orders_result.csv` and `summary.json`
/// into `out`.
pub fn cmd_simulate(args: &SimulateArgs, out: &Path) -> CliResult<SimulationSummary> {
    let history = read_history(args.orders).map_err(err)?;
    let assignment = read_assignment(args.assignment, args.machines).map_err(err)?;
    let layout = MachineLayout::default();
    assignment.validate(&layout).map_err(err)?;
    let metrics = simulate(&history, &assignment, &layout, &args.config).map_err(err)?;
    ensure_dir(out)?;
    write_order_records(&metrics.records, &out.join("orders_result.csv")).map_err(err)?;
    let picking = &args.config.picking;
    let summary = SimulationSummary {
        strategy: args.strategy.clone(),
        parameters: SimulationParameters {
            mu: picking.picker.mean,
            sigma: picking.picker.std_dev,
            cross_penalty: picking.cross_penalty,
            fill_level: args.config.fill_level,
            machines: assignment.machine_count(),
            trailing_sort: picking.trailing_sort,
            sampled_seed: match args.config.mode {
                pharmslot_core::picking::SortTimeMode::Sampled { seed } => Some(seed),
                pharmslot_core::picking::SortTimeMode::Expected => None,
            },
        },
        avg_pick_time: metrics.avg_pick_time,
        cross_machine_probability: metrics.cross_machine_probability,
        order_count: metrics.order_count,
        stockouts: metrics.stockouts,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(err)?;
    let path = out.join("summary.json");
    fs::write(&path, json + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(summary)
}

/// Runs the comparison grid and writes its report files into `out`.
/// Returns the written paths and the failed cells.
pub fn cmd_compare(
    spec: &ExperimentSpec,
    source: &DataSource,
    workers: usize,
    out: &Path,
) -> CliResult<(Vec<PathBuf>, Vec<String>)> {
    let report = run_compare(spec, source, workers)?;
    let files = write_report(&report, out)?;
    Ok((files, report.failures))
}
