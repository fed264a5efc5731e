use clap::{Args, Parser, Subcommand};
use pharmslot_cli::compare::DataSource;
use pharmslot_cli::spec::ExperimentSpec;
use pharmslot_cli::{cmd_compare, cmd_gen, cmd_simulate, cmd_similarity, cmd_slot, CliResult, SimulateArgs, SlotArgs};
use pharmslot_core::datagen::GenConfig;
use pharmslot_core::model::PickerModel;
use pharmslot_core::picking::{PickingConfig, SimConfig, SortTimeMode, DEFAULT_CROSS_PENALTY, DEFAULT_FILL_LEVEL};
use pharmslot_core::slotting::{SAParams, StrategyId};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pharmslot", version, about = "Drug slotting and order-picking simulation for automated dispensing machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic order history and catalog.
    Gen(GenArgs),
    /// Compute the pairwise drug similarity matrix.
    Similarity(SimilarityArgs),
    /// Assign drugs to machines and rack locations.
    Slot(SlotCmd),
    /// Replay orders against an assignment.
    Simulate(SimulateCmd),
    /// Compare strategies over a parameter grid.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenArgs {
    /// TOML file with generator settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    drugs: Option<usize>,
    #[arg(long = "order-count")]
    order_count: Option<usize>,
    #[arg(long)]
    machines: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for orders.csv and catalog.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimilarityArgs {
    #[arg(long)]
    orders: PathBuf,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SlotCmd {
    #[arg(long)]
    orders: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    /// FA, ICA, SSFA or SSCA.
    #[arg(long, default_value = "SSCA")]
    strategy: StrategyId,
    #[arg(long, default_value_t = 3)]
    machines: usize,
    #[arg(long = "cluster-size", default_value_t = SAParams::default().cluster_capacity)]
    cluster_size: usize,
    #[arg(long, default_value_t = SAParams::default().threshold)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output assignment CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateCmd {
    #[arg(long)]
    orders: PathBuf,
    /// Assignment CSV written by `slot`.
    #[arg(long)]
    assignment: PathBuf,
    /// Fleet size; defaults to the largest machine in the assignment.
    #[arg(long)]
    machines: Option<usize>,
    /// Label recorded in the summary.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = DEFAULT_CROSS_PENALTY)]
    penalty: f64,
    /// Initial units in every occupied bin.
    #[arg(long, default_value_t = DEFAULT_FILL_LEVEL)]
    fill: u32,
    /// Count one more sort after the last drug of each machine.
    #[arg(long = "trailing-sort")]
    trailing_sort: bool,
    /// Draw sort times instead of using expectations.
    #[arg(long = "sampled-seed")]
    sampled_seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// TOML experiment spec; defaults cover all strategies and the ten
    /// standard sort-time settings.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    orders: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Overrides the spec's fleet size.
    #[arg(long)]
    machines: Option<usize>,
    /// Overrides the spec's cross-machine penalty.
    #[arg(long)]
    penalty: Option<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Gen(a) => {
            let mut cfg = match &a.config {
                Some(path) => GenConfig::from_path(path).map_err(|e| e.to_string())?,
                None => GenConfig::default(),
            };
            if let Some(v) = a.drugs {
                cfg.drugs = v;
            }
            if let Some(v) = a.order_count {
                cfg.orders = v;
            }
            if let Some(v) = a.machines {
                cfg.machines = v;
            }
            if let Some(v) = a.seed {
                cfg.seed = v;
            }
            let (orders, catalog) = cmd_gen(&cfg, &a.out)?;
            println!("wrote {} and {}", orders.display(), catalog.display());
        }
        Command::Similarity(a) => {
            cmd_similarity(&a.orders, a.catalog.as_deref(), &a.out)?;
            println!("wrote {}", a.out.display());
        }
        Command::Slot(a) => {
            let args = SlotArgs {
                orders: &a.orders,
                catalog: &a.catalog,
                strategy: a.strategy,
                machines: a.machines,
                params: SAParams::new(a.cluster_size, a.threshold).map_err(|e| e.to_string())?,
                seed: a.seed,
            };
            let objective = cmd_slot(&args, &a.out)?;
            println!("{} grouping objective {objective:.6}; wrote {}", a.strategy, a.out.display());
        }
        Command::Simulate(a) => {
            let config = SimConfig {
                picking: PickingConfig {
                    picker: PickerModel::new(a.mu, a.sigma).map_err(|e| e.to_string())?,
                    cross_penalty: a.penalty,
                    trailing_sort: a.trailing_sort,
                },
                fill_level: a.fill,
                mode: a
                    .sampled_seed
                    .map_or(SortTimeMode::Expected, |seed| SortTimeMode::Sampled { seed }),
            };
            let args = SimulateArgs {
                orders: &a.orders,
                assignment: &a.assignment,
                machines: a.machines,
                strategy: a.strategy,
                config,
            };
            let s = cmd_simulate(&args, &a.out)?;
            let show = |v: Option<f64>| v.map_or("n/a".to_owned(), |x| format!("{x:.3}"));
            println!(
                "{} orders ({} stockouts): avg pick time {} s, cross-machine probability {}",
                s.order_count,
                s.stockouts,
                show(s.avg_pick_time),
                show(s.cross_machine_probability)
            );
        }
        Command::Compare(a) => {
            let mut spec = match &a.spec {
                Some(path) => ExperimentSpec::from_path(path)?,
                None => ExperimentSpec::default(),
            };
            if let Some(m) = a.machines {
                spec.machines = m;
            }
            if let Some(p) = a.penalty {
                spec.cross_penalty = p;
            }
            let source = DataSource {
                orders: a.orders,
                catalog: a.catalog,
            };
            let (files, failures) = cmd_compare(&spec, &source, a.workers, &a.out)?;
            for f in &files {
                println!("wrote {}", f.display());
            }
            if !failures.is_empty() {
                for f in &failures {
                    eprintln!("failed: {f}");
                }
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
