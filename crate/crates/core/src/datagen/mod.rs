//! Synthetic data and the CSV formats shared with the command line.

mod files;
mod generate;

pub use files::{
    read_assignment, read_catalog, read_history, write_assignment, write_catalog, write_history,
    write_order_records,
};
pub use generate::{generate_history, GenConfig};
