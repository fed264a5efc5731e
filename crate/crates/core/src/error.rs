use crate::model::DrugId;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("order {order}: {reason}")]
    Ingestion { order: u64, reason: String },

    #[error("capacity: {0}")]
    Capacity(String),

    #[error("instance too large for the exact solver ({0}); use the heuristic")]
    ExactGuard(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("stockout: no location holds enough of drug {drug} (dosage {dosage})")]
    Stockout { drug: DrugId, dosage: u32 },

    #[error("sub-order of {0} drugs exceeds the exact routing guard; use greedy routing")]
    RouteGuard(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
