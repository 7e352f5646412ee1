use std::path::PathBuf;

use lflow_core::catalog::CatalogError;
use lflow_core::dynamics::DynamicsError;
use lflow_core::formal::FormalError;
use lflow_core::lseries::LSeriesError;
use lflow_core::stats::StatsError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("catalog: {0}")]
    Catalog(#[from] CatalogError),
    #[error("coefficients: {0}")]
    LSeries(#[from] LSeriesError),
    #[error("dynamics: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("formal expansion: {0}")]
    Formal(#[from] FormalError),
    #[error("statistics: {0}")]
    Stats(#[from] StatsError),
    #[error("unknown curve label {0}")]
    UnknownLabel(String),
    #[error("corrupt coefficient cache {path}: {reason}")]
    CacheCorrupt { path: PathBuf, reason: String },
    #[error("{what} line {line}: {reason}")]
    Format { what: &'static str, line: usize, reason: String },
    #[error("config: {0}")]
    Config(String),
    #[error("unknown map selector {0:?} (expected <label>, nonic:<label>, exp:<lambda> or zeta)")]
    Selector(String),
    #[error("need at least 3 rows with finite tau to correlate, have {usable} ({excluded} excluded with tau = inf)")]
    TooFewRows { usable: usize, excluded: usize },
    #[error("no catalog given: pass --catalog or set LFLOW_CATALOG")]
    NoCatalog,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
