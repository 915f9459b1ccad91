//! Scenario configuration, orchestration and output files.

mod config;
mod output;
mod scenarios;

use std::path::PathBuf;

use thiserror::Error;

use crate::error::{ParamError, SolverError, StabilityError};

pub use config::{
    load_config, write_config, ConfigError, GridParams, InitParams, ScenarioConfig, CONFIG_ENV, KEYS,
};
pub use output::{diagnostics_csv, fmt_f64, snapshot_csv, DIAGNOSTICS_HEADER};
pub use scenarios::{
    classification_report, halving_time, report_two_hump, run_classification_report,
    run_relaxation, run_stability_map, run_temperature_sweep, simulate, worst_status,
    ClassificationReport, RelaxationOutcome, StabilityMapOutcome, SweepEntry, SweepOutcome,
    SystemClassification, TwoHump, Lobe, TWO_HUMP_FLOOR,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Serialize(String),
    #[error("no snapshot at t = {0}")]
    MissingSnapshot(f64),
    #[error("perturbation amplitude {max:e} is too small to locate extrema")]
    InsufficientAmplitude { max: f64 },
}
