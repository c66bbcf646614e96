//! Refinement studies for the surface finite volume solver: configuration,
//! initial data, exact and reference solutions, rate fitting and output.

pub mod config;
pub mod experiment;
pub mod fit;
pub mod initial;
pub mod output;

use surface_fv::FvError;
use thiserror::Error;

pub use config::{ExperimentConfig, ManifoldSpec};
pub use experiment::{
    mesh_info, reference_solution, run_experiment, simulate, verify_flux, ConvergenceRow, LevelRun, LevelSummary,
    MeshInfo, Summary, VerifyFluxOutcome, SCHEMA_VERSION,
};
pub use fit::{fit_rate, RateFit};
pub use initial::{exact_rotation_solution, InitialCondition};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] FvError),
    #[error("no exact solution for the {0} flux")]
    UnsupportedExactSolution(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("rate fit: {0}")]
    Fit(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
