//! Configuration-driven runs, parameter sweeps and bundled verification
//! suites on top of `fracrd-core`.

use std::path::PathBuf;

use fracrd_core::estimates::EstimateError;
use fracrd_core::heat_kernel::KernelError;
use fracrd_core::model::ModelError;
use fracrd_core::solver::{CheckpointError, SolverError};
use fracrd_core::spectral::SpectralError;
use thiserror::Error;

pub mod config;
pub mod output;
pub mod scenario;
pub mod sweep;
pub mod verify;

pub use config::{FieldError, ScenarioConfig};
pub use output::{write_run, Artifact, Check, Evaluation, RunManifest, RunStatus};
pub use scenario::{evaluate, run_scenario};
pub use sweep::{sweep, SweepAxis, SweepTable};
pub use verify::{run_suite, Suite};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration:{}", .0.iter().map(|e| format!("\n  {e}")).collect::<String>())]
    ConfigInvalid(Vec<FieldError>),
    #[error("unknown model {0:?}")]
    ModelUnknown(String),
    #[error("cannot write to {path}: {source}")]
    OutputUnwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown sweep axis {0:?} (expected alpha, rho, p0, points or dt)")]
    UnknownAxis(String),
    #[error("sweep needs at least one value")]
    EmptyValues,
    #[error("unknown verification suite {0:?} (expected kernel, inequalities, ladder or bimolecular)")]
    UnknownSuite(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
