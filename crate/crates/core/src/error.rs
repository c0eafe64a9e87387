use thiserror::Error;

/// Errors raised by the toolkit. Each variant names the owning module so
/// callers (the CLI in particular) can surface module context.
#[derive(Debug, Error)]
pub enum Error {
    #[error("array geometry: {0}")]
    Geometry(String),

    #[error("beam pattern: {0}")]
    Pattern(String),

    #[error("steering model: {0}")]
    Steering(String),

    #[error("echo simulation: {0}")]
    Simulation(String),

    #[error("moment estimation: {0}")]
    Moments(String),

    #[error("experiment: {0}")]
    Experiment(String),

    #[error("data format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
