use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Airspeed (or its forward component) too small for the aero angles to be defined.
    #[error("airspeed {speed:.3} m/s is below the {threshold} m/s validity threshold")]
    DegenerateAirspeed { speed: f64, threshold: f64 },

    #[error("covariance lost positive definiteness (min eigenvalue {min_eigenvalue:e}, trace {trace:e})")]
    NumericalFailure { min_eigenvalue: f64, trace: f64 },

    #[error("sensor stream out of order at t = {t} s (previous {previous} s)")]
    StreamOrder { t: f64, previous: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid trajectory or simulation setup: {0}")]
    Spec(String),

    #[error("reference covers {coverage:.2}% of the estimate span (99% required)")]
    Alignment { coverage: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}:{line}: {sensor} timestamp {t} s does not increase")]
    Order {
        path: PathBuf,
        line: u64,
        sensor: String,
        t: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
