//! Single-label one-vs-all (SLOVA) uncertainty toolkit.
//!
//! Converts the K independent sigmoid outputs of a one-vs-all classifier into
//! single-label probabilities, fits a monotone exponential calibration map on
//! held-out data, and scores the result with the usual calibration metrics.
//! The [`nets`] and [`experiments`] modules provide small ReLU networks and
//! reproducible harnesses for saturation, dataset-shift and OOD behaviour.

pub mod calibrate;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod nets;
pub mod probs;
pub mod rng;

pub use calibrate::{CalibrationDataset, CalibrationModel, FitConfig, NoiseMode};
pub use error::{Error, Result};
pub use matrix::{LabelVector, LogitMatrix, Matrix, ProbKind, ProbMatrix};
pub use metrics::{EvalReport, RankingTable, ReliabilityBin};
pub use nets::{Head, MlpModel, SyntheticDataset};
