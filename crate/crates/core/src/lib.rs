//! Predictive-maintenance numerics: telemetry ingestion and windowing,
//! statistical and spectral features, an SMO-trained SVM failure classifier,
//! an LSTM remaining-useful-life regressor, a linear RUL baseline, OR-fusion,
//! alerting and cost accounting, and a synthetic run-to-failure benchmark.

pub mod dataset;
pub mod decision;
pub mod error;
pub mod features;
pub mod fusion;
pub mod lstm;
pub mod monitor;
pub mod par;
pub mod pipeline;
pub mod scaling;
pub mod signal;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
