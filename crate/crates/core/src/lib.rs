//! Vital-sign forecasting and early-warning engine.

pub mod bpnet;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod ews;
pub mod ga;
pub mod lms;
pub mod monitor;
pub mod predictor;
pub mod service;
pub mod signals;

pub use error::{Error, Result};
pub use ews::{Severity, WarningAssessment};
pub use monitor::{ModelSet, PipelineConfig, WarningEvent};
pub use predictor::Model;
pub use signals::{VitalChannel, VitalSample};
