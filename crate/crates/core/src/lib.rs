//! Slope homogeneity tests for panels with grouped slope heterogeneity,
//! a Monte Carlo design with grouped alternatives, and local power theory.

pub mod dgp;
pub mod error;
pub mod exec;
pub mod estimators;
pub mod homogeneity;
pub mod numkern;
pub mod panel;
pub mod sim;
pub mod theory;
pub mod transforms;

pub use error::{Error, Result};
pub use homogeneity::{run_suite, SlopeTestSuite, TestName, TestOptions, TestResult};
pub use panel::{GroupSpec, PanelDataset};
pub use transforms::TransformKind;
