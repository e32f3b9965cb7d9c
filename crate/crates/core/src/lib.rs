//! Model-based optimal experimental design.
//!
//! The crate is layered bottom-up: [`symlin`] holds the dense symmetric kernel,
//! [`criteria`] scores a Fisher information matrix, [`experiment`] builds that
//! matrix from a simulator, [`estimate`] fits parameters to data and [`design`]
//! searches the design space. [`verify`] checks the analytic derivatives
//! against finite differences.

// Negated float comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod design;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod models;
pub mod sampling;
pub mod symlin;
pub mod verify;

pub use criteria::{Criterion, CriterionKind, GreyBoxEval, Sense};
pub use design::{DesignProblem, DesignResult};
pub use error::{OedError, Result};
pub use estimate::{Dataset, EstimationResult, Record};
pub use experiment::{
    FdScheme, FimOptions, LabeledExperiment, MeasurementCovariance, ParameterScaling,
    PriorInformation, SensitivityMatrix, Simulator,
};
pub use symlin::{EigenDecomposition, SymMatrix};
