//! Sparse directions of maximal outlyingness.
//!
//! Given a multivariate data set and a case that a robust detector has flagged,
//! this crate finds the small subset of variables that drive the case's
//! outlyingness. The direction of maximal outlyingness is rewritten as a least
//! squares problem, which is then solved sparsely with a one-component sparse
//! NIPALS PLS fit over a descending grid of sparsity parameters. Columns are
//! removed as they are flagged until the reduced case is no longer outlying.
//!
//! Module map:
//!
//! - [`numerics`]: Jacobi eigensolver, Cholesky, chi-squared quantiles.
//! - [`robust`]: Q_n standardization, the concentration-step detector,
//!   weighted moments and outlyingness.
//! - [`maxout`]: the exact direction of maximal outlyingness and its
//!   regression form.
//! - [`snipls`]: sparse NIPALS PLS for a univariate response.
//! - [`spadimo`]: the eta-grid scan, path data and automatic eta selection.
//! - [`simlab`]: data generation, cellwise contamination and study metrics.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod maxout;
pub mod numerics;
pub mod robust;
pub mod simlab;
pub mod snipls;
pub mod spadimo;

pub use error::{Error, Result};
pub use maxout::{AugmentedRegression, UnitDirection};
pub use numerics::{SpectralDecomposition, SymmetricMatrix};
pub use robust::{CaseWeights, DataMatrix, Detector, RobustSummary, StandardizationParams};
pub use simlab::{CorrelationModel, ReplicationRecord, SimConfig, SimMetrics};
pub use snipls::SniplsModel;
pub use spadimo::{
    FlaggedVariable, Sign, SpadimoConfig, SpadimoReport, SparseDirectionPath, Termination,
    TraceEntry,
};

pub use nalgebra::{DMatrix, DVector};
