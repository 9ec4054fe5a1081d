//! Sectoral portfolio optimization toolkit.
//!
//! Builds portfolios under second-order stochastic dominance constraints,
//! screens financial ratios per sector with PCA, solves the Markowitz
//! baselines, and runs rolling-window / market-phase backtests with a full
//! tail-risk metric suite.
//!
//! Pipeline, end to end:
//!
//! 1. [`data`] loads and cleans weekly prices, quarterly ratios, sectors and
//!    an optional benchmark index, then slices scenario sets.
//! 2. [`pca`] extracts dominant ratios per sector (by component loading or
//!    by communality).
//! 3. [`ssd`] and [`variance`] fit the seven models over the admissible set
//!    (budget 1, per-asset cap).
//! 4. [`backtest`] rolls the fits across windows or phases; [`metrics`]
//!    scores the concatenated out-of-sample returns; [`report`] writes the
//!    CSV bundle.
//!
//! [`lp`] and [`qp`] carry the in-house solvers: a bounded-variable simplex
//! and a projected-gradient QP, both deterministic.

pub mod backtest;
pub mod data;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod metrics;
pub mod pca;
pub mod portfolio;
pub mod qp;
pub mod ratios;
pub mod report;
pub mod ssd;
pub mod synth;
pub mod variance;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use portfolio::{ModelKind, ModelPortfolio, SUPPORT_EPS};
