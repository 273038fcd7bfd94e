//! Blind estimation of eigenvector centrality from filtered graph signals.
//!
//! The crate models observations as `Y = H(A) B Z`: an unknown low-pass graph
//! filter `H(A)` excited by a sparse influence matrix `B` and known latent
//! drivers `Z`. Two estimators are provided:
//!
//! * [`estimators::pca_centrality`], the top eigenvector of the signal covariance;
//! * [`estimators::robust_centrality`], which recovers `H(A)B` by least squares,
//!   splits it into a low-rank part and a sparse part with
//!   [`proxsolve::decompose`], and reads the centrality off the low-rank part.
//!
//! [`eval::run_benchmark`] runs the synthetic core-periphery study end to end.
//! Trials run on rayon when the `parallel` feature is enabled (the default) and
//! sequentially otherwise.

pub mod error;
pub mod estimators;
pub mod eval;
pub mod filters;
pub mod graph;
pub mod ingest;
pub mod io;
mod linalg;
pub mod proxsolve;
pub mod seed;
pub mod signals;

pub use error::{Error, Result};
pub use estimators::{CovarianceEstimate, CovarianceSource, HBEstimate};
pub use eval::{CovarianceMode, ErrorReport, Execution, ExperimentConfig};
pub use filters::{DiagnosticsBundle, FilterSpec, IirScale};
pub use graph::{CentralityEstimate, Graph, Method, SpectralDecomposition};
pub use proxsolve::{Decomposition, SolverConfig, SolverRecipe};
pub use signals::{InfluenceMatrix, InfluencePattern, SignalDataset};
