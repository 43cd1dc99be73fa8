//! Heterogeneous domain adaptation with joint preservation of paired-sample
//! correlation and local/global structure.
//!
//! Two domains with different feature spaces are mapped into one shared
//! subspace by a pair of linear maps `A` (source) and `B` (target). The maps
//! minimise marginal and class-conditional MMD together with a Laplacian
//! locality term and within-class scatter, subject to a normalisation built
//! from the paired-sample cross-covariance and between-class scatter. The
//! resulting trace-ratio problem is solved as a symmetric generalized
//! eigenproblem, and target pseudo-labels are refined over a fixed number of
//! iterations.
//!
//! Module map:
//!
//! * [`matrix`] and [`eigen`]: dense linear algebra and the eigensolvers.
//! * [`dataset`] and [`synth`]: two-domain data, CSV I/O, preprocessing and a
//!   seeded synthetic benchmark.
//! * [`terms`]: MMD, correlation, Laplacian and scatter matrices.
//! * [`solver`]: objective assembly, projection solve and the refinement loop.
//! * [`classifier`]: deterministic 1-NN and nearest-centroid classifiers.

pub mod classifier;
pub mod dataset;
pub mod eigen;
mod error;
pub mod matrix;
pub mod solver;
pub mod synth;
pub mod terms;

pub use classifier::{accuracy, ClassifierKind, ClassifierModel, ClassifierSpec};
pub use dataset::{DomainData, HeteroDataset, Label, Preprocessor, Scheme, UNLABELED};
pub use eigen::{EigenPairs, EigenSelection, GenEigOptions, GeneralizedEigen, Reduction};
pub use error::{JipError, Result};
pub use matrix::Matrix;
pub use solver::{fit, IterationRecord, JipHyperParams, JipModel, SharedProjection};
pub use synth::{synth_generate, SynthSpec, SyntheticBenchmark};
