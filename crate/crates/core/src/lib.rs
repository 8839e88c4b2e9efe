//! Relative perturbation bounds for covariance operators: relative ranks,
//! first-order spectral expansions with exact oracles, stochastic sample
//! generators and a reproducible Monte Carlo harness.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod experiments;
pub mod generators;
pub mod linalg;
pub mod perturbation;
pub mod rng;
pub mod spectrum;
pub mod stats;

pub use error::{Error, Result};
pub use estimation::{empirical_covariance, empirical_spectrum, projector_distance, EmpiricalSpectrum};
pub use generators::{CoeffFamily, Dataset, GeneratorConfig, Setting};
pub use perturbation::{
    coefficient_summary, eigenvalue_expansion, eigenvector_expansion, multi_eigenvalue_expansion,
    projector_expansion, separation_test, ExpansionReport, Perturbation,
};
pub use spectrum::{SpectrumFile, SpectrumModel, SpectrumSpec};
