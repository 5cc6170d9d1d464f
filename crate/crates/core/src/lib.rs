//! ℓp-norm multiple kernel learning with kernel diagnostics and synthetic
//! benchmarks.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernel`]: dense kernel matrices, χ² and Gaussian kernels, centering and
//!   multiplicative normalization; [`kmx`] reads and writes kernel files.
//! - [`alignment`]: kernel alignment and centered kernel-target alignment.
//! - [`svm`]: SMO solver for the binary SVM dual on a precomputed kernel.
//! - [`mkl`]: alternating ℓp-norm MKL on top of [`svm`].
//! - [`metrics`] and [`significance`]: average precision, conditional kernel
//!   deviation, and paired/unpaired tests.
//! - [`synthetic`]: generators for the disjoint-informative-subset benchmarks.
//! - [`harness`]: the experiment drivers behind the `lpmkl` binary.

pub mod alignment;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod kmx;
pub mod labels;
pub mod metrics;
pub mod mkl;
pub mod rng;
pub mod significance;
pub mod svm;
pub mod synthetic;

pub use error::{MklError, Result};
pub use kernel::{CrossKernel, FeatureGroupMatrix, KernelMatrix};
pub use labels::LabelVector;
pub use mkl::{MklModel, MklParams, Norm};
pub use svm::{SvmModel, SvmParams};
