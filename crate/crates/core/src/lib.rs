//! Terahertz spectra synthesis, chemometrics classification and carrier-based
//! frequency-domain sensing.

// `!(x > 0.0)` is the NaN-rejecting form used throughout for validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops read more clearly than zipped iterators in the numeric kernels
#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod classify;
pub mod cli;
pub mod error;
pub mod fds;
pub mod features;
pub mod physics;
pub mod preprocess;
pub mod spectroscopy;

pub use error::{Error, Result};
