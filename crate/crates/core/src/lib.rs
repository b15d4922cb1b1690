//! Factorization-method reconstruction of obstacles and screens from
//! Laplace-domain wave data.
//!
//! The pipeline runs from boundary integral operators through the data
//! operator on a probe region to Picard and inf-criterion indicators. A
//! separate module checks the time-truncation error bound on finite
//! surrogate models.

pub mod boundary_ops;
pub mod cli;
pub mod data_operator;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod oracle;
pub mod quadrature;
pub mod reconstruction;
pub mod selftest;
pub mod time_domain;

pub use error::{Error, Result};
