//! Exact combinatorics of free and Boolean cumulants.
//!
//! The crate works over two scalar backends: exact rationals ([`Rational`])
//! and fixed-precision binary floats ([`Float`]). Every algorithm is generic
//! over [`Scalar`], so the same code runs exactly or numerically.
//!
//! ```
//! use fck_core::partitions::{enumerate_partitions, Family};
//! assert_eq!(enumerate_partitions(4, Family::NonCrossing).unwrap().len(), 14);
//! ```
#![no_std]

extern crate alloc;

pub mod condexp;
pub mod cumulants;
pub mod distributions;
mod error;
pub mod freeprod;
pub mod func;
pub mod lukacs;
pub mod partitions;
pub mod scalar;
pub mod series;
pub mod subordination;

pub use error::{Error, Result};
pub use scalar::{Backend, Float, Rational, Scalar};
pub use series::TruncatedSeries;
