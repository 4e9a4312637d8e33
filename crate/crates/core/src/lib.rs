//! Truncated Taylor jets, curvature tensors and their weighted analogues,
//! residuals for canonical metric classes, and the warped-product ODE.
//!
//! Positivity guards are written `!(x > 0.0)` so that NaN fails them.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod catalog;
pub mod classes;
pub mod classifier;
pub mod curvature;
pub mod error;
pub mod geometry;
pub mod identities;
pub mod integrals;
pub mod jet;
pub mod potential;
pub mod tensor;
pub mod warped;

pub use error::{Error, Result};
