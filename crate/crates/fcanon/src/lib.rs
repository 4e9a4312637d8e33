//! Geometry-spec files, seeded random geometries and the command layer behind
//! the `fcanon` binary. The numerics live in `fcanon-core`.

#![allow(clippy::needless_range_loop)]

pub mod commands;
pub mod expr;
pub mod random;
pub mod spec;
