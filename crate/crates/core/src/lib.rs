//! Steady subsonic irrotational flow along infinite corners, solved for the
//! stream function on truncated log-polar strips.

// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod gas;
pub mod geometry;
pub mod mat2;
pub mod par;
pub mod discretization;
pub mod linalg;
pub mod fields;
pub mod diagnostics;
pub mod solver;
pub mod config;
pub mod io;
pub mod experiment;
