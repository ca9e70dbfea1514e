//! Library side of the `fracsrc` command: configuration, artifact I/O and
//! the subcommands, kept out of `main` so tests can drive them directly.

// `!(x > 0.0)` is the idiom for rejecting NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod io;
pub mod verify;
