//! Time-fractional diffusion with separated-variable sources: forward
//! simulation of boundary flux and reconstruction of the source's space
//! part, time part, or proportionality class from that flux.

// `!(x > 0.0)` is the idiom for rejecting NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod error;
pub mod forward;
pub mod fractional;
pub mod inverse;
pub mod laplace;
pub mod mittag_leffler;
pub mod special;

pub use error::{Error, Result};
