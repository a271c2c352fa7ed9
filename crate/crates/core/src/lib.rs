//! Numerical model of a bad-cavity Cs laser whose cavity can be tuned from
//! resonant to anti-resonant operation.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atomic_data;
pub mod cavity;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod gain;
pub mod integrator;
pub mod observables;
pub mod scenario;
pub mod special;
pub mod sweep;

pub use error::{Error, Result};
