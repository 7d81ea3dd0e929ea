//! Design and simulation of piezoelectric active damping for thin flexible
//! structures: modal models, electromechanical coupling, patch placement,
//! positive position feedback (PPF) and half-power damping analysis.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod format;
pub mod frf;
pub mod modal;
pub mod piezo;
pub mod placement;
pub mod ppf;

pub use error::{Error, Result};
