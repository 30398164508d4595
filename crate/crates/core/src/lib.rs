//! Exact-arithmetic toolkit for uniform approximation by one linear form.
//!
//! Builds integer sequences whose associated vectors have a prescribed
//! Dirichlet constant, emits the explicit sparse witness forms certifying
//! the upper bounds, machine-checks the number-theoretic facts behind the
//! certified lower bounds, and computes the approximation minimum
//! exhaustively at small heights. Everything is exact: scalars are
//! arbitrary-precision rationals and series values are certified rational
//! enclosures.

#![forbid(unsafe_code)]

mod error;

pub mod certificates;
pub mod construction;
pub mod numerics;
pub mod oracle;
pub mod spectrum;
pub mod witnesses;

pub use error::{Error, Result};
