//! Market-integration econometrics for regional price panels.
//!
//! The crate covers the usual cointegration workflow: unit-root tests
//! ([`unit_root`]), levels VAR estimation and diagnostics ([`var`]),
//! Johansen rank tests ([`johansen`]), VECM estimation with Granger
//! causality and likelihood-ratio tests on the cointegration space
//! ([`vecm`]), plus seeded data-generating processes ([`simulate`]).

pub mod data;
pub mod dist;
pub mod error;
pub mod johansen;
mod linalg;
pub mod unit_root;
pub mod simulate;
pub mod var;
pub mod vecm;

pub use error::{Error, Result};
