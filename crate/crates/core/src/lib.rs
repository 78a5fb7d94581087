//! Model selection for normal linear regression: the AIC family, exact
//! Kullback–Leibler discrepancy decompositions under mis-specification, a
//! significance test for AIC differences, and a Monte-Carlo harness that
//! checks the distributional results empirically.

pub mod chi2;
pub mod cli;
pub mod criteria;
pub mod discrepancy;
pub mod error;
pub mod io;
pub mod normal;
pub mod regression;
pub mod selection;
pub mod sim;

pub use error::{Error, Result};
