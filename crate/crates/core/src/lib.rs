//! Computational laboratory for the value distribution of diagonal forms
//!
//! ```text
//! q(x) = a_1 x_1^d + ... + a_k x_k^d,   x in Z_{>0}^k
//! ```
//!
//! with random positive real coefficients. The crate generates the normalized
//! value sequence (unit mean spacing), measures its l-correlations and gap
//! statistics against the Poisson prediction, and provides the exact
//! arithmetic used to study them: diophantine solution counters and an exact
//! integer census of the matrices of d-th powers built from tuples of
//! argument vectors.
//!
//! Module map:
//!
//! * [`form`] diagonal forms, evaluation and the normalization constant
//! * [`enumerate`] complete lattice enumeration below a threshold
//! * [`correlate`] sharp and smoothed l-correlations, gaps, long gaps
//! * [`dioph`] meet-in-the-middle counts of equations and inequalities
//! * [`census`] exact rank/minor analysis of tuple matrices
//! * [`sweep`] Monte Carlo over the coefficient domain
//! * [`cli`] the `diagform` command line front end

pub mod census;
pub mod cli;
pub mod correlate;
pub mod dioph;
pub mod enumerate;
mod error;
pub mod fit;
pub mod form;
pub mod quad;
pub mod sweep;

pub use error::{Error, Result};
pub use form::{DiagonalForm, IntervalBox};
pub use enumerate::ValueSequence;
