//! Simulation laboratory for interference tests of observer superpositions.
//!
//! The crate models a small universe (an electron spin, an experimenter
//! memory register and a paper record) as a dense complex state vector and
//! provides:
//!
//! - [`statespace`]: composite registers, state vectors, density matrices
//!   and discrete phase averaging.
//! - [`unitary`]: unitary construction, completion of partially specified
//!   transforms, Haar sampling and the exponential parameterization.
//! - [`dynamics`]: Born-rule measurement and the two rival evolution models
//!   (unitary only vs. objective collapse).
//! - [`protocol`]: the repeatable memory-erasing interference experiment and
//!   Bayes-factor evidence accumulation.
//! - [`theorems`]: numerical checks of the no-go results for definitive,
//!   partially-definitive and branch-discriminating tests.
//! - [`cli`]: the `suplab` command-line front end.
//!
//! Composite indices are big-endian: the first register listed in a
//! [`statespace::RegisterLayout`] varies slowest.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod protocol;
pub mod statespace;
pub mod theorems;
pub mod tolerance;
pub mod unitary;

pub use error::{Error, Result};
pub use num_complex::Complex64;
