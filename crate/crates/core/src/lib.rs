//! Maximum likelihood estimation for totally positive (MTP2) binary
//! distributions and ferromagnetic Ising models.
//!
//! The crate works with dense probability tables over `{-1, 1}^d` and
//! provides:
//!
//! - [`states`]: the Boolean lattice, its closures and elementary pairs;
//! - [`tables`]: probability tables, sample counts, moments and MTP2 checks;
//! - [`ising`]: the `(h, J)` parametrization and conversions;
//! - [`ips`]: the iterative-proportional-scaling solver constrained to
//!   `J >= 0`, with the symmetric (no external field) variant;
//! - [`certify`]: KKT certificates built from imsets;
//! - [`general_mle`]: the MLE over all MTP2 binary distributions;
//! - [`cli`]: the command-line front end used by the `mtp2` binary.
//!
//! Vertices are 0-indexed in the API and 1-indexed in all text I/O.

pub mod certify;
pub mod cli;
pub mod error;
pub mod general_mle;
pub mod ips;
pub mod ising;
mod nnls;
pub mod states;
pub mod tables;

pub use crate::certify::{certify_general, certify_ising, KktCertificate, Tolerances};
pub use crate::error::{Error, Result};
pub use crate::general_mle::{mle_exists_general, mle_exists_symmetric, solve_general};
pub use crate::ips::{fit, fit_symmetric, FitOptions, FitResult};
pub use crate::ising::{Graph, IsingParams};
pub use crate::states::{State, StateSet};
pub use crate::tables::{Moments, PairMargin, ProbTable, SampleCounts};
