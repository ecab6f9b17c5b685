//! Exact simulation of small lossy linear-optical circuits over polarization
//! Fock states, with the analytic and Monte-Carlo bookkeeping needed to build
//! loss-tolerant tree clusters from heralded GHZ states.

pub mod cli;
pub mod detection;
pub mod error;
pub mod fock;
pub mod fusion;
pub mod ghz;
pub mod optics;
pub mod pauli;
pub mod threshold;
pub mod tree;

pub use error::{Error, Result};
