//! Sensitivity-preserving CSP reductions.
//!
//! The crate builds the classic gap-amplification pipeline out of small,
//! individually checkable passes (degree reduction, expanderization,
//! random-walk powering, assignment-tester alphabet reduction, serial
//! repetition, FGLSS and gadget reductions). Each pass comes with its
//! randomized recovery map, and the [`oracles`] and [`harness`] modules
//! measure how far the pair is from its declared sensitivity bounds using
//! exact rational arithmetic and earth mover's distance.

pub mod csp;
pub mod error;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod nonsignal;
pub mod oracles;
pub mod pipeline;
pub mod recovery;
pub mod transforms;
pub mod util;

pub use error::{Error, Result};
