//! Wi-Fi CSI motion recognition that keeps working when the packet rate
//! does not.
//!
//! The crate is organised the way data flows through a run:
//!
//! - [`csi`]: the CSI instance/dataset model, amplitude-outlier repair and
//!   the `SRVCSI01` interchange format.
//! - [`traffic`]: synthetic motion datasets, packet-arrival processes and
//!   rate conversion (uniform and stochastic point selection).
//! - [`model`]: the rate-versatile transformer classifier with exact
//!   backpropagation, Adam, FLOP accounting and checkpoints.
//! - [`augment`]: adaptive sampling-rate distribution and the training loop.
//! - [`eval`]: per-rate accuracy, mean/variance summaries, cross-rate grids
//!   and report files.
//!
//! Every stochastic entry point takes an explicit RNG or seed; see [`seed`].

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod csi;
pub mod error;
pub mod eval;
pub mod model;
pub mod rates;
pub mod seed;
pub mod traffic;

pub use error::{Error, Result};
