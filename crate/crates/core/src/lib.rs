//! Models, simulation and analysis for polarization-entangled photon-pair sources.
//!
//! The crate is `no_std` (it needs `alloc`) so that the algorithmic pieces can be
//! embedded next to acquisition firmware; file formats and the command line live
//! in the `paircert` crate.
//!
//! * [`state`]: two-qubit polarization states and the metrics derived from a
//!   density matrix (purity, von Neumann and Rényi-2 entropies, fidelity).
//! * [`analytic`]: closed-form detector saturation, coincidence and accidental
//!   rate predictions.
//! * [`sim`]: event-level Monte Carlo of the source/channel/detector chain,
//!   coincidence counting, delay histograms and parameter scans.
//! * [`metrics`]: visibility, QBER, coincidence entropies and single-photon
//!   visibility computed from counts.
//! * [`tomography`]: linear inversion and maximum-likelihood reconstruction of
//!   the two-qubit density matrix.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analytic;
mod error;
pub mod linalg;
pub mod metrics;
pub mod sim;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};
