//! Clustering and evaluation of daily household electricity load profiles.
//!
//! The crate is `no_std` (it needs `alloc`) and carries everything that is
//! pure computation: the profile data model, normalisation and pre-binning,
//! k-means and self-organising maps, internal validity indices, the
//! application-level external measures, the weighted-rank scoring matrix and
//! the softmax-regression archetype builder. File formats and the experiment
//! runner live in the `loadarch` crate.

#![no_std]
// Negated comparisons are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod archetype;
pub mod cluster;
pub mod data;
pub mod date;
mod error;
pub mod external;
pub mod internal;
pub mod math;
pub mod matrix;
pub mod preprocess;
pub mod scoring;
pub mod survey;
pub mod synth;

pub use error::{Error, Result};

/// Number of hourly values in a daily load profile.
pub const HOURS: usize = 24;
