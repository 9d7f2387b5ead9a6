//! File formats, the experiment-suite runner and the command-line front end
//! of `loadarch-core`.

pub mod archetype;
pub mod config;
pub mod error;
pub mod export;
pub mod io;
pub mod report;
pub mod suite;

pub use error::{Error, Result};
