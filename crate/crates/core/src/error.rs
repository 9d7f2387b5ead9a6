use alloc::string::String;

use crate::data::HouseholdId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid date `{0}`")]
    InvalidDate(String),
    #[error("invalid profile for {household} on {date}: {reason}")]
    InvalidProfile {
        household: String,
        date: String,
        reason: String,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("unknown household `{0}`")]
    UnknownHousehold(HouseholdId),
    #[error("profile is degenerate under {0} normalisation")]
    DegenerateProfile(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("at least two clusters are required, got {0}")]
    TooFewClusters(usize),
    #[error("clusters {0} and {1} have coincident centroids")]
    CoincidentCentroids(usize, usize),
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
    #[error("unknown {kind} value `{value}`")]
    Vocabulary { kind: &'static str, value: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}
