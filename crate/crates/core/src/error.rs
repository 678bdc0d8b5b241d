use thiserror::Error;

use crate::lhv::Party;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("hidden-variable index {index} out of range (space has {len} points)")]
    LambdaIndex { index: usize, len: usize },

    #[error("invalid probabilities for party {party} at angle {angle_deg:.6} deg, lambda #{lambda}: {reason}")]
    InvalidResponse {
        party: Party,
        angle_deg: f64,
        lambda: usize,
        reason: String,
    },

    #[error("party {party} never detects at angle {angle_deg:.6} deg, lambda #{lambda}; effective average undefined")]
    DegeneratePoint {
        party: Party,
        angle_deg: f64,
        lambda: usize,
    },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("precondition failed ({validator}): {detail}")]
    Precondition {
        validator: &'static str,
        detail: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid hidden-variable space: {0}")]
    InvalidSpace(String),

    #[error("angle {deg} deg is not tabulated for party {party}")]
    UntabulatedAngle { party: Party, deg: f64 },

    #[error("no coincidences recorded for pair {0}")]
    NoData(String),

    #[error("epsilon cannot be determined from coincidences alone: {0}")]
    EpsilonUnavailable(String),

    #[error("model file: {0}")]
    Schema(String),

    #[error("counts file: {0}")]
    Counts(String),
}
