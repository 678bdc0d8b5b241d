//! Stochastic local hidden-variable (SLHV) models of two-party polarization
//! experiments with imperfect detection, the efficiency-robust CHSH bounds
//! they satisfy, quantum predictions, a seeded experiment simulator,
//! coincidence-count estimators and an adversarial model search.
//!
//! Angles are taken modulo π; user-facing values are in degrees.

pub mod adversary;
pub mod bounds;
pub mod counts;
pub mod error;
pub mod estimator;
pub mod lhv;
pub mod model_file;
pub mod qm;
pub mod quad;
pub mod random_models;
pub mod sampler;
pub mod sum;

pub use bounds::{compute_u, compute_u_eff, EffectiveCorrelationMode, InequalityReport, Verdict};
pub use counts::CountsRecord;
pub use error::{Error, Result};
pub use lhv::{Angle, HiddenVariableSpace, Outcome, Party, ProbTriple, ResponseFunction, SlhvModel};
pub use qm::QmParams;
pub use quad::{PairSlot, SettingsQuad};
