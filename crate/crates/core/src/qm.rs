//! Phenomenological quantum prediction for a double-channel polarization
//! experiment with detector efficiencies `η₁, η₂`, collimator factors
//! `f₁, f₂` and source correlation strength `F`:
//!
//! ```text
//! P_rq(a, b) = ¼ η₁η₂ f₁f₂ [1 + rq F cos 2(a − b)]
//! ```
//!
//! `η²` below always means `η₁η₂`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhv::{Angle, Outcome};
use crate::quad::{chsh_combination, PairSlot, SettingsQuad};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QmParams {
    pub eta1: f64,
    pub eta2: f64,
    pub f1: f64,
    pub f2: f64,
    #[serde(rename = "F")]
    pub correlation: f64,
}

impl QmParams {
    pub fn new(eta1: f64, eta2: f64, f1: f64, f2: f64, correlation: f64) -> Result<Self> {
        for (name, v) in [("eta1", eta1), ("eta2", eta2), ("f1", f1), ("f2", f2)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Domain(format!("{name} = {v} outside (0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&correlation) {
            return Err(Error::Domain(format!("F = {correlation} outside [0, 1]")));
        }
        Ok(Self {
            eta1,
            eta2,
            f1,
            f2,
            correlation,
        })
    }

    /// Equal detectors `η`, pair collimation `f₁₂` split evenly as `f₁ = f₂ = √f₁₂`.
    pub fn symmetric(eta: f64, f12: f64, correlation: f64) -> Result<Self> {
        let f = f12.sqrt();
        Self::new(eta, eta, f, f, correlation)
    }

    pub fn perfect() -> Self {
        Self::new(1.0, 1.0, 1.0, 1.0, 1.0).expect("valid")
    }

    pub fn f12(&self) -> f64 {
        self.f1 * self.f2
    }

    /// `η₁η₂f₁₂`, the coincidence probability per emitted pair.
    pub fn pair_efficiency(&self) -> f64 {
        self.eta1 * self.eta2 * self.f12()
    }

    /// Per-photon detection probability `η_k f_k`.
    pub fn photon_efficiency(&self, party: crate::lhv::Party) -> f64 {
        match party {
            crate::lhv::Party::One => self.eta1 * self.f1,
            crate::lhv::Party::Two => self.eta2 * self.f2,
        }
    }
}

/// Joint detection probability for `r, q ∈ {+1, −1}`.
pub fn qm_joint_prob(p: &QmParams, a: Angle, b: Angle, r: Outcome, q: Outcome) -> Result<f64> {
    if r == Outcome::NoDetect || q == Outcome::NoDetect {
        return Err(Error::Domain(
            "joint prediction is defined for detected outcomes only".into(),
        ));
    }
    let rq = f64::from(r.value() * q.value());
    Ok(0.25 * p.pair_efficiency() * (1.0 + rq * p.correlation * a.cos2_diff(b)))
}

/// `E_QM(a, b) = η²f₁₂ F cos 2(a − b)`.
pub fn qm_correlation(p: &QmParams, a: Angle, b: Angle) -> f64 {
    p.pair_efficiency() * p.correlation * a.cos2_diff(b)
}

/// `E_QM / (η²f₁₂) = F cos 2(a − b)`, evaluated in its cancelled form so the
/// value does not depend on the efficiencies at all.
pub fn qm_effective_correlation(p: &QmParams, a: Angle, b: Angle) -> f64 {
    p.correlation * a.cos2_diff(b)
}

/// `F |3 cos φ − cos 3φ|`, to be compared against 2.
///
/// `φ` is the doubled angle that appears inside the cosine, i.e. twice the
/// physical polarizer separation: 22.5° separations give `φ = π/4`.
pub fn violation_lhs(correlation: f64, phi: f64) -> f64 {
    correlation * (3.0 * phi.cos() - (3.0 * phi).cos()).abs()
}

/// CHSH combination of the effective correlations.
pub fn qm_ueff(p: &QmParams, quad: &SettingsQuad) -> f64 {
    let mut e = [0.0; 4];
    for slot in PairSlot::ALL {
        let (a, b) = quad.settings(slot);
        e[slot.index()] = qm_effective_correlation(p, a, b);
    }
    chsh_combination(e)
}

/// CHSH combination of the full-sample correlations, `U = η²f₁₂ U_eff`.
pub fn qm_u(p: &QmParams, quad: &SettingsQuad) -> f64 {
    let mut e = [0.0; 4];
    for slot in PairSlot::ALL {
        let (a, b) = quad.settings(slot);
        e[slot.index()] = qm_correlation(p, a, b);
    }
    chsh_combination(e)
}

/// `2 / (η²f₁₂)`: the range of `U_eff` compatible with `|U| ≤ 2`.
pub fn qm_appendix_bound(p: &QmParams) -> f64 {
    2.0 / p.pair_efficiency()
}
