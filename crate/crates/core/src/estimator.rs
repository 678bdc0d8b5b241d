//! Effective correlations and `U_eff` from coincidence counts, with plug-in
//! binomial standard errors, and the ε bookkeeping that relates the
//! full-sample CHSH quantity `U` to `U_eff`.
//!
//! Standard errors assume independent trials; no systematic-error model.

use serde::Serialize;

use crate::counts::CountsRecord;
use crate::error::{Error, Result};
use crate::qm::QmParams;
use crate::quad::{chsh_combination, PairSlot};

/// `Σ rq N_rq / Σ N_rq` over doubly detected pairs.
pub fn e_eff_from_counts(rec: &CountsRecord) -> Result<f64> {
    let n = rec.coincidences();
    if n == 0 {
        return Err(Error::NoData(rec.pair.label().into()));
    }
    Ok((rec.signed_coincidences() as f64 / n as f64).clamp(-1.0, 1.0))
}

/// `√((1 − E²)/n)`: each coincidence contributes `rq = ±1` with mean `E`.
pub fn e_eff_stderr(rec: &CountsRecord) -> Result<f64> {
    let e = e_eff_from_counts(rec)?;
    Ok(((1.0 - e * e).max(0.0) / rec.coincidences() as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairEstimate {
    pub pair: PairSlot,
    #[serde(rename = "E_eff")]
    pub e_eff: f64,
    pub stderr: f64,
    pub coincidences: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UEffEstimate {
    pub per_pair: Vec<PairEstimate>,
    #[serde(rename = "U_eff")]
    pub u_eff: f64,
    pub stderr: f64,
}

fn by_slot(recs: &[CountsRecord]) -> Result<[&CountsRecord; 4]> {
    let find = |slot: PairSlot| {
        let mut it = recs.iter().filter(|r| r.pair == slot);
        match (it.next(), it.next()) {
            (Some(r), None) => Ok(r),
            (None, _) => Err(Error::Counts(format!("missing record for pair {slot}"))),
            (Some(_), Some(_)) => Err(Error::Counts(format!("two records for pair {slot}"))),
        }
    };
    Ok([
        find(PairSlot::AB)?,
        find(PairSlot::ABPrime)?,
        find(PairSlot::APrimeB)?,
        find(PairSlot::APrimeBPrime)?,
    ])
}

/// CHSH combination of the four effective correlations, errors in quadrature.
pub fn u_eff_from_counts(recs: &[CountsRecord]) -> Result<UEffEstimate> {
    let recs = by_slot(recs)?;
    let per_pair = recs
        .iter()
        .map(|r| {
            Ok(PairEstimate {
                pair: r.pair,
                e_eff: e_eff_from_counts(r)?,
                stderr: e_eff_stderr(r)?,
                coincidences: r.coincidences(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let e = [
        per_pair[0].e_eff,
        per_pair[1].e_eff,
        per_pair[2].e_eff,
        per_pair[3].e_eff,
    ];
    let var: f64 = per_pair.iter().map(|p| p.stderr * p.stderr).sum();
    Ok(UEffEstimate {
        u_eff: chsh_combination(e),
        stderr: var.sqrt(),
        per_pair,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonPair {
    pub pair: PairSlot,
    /// Full-sample correlation `Σ rq N_rq / N_emitted`.
    #[serde(rename = "E")]
    pub e: f64,
    /// `Σ_{r,q=±1} N_rq / N_emitted`.
    pub coincidence_fraction: f64,
    #[serde(rename = "E_eff")]
    pub e_eff: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonReport {
    pub pairs: Vec<EpsilonPair>,
    pub eps_ab: f64,
    pub eps_ab_prime: f64,
    pub eps_a_prime_b: f64,
    pub eps_a_prime_b_prime: f64,
    /// Combined with the same sign pattern as `U`, so `U = U_eff − ε`.
    pub eps_total: f64,
    pub interval: (f64, f64),
    #[serde(rename = "U_eff")]
    pub u_eff: f64,
    #[serde(rename = "U")]
    pub u: f64,
    /// Plug-in standard error of `U`.
    pub u_stderr: f64,
    /// `−2 + ε ≤ U_eff ≤ 2 + ε` at the point estimate (equivalently `|U| ≤ 2`).
    pub within_interval: bool,
    /// `|U| ≤ 2 + 4·u_stderr`.
    pub within_interval_4sigma: bool,
}

/// `ε_kl = E_kl (1 − S_kl) / S_kl` per pair from full-sample correlations
/// `E_kl` and coincidence probabilities `S_kl`, in slot order.
pub fn epsilon_terms(e_full: [f64; 4], sums: [f64; 4]) -> [f64; 4] {
    let mut eps = [0.0; 4];
    for k in 0..4 {
        eps[k] = e_full[k] * (1.0 - sums[k]) / sums[k];
    }
    eps
}

/// ε analysis; needs the number of emitted pairs for every record.
pub fn epsilon_decomposition(recs: &[CountsRecord]) -> Result<EpsilonReport> {
    let recs = by_slot(recs)?;
    let mut e_full = [0.0; 4];
    let mut sums = [0.0; 4];
    let mut e_eff = [0.0; 4];
    let mut u_var = 0.0;
    for (k, r) in recs.iter().enumerate() {
        let total = r.emitted_total.ok_or_else(|| {
            Error::EpsilonUnavailable(format!(
                "pair {} has no emitted-pair total; the full-sample correlation is unobservable",
                r.pair
            ))
        })?;
        if r.coincidences() == 0 {
            return Err(Error::NoData(r.pair.label().into()));
        }
        let t = total as f64;
        e_full[k] = r.signed_coincidences() as f64 / t;
        sums[k] = r.coincidences() as f64 / t;
        e_eff[k] = e_eff_from_counts(r)?;
        // rq·1{coincidence} ∈ {−1, 0, 1}: second moment is the coincidence fraction
        u_var += (sums[k] - e_full[k] * e_full[k]).max(0.0) / t;
    }
    let eps = epsilon_terms(e_full, sums);
    let eps_total = chsh_combination(eps);
    let u_eff = chsh_combination(e_eff);
    let u = chsh_combination(e_full);
    let u_stderr = u_var.sqrt();
    let interval = (-2.0 + eps_total, 2.0 + eps_total);
    Ok(EpsilonReport {
        pairs: PairSlot::ALL
            .iter()
            .enumerate()
            .map(|(k, &pair)| EpsilonPair {
                pair,
                e: e_full[k],
                coincidence_fraction: sums[k],
                e_eff: e_eff[k],
                epsilon: eps[k],
            })
            .collect(),
        eps_ab: eps[0],
        eps_ab_prime: eps[1],
        eps_a_prime_b: eps[2],
        eps_a_prime_b_prime: eps[3],
        eps_total,
        interval,
        u_eff,
        u,
        u_stderr,
        within_interval: interval.0 <= u_eff && u_eff <= interval.1,
        within_interval_4sigma: u.abs() <= 2.0 + 4.0 * u_stderr,
    })
}

/// `ε_QM = (1 − η²f₁₂) U_eff`.
pub fn qm_epsilon_identity(p: &QmParams, u_eff: f64) -> f64 {
    (1.0 - p.pair_efficiency()) * u_eff
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EpsilonField {
    Report(EpsilonReport),
    Unavailable(&'static str),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisVerdicts {
    pub u_eff_within_2: bool,
    /// `(|U_eff| − 2) / stderr`; positive means a violation of that many σ.
    pub violation_sigmas: f64,
    /// `P₀₀ = P₀¹ P₀²` is assumed, not checked, for measured data.
    pub p00_factorization_assumed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub per_pair: Vec<PairEstimate>,
    #[serde(rename = "U_eff")]
    pub u_eff: f64,
    pub stderr: f64,
    pub epsilon: EpsilonField,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_note: Option<String>,
    pub verdicts: AnalysisVerdicts,
    pub statistics: &'static str,
}

/// Full estimator report; ε degrades to `"unavailable"` without emitted totals.
pub fn analyze(recs: &[CountsRecord]) -> Result<AnalysisReport> {
    let est = u_eff_from_counts(recs)?;
    let (epsilon, epsilon_note) = match epsilon_decomposition(recs) {
        Ok(r) => (EpsilonField::Report(r), None),
        Err(e @ Error::EpsilonUnavailable(_)) => {
            (EpsilonField::Unavailable("unavailable"), Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };
    Ok(AnalysisReport {
        schema_version: 1,
        verdicts: AnalysisVerdicts {
            u_eff_within_2: est.u_eff.abs() <= 2.0,
            violation_sigmas: if est.stderr > 0.0 {
                (est.u_eff.abs() - 2.0) / est.stderr
            } else if est.u_eff.abs() > 2.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            p00_factorization_assumed: true,
        },
        per_pair: est.per_pair,
        u_eff: est.u_eff,
        stderr: est.stderr,
        epsilon,
        epsilon_note,
        statistics: "independent trials, plug-in binomial variances",
    })
}
