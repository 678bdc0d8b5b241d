//! Exact (sum-over-λ) correlations and the CHSH-type quantities `U`, `M` and
//! `U_eff`, plus the vertex table bounding `u = x(y − y′) + x′(y + y′)`.
//!
//! Verdicts compare exact sums against their bounds with an additive
//! tolerance of [`BOUND_TOL`].

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhv::{
    effective_average, validate_solution1, validate_solution2, Angle, Party, ProbTriple,
    SlhvModel, Solution1Report, Solution2Report,
};
use crate::quad::{chsh_combination, PairSlot, SettingsQuad};
use crate::sum::weighted_sum;

pub const BOUND_TOL: f64 = 1e-12;

/// Which relation between effective correlations and hidden variables is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EffectiveCorrelationMode {
    /// `E_eff = E / ΣP` (setting-independent non-detection).
    #[serde(rename = "solution1")]
    SolutionI,
    /// `E_eff = E / ((1 − P₀¹)(1 − P₀²))` with λ-independent `P₀`.
    #[serde(rename = "solution2")]
    SolutionII,
    /// `E_eff = Σ ρ ε_eff¹ ε_eff²`.
    #[serde(rename = "solution3")]
    SolutionIII,
}

impl EffectiveCorrelationMode {
    pub const ALL: [EffectiveCorrelationMode; 3] = [
        EffectiveCorrelationMode::SolutionI,
        EffectiveCorrelationMode::SolutionII,
        EffectiveCorrelationMode::SolutionIII,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EffectiveCorrelationMode::SolutionI => "solution1",
            EffectiveCorrelationMode::SolutionII => "solution2",
            EffectiveCorrelationMode::SolutionIII => "solution3",
        }
    }
}

impl std::str::FromStr for EffectiveCorrelationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown mode {s:?}")))
    }
}

/// `u = x(y − y′) + x′(y + y′)`.
pub fn u_of(x: f64, x_prime: f64, y: f64, y_prime: f64) -> f64 {
    x * (y - y_prime) + x_prime * (y + y_prime)
}

/// Sign choices `(x, x′, y, y′)` in the conventional row order.
pub const VERTEX_SIGNS: [[i8; 4]; 16] = [
    [-1, -1, -1, -1],
    [1, -1, -1, -1],
    [-1, 1, -1, -1],
    [-1, -1, 1, -1],
    [-1, -1, -1, 1],
    [1, 1, -1, -1],
    [1, -1, 1, -1],
    [1, -1, -1, 1],
    [-1, 1, 1, -1],
    [-1, 1, -1, 1],
    [-1, -1, 1, 1],
    [1, 1, 1, -1],
    [1, 1, -1, 1],
    [1, -1, 1, 1],
    [-1, 1, 1, 1],
    [1, 1, 1, 1],
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexRow {
    /// 1-based.
    pub row_index: usize,
    pub signs: [i8; 4],
    pub u_value: f64,
}

/// `u` at all 16 corners in any exact or floating number type, in row order.
///
/// With a rational type the values are exact; the `f64` path in
/// [`enumerate_vertices`] rounds once per product.
pub fn vertex_values<T>(alpha: T, beta: T) -> [T; 16]
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>,
{
    let signed = |s: i8, v: T| if s > 0 { v } else { -v };
    VERTEX_SIGNS.map(|s| {
        let (x, xp) = (signed(s[0], alpha), signed(s[1], alpha));
        let (y, yp) = (signed(s[2], beta), signed(s[3], beta));
        x * (y - yp) + xp * (y + yp)
    })
}

/// Evaluates `u` at all 16 corners of `|x|, |x′| ≤ α`, `|y|, |y′| ≤ β`.
pub fn enumerate_vertices(alpha: f64, beta: f64) -> Result<Vec<VertexRow>> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
        }
    }
    Ok(vertex_values(alpha, beta)
        .iter()
        .zip(VERTEX_SIGNS)
        .enumerate()
        .map(|(i, (&u_value, signs))| VertexRow {
            row_index: i + 1,
            signs,
            u_value,
        })
        .collect())
}

/// The four single-party rows needed for a quad, evaluated once.
struct QuadRows {
    weights: Vec<f64>,
    a: [Vec<ProbTriple>; 2],
    b: [Vec<ProbTriple>; 2],
}

impl QuadRows {
    fn new(model: &SlhvModel, quad: &SettingsQuad) -> Result<Self> {
        Ok(Self {
            weights: model.space().weights().to_vec(),
            a: [
                model.response_row(Party::One, quad.a)?,
                model.response_row(Party::One, quad.a_prime)?,
            ],
            b: [
                model.response_row(Party::Two, quad.b)?,
                model.response_row(Party::Two, quad.b_prime)?,
            ],
        })
    }

    fn pair(&self, slot: PairSlot) -> (&[ProbTriple], &[ProbTriple]) {
        let (i, j) = match slot {
            PairSlot::AB => (0, 0),
            PairSlot::ABPrime => (0, 1),
            PairSlot::APrimeB => (1, 0),
            PairSlot::APrimeBPrime => (1, 1),
        };
        (&self.a[i], &self.b[j])
    }
}

fn correlation_rows(w: &[f64], r1: &[ProbTriple], r2: &[ProbTriple]) -> f64 {
    weighted_sum(w, |i| r1[i].average() * r2[i].average())
}

fn coincidence_rows(w: &[f64], r1: &[ProbTriple], r2: &[ProbTriple]) -> f64 {
    weighted_sum(w, |i| r1[i].detected() * r2[i].detected())
}

fn solution3_rows(
    w: &[f64],
    r1: &[ProbTriple],
    r2: &[ProbTriple],
    a: Angle,
    b: Angle,
) -> Result<f64> {
    let mut eff = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        let e1 = effective_average(&r1[i]).ok_or(Error::DegeneratePoint {
            party: Party::One,
            angle_deg: a.degrees(),
            lambda: i,
        })?;
        let e2 = effective_average(&r2[i]).ok_or(Error::DegeneratePoint {
            party: Party::Two,
            angle_deg: b.degrees(),
            lambda: i,
        })?;
        eff.push(e1 * e2);
    }
    Ok(weighted_sum(w, |i| eff[i]))
}

/// `E(a, b) = Σᵢ ρᵢ ε¹(a, λᵢ) ε²(b, λᵢ)`.
pub fn exact_correlation(model: &SlhvModel, a: Angle, b: Angle) -> Result<f64> {
    let r1 = model.response_row(Party::One, a)?;
    let r2 = model.response_row(Party::Two, b)?;
    Ok(correlation_rows(model.space().weights(), &r1, &r2))
}

/// `Σ_{r,q=±1} P_rq = Σᵢ ρᵢ α(a, λᵢ) β(b, λᵢ)`.
pub fn exact_coincidence_sum(model: &SlhvModel, a: Angle, b: Angle) -> Result<f64> {
    let r1 = model.response_row(Party::One, a)?;
    let r2 = model.response_row(Party::Two, b)?;
    Ok(coincidence_rows(model.space().weights(), &r1, &r2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaTerm {
    pub lambda: usize,
    pub weight: f64,
    pub u: f64,
    /// `2 α(λ) β(λ)`, with α, β taken as the larger of the two settings.
    pub bound: f64,
    pub slack: f64,
    /// `u` built from effective averages; absent where a party never detects.
    pub u_eff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub passed: bool,
    pub min_slack: f64,
    pub max_slack: f64,
    pub worst_lambda: usize,
}

/// Per-λ values of `u` and its bound `2αβ` at the quad.
pub fn lambda_terms(model: &SlhvModel, quad: &SettingsQuad) -> Result<Vec<LambdaTerm>> {
    let rows = QuadRows::new(model, quad)?;
    Ok((0..rows.weights.len())
        .map(|i| {
            let [a, ap] = [&rows.a[0][i], &rows.a[1][i]];
            let [b, bp] = [&rows.b[0][i], &rows.b[1][i]];
            let u = u_of(a.average(), ap.average(), b.average(), bp.average());
            let bound = 2.0 * a.detected().max(ap.detected()) * b.detected().max(bp.detected());
            let u_eff = match (
                effective_average(a),
                effective_average(ap),
                effective_average(b),
                effective_average(bp),
            ) {
                (Some(x), Some(xp), Some(y), Some(yp)) => Some(u_of(x, xp, y, yp)),
                _ => None,
            };
            LambdaTerm {
                lambda: i,
                weight: rows.weights[i],
                u,
                bound,
                slack: bound - u.abs(),
                u_eff,
            }
        })
        .collect())
}

/// Checks `|u(λ)| ≤ 2α(λ)β(λ)` at every λ. Only meaningful when non-detection
/// does not depend on the setting, so other models are refused.
pub fn pointwise_bound_check(model: &SlhvModel, quad: &SettingsQuad) -> Result<PointwiseReport> {
    let s1 = validate_solution1(model, &quad.party1_angles(), &quad.party2_angles())?;
    if !s1.passed {
        return Err(Error::Precondition {
            validator: "solution1",
            detail: format!(
                "non-detection depends on the setting (deviation {:e})",
                s1.deviation
            ),
        });
    }
    let terms = lambda_terms(model, quad)?;
    let (mut min_slack, mut max_slack, mut worst) = (f64::INFINITY, f64::NEG_INFINITY, 0);
    for t in &terms {
        if t.slack < min_slack {
            min_slack = t.slack;
            worst = t.lambda;
        }
        max_slack = max_slack.max(t.slack);
    }
    Ok(PointwiseReport {
        passed: min_slack >= -BOUND_TOL,
        min_slack,
        max_slack,
        worst_lambda: worst,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UReport {
    pub u: f64,
    pub m: f64,
    pub correlations: [f64; 4],
    pub coincidence_sums: [f64; 4],
    /// `|U| ≤ 2`, a theorem for every model.
    pub chsh_holds: bool,
    /// `|U| ≤ M`; guaranteed only when `solution1.passed`.
    pub within_m: bool,
    pub solution1: Solution1Report,
}

/// `U = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)` and `M = 2 Σ P_rq(a, b)`.
pub fn compute_u(model: &SlhvModel, quad: &SettingsQuad) -> Result<UReport> {
    let rows = QuadRows::new(model, quad)?;
    let w = &rows.weights;
    let mut correlations = [0.0; 4];
    let mut coincidence_sums = [0.0; 4];
    for slot in PairSlot::ALL {
        let (r1, r2) = rows.pair(slot);
        correlations[slot.index()] = correlation_rows(w, r1, r2);
        coincidence_sums[slot.index()] = coincidence_rows(w, r1, r2);
    }
    let u = chsh_combination(correlations);
    let m = 2.0 * coincidence_sums[PairSlot::AB.index()];
    let solution1 = validate_solution1(model, &quad.party1_angles(), &quad.party2_angles())?;
    Ok(UReport {
        u,
        m,
        correlations,
        coincidence_sums,
        chsh_holds: u.abs() <= 2.0 + BOUND_TOL,
        within_m: u.abs() <= m + BOUND_TOL,
        solution1,
    })
}

fn effective_from_rows(
    model: &SlhvModel,
    w: &[f64],
    (a, b): (Angle, Angle),
    (r1, r2): (&[ProbTriple], &[ProbTriple]),
    mode: EffectiveCorrelationMode,
    solution2: Option<&Solution2Report>,
) -> Result<f64> {
    match mode {
        EffectiveCorrelationMode::SolutionI => {
            let total = coincidence_rows(w, r1, r2);
            if total <= 0.0 {
                return Err(Error::DegenerateModel(format!(
                    "no coincidences at ({a}, {b})"
                )));
            }
            Ok(correlation_rows(w, r1, r2) / total)
        }
        EffectiveCorrelationMode::SolutionII => {
            let owned;
            let rep = match solution2 {
                Some(r) => r,
                None => {
                    owned = validate_solution2(model, &[a], &[b])?;
                    &owned
                }
            };
            if !rep.passed {
                return Err(Error::Precondition {
                    validator: "solution2",
                    detail: format!(
                        "non-detection depends on the hidden variable (spread {:e})",
                        rep.deviation
                    ),
                });
            }
            let p1 = rep.p0(Party::One, a).expect("validated setting");
            let p2 = rep.p0(Party::Two, b).expect("validated setting");
            if p1 >= 1.0 || p2 >= 1.0 {
                return Err(Error::DegenerateModel(format!(
                    "non-detection probability is 1 at ({a}, {b})"
                )));
            }
            Ok(correlation_rows(w, r1, r2) / ((1.0 - p1) * (1.0 - p2)))
        }
        EffectiveCorrelationMode::SolutionIII => solution3_rows(w, r1, r2, a, b),
    }
}

/// Effective correlation at `(a, b)` under the chosen mode.
pub fn exact_effective_correlation(
    model: &SlhvModel,
    a: Angle,
    b: Angle,
    mode: EffectiveCorrelationMode,
) -> Result<f64> {
    let r1 = model.response_row(Party::One, a)?;
    let r2 = model.response_row(Party::Two, b)?;
    effective_from_rows(model, model.space().weights(), (a, b), (&r1, &r2), mode, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The mode's assumption holds and `|U_eff| ≤ 2`.
    BoundHolds,
    /// The mode's assumption fails; the bound is not guaranteed.
    AssumptionsViolated,
    /// The assumption holds yet `|U_eff| > 2`: a defect in the model code.
    TheoremBreach,
}

impl Verdict {
    pub fn describe(self) -> &'static str {
        match self {
            Verdict::BoundHolds => "bound holds",
            Verdict::AssumptionsViolated => "assumptions violated; bound not guaranteed",
            Verdict::TheoremBreach => "theorem breach: bound violated with assumptions passing",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairValues {
    pub pair: PairSlot,
    pub a: Angle,
    pub b: Angle,
    pub correlation: f64,
    pub coincidence_sum: f64,
    pub effective_correlation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdicts {
    /// `|u(λ)| ≤ 2αβ` at every λ; `None` unless non-detection is setting independent.
    pub pointwise: Option<bool>,
    pub u_within_m: bool,
    pub chsh: bool,
    pub u_eff_within_2: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionChecks {
    pub solution1: Solution1Report,
    pub solution2: Solution2Report,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub schema_version: u32,
    pub mode: EffectiveCorrelationMode,
    pub quad: SettingsQuad,
    pub pairs: Vec<PairValues>,
    pub u: f64,
    pub m: f64,
    pub u_eff: f64,
    pub tolerance: f64,
    pub verdicts: Verdicts,
    pub assumptions: AssumptionChecks,
    /// Whether the assumption behind `mode` is satisfied by the model.
    pub mode_assumption_holds: bool,
    pub verdict: Verdict,
    pub verdict_text: &'static str,
    /// Models factorize `P₀₀ = P₀¹ P₀²` automatically; recorded for parity
    /// with data-side reports where it is an unverified assumption.
    pub p00_factorizes: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_lambda: Option<Vec<LambdaTerm>>,
}

impl InequalityReport {
    pub fn with_per_lambda(mut self, terms: Vec<LambdaTerm>) -> Self {
        self.per_lambda = Some(terms);
        self
    }
}

fn decide(assumption_holds: bool, u_eff: f64) -> Verdict {
    match (assumption_holds, u_eff.abs() <= 2.0 + BOUND_TOL) {
        (false, _) => Verdict::AssumptionsViolated,
        (true, true) => Verdict::BoundHolds,
        (true, false) => Verdict::TheoremBreach,
    }
}

/// Assembles `U`, `M` and `U_eff` with every intermediate value.
///
/// The Solution I computation runs even when its assumption fails (the report
/// says so); Solution II has no meaning without λ-independent non-detection
/// and returns a precondition error instead.
pub fn compute_u_eff(
    model: &SlhvModel,
    quad: &SettingsQuad,
    mode: EffectiveCorrelationMode,
) -> Result<InequalityReport> {
    let rows = QuadRows::new(model, quad)?;
    let w = &rows.weights;
    let (a_angles, b_angles) = (quad.party1_angles(), quad.party2_angles());
    let solution1 = validate_solution1(model, &a_angles, &b_angles)?;
    let solution2 = validate_solution2(model, &a_angles, &b_angles)?;

    let mut pairs = Vec::with_capacity(4);
    for slot in PairSlot::ALL {
        let settings = quad.settings(slot);
        let r = rows.pair(slot);
        pairs.push(PairValues {
            pair: slot,
            a: settings.0,
            b: settings.1,
            correlation: correlation_rows(w, r.0, r.1),
            coincidence_sum: coincidence_rows(w, r.0, r.1),
            effective_correlation: effective_from_rows(
                model,
                w,
                settings,
                r,
                mode,
                Some(&solution2),
            )?,
        });
    }
    let pick = |f: fn(&PairValues) -> f64| -> [f64; 4] {
        [f(&pairs[0]), f(&pairs[1]), f(&pairs[2]), f(&pairs[3])]
    };
    let u = chsh_combination(pick(|p| p.correlation));
    let m = 2.0 * pairs[0].coincidence_sum;
    let u_eff = chsh_combination(pick(|p| p.effective_correlation));

    let pointwise = if solution1.passed {
        let terms = lambda_terms(model, quad)?;
        Some(terms.iter().all(|t| t.slack >= -BOUND_TOL))
    } else {
        None
    };
    let mode_assumption_holds = match mode {
        EffectiveCorrelationMode::SolutionI => solution1.passed,
        EffectiveCorrelationMode::SolutionII => solution2.passed,
        EffectiveCorrelationMode::SolutionIII => true,
    };
    let verdict = decide(mode_assumption_holds, u_eff);
    Ok(InequalityReport {
        schema_version: 1,
        mode,
        quad: *quad,
        pairs,
        u,
        m,
        u_eff,
        tolerance: BOUND_TOL,
        verdicts: Verdicts {
            pointwise,
            u_within_m: u.abs() <= m + BOUND_TOL,
            chsh: u.abs() <= 2.0 + BOUND_TOL,
            u_eff_within_2: u_eff.abs() <= 2.0 + BOUND_TOL,
        },
        assumptions: AssumptionChecks {
            solution1,
            solution2,
        },
        mode_assumption_holds,
        verdict,
        verdict_text: verdict.describe(),
        p00_factorizes: true,
        per_lambda: None,
    })
}
