//! Stochastic local hidden-variable (SLHV) models with non-detection.
//!
//! A model is a discrete hidden-variable space plus one response function per
//! party. Each response maps `(setting, λ)` to a probability triple over
//! `{+1, -1, no detection}`. Joint probabilities are only ever formed as the
//! product of the two single-party triples, so every model built here is
//! local by construction.

mod validate;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use validate::{
    validate_solution1, validate_solution2, Solution1Report, Solution2Report, WorstPoint,
};

/// Default grid resolution for formula-defined models.
pub const DEFAULT_GRID: usize = 360;

/// Polarizer setting in radians, canonicalized to `[0, π)`.
///
/// Serialized as degrees.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    pub fn from_radians(rad: f64) -> Result<Self> {
        if !rad.is_finite() {
            return Err(Error::Domain(format!("angle must be finite, got {rad}")));
        }
        let mut c = rad.rem_euclid(PI);
        // rem_euclid can round up to exactly π for tiny negative inputs
        if c >= PI {
            c = 0.0;
        }
        Ok(Angle(c))
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::from_radians(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    /// `cos 2(self − other)`, the polarizer-correlation kernel.
    pub fn cos2_diff(self, other: Angle) -> f64 {
        (2.0 * (self.0 - other.0)).cos()
    }

    /// Distance on the π-periodic circle.
    pub fn distance(self, other: Angle) -> f64 {
        let d = (self.0 - other.0).abs();
        d.min(PI - d)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.degrees())
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let deg = f64::deserialize(d)?;
        Angle::from_degrees(deg).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Party {
    One,
    Two,
}

impl Party {
    pub const BOTH: [Party; 2] = [Party::One, Party::Two];

    pub fn number(self) -> u8 {
        match self {
            Party::One => 1,
            Party::Two => 2,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Party::One),
            2 => Ok(Party::Two),
            _ => Err(Error::Domain(format!("party must be 1 or 2, got {n}"))),
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl Serialize for Party {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.number())
    }
}

/// Single-photon measurement result. `NoDetect` carries weight 0 in averages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
    NoDetect,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Plus, Outcome::Minus, Outcome::NoDetect];
    pub const DETECTED: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i32 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
            Outcome::NoDetect => 0,
        }
    }

    /// Row/column position in 3×3 outcome tables.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
            Outcome::NoDetect => 2,
        }
    }

    pub fn from_value(v: i32) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            0 => Ok(Outcome::NoDetect),
            _ => Err(Error::Domain(format!("outcome must be +1, -1 or 0, got {v}"))),
        }
    }
}

/// Discrete hidden-variable space: points `λᵢ` with probabilities `ρᵢ`.
///
/// Point values are opaque to tabulated models; formula-defined models read
/// them as angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HiddenVariableSpace {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl HiddenVariableSpace {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSpace("at least one point required".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidSpace(format!("weight #{i} is {w}")));
        }
        let total = crate::sum::pairwise_sum(&weights);
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpace(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { points, weights })
    }

    /// Points labelled `0, 1, …, n−1`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let points = (0..weights.len()).map(|i| i as f64).collect();
        Self::new(points, weights)
    }

    /// `n` equally weighted angles `kπ/n` covering `[0, π)`.
    pub fn uniform_grid(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpace("grid needs at least one point".into()));
        }
        let w = 1.0 / n as f64;
        let points = (0..n).map(|k| k as f64 * PI / n as f64).collect();
        Self::new(points, vec![w; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check(&self, index: usize) -> Result<()> {
        if index >= self.len() {
            Err(Error::LambdaIndex {
                index,
                len: self.len(),
            })
        } else {
            Ok(())
        }
    }
}

/// Normalized `(p₊, p₋, p₀)` for one party at one `(setting, λ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbTriple {
    pub plus: f64,
    pub minus: f64,
    pub zero: f64,
}

impl ProbTriple {
    pub const NORMALIZATION_TOL: f64 = 1e-12;

    pub fn new(plus: f64, minus: f64, zero: f64) -> std::result::Result<Self, String> {
        Self::with_tolerance(plus, minus, zero, Self::NORMALIZATION_TOL)
    }

    pub fn with_tolerance(
        plus: f64,
        minus: f64,
        zero: f64,
        tol: f64,
    ) -> std::result::Result<Self, String> {
        for (name, p) in [("p+", plus), ("p-", minus), ("p0", zero)] {
            if !p.is_finite() || p < -tol || p > 1.0 + tol {
                return Err(format!("{name} = {p} outside [0, 1]"));
            }
        }
        let s = plus + minus + zero;
        if (s - 1.0).abs() > tol {
            return Err(format!("p+ + p- + p0 = {s}, expected 1"));
        }
        Ok(Self { plus, minus, zero })
    }

    /// Triple with the non-detection mass fixed as the complement.
    pub fn from_detected(plus: f64, minus: f64) -> std::result::Result<Self, String> {
        Self::new(plus, minus, 1.0 - plus - minus)
    }

    pub fn get(&self, o: Outcome) -> f64 {
        match o {
            Outcome::Plus => self.plus,
            Outcome::Minus => self.minus,
            Outcome::NoDetect => self.zero,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.plus, self.minus, self.zero]
    }

    pub fn detected(&self) -> f64 {
        self.plus + self.minus
    }

    pub fn average(&self) -> f64 {
        self.plus - self.minus
    }
}

pub type TripleFn = dyn Fn(Angle, f64) -> [f64; 3] + Send + Sync;
pub type IdealFn = dyn Fn(Angle, f64) -> [f64; 2] + Send + Sync;
pub type EfficiencyFn = dyn Fn(Angle, f64, Outcome) -> f64 + Send + Sync;

#[derive(Clone)]
enum ResponseKind {
    /// Per-setting table indexed by λ position.
    Tabulated(Vec<(Angle, Vec<ProbTriple>)>),
    /// Triple as a function of `(setting, λ value)`.
    Formula(Arc<TripleFn>),
    /// Ideal two-outcome response composed with per-channel efficiencies.
    Split {
        ideal: Arc<IdealFn>,
        efficiency: Arc<EfficiencyFn>,
    },
}

/// Response of one party: `(setting, λ) ↦ (p₊, p₋, p₀)`.
#[derive(Clone)]
pub struct ResponseFunction {
    kind: ResponseKind,
}

impl fmt::Debug for ResponseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ResponseKind::Tabulated(t) => f
                .debug_struct("Tabulated")
                .field("settings", &t.iter().map(|(a, _)| *a).collect::<Vec<_>>())
                .finish(),
            ResponseKind::Formula(_) => f.write_str("Formula(..)"),
            ResponseKind::Split { .. } => f.write_str("Split(..)"),
        }
    }
}

impl ResponseFunction {
    /// Tabulated response. Every table must have one triple per λ point.
    pub fn tabulated(entries: Vec<(Angle, Vec<ProbTriple>)>) -> Self {
        Self {
            kind: ResponseKind::Tabulated(entries),
        }
    }

    pub fn formula<F>(f: F) -> Self
    where
        F: Fn(Angle, f64) -> [f64; 3] + Send + Sync + 'static,
    {
        Self {
            kind: ResponseKind::Formula(Arc::new(f)),
        }
    }

    /// `p_r = p_{r,id} · η_r`, `p₀ = 1 − Σ_r p_r`.
    pub fn split<I, E>(ideal: I, efficiency: E) -> Self
    where
        I: Fn(Angle, f64) -> [f64; 2] + Send + Sync + 'static,
        E: Fn(Angle, f64, Outcome) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: ResponseKind::Split {
                ideal: Arc::new(ideal),
                efficiency: Arc::new(efficiency),
            },
        }
    }

    /// Split form with the same efficiency in both channels, so `p₀ = 1 − η`.
    pub fn split_channel_independent<I, E>(ideal: I, efficiency: E) -> Self
    where
        I: Fn(Angle, f64) -> [f64; 2] + Send + Sync + 'static,
        E: Fn(Angle, f64) -> f64 + Send + Sync + 'static,
    {
        Self::split(ideal, move |a, l, _| efficiency(a, l))
    }

    /// Perfect detection with a fixed ideal response.
    pub fn perfect<I>(ideal: I) -> Self
    where
        I: Fn(Angle, f64) -> [f64; 2] + Send + Sync + 'static,
    {
        Self::split(ideal, |_, _, _| 1.0)
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.kind, ResponseKind::Tabulated(_))
    }

    /// Settings available in a tabulated response.
    pub fn tabulated_settings(&self) -> Option<Vec<Angle>> {
        match &self.kind {
            ResponseKind::Tabulated(t) => Some(t.iter().map(|(a, _)| *a).collect()),
            _ => None,
        }
    }

    fn eval(
        &self,
        party: Party,
        angle: Angle,
        index: usize,
        lambda: f64,
        tol: f64,
    ) -> Result<ProbTriple> {
        let invalid = |reason: String| Error::InvalidResponse {
            party,
            angle_deg: angle.degrees(),
            lambda: index,
            reason,
        };
        match &self.kind {
            ResponseKind::Tabulated(table) => {
                let row = table
                    .iter()
                    .find(|(a, _)| a.distance(angle) < 1e-9)
                    .map(|(_, row)| row)
                    .ok_or(Error::UntabulatedAngle {
                        party,
                        deg: angle.degrees(),
                    })?;
                let t = row.get(index).ok_or_else(|| {
                    invalid(format!("table has {} entries", row.len()))
                })?;
                ProbTriple::with_tolerance(t.plus, t.minus, t.zero, tol).map_err(invalid)
            }
            ResponseKind::Formula(f) => {
                let [p, m, z] = f(angle, lambda);
                ProbTriple::with_tolerance(p, m, z, tol).map_err(invalid)
            }
            ResponseKind::Split { ideal, efficiency } => {
                let [ip, im] = ideal(angle, lambda);
                if !(ip.is_finite() && im.is_finite())
                    || ip < -tol
                    || im < -tol
                    || (ip + im - 1.0).abs() > tol
                {
                    return Err(invalid(format!(
                        "ideal response ({ip}, {im}) is not a distribution"
                    )));
                }
                let ep = efficiency(angle, lambda, Outcome::Plus);
                let em = efficiency(angle, lambda, Outcome::Minus);
                for e in [ep, em] {
                    if !e.is_finite() || !(0.0..=1.0).contains(&e) {
                        return Err(invalid(format!("efficiency {e} outside [0, 1]")));
                    }
                }
                let plus = ip * ep;
                let minus = im * em;
                ProbTriple::with_tolerance(plus, minus, 1.0 - plus - minus, tol).map_err(invalid)
            }
        }
    }
}

/// Normalization and assumption-check tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub normalization: f64,
    pub assumption: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            normalization: 1e-12,
            assumption: 1e-10,
        }
    }
}

/// Immutable SLHV model. There is no joint response: joint probabilities are
/// always products of the single-party triples.
#[derive(Clone, Debug)]
pub struct SlhvModel {
    space: HiddenVariableSpace,
    response1: ResponseFunction,
    response2: ResponseFunction,
    tolerances: Tolerances,
}

impl SlhvModel {
    pub fn new(
        space: HiddenVariableSpace,
        response1: ResponseFunction,
        response2: ResponseFunction,
    ) -> Result<Self> {
        for (party, r) in [(Party::One, &response1), (Party::Two, &response2)] {
            if let ResponseKind::Tabulated(t) = &r.kind {
                if t.is_empty() {
                    return Err(Error::Schema(format!("party {party} has no settings")));
                }
                for (a, row) in t {
                    if row.len() != space.len() {
                        return Err(Error::Schema(format!(
                            "party {party} setting {a}: {} triples for {} hidden-variable points",
                            row.len(),
                            space.len()
                        )));
                    }
                }
            }
        }
        Ok(Self {
            space,
            response1,
            response2,
            tolerances: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn space(&self) -> &HiddenVariableSpace {
        &self.space
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    pub fn response_function(&self, party: Party) -> &ResponseFunction {
        match party {
            Party::One => &self.response1,
            Party::Two => &self.response2,
        }
    }

    pub fn response(&self, party: Party, angle: Angle, lambda: usize) -> Result<ProbTriple> {
        self.space.check(lambda)?;
        self.response_function(party).eval(
            party,
            angle,
            lambda,
            self.space.points[lambda],
            self.tolerances.normalization,
        )
    }

    /// All triples for one party and setting, in λ order.
    pub fn response_row(&self, party: Party, angle: Angle) -> Result<Vec<ProbTriple>> {
        (0..self.space.len())
            .map(|i| self.response(party, angle, i))
            .collect()
    }

    pub fn nondetect_prob(&self, party: Party, angle: Angle, lambda: usize) -> Result<f64> {
        Ok(self.response(party, angle, lambda)?.zero)
    }

    /// `α(a, λ)` for party 1, `β(b, λ)` for party 2: total detection probability.
    pub fn alpha(&self, party: Party, angle: Angle, lambda: usize) -> Result<f64> {
        Ok(self.response(party, angle, lambda)?.detected())
    }

    pub fn joint_prob(
        &self,
        a: Angle,
        b: Angle,
        lambda: usize,
        r: Outcome,
        q: Outcome,
    ) -> Result<f64> {
        let t1 = self.response(Party::One, a, lambda)?;
        let t2 = self.response(Party::Two, b, lambda)?;
        Ok(t1.get(r) * t2.get(q))
    }

    /// Full 3×3 joint table at one λ, indexed by [`Outcome::index`].
    pub fn joint_table(&self, a: Angle, b: Angle, lambda: usize) -> Result<[[f64; 3]; 3]> {
        let t1 = self.response(Party::One, a, lambda)?.as_array();
        let t2 = self.response(Party::Two, b, lambda)?.as_array();
        let mut out = [[0.0; 3]; 3];
        for (i, p) in t1.iter().enumerate() {
            for (j, q) in t2.iter().enumerate() {
                out[i][j] = p * q;
            }
        }
        Ok(out)
    }

    /// `ε(a, λ) = p₊ − p₋`.
    pub fn local_average(&self, party: Party, angle: Angle, lambda: usize) -> Result<f64> {
        Ok(self.response(party, angle, lambda)?.average())
    }

    /// `ε_eff(a, λ) = (p₊ − p₋) / (1 − p₀)`.
    pub fn effective_local_average(
        &self,
        party: Party,
        angle: Angle,
        lambda: usize,
    ) -> Result<f64> {
        let t = self.response(party, angle, lambda)?;
        effective_average(&t).ok_or(Error::DegeneratePoint {
            party,
            angle_deg: angle.degrees(),
            lambda,
        })
    }
}

/// `None` when the party never detects.
pub(crate) fn effective_average(t: &ProbTriple) -> Option<f64> {
    let detected = t.detected();
    if detected <= 0.0 {
        None
    } else {
        Some(((t.plus - t.minus) / detected).clamp(-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(d: f64) -> Angle {
        Angle::from_degrees(d).unwrap()
    }

    fn single_point(t1: [f64; 3], t2: [f64; 3]) -> SlhvModel {
        let space = HiddenVariableSpace::from_weights(vec![1.0]).unwrap();
        SlhvModel::new(
            space,
            ResponseFunction::formula(move |_, _| t1),
            ResponseFunction::formula(move |_, _| t2),
        )
        .unwrap()
    }

    #[test]
    fn angles_are_pi_periodic() {
        assert!((deg(190.0).radians() - deg(10.0).radians()).abs() < 1e-14);
        assert!((deg(-30.0).degrees() - 150.0).abs() < 1e-12);
        assert_eq!(Angle::from_radians(-1e-300).unwrap().radians(), 0.0);
        assert!(Angle::from_radians(f64::NAN).is_err());
        assert!(Angle::from_radians(f64::INFINITY).is_err());
        assert!(deg(179.9999999999).distance(deg(0.0)) < 1e-9);
    }

    #[test]
    fn space_rejects_bad_weights() {
        assert!(HiddenVariableSpace::from_weights(vec![]).is_err());
        assert!(HiddenVariableSpace::from_weights(vec![0.5, 0.4]).is_err());
        assert!(HiddenVariableSpace::from_weights(vec![1.5, -0.5]).is_err());
        assert!(HiddenVariableSpace::new(vec![0.0], vec![0.5, 0.5]).is_err());
        let g = HiddenVariableSpace::uniform_grid(DEFAULT_GRID).unwrap();
        assert_eq!(g.len(), 360);
    }

    #[test]
    fn perfect_fair_coin_response() {
        let space = HiddenVariableSpace::from_weights(vec![1.0]).unwrap();
        let r = ResponseFunction::split(|_, _| [0.5, 0.5], |_, _, _| 1.0);
        let m = SlhvModel::new(space, r.clone(), r).unwrap();
        let t = m.response(Party::One, deg(0.0), 0).unwrap();
        assert_eq!(t.as_array(), [0.5, 0.5, 0.0]);
        assert_eq!(m.nondetect_prob(Party::Two, deg(33.0), 0).unwrap(), 0.0);
        assert_eq!(m.alpha(Party::One, deg(12.0), 0).unwrap(), 1.0);
    }

    #[test]
    fn split_composition() {
        let space = HiddenVariableSpace::from_weights(vec![1.0]).unwrap();
        let r = ResponseFunction::split(|_, _| [1.0, 0.0], |_, _, _| 0.6);
        let m = SlhvModel::new(space, r.clone(), r).unwrap();
        let t = m.response(Party::One, deg(0.0), 0).unwrap();
        assert_eq!(t.plus, 0.6);
        assert_eq!(t.minus, 0.0);
        assert!((t.zero - 0.4).abs() < 1e-15);
        assert!((m.local_average(Party::One, deg(0.0), 0).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn channel_independent_efficiency() {
        let space = HiddenVariableSpace::from_weights(vec![1.0]).unwrap();
        let r = ResponseFunction::split_channel_independent(|_, _| [0.3, 0.7], |_, _| 0.7);
        let m = SlhvModel::new(space, r.clone(), r).unwrap();
        assert!((m.nondetect_prob(Party::One, deg(5.0), 0).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_lambda() {
        let m = single_point([0.5, 0.5, 0.0], [0.5, 0.5, 0.0]);
        assert_eq!(
            m.response(Party::One, deg(0.0), 3).unwrap_err(),
            Error::LambdaIndex { index: 3, len: 1 }
        );
    }

    #[test]
    fn invalid_triple_names_location() {
        let m = single_point([0.5, 0.6, 0.0], [0.5, 0.5, 0.0]);
        match m.response(Party::One, deg(45.0), 0).unwrap_err() {
            Error::InvalidResponse {
                party,
                angle_deg,
                lambda,
                ..
            } => {
                assert_eq!(party, Party::One);
                assert!((angle_deg - 45.0).abs() < 1e-9);
                assert_eq!(lambda, 0);
            }
            e => panic!("unexpected {e:?}"),
        }
        assert!(m.response(Party::Two, deg(45.0), 0).is_ok());
    }

    #[test]
    fn bad_ideal_or_efficiency_rejected() {
        let space = HiddenVariableSpace::from_weights(vec![1.0]).unwrap();
        let bad_ideal = ResponseFunction::split(|_, _| [0.7, 0.7], |_, _, _| 1.0);
        let bad_eff = ResponseFunction::split(|_, _| [0.5, 0.5], |_, _, _| 1.2);
        let ok = ResponseFunction::perfect(|_, _| [1.0, 0.0]);
        let m = SlhvModel::new(space.clone(), bad_ideal, ok.clone()).unwrap();
        assert!(m.response(Party::One, deg(0.0), 0).is_err());
        let m = SlhvModel::new(space, ok, bad_eff).unwrap();
        assert!(m.response(Party::Two, deg(0.0), 0).is_err());
    }

    #[test]
    fn alpha_of_explicit_triple() {
        let m = single_point([0.3, 0.2, 0.5], [1.0, 0.0, 0.0]);
        assert!((m.alpha(Party::One, deg(0.0), 0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(m.alpha(Party::Two, deg(0.0), 0).unwrap(), 1.0);
    }

    #[test]
    fn deterministic_joint() {
        let m = single_point([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        for r in Outcome::ALL {
            for q in Outcome::ALL {
                let p = m.joint_prob(deg(0.0), deg(0.0), 0, r, q).unwrap();
                let expect = if r == Outcome::Plus && q == Outcome::Minus {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(p, expect);
            }
        }
    }

    #[test]
    fn independent_fair_coins() {
        let m = single_point([0.5, 0.5, 0.0], [0.5, 0.5, 0.0]);
        for r in Outcome::DETECTED {
            for q in Outcome::DETECTED {
                assert_eq!(m.joint_prob(deg(0.0), deg(10.0), 0, r, q).unwrap(), 0.25);
            }
        }
    }

    #[test]
    fn local_averages() {
        let m = single_point([0.5, 0.5, 0.0], [0.6, 0.0, 0.4]);
        assert_eq!(m.local_average(Party::One, deg(0.0), 0).unwrap(), 0.0);
        assert!((m.local_average(Party::Two, deg(0.0), 0).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn effective_average_cases() {
        let m = single_point([0.3, 0.1, 0.6], [0.0, 0.0, 1.0]);
        let e = m.effective_local_average(Party::One, deg(0.0), 0).unwrap();
        assert!((e - 0.5).abs() < 1e-15);
        assert!(matches!(
            m.effective_local_average(Party::Two, deg(30.0), 0),
            Err(Error::DegeneratePoint { party: Party::Two, .. })
        ));

        let perfect = single_point([0.7, 0.3, 0.0], [0.2, 0.8, 0.0]);
        for p in Party::BOTH {
            assert_eq!(
                perfect.effective_local_average(p, deg(0.0), 0).unwrap(),
                perfect.local_average(p, deg(0.0), 0).unwrap()
            );
        }
    }

    #[test]
    fn tabulated_lookup() {
        let space = HiddenVariableSpace::from_weights(vec![0.5, 0.5]).unwrap();
        let t = |p, m, z| ProbTriple::new(p, m, z).unwrap();
        let r = ResponseFunction::tabulated(vec![
            (deg(0.0), vec![t(0.5, 0.5, 0.0), t(0.2, 0.3, 0.5)]),
            (deg(45.0), vec![t(1.0, 0.0, 0.0), t(0.0, 0.5, 0.5)]),
        ]);
        let m = SlhvModel::new(space.clone(), r.clone(), r.clone()).unwrap();
        assert_eq!(m.response(Party::One, deg(180.0), 1).unwrap().minus, 0.3);
        assert!(matches!(
            m.response(Party::Two, deg(10.0), 0),
            Err(Error::UntabulatedAngle { .. })
        ));
        let short = ResponseFunction::tabulated(vec![(deg(0.0), vec![t(1.0, 0.0, 0.0)])]);
        assert!(SlhvModel::new(space, short, r).is_err());
    }
}
