//! Checks for the two non-detection assumptions that make the effective
//! inequality provable: setting-independent non-detection at every λ, and
//! λ-independent non-detection at every setting.

use serde::Serialize;

use super::{Angle, Party, SlhvModel};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorstPoint {
    pub party: Party,
    pub lambda: usize,
    /// The two settings (degrees) whose non-detection probabilities differ
    /// most; for λ-independence both entries name the same setting.
    pub angles: (Angle, Angle),
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Solution1Report {
    pub passed: bool,
    pub tolerance: f64,
    /// `max |p₀(a, λ) − p₀(a′, λ)|` over supplied settings and all λ.
    pub deviation: f64,
    pub worst: Option<WorstPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImpliedNondetection {
    pub party: Party,
    pub angle: Angle,
    pub p0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Solution2Report {
    pub passed: bool,
    pub tolerance: f64,
    /// Largest spread `max_λ p₀ − min_λ p₀` at any single setting.
    pub deviation: f64,
    pub worst: Option<WorstPoint>,
    /// The λ-constant `P₀` per party and setting; empty unless `passed`.
    pub implied_p0: Vec<ImpliedNondetection>,
}

impl Solution2Report {
    pub fn p0(&self, party: Party, angle: Angle) -> Option<f64> {
        self.implied_p0
            .iter()
            .find(|e| e.party == party && e.angle.distance(angle) < 1e-9)
            .map(|e| e.p0)
    }
}

/// Non-detection probability independent of the setting, for every λ.
pub fn validate_solution1(
    model: &SlhvModel,
    angles1: &[Angle],
    angles2: &[Angle],
) -> Result<Solution1Report> {
    let tol = model.tolerances().assumption;
    let mut worst: Option<WorstPoint> = None;
    for (party, angles) in [(Party::One, angles1), (Party::Two, angles2)] {
        for lambda in 0..model.space().len() {
            let p0: Vec<(Angle, f64)> = angles
                .iter()
                .map(|&a| model.nondetect_prob(party, a, lambda).map(|p| (a, p)))
                .collect::<Result<_>>()?;
            let Some(&(mut lo)) = p0.first() else { continue };
            let mut hi = lo;
            for &(a, p) in &p0[1..] {
                if p < lo.1 {
                    lo = (a, p);
                }
                if p > hi.1 {
                    hi = (a, p);
                }
            }
            let dev = hi.1 - lo.1;
            if worst.as_ref().is_none_or(|w| dev > w.deviation) {
                worst = Some(WorstPoint {
                    party,
                    lambda,
                    angles: (lo.0, hi.0),
                    deviation: dev,
                });
            }
        }
    }
    let deviation = worst.as_ref().map_or(0.0, |w| w.deviation);
    let passed = deviation <= tol;
    Ok(Solution1Report {
        passed,
        tolerance: tol,
        deviation,
        worst: if passed { None } else { worst },
    })
}

/// Non-detection probability independent of λ, for every supplied setting.
pub fn validate_solution2(
    model: &SlhvModel,
    angles1: &[Angle],
    angles2: &[Angle],
) -> Result<Solution2Report> {
    let tol = model.tolerances().assumption;
    let weights = model.space().weights();
    let mut worst: Option<WorstPoint> = None;
    let mut implied = Vec::new();
    for (party, angles) in [(Party::One, angles1), (Party::Two, angles2)] {
        for &angle in angles {
            let row = model.response_row(party, angle)?;
            let (mut lo, mut hi) = ((0usize, row[0].zero), (0usize, row[0].zero));
            for (i, t) in row.iter().enumerate().skip(1) {
                if t.zero < lo.1 {
                    lo = (i, t.zero);
                }
                if t.zero > hi.1 {
                    hi = (i, t.zero);
                }
            }
            let dev = hi.1 - lo.1;
            if worst.as_ref().is_none_or(|w| dev > w.deviation) {
                worst = Some(WorstPoint {
                    party,
                    lambda: hi.0,
                    angles: (angle, angle),
                    deviation: dev,
                });
            }
            let terms: Vec<f64> = row
                .iter()
                .zip(weights)
                .map(|(t, w)| t.zero * w)
                .collect();
            implied.push(ImpliedNondetection {
                party,
                angle,
                p0: crate::sum::pairwise_sum(&terms),
            });
        }
    }
    let deviation = worst.as_ref().map_or(0.0, |w| w.deviation);
    let passed = deviation <= tol;
    Ok(Solution2Report {
        passed,
        tolerance: tol,
        deviation,
        worst: if passed { None } else { worst },
        implied_p0: if passed { implied } else { Vec::new() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhv::{HiddenVariableSpace, ResponseFunction};

    fn deg(d: f64) -> Angle {
        Angle::from_degrees(d).unwrap()
    }

    fn quad_angles() -> (Vec<Angle>, Vec<Angle>) {
        (
            vec![deg(0.0), deg(45.0)],
            vec![deg(22.5), deg(67.5)],
        )
    }

    fn model_with_p0<F>(p0: F) -> SlhvModel
    where
        F: Fn(Angle, f64) -> f64 + Send + Sync + Clone + 'static,
    {
        let space = HiddenVariableSpace::uniform_grid(16).unwrap();
        let r = move |p0: F| {
            ResponseFunction::formula(move |a: Angle, l: f64| {
                let z = p0(a, l);
                let c = (1.0 + (2.0 * (a.radians() - l)).cos()) / 2.0;
                [(1.0 - z) * c, (1.0 - z) * (1.0 - c), z]
            })
        };
        SlhvModel::new(space, r(p0.clone()), r(p0)).unwrap()
    }

    #[test]
    fn lambda_only_nondetection_passes_solution1() {
        let m = model_with_p0(|_, l| 0.2 + 0.1 * l.sin());
        let (a, b) = quad_angles();
        let rep = validate_solution1(&m, &a, &b).unwrap();
        assert!(rep.passed);
        assert!(rep.worst.is_none());
        assert!(!validate_solution2(&m, &a, &b).unwrap().passed);
    }

    #[test]
    fn setting_dependent_nondetection_fails_solution1() {
        let m = model_with_p0(|a, l| 0.1 + 0.05 * (2.0 * (a.radians() - l)).cos());
        let (a, b) = quad_angles();
        let rep = validate_solution1(&m, &a, &b).unwrap();
        assert!(!rep.passed);
        // direct evaluation at λ = 0 between settings 0° and 45°: 0.05·|cos 0 − cos 90°|
        assert!(rep.deviation >= 0.05 - 1e-12);
        let w = rep.worst.unwrap();
        assert!(w.deviation > 0.0);
    }

    #[test]
    fn perfect_model_passes_both() {
        let m = model_with_p0(|_, _| 0.0);
        let (a, b) = quad_angles();
        let r1 = validate_solution1(&m, &a, &b).unwrap();
        assert!(r1.passed);
        assert_eq!(r1.deviation, 0.0);
        let r2 = validate_solution2(&m, &a, &b).unwrap();
        assert!(r2.passed);
        assert!(r2.implied_p0.iter().all(|e| e.p0 == 0.0));
    }

    #[test]
    fn constant_nondetection_passes_solution2() {
        let m = model_with_p0(|_, _| 0.25);
        let (a, b) = quad_angles();
        let rep = validate_solution2(&m, &a, &b).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.implied_p0.len(), 4);
        for e in &rep.implied_p0 {
            assert!((e.p0 - 0.25).abs() < 1e-12);
        }
        assert!((rep.p0(Party::Two, deg(67.5)).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn two_level_nondetection_fails_solution2() {
        let space = HiddenVariableSpace::from_weights(vec![0.5, 0.5]).unwrap();
        let r = ResponseFunction::formula(|_, l| {
            let z = if l == 0.0 { 0.2 } else { 0.3 };
            [1.0 - z, 0.0, z]
        });
        let m = SlhvModel::new(space, r.clone(), r).unwrap();
        let rep = validate_solution2(&m, &[deg(0.0)], &[deg(0.0)]).unwrap();
        assert!(!rep.passed);
        assert!((rep.deviation - 0.1).abs() < 1e-12);
        assert!(rep.implied_p0.is_empty());
    }
}
