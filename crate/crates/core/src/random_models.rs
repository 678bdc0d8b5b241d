//! Random SLHV models for property testing.
//!
//! Each party's response at λ is a Malus-like split
//! `p± = (1 − p₀)·½(1 ± A_λ cos 2(a − φ_λ))` with random amplitude and
//! phase; the non-detection law depends on the requested structure.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use crate::bounds::EffectiveCorrelationMode;
use crate::error::Result;
use crate::lhv::{Angle, HiddenVariableSpace, ResponseFunction, SlhvModel};
use crate::quad::SettingsQuad;

/// Upper limit for generated `p₀`, so no point is fully undetected.
pub const MAX_P0: f64 = 0.9;

#[derive(Clone, Copy, Debug)]
struct Lobe {
    amplitude: f64,
    phase: f64,
}

impl Lobe {
    fn random<R: Rng>(rng: &mut R) -> Self {
        Self {
            amplitude: rng.random::<f64>(),
            phase: rng.random::<f64>() * PI,
        }
    }

    fn eval(self, a: Angle) -> f64 {
        self.amplitude * (2.0 * (a.radians() - self.phase)).cos()
    }
}

#[derive(Clone, Copy, Debug)]
enum P0Law {
    PerLambda(f64),
    PerSetting { mean: f64, lobe: Lobe },
    Both { mean: f64, lobe: Lobe },
}

impl P0Law {
    fn eval(self, a: Angle) -> f64 {
        match self {
            P0Law::PerLambda(p) => p,
            P0Law::PerSetting { mean, lobe } | P0Law::Both { mean, lobe } => {
                (mean + lobe.eval(a)).clamp(0.0, MAX_P0)
            }
        }
    }
}

fn random_p0_lobe<R: Rng>(rng: &mut R) -> (f64, Lobe) {
    let mean = rng.random::<f64>() * MAX_P0;
    let room = mean.min(MAX_P0 - mean);
    (
        mean,
        Lobe {
            amplitude: room * rng.random::<f64>(),
            phase: rng.random::<f64>() * PI,
        },
    )
}

/// Random λ space with `1..=max_points` points and random positive weights.
pub fn random_space<R: Rng>(rng: &mut R, max_points: usize) -> Result<HiddenVariableSpace> {
    let n = rng.random_range(1..=max_points.max(1));
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total = crate::sum::pairwise_sum(&raw);
    HiddenVariableSpace::from_weights(raw.iter().map(|w| w / total).collect())
}

fn party_response<R: Rng>(rng: &mut R, n: usize, mode: EffectiveCorrelationMode) -> ResponseFunction {
    let shared = match mode {
        EffectiveCorrelationMode::SolutionII => {
            let (mean, lobe) = random_p0_lobe(rng);
            Some(P0Law::PerSetting { mean, lobe })
        }
        _ => None,
    };
    let per_lambda: Arc<Vec<(Lobe, P0Law)>> = Arc::new(
        (0..n)
            .map(|_| {
                let lobe = Lobe::random(rng);
                let law = match mode {
                    EffectiveCorrelationMode::SolutionI => P0Law::PerLambda(rng.random::<f64>() * MAX_P0),
                    EffectiveCorrelationMode::SolutionII => shared.expect("set above"),
                    EffectiveCorrelationMode::SolutionIII => {
                        let (mean, lobe) = random_p0_lobe(rng);
                        P0Law::Both { mean, lobe }
                    }
                };
                (lobe, law)
            })
            .collect(),
    );
    ResponseFunction::formula(move |a, l| {
        let (lobe, law) = per_lambda[l as usize];
        let p0 = law.eval(a);
        let plus = (1.0 - p0) * 0.5 * (1.0 + lobe.eval(a));
        [plus, (1.0 - p0) - plus, p0]
    })
}

/// Random model satisfying the structural assumption of `mode`:
/// setting-independent `p₀` (I), λ-independent `p₀` (II) or neither (III).
pub fn random_model<R: Rng>(
    rng: &mut R,
    mode: EffectiveCorrelationMode,
    max_points: usize,
) -> Result<SlhvModel> {
    let space = random_space(rng, max_points)?;
    let n = space.len();
    let r1 = party_response(rng, n, mode);
    let r2 = party_response(rng, n, mode);
    SlhvModel::new(space, r1, r2)
}

/// Four settings drawn uniformly from `[0°, 180°)`.
pub fn random_quad<R: Rng>(rng: &mut R) -> SettingsQuad {
    let mut deg = [0.0; 4];
    for d in &mut deg {
        *d = rng.random::<f64>() * 180.0;
    }
    SettingsQuad::from_degrees(deg).expect("finite angles")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhv::{validate_solution1, validate_solution2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_models_meet_their_assumption() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let q = random_quad(&mut rng);
            let (a1, a2) = (q.party1_angles(), q.party2_angles());
            let m1 = random_model(&mut rng, EffectiveCorrelationMode::SolutionI, 8).unwrap();
            assert!(validate_solution1(&m1, &a1, &a2).unwrap().passed);
            let m2 = random_model(&mut rng, EffectiveCorrelationMode::SolutionII, 8).unwrap();
            assert!(validate_solution2(&m2, &a1, &a2).unwrap().passed);
        }
    }
}
