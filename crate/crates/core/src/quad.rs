use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhv::Angle;

/// The four analyzer settings of a CHSH run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingsQuad {
    pub a: Angle,
    pub a_prime: Angle,
    pub b: Angle,
    pub b_prime: Angle,
}

/// One of the four setting pairs entering the CHSH combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairSlot {
    #[serde(rename = "a-b")]
    AB,
    #[serde(rename = "a-b'")]
    ABPrime,
    #[serde(rename = "a'-b")]
    APrimeB,
    #[serde(rename = "a'-b'")]
    APrimeBPrime,
}

impl PairSlot {
    pub const ALL: [PairSlot; 4] = [
        PairSlot::AB,
        PairSlot::ABPrime,
        PairSlot::APrimeB,
        PairSlot::APrimeBPrime,
    ];

    /// Sign of this pair in `E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`.
    pub fn sign(self) -> f64 {
        match self {
            PairSlot::ABPrime => -1.0,
            _ => 1.0,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            PairSlot::AB => "a-b",
            PairSlot::ABPrime => "a-b'",
            PairSlot::APrimeB => "a'-b",
            PairSlot::APrimeBPrime => "a'-b'",
        }
    }
}

impl fmt::Display for PairSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PairSlot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PairSlot::ALL
            .into_iter()
            .find(|p| p.label() == s.trim())
            .ok_or_else(|| Error::Counts(format!("unknown pair label {s:?}")))
    }
}

/// `v[AB] − v[AB′] + v[A′B] + v[A′B′]`, always summed in slot order.
pub fn chsh_combination(values: [f64; 4]) -> f64 {
    values[0] - values[1] + values[2] + values[3]
}

impl SettingsQuad {
    pub fn new(a: Angle, a_prime: Angle, b: Angle, b_prime: Angle) -> Self {
        Self {
            a,
            a_prime,
            b,
            b_prime,
        }
    }

    /// `[a, a′, b, b′]` in degrees.
    pub fn from_degrees(deg: [f64; 4]) -> Result<Self> {
        Ok(Self::new(
            Angle::from_degrees(deg[0])?,
            Angle::from_degrees(deg[1])?,
            Angle::from_degrees(deg[2])?,
            Angle::from_degrees(deg[3])?,
        ))
    }

    /// Adjacent separations of 22.5°: a = 0°, a′ = 45°, b = 22.5°, b′ = 67.5°.
    pub fn standard() -> Self {
        Self::from_degrees([0.0, 45.0, 22.5, 67.5]).expect("finite")
    }

    pub fn degrees(&self) -> [f64; 4] {
        [
            self.a.degrees(),
            self.a_prime.degrees(),
            self.b.degrees(),
            self.b_prime.degrees(),
        ]
    }

    pub fn settings(&self, slot: PairSlot) -> (Angle, Angle) {
        match slot {
            PairSlot::AB => (self.a, self.b),
            PairSlot::ABPrime => (self.a, self.b_prime),
            PairSlot::APrimeB => (self.a_prime, self.b),
            PairSlot::APrimeBPrime => (self.a_prime, self.b_prime),
        }
    }

    pub fn party1_angles(&self) -> [Angle; 2] {
        [self.a, self.a_prime]
    }

    pub fn party2_angles(&self) -> [Angle; 2] {
        [self.b, self.b_prime]
    }
}

impl FromStr for SettingsQuad {
    type Err = Error;

    /// `"a,a',b,b'"` in degrees.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Domain(format!("bad quad entry {p:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        let deg: [f64; 4] = parts.try_into().map_err(|v: Vec<f64>| {
            Error::Domain(format!("quad needs 4 angles, got {}", v.len()))
        })?;
        Self::from_degrees(deg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_quad() {
        let q: SettingsQuad = "0, 45, 22.5, 67.5".parse().unwrap();
        assert_eq!(q, SettingsQuad::standard());
        assert!("0,45,22.5".parse::<SettingsQuad>().is_err());
        assert!("0,45,x,1".parse::<SettingsQuad>().is_err());
    }

    #[test]
    fn sign_pattern() {
        assert_eq!(chsh_combination([1.0, 1.0, 1.0, 1.0]), 2.0);
        let signs: Vec<f64> = PairSlot::ALL.iter().map(|p| p.sign()).collect();
        assert_eq!(signs, vec![1.0, -1.0, 1.0, 1.0]);
        for p in PairSlot::ALL {
            assert_eq!(p.label().parse::<PairSlot>().unwrap(), p);
        }
    }
}
