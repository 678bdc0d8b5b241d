use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhv::{Angle, HiddenVariableSpace, ResponseFunction, SlhvModel};

/// λ-grid resolution for instantiated family members.
pub const DEFAULT_FAMILY_GRID: usize = 720;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    /// Party k reports `sign cos 2(setting − λ)` and is detected only when
    /// `|cos 2(setting − λ)| ≥ θ_k`.
    #[serde(rename = "threshold-detection")]
    ThresholdDetection,
    /// `p₀ = c₀ + c₁ cos 2(setting − λ)` (clipped to `[0, 1]`); detected
    /// outcomes split by a sharpened Malus law `½(1 ± sgn c·|c|^(1−κ))`.
    #[serde(rename = "modulated-p0")]
    ModulatedP0,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::ThresholdDetection => "threshold-detection",
            FamilyKind::ModulatedP0 => "modulated-p0",
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            FamilyKind::ThresholdDetection => &["theta1", "theta2"],
            FamilyKind::ModulatedP0 => &["c0", "c1", "sharpness"],
        }
    }

    /// Full box bounds for each parameter.
    pub fn default_bounds(self) -> Vec<(f64, f64)> {
        match self {
            FamilyKind::ThresholdDetection => vec![(0.0, 0.999), (0.0, 0.999)],
            FamilyKind::ModulatedP0 => vec![(0.0, 1.0), (-1.0, 1.0), (0.0, 1.0)],
        }
    }

    /// The parameter that makes non-detection depend on the setting, and the
    /// value at which it does not.
    pub fn setting_dependence(self) -> &'static [(&'static str, f64)] {
        match self {
            FamilyKind::ThresholdDetection => &[("theta1", 0.0), ("theta2", 0.0)],
            FamilyKind::ModulatedP0 => &[("c1", 0.0)],
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "threshold-detection" | "threshold" => Ok(FamilyKind::ThresholdDetection),
            "modulated-p0" | "modulated" => Ok(FamilyKind::ModulatedP0),
            _ => Err(Error::Domain(format!("unknown family {s:?}"))),
        }
    }
}

/// A parametric family with (possibly frozen) box bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryFamily {
    pub kind: FamilyKind,
    pub bounds: Vec<(f64, f64)>,
    pub grid: usize,
}

pub struct Instance {
    pub model: SlhvModel,
    /// Whether clipping into the probability simplex changed any value.
    pub projection_active: bool,
}

fn kernel(a: Angle, lambda: f64) -> f64 {
    (2.0 * (a.radians() - lambda)).cos()
}

impl AdversaryFamily {
    pub fn new(kind: FamilyKind) -> Self {
        Self {
            kind,
            bounds: kind.default_bounds(),
            grid: DEFAULT_FAMILY_GRID,
        }
    }

    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid;
        self
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.kind
            .parameter_names()
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| Error::Domain(format!("{} has no parameter {name:?}", self.kind)))
    }

    /// Pins one parameter to a value inside its default range.
    pub fn freeze(mut self, name: &str, value: f64) -> Result<Self> {
        let i = self.position(name)?;
        let (lo, hi) = self.kind.default_bounds()[i];
        if !(lo..=hi).contains(&value) {
            return Err(Error::Domain(format!(
                "{name} = {value} outside [{lo}, {hi}]"
            )));
        }
        self.bounds[i] = (value, value);
        Ok(self)
    }

    /// Restricts the family to setting-independent non-detection.
    pub fn solution1_slice(self) -> Self {
        let kind = self.kind;
        kind.setting_dependence()
            .iter()
            .try_fold(self, |fam, (name, v)| fam.freeze(name, *v))
            .expect("slice values lie in the default box")
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn check(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.dimension() {
            return Err(Error::Domain(format!(
                "{} takes {} parameters, got {}",
                self.kind,
                self.dimension(),
                params.len()
            )));
        }
        for ((p, (lo, hi)), name) in params
            .iter()
            .zip(&self.bounds)
            .zip(self.kind.parameter_names())
        {
            if !(*lo..=*hi).contains(p) {
                return Err(Error::Domain(format!(
                    "{name} = {p} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn instantiate(&self, params: &[f64]) -> Result<Instance> {
        self.check(params)?;
        let space = HiddenVariableSpace::uniform_grid(self.grid)?;
        match self.kind {
            FamilyKind::ThresholdDetection => {
                let party = |theta: f64| {
                    ResponseFunction::formula(move |a, l| {
                        let c = kernel(a, l);
                        if c.abs() < theta {
                            [0.0, 0.0, 1.0]
                        } else if c >= 0.0 {
                            [1.0, 0.0, 0.0]
                        } else {
                            [0.0, 1.0, 0.0]
                        }
                    })
                };
                Ok(Instance {
                    model: SlhvModel::new(space, party(params[0]), party(params[1]))?,
                    projection_active: false,
                })
            }
            FamilyKind::ModulatedP0 => {
                let (c0, c1, sharp) = (params[0], params[1], params[2]);
                let response = move || {
                    ResponseFunction::formula(move |a, l| {
                        let c = kernel(a, l);
                        let p0 = (c0 + c1 * c).clamp(0.0, 1.0);
                        let g = if c == 0.0 {
                            0.0
                        } else {
                            c.signum() * c.abs().powf(1.0 - sharp)
                        };
                        let plus = (1.0 - p0) * 0.5 * (1.0 + g);
                        let minus = (1.0 - p0) - plus;
                        [plus, minus, p0]
                    })
                };
                Ok(Instance {
                    model: SlhvModel::new(space, response(), response())?,
                    projection_active: c0 + c1.abs() > 1.0 || c0 - c1.abs() < 0.0,
                })
            }
        }
    }
}
