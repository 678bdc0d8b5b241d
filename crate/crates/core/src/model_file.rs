//! JSON model files.
//!
//! Two kinds are accepted. A tabulated model lists λ weights and, per party
//! and setting (degrees, as object keys), one `[p+, p-, p0]` triple per λ:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "kind": "tabulated",
//!   "lambda_weights": [0.5, 0.5],
//!   "responses": {
//!     "1": { "0": [[1, 0, 0], [0, 1, 0]], "45": [[0.5, 0.5, 0], [0.5, 0.5, 0]] },
//!     "2": { "22.5": [[1, 0, 0], [0, 1, 0]], "67.5": [[0, 1, 0], [1, 0, 0]] }
//!   }
//! }
//! ```
//!
//! A family model names an adversary family and its parameters:
//!
//! ```json
//! { "schema_version": 1, "kind": "family", "family": "threshold-detection",
//!   "parameters": [0.9, 0.9], "grid": 720 }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryFamily, FamilyKind, DEFAULT_FAMILY_GRID};
use crate::error::{Error, Result};
use crate::lhv::{Angle, HiddenVariableSpace, Party, ProbTriple, ResponseFunction, SlhvModel};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Tabulated {
        schema_version: u32,
        lambda_weights: Vec<f64>,
        /// Party (`"1"`, `"2"`) → setting in degrees → triples in λ order.
        responses: BTreeMap<String, BTreeMap<String, Vec<[f64; 3]>>>,
    },
    Family {
        schema_version: u32,
        family: FamilyKind,
        parameters: Vec<f64>,
        #[serde(default = "default_grid")]
        grid: usize,
    },
}

fn default_grid() -> usize {
    DEFAULT_FAMILY_GRID
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn tabulated_response(
    party: Party,
    table: &BTreeMap<String, Vec<[f64; 3]>>,
) -> Result<ResponseFunction> {
    let mut entries: Vec<(Angle, Vec<ProbTriple>)> = Vec::with_capacity(table.len());
    for (key, rows) in table {
        let deg: f64 = key
            .trim()
            .parse()
            .map_err(|_| schema(format!("responses.{party}: setting {key:?} is not a number")))?;
        let angle = Angle::from_degrees(deg)
            .map_err(|_| schema(format!("responses.{party}: setting {key:?} is not finite")))?;
        if entries.iter().any(|(a, _)| a.distance(angle) < 1e-9) {
            return Err(schema(format!(
                "responses.{party}: setting {key:?} duplicates another entry modulo 180"
            )));
        }
        let triples = rows
            .iter()
            .enumerate()
            .map(|(i, t)| {
                ProbTriple::new(t[0], t[1], t[2]).map_err(|e| {
                    schema(format!("responses.{party}.{key}[{i}]: {e}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        entries.push((angle, triples));
    }
    Ok(ResponseFunction::tabulated(entries))
}

impl ModelSpec {
    pub fn schema_version(&self) -> u32 {
        match self {
            ModelSpec::Tabulated { schema_version, .. } | ModelSpec::Family { schema_version, .. } => {
                *schema_version
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
        if spec.schema_version() != MODEL_SCHEMA_VERSION {
            return Err(schema(format!(
                "schema_version {} unsupported (expected {MODEL_SCHEMA_VERSION})",
                spec.schema_version()
            )));
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| schema(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Schema(m) => schema(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| schema(format!("{}: {e}", path.display())))
    }

    /// Family model file for an adversary search result.
    pub fn family(family: &AdversaryFamily, parameters: &[f64]) -> Self {
        ModelSpec::Family {
            schema_version: MODEL_SCHEMA_VERSION,
            family: family.kind,
            parameters: parameters.to_vec(),
            grid: family.grid,
        }
    }

    /// Tabulates `model` at the given settings.
    pub fn tabulate(model: &SlhvModel, angles1: &[Angle], angles2: &[Angle]) -> Result<Self> {
        let mut responses = BTreeMap::new();
        for (party, angles) in [(Party::One, angles1), (Party::Two, angles2)] {
            let mut table = BTreeMap::new();
            for &a in angles {
                let rows = model
                    .response_row(party, a)?
                    .iter()
                    .map(ProbTriple::as_array)
                    .collect();
                table.insert(format!("{}", a.degrees()), rows);
            }
            responses.insert(party.number().to_string(), table);
        }
        Ok(ModelSpec::Tabulated {
            schema_version: MODEL_SCHEMA_VERSION,
            lambda_weights: model.space().weights().to_vec(),
            responses,
        })
    }

    pub fn build(&self) -> Result<SlhvModel> {
        match self {
            ModelSpec::Tabulated {
                lambda_weights,
                responses,
                ..
            } => {
                let space = HiddenVariableSpace::from_weights(lambda_weights.clone())
                    .map_err(|e| schema(format!("lambda_weights: {e}")))?;
                if let Some(k) = responses.keys().find(|k| *k != "1" && *k != "2") {
                    return Err(schema(format!("responses: unknown party {k:?}")));
                }
                let table = |p: Party| {
                    responses
                        .get(&p.number().to_string())
                        .ok_or_else(|| schema(format!("responses: party \"{p}\" missing")))
                        .and_then(|t| tabulated_response(p, t))
                };
                SlhvModel::new(space, table(Party::One)?, table(Party::Two)?)
            }
            ModelSpec::Family {
                family,
                parameters,
                grid,
                ..
            } => {
                if *grid == 0 {
                    return Err(schema("grid must be positive"));
                }
                let fam = AdversaryFamily::new(*family).with_grid(*grid);
                Ok(fam
                    .instantiate(parameters)
                    .map_err(|e| schema(format!("parameters: {e}")))?
                    .model)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{compute_u_eff, EffectiveCorrelationMode};
    use crate::quad::SettingsQuad;

    const DOC_EXAMPLE: &str = r#"{
      "schema_version": 1,
      "kind": "tabulated",
      "lambda_weights": [0.5, 0.5],
      "responses": {
        "1": { "0": [[1, 0, 0], [0, 1, 0]], "45": [[0.5, 0.5, 0], [0.5, 0.5, 0]] },
        "2": { "22.5": [[1, 0, 0], [0, 1, 0]], "67.5": [[0, 1, 0], [1, 0, 0]] }
      }
    }"#;

    #[test]
    fn doc_example_loads() {
        let m = ModelSpec::parse(DOC_EXAMPLE).unwrap().build().unwrap();
        let rep = compute_u_eff(&m, &SettingsQuad::standard(), EffectiveCorrelationMode::SolutionI).unwrap();
        assert!(rep.u_eff.abs() <= 2.0 + 1e-12);
    }

    #[test]
    fn round_trip_through_tabulation() {
        let spec = ModelSpec::parse(DOC_EXAMPLE).unwrap();
        let m = spec.build().unwrap();
        let q = SettingsQuad::standard();
        let again = ModelSpec::tabulate(&m, &q.party1_angles(), &q.party2_angles()).unwrap();
        assert_eq!(again, spec);
        let back = ModelSpec::parse(&again.to_json()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn family_round_trip() {
        let fam = AdversaryFamily::new(FamilyKind::ThresholdDetection).with_grid(90);
        let spec = ModelSpec::family(&fam, &[0.5, 0.25]);
        let text = spec.to_json();
        assert!(text.contains("\"threshold-detection\""));
        assert_eq!(ModelSpec::parse(&text).unwrap(), spec);
        assert_eq!(spec.build().unwrap().space().len(), 90);
    }

    #[test]
    fn schema_errors_are_named() {
        let msg = |t: &str| match ModelSpec::parse(t).and_then(|s| s.build()) {
            Err(Error::Schema(m)) => m,
            other => panic!("{other:?}"),
        };
        assert!(msg(&DOC_EXAMPLE.replace("\"schema_version\": 1", "\"schema_version\": 7"))
            .contains("schema_version"));
        assert!(msg(&DOC_EXAMPLE.replace("[0.5, 0.5],", "[0.5, 0.4],")).contains("lambda_weights"));
        assert!(msg(&DOC_EXAMPLE.replace("[[1, 0, 0], [0, 1, 0]], \"45\"", "[[1, 0, 0.5], [0, 1, 0]], \"45\""))
            .contains("responses.1.0[0]"));
        assert!(msg(&DOC_EXAMPLE.replace("\"22.5\"", "\"abc\"")).contains("abc"));
        assert!(msg(&DOC_EXAMPLE.replace("\"kind\": \"tabulated\",", "")).contains("kind"));
        assert!(msg(r#"{"schema_version":1,"kind":"family","family":"nope","parameters":[]}"#)
            .contains("nope"));
        assert!(msg(r#"{"schema_version":1,"kind":"family","family":"modulated-p0","parameters":[0.5]}"#)
            .contains("parameters"));
        let short = DOC_EXAMPLE.replace("[[1, 0, 0], [0, 1, 0]], \"45\"", "[[1, 0, 0]], \"45\"");
        assert!(matches!(
            ModelSpec::parse(&short).unwrap().build(),
            Err(Error::Schema(_))
        ));
    }
}
