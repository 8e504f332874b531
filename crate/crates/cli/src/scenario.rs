//! Scenario documents. Every document is an envelope
//! `{"schema": "<subcommand>/v1", "tolerances": {..}, "payload": {..}}`.

use std::collections::BTreeMap;

use qcgraft::extremal::GridDomain;
use qcgraft::graft::CompareOptions;
use qcgraft::interp::{CylinderEnd, UnivalentSeries};
use qcgraft::tracks::Switch;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope<T> {
    /// Checked against `<subcommand>/v1` before the payload is decoded.
    #[allow(dead_code)]
    pub schema: String,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub payload: T,
}

#[derive(Debug)]
pub struct SchemaError(pub String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "schema violation: {}", self.0)
    }
}

impl std::error::Error for SchemaError {}

pub fn parse<T: DeserializeOwned>(text: &str, subcommand: &str) -> Result<(Envelope<T>, serde_json::Value), SchemaError> {
    let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| SchemaError(e.to_string()))?;
    let expected = format!("{subcommand}/v1");
    match raw.get("schema").and_then(|s| s.as_str()) {
        Some(s) if s == expected => {}
        Some(s) => return Err(SchemaError(format!("expected schema {expected}, found {s}"))),
        None => return Err(SchemaError("missing schema tag".into())),
    }
    let env: Envelope<T> = serde_json::from_value(raw.clone()).map_err(|e| SchemaError(e.to_string()))?;
    Ok((env, raw))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// Leafwise straightening of a thin rectangle with vertical sides.
    Horocyclic { x0: f64, x1: f64, y_low: f64, y_high: f64 },
    Affine { m: [[f64; 2]; 2], t: [f64; 2], domain: [f64; 4] },
    SectorToRect { a: f64, b: f64, alpha: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilatationDoc {
    pub map: MapSpec,
    #[serde(default = "default_samples")]
    pub samples: [usize; 2],
    #[serde(default)]
    pub finite_differences: bool,
}

fn default_samples() -> [usize; 2] {
    [64, 64]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusDoc {
    pub domain: GridDomain,
    #[serde(default)]
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExciseDoc {
    pub domain: GridDomain,
    pub center: [f64; 2],
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackDoc {
    pub branches: usize,
    pub switches: Vec<Switch>,
    pub weights: Vec<f64>,
    pub t: f64,
    #[serde(default)]
    pub expected_k: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraftDoc {
    pub branches: usize,
    pub switches: Vec<Switch>,
    pub weights: Vec<f64>,
    pub t_values: Vec<f64>,
    #[serde(default)]
    pub options: Option<CompareOptions>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpDoc {
    pub ends: Vec<CylinderEnd>,
    pub t_values: Vec<f64>,
    /// Optional disk-level interpolation check.
    #[serde(default)]
    pub series: Option<UnivalentSeries>,
    #[serde(default)]
    pub eps: Option<f64>,
}
