//! Factor table persistence.
//!
//! ```json
//! {
//!   "channels": ["B1", "B2"],
//!   "lag_order": 1,
//!   "threshold": 0.1,
//!   "tail_window": 5000,
//!   "structural": [[0, 0.3], [0, 0]],
//!   "lagged": [[[0.5, 0], [0, 0.4]]],
//!   "preprocessing": {"means": [0, 0], "stds": [1, 1]}
//! }
//! ```
//!
//! Matrices are row = effect, column = cause; `lagged[d-1]` holds lag `d`.
//! `threshold`, `tail_window` and `preprocessing` describe how the table was
//! estimated and are `null` for hand-written ground truth.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::CausalFactors;
use crate::pipeline::{EstimationResult, Preprocessing};

#[derive(Debug, Clone, PartialEq)]
pub struct FactorsDocument {
    pub factors: CausalFactors,
    pub threshold: Option<f64>,
    pub tail_window: Option<usize>,
    pub preprocessing: Option<Preprocessing>,
}

impl FactorsDocument {
    pub fn bare(factors: CausalFactors) -> Self {
        FactorsDocument {
            factors,
            threshold: None,
            tail_window: None,
            preprocessing: None,
        }
    }

    pub fn from_result(result: &EstimationResult) -> Self {
        FactorsDocument {
            factors: result.factors.clone(),
            threshold: Some(result.config.threshold),
            tail_window: Some(result.tail_window_used),
            preprocessing: Some(result.preprocessing.clone()),
        }
    }
}

fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn factors_to_json(doc: &FactorsDocument) -> String {
    let f = &doc.factors;
    let value = json!({
        "channels": f.channel_names(),
        "lag_order": f.lag_order(),
        "threshold": doc.threshold,
        "tail_window": doc.tail_window,
        "structural": matrix_json(f.structural()),
        "lagged": f.lagged().iter().map(matrix_json).collect::<Vec<_>>(),
        "preprocessing": doc.preprocessing.as_ref().map(|p| json!({"means": p.means, "stds": p.stds})),
    });
    let mut s = serde_json::to_string_pretty(&value).expect("serializable");
    s.push('\n');
    s
}

fn violation(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::SchemaViolation {
        path: path.into(),
        reason: reason.into(),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| violation(format!("/{key}"), "missing"))
}

fn optional<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.get(key).filter(|v| !v.is_null())
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| violation(path, "expected a number"))
}

fn numbers(v: &Value, path: &str, len: usize) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| violation(path, "expected an array"))?;
    if arr.len() != len {
        return Err(violation(path, format!("expected {len} entries, found {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}/{i}")))
        .collect()
}

fn matrix(v: &Value, path: &str, g: usize) -> Result<DMatrix<f64>> {
    let rows = v
        .as_array()
        .ok_or_else(|| violation(path, "expected an array of rows"))?;
    if rows.len() != g {
        return Err(violation(path, format!("expected {g} rows, found {}", rows.len())));
    }
    let mut m = DMatrix::zeros(g, g);
    for (i, row) in rows.iter().enumerate() {
        let vals = numbers(row, &format!("{path}/{i}"), g)?;
        for (j, x) in vals.into_iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    Ok(m)
}

pub fn factors_from_json(text: &str) -> Result<FactorsDocument> {
    let root: Value = serde_json::from_str(text).map_err(|e| violation("", e.to_string()))?;
    let obj = root.as_object().ok_or_else(|| violation("", "expected an object"))?;

    let channels: Vec<String> = field(obj, "channels")?
        .as_array()
        .ok_or_else(|| violation("/channels", "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.as_str()
                .map(str::to_string)
                .ok_or_else(|| violation(format!("/channels/{i}"), "expected a string"))
        })
        .collect::<Result<_>>()?;
    let g = channels.len();
    let structural = matrix(field(obj, "structural")?, "/structural", g)?;

    let lagged_json = field(obj, "lagged")?
        .as_array()
        .ok_or_else(|| violation("/lagged", "expected an array of matrices"))?;
    let lagged = lagged_json
        .iter()
        .enumerate()
        .map(|(d, m)| matrix(m, &format!("/lagged/{d}"), g))
        .collect::<Result<Vec<_>>>()?;
    if let Some(d) = optional(obj, "lag_order") {
        let d = d
            .as_u64()
            .ok_or_else(|| violation("/lag_order", "expected a positive integer"))?;
        if d as usize != lagged.len() {
            return Err(violation(
                "/lag_order",
                format!("{d} does not match {} lagged matrices", lagged.len()),
            ));
        }
    }

    let threshold = optional(obj, "threshold")
        .map(|v| number(v, "/threshold"))
        .transpose()?;
    let tail_window = optional(obj, "tail_window")
        .map(|v| {
            v.as_u64()
                .map(|w| w as usize)
                .ok_or_else(|| violation("/tail_window", "expected a non-negative integer"))
        })
        .transpose()?;
    let preprocessing = optional(obj, "preprocessing")
        .map(|p| {
            let p = p
                .as_object()
                .ok_or_else(|| violation("/preprocessing", "expected an object"))?;
            Ok::<_, Error>(Preprocessing {
                means: numbers(
                    field(p, "means").map_err(|_| violation("/preprocessing/means", "missing"))?,
                    "/preprocessing/means",
                    g,
                )?,
                stds: numbers(
                    field(p, "stds").map_err(|_| violation("/preprocessing/stds", "missing"))?,
                    "/preprocessing/stds",
                    g,
                )?,
            })
        })
        .transpose()?;

    let factors = CausalFactors::new(structural, lagged, channels)?;
    Ok(FactorsDocument {
        factors,
        threshold,
        tail_window,
        preprocessing,
    })
}

pub fn write_factors_json(result: &EstimationResult, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, factors_to_json(&FactorsDocument::from_result(result)))?;
    Ok(())
}

pub fn write_bare_factors_json(factors: &CausalFactors, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, factors_to_json(&FactorsDocument::bare(factors.clone())))?;
    Ok(())
}

pub fn read_factors_document(path: impl AsRef<Path>) -> Result<FactorsDocument> {
    factors_from_json(&fs::read_to_string(path)?)
}

pub fn read_factors_json(path: impl AsRef<Path>) -> Result<CausalFactors> {
    Ok(read_factors_document(path)?.factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[allow(clippy::approx_constant)]
    fn sample() -> CausalFactors {
        CausalFactors::from_rows(
            &[vec![0.0, 0.1408], vec![-0.23, 0.0]],
            &[
                vec![vec![0.3926, 1.0 / 3.0], vec![0.0, -0.5922]],
                vec![vec![1e-300, 0.0], vec![0.0, 0.1]],
            ],
        )
        .unwrap()
    }

    #[test]
    fn exact_round_trip_with_two_lags() {
        let doc = FactorsDocument {
            factors: sample(),
            threshold: Some(0.1),
            tail_window: Some(5000),
            preprocessing: Some(Preprocessing {
                means: vec![0.01, -3.0],
                stds: vec![0.2, 7.0 / 9.0],
            }),
        };
        let text = factors_to_json(&doc);
        let back = factors_from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.factors.lagged()[1][(0, 0)], 1e-300);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["lagged"].as_array().unwrap().len(), 2);
        assert_eq!(v["lag_order"], 2);
    }

    #[test]
    fn bare_document_has_nulls() {
        let text = factors_to_json(&FactorsDocument::bare(sample()));
        let v: Value = serde_json::from_str(&text).unwrap();
        assert!(v["threshold"].is_null());
        let back = factors_from_json(&text).unwrap();
        assert_eq!(back.preprocessing, None);
        assert_eq!(back.factors, sample());
    }

    fn path_of(text: &str) -> String {
        match factors_from_json(text) {
            Err(Error::SchemaViolation { path, .. }) => path,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_violations_carry_paths() {
        assert_eq!(path_of(r#"{"channels":["a"],"lagged":[]}"#), "/structural");
        assert_eq!(path_of(r#"{"channels":["a"],"structural":[[0]]}"#), "/lagged");
        assert_eq!(path_of(r#"{"structural":[[0]],"lagged":[]}"#), "/channels");
        assert_eq!(
            path_of(r#"{"channels":["a","b"],"structural":[[0,1],[0]],"lagged":[]}"#),
            "/structural/1"
        );
        assert_eq!(
            path_of(r#"{"channels":["a"],"structural":[[0]],"lagged":[[["x"]]]}"#),
            "/lagged/0/0/0"
        );
        assert_eq!(
            path_of(r#"{"channels":["a"],"lag_order":2,"structural":[[0]],"lagged":[[[0.5]]]}"#),
            "/lag_order"
        );
        assert_eq!(path_of("[1,2]"), "");
        assert_eq!(path_of("{"), "");
    }

    #[test]
    fn model_rules_still_apply() {
        let text = r#"{"channels":["a","b"],"structural":[[0.2,0],[0,0]],"lagged":[[[0,0],[0,0]]]}"#;
        assert!(matches!(
            factors_from_json(text),
            Err(Error::SelfStructuralCausality { channel: 0 })
        ));
    }
}
