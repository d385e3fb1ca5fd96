//! Scenario files: JSON descriptions of a world (explicit sets or a
//! generator), the velocity set, and the cost weights.
//!
//! Unknown keys warn rather than fail so files stay forward-compatible;
//! missing or malformed required keys name the offending key.

use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use ixg_core::geometry::{ConvexSet, GeomError, VelocitySet};
use ixg_core::trajopt::{CostWeights, TrajOptError};
use ixg_core::worlds;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("bad value for `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Weights(#[from] TrajOptError),
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub dimension: usize,
    pub sets: Vec<ConvexSet>,
    pub vset: VelocitySet,
    pub weights: CostWeights,
}

impl Scenario {
    /// Structural equality on the numeric content (labels ignored).
    pub fn structurally_equal(&self, other: &Scenario) -> bool {
        if self.dimension != other.dimension
            || self.sets.len() != other.sets.len()
            || self.vset != other.vset
        {
            return false;
        }
        if self.weights.a != other.weights.a || self.weights.b != other.weights.b {
            return false;
        }
        self.sets.iter().zip(&other.sets).all(|(a, b)| {
            a.halfspaces().len() == b.halfspaces().len()
                && a.halfspaces()
                    .iter()
                    .zip(b.halfspaces())
                    .all(|(x, y)| x.normal == y.normal && x.offset == y.offset)
        })
    }
}

pub fn load_scenario<P: AsRef<Path>>(path: P) -> Result<(Scenario, Vec<String>), ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

/// Parse a scenario document, returning the scenario and any warnings about
/// unknown keys.
pub fn parse_scenario(text: &str) -> Result<(Scenario, Vec<String>), ScenarioError> {
    let root: Value = serde_json::from_str(text)?;
    let obj = root
        .as_object()
        .ok_or_else(|| ScenarioError::BadValue {
            key: "<root>".into(),
            msg: "expected a JSON object".into(),
        })?;
    let mut warnings = Vec::new();
    for key in obj.keys() {
        if !matches!(
            key.as_str(),
            "dimension" | "sets" | "generator" | "velocity" | "weights"
        ) {
            warnings.push(format!("unknown key `{key}` ignored"));
        }
    }

    let dimension = obj
        .get("dimension")
        .ok_or(ScenarioError::MissingKey("dimension"))?
        .as_u64()
        .ok_or_else(|| ScenarioError::BadValue {
            key: "dimension".into(),
            msg: "expected a positive integer".into(),
        })? as usize;

    let sets = match (obj.get("sets"), obj.get("generator")) {
        (Some(_), Some(_)) => {
            return Err(ScenarioError::BadValue {
                key: "sets".into(),
                msg: "`sets` and `generator` are mutually exclusive".into(),
            })
        }
        (Some(sets), None) => parse_sets(sets, dimension)?,
        (None, Some(generator)) => generate_sets(generator, dimension, &mut warnings)?,
        (None, None) => return Err(ScenarioError::MissingKey("sets")),
    };

    let vset = match obj.get("velocity") {
        Some(v) => parse_velocity(v, dimension)?,
        None => VelocitySet::uniform(dimension, 1.0)?,
    };
    let weights = match obj.get("weights") {
        Some(w) => {
            let a = num_field(w, "weights.a", "a")?.unwrap_or(1.0);
            let b = num_field(w, "weights.b", "b")?.unwrap_or(0.0);
            CostWeights::new(a, b)?
        }
        None => CostWeights::new(1.0, 0.0)?,
    };

    Ok((
        Scenario {
            dimension,
            sets,
            vset,
            weights,
        },
        warnings,
    ))
}

fn num_field(v: &Value, path: &str, key: &str) -> Result<Option<f64>, ScenarioError> {
    match v.get(key) {
        None => Ok(None),
        Some(x) => x.as_f64().map(Some).ok_or_else(|| ScenarioError::BadValue {
            key: path.into(),
            msg: "expected a number".into(),
        }),
    }
}

fn parse_vector(v: &Value, key: &str, dim: usize) -> Result<Vec<f64>, ScenarioError> {
    let arr = v.as_array().ok_or_else(|| ScenarioError::BadValue {
        key: key.into(),
        msg: "expected an array of numbers".into(),
    })?;
    let out: Option<Vec<f64>> = arr.iter().map(Value::as_f64).collect();
    let out = out.ok_or_else(|| ScenarioError::BadValue {
        key: key.into(),
        msg: "expected numbers".into(),
    })?;
    if out.len() != dim {
        return Err(ScenarioError::BadValue {
            key: key.into(),
            msg: format!("expected {dim} entries, got {}", out.len()),
        });
    }
    Ok(out)
}

fn parse_sets(v: &Value, dim: usize) -> Result<Vec<ConvexSet>, ScenarioError> {
    let arr = v.as_array().ok_or_else(|| ScenarioError::BadValue {
        key: "sets".into(),
        msg: "expected an array".into(),
    })?;
    let mut out = Vec::with_capacity(arr.len());
    for (i, item) in arr.iter().enumerate() {
        let key = format!("sets[{i}]");
        if let Some(b) = item.get("box") {
            let lo = parse_vector(
                b.get("lo").ok_or_else(|| ScenarioError::BadValue {
                    key: format!("{key}.box.lo"),
                    msg: "missing".into(),
                })?,
                &format!("{key}.box.lo"),
                dim,
            )?;
            let hi = parse_vector(
                b.get("hi").ok_or_else(|| ScenarioError::BadValue {
                    key: format!("{key}.box.hi"),
                    msg: "missing".into(),
                })?,
                &format!("{key}.box.hi"),
                dim,
            )?;
            out.push(ConvexSet::from_box(&lo, &hi)?);
        } else if let (Some(normals), Some(offsets)) = (item.get("normals"), item.get("offsets")) {
            let narr = normals.as_array().ok_or_else(|| ScenarioError::BadValue {
                key: format!("{key}.normals"),
                msg: "expected array of vectors".into(),
            })?;
            let oarr = offsets.as_array().ok_or_else(|| ScenarioError::BadValue {
                key: format!("{key}.offsets"),
                msg: "expected array of numbers".into(),
            })?;
            if narr.len() != oarr.len() {
                return Err(ScenarioError::BadValue {
                    key,
                    msg: "normals and offsets must have equal length".into(),
                });
            }
            let mut hs = Vec::with_capacity(narr.len());
            for (j, (n, o)) in narr.iter().zip(oarr).enumerate() {
                let normal = parse_vector(n, &format!("{key}.normals[{j}]"), dim)?;
                let offset = o.as_f64().ok_or_else(|| ScenarioError::BadValue {
                    key: format!("{key}.offsets[{j}]"),
                    msg: "expected a number".into(),
                })?;
                hs.push((normal, offset));
            }
            out.push(ConvexSet::new(dim, hs, None)?);
        } else {
            return Err(ScenarioError::BadValue {
                key,
                msg: "expected either `box` or `normals`+`offsets`".into(),
            });
        }
    }
    if out.is_empty() {
        return Err(ScenarioError::BadValue {
            key: "sets".into(),
            msg: "at least one set required".into(),
        });
    }
    Ok(out)
}

fn generate_sets(
    v: &Value,
    dim: usize,
    warnings: &mut Vec<String>,
) -> Result<Vec<ConvexSet>, ScenarioError> {
    if let Some(m) = v.get("maze") {
        if dim != 2 {
            return Err(ScenarioError::BadValue {
                key: "generator.maze".into(),
                msg: "maze scenarios are 2-dimensional".into(),
            });
        }
        let rows = int_field(m, "generator.maze.rows", "rows")?;
        let cols = int_field(m, "generator.maze.cols", "cols")?;
        let seed = int_field(m, "generator.maze.seed", "seed")? as u64;
        return Ok(worlds::generate_maze(rows, cols, seed));
    }
    if let Some(b) = v.get("boxworld") {
        let lo = parse_vector(
            b.get("lo").ok_or(ScenarioError::MissingKey("generator.boxworld.lo"))?,
            "generator.boxworld.lo",
            dim,
        )?;
        let hi = parse_vector(
            b.get("hi").ok_or(ScenarioError::MissingKey("generator.boxworld.hi"))?,
            "generator.boxworld.hi",
            dim,
        )?;
        let count = int_field(b, "generator.boxworld.count", "count")?;
        let seed = int_field(b, "generator.boxworld.seed", "seed")? as u64;
        return Ok(worlds::generate_box_world(&lo, &hi, count, seed));
    }
    warnings.push("generator object has no recognized kind".into());
    Err(ScenarioError::BadValue {
        key: "generator".into(),
        msg: "expected `maze` or `boxworld`".into(),
    })
}

fn int_field(v: &Value, path: &str, key: &str) -> Result<usize, ScenarioError> {
    v.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| ScenarioError::BadValue {
            key: path.into(),
            msg: "expected a nonnegative integer".into(),
        })
}

fn parse_velocity(v: &Value, dim: usize) -> Result<VelocitySet, ScenarioError> {
    let vmax = v.get("vmax").ok_or(ScenarioError::MissingKey("velocity.vmax"))?;
    if let Some(x) = vmax.as_f64() {
        return Ok(VelocitySet::uniform(dim, x)?);
    }
    let vec = parse_vector(vmax, "velocity.vmax", dim)?;
    Ok(VelocitySet::per_axis(vec)?)
}

/// Serialize with materialized sets (generators are expanded on load, so a
/// saved file reloads to an identical structure).
pub fn save_scenario<P: AsRef<Path>>(s: &Scenario, path: P) -> Result<(), ScenarioError> {
    let text = scenario_to_json(s);
    std::fs::write(path, text)?;
    Ok(())
}

pub fn scenario_to_json(s: &Scenario) -> String {
    let sets: Vec<Value> = s
        .sets
        .iter()
        .map(|set| {
            let normals: Vec<Value> = set
                .halfspaces()
                .iter()
                .map(|h| Value::from(h.normal.clone()))
                .collect();
            let offsets: Vec<Value> = set
                .halfspaces()
                .iter()
                .map(|h| Value::from(h.offset))
                .collect();
            serde_json::json!({ "normals": normals, "offsets": offsets })
        })
        .collect();
    let doc = serde_json::json!({
        "dimension": s.dimension,
        "sets": sets,
        "velocity": { "vmax": s.vset.vmax() },
        "weights": { "a": s.weights.a, "b": s.weights.b },
    });
    serde_json::to_string_pretty(&doc).expect("scenario serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maze_generator_materializes() {
        let text = r#"{
            "dimension": 2,
            "generator": { "maze": { "rows": 3, "cols": 4, "seed": 7 } },
            "velocity": { "vmax": 1.5 },
            "weights": { "a": 1.0, "b": 0.25 }
        }"#;
        let (s, warnings) = parse_scenario(text).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(s.sets.len(), 12);
        assert_eq!(s.weights.b, 0.25);
    }

    #[test]
    fn explicit_two_boxes() {
        let text = r#"{
            "dimension": 2,
            "sets": [
                { "box": { "lo": [0, 0], "hi": [1, 1] } },
                { "box": { "lo": [0.5, 0], "hi": [2, 1] } }
            ]
        }"#;
        let (s, _) = parse_scenario(text).unwrap();
        assert_eq!(s.sets.len(), 2);
        let g = ixg_core::graph::GcsGraph::build(s.sets, 1e-9).unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn missing_dimension_names_the_key() {
        let text = r#"{ "sets": [] }"#;
        match parse_scenario(text) {
            Err(ScenarioError::MissingKey(k)) => assert_eq!(k, "dimension"),
            other => panic!("expected MissingKey, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_warn_not_error() {
        let text = r#"{
            "dimension": 2,
            "sets": [ { "box": { "lo": [0, 0], "hi": [1, 1] } } ],
            "frobnicate": true
        }"#;
        let (_, warnings) = parse_scenario(text).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("frobnicate"));
    }

    #[test]
    fn save_load_round_trip_is_stable() {
        let text = r#"{
            "dimension": 2,
            "generator": { "maze": { "rows": 2, "cols": 2, "seed": 3 } },
            "velocity": { "vmax": [1.0, 2.0] },
            "weights": { "a": 0.5, "b": 0.5 }
        }"#;
        let (s, _) = parse_scenario(text).unwrap();
        let json = scenario_to_json(&s);
        let (s2, _) = parse_scenario(&json).unwrap();
        assert!(s.structurally_equal(&s2));
        let json2 = scenario_to_json(&s2);
        assert_eq!(json, json2);
    }

    #[test]
    fn velocity_scalar_or_vector() {
        let base = r#"{
            "dimension": 2,
            "sets": [ { "box": { "lo": [0, 0], "hi": [1, 1] } } ],
            "velocity": { "vmax": VAL }
        }"#;
        let (s, _) = parse_scenario(&base.replace("VAL", "2.0")).unwrap();
        assert_eq!(s.vset.vmax(), &[2.0, 2.0]);
        let (s, _) = parse_scenario(&base.replace("VAL", "[1.0, 3.0]")).unwrap();
        assert_eq!(s.vset.vmax(), &[1.0, 3.0]);
    }
}
