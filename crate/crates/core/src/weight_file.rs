//! JSON weight files: a builtin by name and parameters, or explicit samples.
//!
//! ```json
//! {"dim": 1, "kind": "builtin", "name": "constant", "params": {"value": [[[1, 0]]]}}
//! {"dim": 1, "kind": "grid", "n_points": 8, "samples": [[[[1, 0]]], ...]}
//! ```
//!
//! Grid files may carry `sample_offset`, the sampling offset in units of the
//! grid step (default 0).

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::builtin::{matrix_from_json, matrix_to_json, BuiltinSpec};
use crate::circle::CircleGrid;
use crate::error::{Error, Result};
use crate::weight::{MatrixWeight, Provenance};

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::InvalidParams(format!("weight file is missing `{key}`")))
}

fn usize_field(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    field(obj, key)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| Error::InvalidParams(format!("`{key}` must be a nonnegative integer")))
}

/// Parse weight-file text. `grid` is the sampling grid for builtins; grid
/// files carry their own.
pub fn parse_weight_str(text: &str, grid: CircleGrid) -> Result<MatrixWeight> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::InvalidParams("weight file must hold a JSON object".into()))?;
    let dim = usize_field(obj, "dim")?;
    if dim == 0 {
        return Err(Error::InvalidParams("`dim` must be positive".into()));
    }
    let kind = field(obj, "kind")?
        .as_str()
        .ok_or_else(|| Error::InvalidParams("`kind` must be a string".into()))?;
    match kind {
        "builtin" => {
            let name = field(obj, "name")?
                .as_str()
                .ok_or_else(|| Error::InvalidParams("`name` must be a string".into()))?;
            let empty = json!({});
            let params = obj.get("params").unwrap_or(&empty);
            let spec = BuiltinSpec::from_json(name, params)?;
            if spec.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "file declares dim {dim}, builtin `{name}` has dim {}",
                    spec.dim()
                )));
            }
            MatrixWeight::from_builtin(spec, grid)
        }
        "grid" => {
            let n_points = usize_field(obj, "n_points")?;
            let grid = CircleGrid::new(n_points)?;
            let samples = field(obj, "samples")?
                .as_array()
                .ok_or_else(|| Error::InvalidParams("`samples` must be an array".into()))?;
            if samples.len() != n_points {
                return Err(Error::DimensionMismatch(format!(
                    "`samples` has {} entries, `n_points` is {n_points}",
                    samples.len()
                )));
            }
            let mats = samples
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    let m = matrix_from_json(s, &format!("sample {j}"))?;
                    if m.nrows() != dim {
                        return Err(Error::DimensionMismatch(format!(
                            "sample {j} is {}×{}, expected {dim}×{dim}",
                            m.nrows(),
                            m.ncols()
                        )));
                    }
                    Ok(m)
                })
                .collect::<Result<Vec<_>>>()?;
            let offset = match obj.get("sample_offset") {
                None => 0.0,
                Some(v) => v
                    .as_f64()
                    .ok_or_else(|| Error::InvalidParams("`sample_offset` must be a number".into()))?,
            };
            MatrixWeight::from_samples(grid, mats, offset, Provenance::UserGrid)
        }
        other => Err(Error::InvalidParams(format!("unknown kind `{other}`"))),
    }
}

pub fn parse_weight_file(path: &Path, grid: CircleGrid) -> Result<MatrixWeight> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_weight_str(&text, grid)
}

/// The weight as a grid file.
pub fn weight_to_json(weight: &MatrixWeight) -> Value {
    let mut obj = Map::new();
    obj.insert("dim".into(), json!(weight.dim()));
    obj.insert("kind".into(), json!("grid"));
    obj.insert("n_points".into(), json!(weight.n_points()));
    if weight.offset_steps() != 0.0 {
        obj.insert("sample_offset".into(), json!(weight.offset_steps()));
    }
    obj.insert(
        "samples".into(),
        Value::Array(weight.samples().iter().map(matrix_to_json).collect()),
    );
    Value::Object(obj)
}

pub fn export_weight(weight: &MatrixWeight) -> String {
    serde_json::to_string(&weight_to_json(weight)).expect("weight JSON serializes")
}
