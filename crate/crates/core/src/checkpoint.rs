//! Text checkpoints of model parameters.
//!
//! ```text
//! QUARK-CHECKPOINT 1
//! config window 15
//! …
//! tensor basis.1.1 15 15
//! <rows·cols floats, row-major, space separated>
//! ```
//!
//! Floats use the shortest representation that parses back to the same
//! bits, so save → load → save is byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::MODEL_KEYS;
use crate::error::{QuarkError, Result};
use crate::model::{ModelConfig, ModelParams};
use crate::numerics::{Matrix, Parameter};

pub const MAGIC: &str = "QUARK-CHECKPOINT";
pub const VERSION: u32 = 1;

pub fn to_text(config: &ModelConfig, params: &ModelParams) -> String {
    let mut out = format!("{MAGIC} {VERSION}\n");
    for (k, v) in config.pairs() {
        let _ = writeln!(out, "config {k} {v}");
    }
    for p in params.parameters() {
        let (r, c) = p.value().dim();
        let _ = writeln!(out, "tensor {} {r} {c}", p.name);
        let mut first = true;
        for v in p.value().iter() {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn from_text(text: &str) -> Result<(ModelConfig, ModelParams)> {
    let mut lines = text.lines().enumerate();
    let perr = |line: usize, message: String| QuarkError::Parse { line: line + 1, message };
    let (_, header) = lines.next().ok_or_else(|| QuarkError::Format("empty checkpoint".into()))?;
    let mut h = header.split_whitespace();
    if h.next() != Some(MAGIC) {
        return Err(QuarkError::Format("not a checkpoint file".into()));
    }
    let version: u32 = h
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| QuarkError::Format("missing checkpoint version".into()))?;
    if version != VERSION {
        return Err(QuarkError::Format(format!("unsupported checkpoint version {version}")));
    }

    let mut config = ModelConfig::normal();
    let mut seen = Vec::new();
    let mut params = Vec::new();
    while let Some((n, line)) = lines.next() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            [] => continue,
            ["config", key, value] => {
                if !config.set(key, value)? {
                    return Err(perr(n, format!("unknown config key {key}")));
                }
                seen.push(key.to_string());
            }
            ["tensor", name, rows, cols] => {
                let rows: usize = rows.parse().map_err(|_| perr(n, format!("bad row count {rows}")))?;
                let cols: usize = cols.parse().map_err(|_| perr(n, format!("bad column count {cols}")))?;
                let (m, data) = lines.next().ok_or_else(|| perr(n, format!("tensor {name} has no data")))?;
                let values = data
                    .split_whitespace()
                    .map(|v| v.parse::<f64>().map_err(|_| perr(m, format!("bad value {v:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                if values.len() != rows * cols {
                    return Err(perr(m, format!("tensor {name} expects {} values, found {}", rows * cols, values.len())));
                }
                let value = Matrix::from_shape_vec((rows, cols), values).expect("length checked");
                params.push(Parameter::new(*name, value));
            }
            _ => return Err(perr(n, format!("unrecognized line {line:?}"))),
        }
    }
    if let Some(missing) = MODEL_KEYS.iter().find(|k| !seen.iter().any(|s| s == *k)) {
        return Err(QuarkError::Format(format!("checkpoint is missing config key {missing}")));
    }
    let params = ModelParams::from_parameters(&config, params)?;
    Ok((config, params))
}

pub fn save(path: &Path, config: &ModelConfig, params: &ModelParams) -> Result<()> {
    fs::write(path, to_text(config, params)).map_err(|e| QuarkError::io(path, e))
}

pub fn load(path: &Path) -> Result<(ModelConfig, ModelParams)> {
    let text = fs::read_to_string(path).map_err(|e| QuarkError::io(path, e))?;
    from_text(&text)
}
