//! `GF v1` text format: one header line, then whitespace-separated values in row-major order.

use std::io::{BufRead, Write};

use super::{GridFunction, GridSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_header<T: Scalar>(header: &str) -> Result<GridSpec<T>> {
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("GF") || tokens.next() != Some("v1") {
        return Err(parse_err(1, "expected header starting with `GF v1`"));
    }
    let (mut dim, mut shape, mut spacing) = (None, None, None);
    for tok in tokens {
        let (key, value) =
            tok.split_once('=').ok_or_else(|| parse_err(1, format!("malformed field `{tok}`")))?;
        match key {
            "dim" => {
                dim = Some(value.parse::<usize>().map_err(|e| parse_err(1, format!("dim: {e}")))?)
            }
            "shape" => {
                shape = Some(
                    value
                        .split(',')
                        .map(|s| s.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| parse_err(1, format!("shape: {e}")))?,
                )
            }
            "h" => {
                let h: f64 = value.parse().map_err(|e| parse_err(1, format!("h: {e}")))?;
                spacing = Some(T::of(h));
            }
            _ => return Err(parse_err(1, format!("unknown field `{key}`"))),
        }
    }
    let dim = dim.ok_or_else(|| parse_err(1, "missing dim"))?;
    let shape = shape.ok_or_else(|| parse_err(1, "missing shape"))?;
    let spacing = spacing.ok_or_else(|| parse_err(1, "missing h"))?;
    if shape.len() != dim {
        return Err(parse_err(1, format!("dim={dim} but shape has {} entries", shape.len())));
    }
    GridSpec::new(shape, spacing)
}

/// Reads a grid function; negative values, even shapes and nonzero boundary cells are rejected.
pub fn read_grid_function<T: Scalar>(reader: impl BufRead) -> Result<GridFunction<T>> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty input"))??;
    let spec = parse_header::<T>(&header)?;
    let mut values = Vec::with_capacity(spec.len());
    for (i, line) in lines.enumerate() {
        let line = line?;
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|e| parse_err(i + 2, format!("`{tok}`: {e}")))?;
            values.push(T::of(v));
        }
    }
    GridFunction::new(spec, values)
}

/// Writes the header and one line per row along the last axis, shortest round-trip notation.
pub fn write_grid_function<T: Scalar>(u: &GridFunction<T>, mut out: impl Write) -> Result<()> {
    let spec = u.spec();
    let shape: Vec<String> = spec.shape().iter().map(|n| n.to_string()).collect();
    writeln!(out, "GF v1 dim={} shape={} h={:e}", spec.dim(), shape.join(","), spec.spacing())?;
    let row = *spec.shape().last().expect("dim >= 1");
    for chunk in u.values().chunks(row) {
        let line: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}
