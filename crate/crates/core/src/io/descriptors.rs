//! Per-vertex descriptor files.
//!
//! ```text
//! descriptors <vertex count> <feature dim>
//! <feature dim floats>   (one line per vertex)
//! ```

use std::fmt::Write as _;

use super::{parse_f64, tokens};
use crate::error::{Error, Result};
use crate::mesh::DescriptorField;

pub fn write_descriptors(d: &DescriptorField) -> String {
    let mut out = format!("descriptors {} {}\n", d.len(), d.feature_dim());
    for row in d.rows() {
        let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", vals.join(" "));
    }
    out
}

pub fn read_descriptors(text: &str) -> Result<DescriptorField> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, 1, "missing `descriptors` header"))?;
    let head: Vec<(usize, &str)> = tokens(header).collect();
    if head.len() != 3 || head[0].1 != "descriptors" {
        return Err(Error::parse(1, 1, "expected `descriptors <rows> <dim>`"));
    }
    let count = |i: usize| {
        head[i]
            .1
            .parse::<usize>()
            .map_err(|_| Error::parse(1, head[i].0, format!("bad count `{}`", head[i].1)))
    };
    let (rows, dim) = (count(1)?, count(2)?);
    let mut values = Vec::with_capacity(rows);
    for (li, line) in lines {
        let row = tokens(line)
            .map(|(col, t)| parse_f64(t, li + 1, col))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != dim {
            return Err(Error::parse(
                li + 1,
                1,
                format!("row has {} values, header says {dim}", row.len()),
            ));
        }
        values.push(row);
    }
    if values.len() != rows {
        return Err(Error::ShapeMismatch(format!(
            "descriptor header says {rows} rows, file has {}",
            values.len()
        )));
    }
    DescriptorField::new(values, dim)
}
