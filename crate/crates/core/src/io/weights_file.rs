//! Skinning weight files.
//!
//! ```text
//! joints Hips Spine LeftUpLeg ...
//! 0.25 0.75 0 ...
//! ```
//!
//! One row per vertex with one value per joint in header order.

use std::fmt::Write as _;

use super::{parse_f64, tokens};
use crate::error::{Error, Result};
use crate::weights::{WeightMatrix, STOCHASTIC_TOL};

/// Rows whose sum drifts from 1 by at most this much are renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-4;

pub fn write_weights(w: &WeightMatrix, joint_names: &[String]) -> Result<String> {
    if joint_names.len() != w.joint_count() {
        return Err(Error::ShapeMismatch(format!(
            "{} joint names for {} weight columns",
            joint_names.len(),
            w.joint_count()
        )));
    }
    w.check_stochastic(STOCHASTIC_TOL)?;
    let mut out = String::from("joints");
    for n in joint_names {
        out.push(' ');
        out.push_str(n);
    }
    out.push('\n');
    for row in w.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

/// Returns the joint names from the header and the weight matrix.
pub fn read_weights(text: &str) -> Result<(Vec<String>, WeightMatrix)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, 1, "missing `joints` header"))?;
    let mut head = tokens(header);
    match head.next() {
        Some((_, "joints")) => {}
        Some((col, t)) => {
            return Err(Error::parse(1, col, format!("expected `joints`, found `{t}`")))
        }
        None => return Err(Error::parse(1, 1, "missing `joints` header")),
    }
    let names: Vec<String> = head.map(|(_, t)| t.to_string()).collect();
    if names.is_empty() {
        return Err(Error::parse(1, header.len() + 1, "header lists no joints"));
    }
    let cols = names.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for (li, line) in lines {
        let mut row = Vec::with_capacity(cols);
        for (col, t) in tokens(line) {
            let v = parse_f64(t, li + 1, col)?;
            if v < 0.0 {
                return Err(Error::parse(li + 1, col, format!("negative weight {v}")));
            }
            row.push(v);
        }
        if row.len() != cols {
            return Err(Error::parse(
                li + 1,
                1,
                format!("row has {} values, header lists {cols} joints", row.len()),
            ));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::NotStochastic { row: rows, sum });
        }
        data.extend(row.iter().map(|v| v / sum));
        rows += 1;
    }
    Ok((names, WeightMatrix::from_flat(rows, cols, data)?))
}

/// Checks a weight file against a mesh vertex count and skeleton joint names.
pub fn check_weights_shape(
    names: &[String],
    w: &WeightMatrix,
    vertex_count: usize,
    joint_names: &[String],
) -> Result<()> {
    if w.vertex_count() != vertex_count {
        return Err(Error::ShapeMismatch(format!(
            "weights have {} rows, mesh has {vertex_count} vertices",
            w.vertex_count()
        )));
    }
    if names != joint_names {
        return Err(Error::ShapeMismatch(
            "weight file joints do not match the skeleton".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("j{i}")).collect()
    }

    #[test]
    fn one_hot_round_trip_exact() {
        let w = WeightMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let text = write_weights(&w, &names(2)).unwrap();
        let (n, back) = read_weights(&text).unwrap();
        assert_eq!(n, names(2));
        assert_eq!(back, w);
    }

    #[test]
    fn general_round_trip() {
        let w = WeightMatrix::from_rows(&[vec![0.1, 0.2, 0.7], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]])
            .unwrap();
        let (_, back) = read_weights(&write_weights(&w, &names(3)).unwrap()).unwrap();
        for (a, b) in back.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn small_drift_renormalized() {
        let (_, w) = read_weights("joints a b\n0.50005 0.5\n").unwrap();
        let s: f64 = w.row(0).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((w.get(0, 0) - 0.50005 / 1.00005).abs() < 1e-12);
    }

    #[test]
    fn large_drift_rejected() {
        assert!(matches!(
            read_weights("joints a b\n0.25 0.25\n"),
            Err(Error::NotStochastic { row: 0, .. })
        ));
        let w = WeightMatrix::from_rows(&[vec![0.25, 0.25]]).unwrap();
        assert!(matches!(write_weights(&w, &names(2)), Err(Error::NotStochastic { .. })));
    }

    #[test]
    fn malformed() {
        assert!(read_weights("").is_err());
        assert!(read_weights("joint a\n1\n").is_err());
        assert!(matches!(read_weights("joints a b\n1\n"), Err(Error::Parse { pos, .. }) if pos.line == 2));
        assert!(read_weights("joints a b\n1 x\n").is_err());
        assert!(read_weights("joints a b\n1.5 -0.5\n").is_err());
    }

    #[test]
    fn shape_checks() {
        let w = WeightMatrix::one_hot(3, 2, 0);
        assert!(check_weights_shape(&names(2), &w, 3, &names(2)).is_ok());
        assert!(matches!(
            check_weights_shape(&names(2), &w, 4, &names(2)),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(check_weights_shape(&names(2), &w, 3, &names(3)).is_err());
    }
}
