//! Wavefront OBJ meshes (`v` and `f` records only).

use std::fmt::Write as _;

use super::{parse_f64, tokens};
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mesh::Mesh;

/// Parses vertices and faces. Polygons are fan-triangulated, indices may be
/// 1-based or negative (relative to the vertices read so far), and
/// `v/vt/vn` forms keep only the position index. Other records are ignored.
pub fn parse_obj(text: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        let line = line.split('#').next().unwrap_or("");
        let mut toks = tokens(line);
        let Some((_, kind)) = toks.next() else { continue };
        match kind {
            "v" => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let (col, t) = toks.next().ok_or_else(|| {
                        Error::parse(line_no, line.len() + 1, "vertex needs 3 coordinates")
                    })?;
                    *c = parse_f64(t, line_no, col)?;
                }
                // an optional w or vertex colour may follow
                for (col, t) in toks {
                    parse_f64(t, line_no, col)?;
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            "f" => {
                let mut idx = Vec::new();
                for (col, t) in toks {
                    let head = t.split('/').next().unwrap_or("");
                    let raw: i64 = head.parse().map_err(|_| {
                        Error::parse(line_no, col, format!("bad face index `{t}`"))
                    })?;
                    let n = vertices.len() as i64;
                    let resolved = match raw {
                        0 => return Err(Error::parse(line_no, col, "face index 0 is invalid")),
                        r if r > 0 => r - 1,
                        r => n + r,
                    };
                    if resolved < 0 || resolved >= n {
                        return Err(Error::IndexOutOfRange {
                            index: raw,
                            len: vertices.len(),
                        });
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(Error::parse(line_no, 1, "face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Mesh::new(vertices, faces)
}

pub fn write_obj(vertices: &[Vec3], faces: &[[usize; 3]]) -> String {
    let mut out = String::with_capacity(vertices.len() * 32 + faces.len() * 16);
    for v in vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}
