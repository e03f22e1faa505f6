//! Rest-pose triangle meshes, edge sets and per-vertex descriptor fields.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::math::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    edges: Vec<(usize, usize)>,
}

impl Mesh {
    /// Validates face indices and derives the edge set. Faces with repeated
    /// indices are dropped with a warning.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::ShapeMismatch("non-finite vertex position".into()));
        }
        if !faces.is_empty() && vertices.len() < 3 {
            return Err(Error::ShapeMismatch(format!(
                "{} vertices cannot carry faces",
                vertices.len()
            )));
        }
        let mut kept = Vec::with_capacity(faces.len());
        let mut dropped = 0;
        for f in faces {
            for &i in &f {
                if i >= vertices.len() {
                    return Err(Error::IndexOutOfRange {
                        index: i as i64,
                        len: vertices.len(),
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                dropped += 1;
                continue;
            }
            kept.push(f);
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} degenerate face(s)");
        }
        let edges = extract_edges(&kept, vertices.len())?;
        Ok(Mesh {
            vertices,
            faces: kept,
            edges,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Same connectivity, new positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Mesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::size("vertex count", self.vertices.len(), vertices.len()));
        }
        Ok(Mesh {
            vertices,
            faces: self.faces.clone(),
            edges: self.edges.clone(),
        })
    }

    pub fn bounds(&self) -> Result<(Vec3, Vec3)> {
        mesh_bounds(self)
    }

    pub fn bounds_diagonal(&self) -> f64 {
        self.bounds().map(|(lo, hi)| (hi - lo).norm()).unwrap_or(0.0)
    }

    pub fn height(&self) -> f64 {
        self.bounds().map(|(lo, hi)| hi.y - lo.y).unwrap_or(0.0)
    }
}

/// Sorted unique undirected edges `(i, j)` with `i < j`.
pub fn extract_edges(faces: &[[usize; 3]], vertex_count: usize) -> Result<Vec<(usize, usize)>> {
    let mut set = BTreeSet::new();
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            for i in [a, b] {
                if i >= vertex_count {
                    return Err(Error::IndexOutOfRange {
                        index: i as i64,
                        len: vertex_count,
                    });
                }
            }
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
    }
    Ok(set.into_iter().collect())
}

pub fn mesh_bounds(m: &Mesh) -> Result<(Vec3, Vec3)> {
    point_bounds(&m.vertices)
}

pub fn point_bounds(points: &[Vec3]) -> Result<(Vec3, Vec3)> {
    let first = points.first().ok_or(Error::EmptyMesh)?;
    Ok(points
        .iter()
        .fold((*first, *first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
}

/// Precomputed per-vertex feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorField {
    values: Vec<Vec<f64>>,
    feature_dim: usize,
}

impl DescriptorField {
    pub fn new(values: Vec<Vec<f64>>, feature_dim: usize) -> Result<Self> {
        for (i, row) in values.iter().enumerate() {
            if row.len() != feature_dim {
                return Err(Error::ShapeMismatch(format!(
                    "descriptor row {i} has {} values, expected {feature_dim}",
                    row.len()
                )));
            }
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::ShapeMismatch(format!("descriptor row {i} is not finite")));
            }
        }
        Ok(DescriptorField {
            values,
            feature_dim,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Rejects fields whose row count differs from the mesh vertex count.
    pub fn check_against(&self, mesh: &Mesh) -> Result<()> {
        if self.len() != mesh.vertex_count() {
            return Err(Error::ShapeMismatch(format!(
                "descriptor has {} rows but the mesh has {} vertices",
                self.len(),
                mesh.vertex_count()
            )));
        }
        Ok(())
    }
}

/// Deformed vertex positions for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformedMesh {
    pub vertices: Vec<Vec3>,
}

impl DeformedMesh {
    pub fn new(vertices: Vec<Vec3>) -> Self {
        DeformedMesh { vertices }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }
}
