//! Signed distance to a triangle mesh: exact unsigned distance with an
//! inside/outside vote over a fixed bundle of rays.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mesh::Mesh;

pub const RAY_COUNT: usize = 13;

#[derive(Debug, Clone, Copy)]
struct Triangle {
    a: Vec3,
    b: Vec3,
    c: Vec3,
    normal: Vec3,
}

/// Triangle soup prepared for repeated distance queries.
#[derive(Debug, Clone)]
pub struct SdfMesh {
    tris: Vec<Triangle>,
    rays: [Vec3; RAY_COUNT],
    diagonal: f64,
}

/// Fixed, deterministic ray directions spread over the sphere and tilted off
/// the coordinate axes.
fn ray_directions() -> [Vec3; RAY_COUNT] {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    std::array::from_fn(|k| {
        let y = 1.0 - 2.0 * (k as f64 + 0.5) / RAY_COUNT as f64;
        let r = (1.0 - y * y).sqrt();
        let phi = golden * k as f64 + 0.1234;
        Vec3::new(r * phi.cos(), y, r * phi.sin()).normalize()
    })
}

impl SdfMesh {
    pub fn new(m: &Mesh) -> Result<Self> {
        if m.faces().is_empty() {
            return Err(Error::EmptyMesh);
        }
        let v = m.vertices();
        let tris = m
            .faces()
            .iter()
            .map(|f| {
                let (a, b, c) = (v[f[0]], v[f[1]], v[f[2]]);
                Triangle {
                    a,
                    b,
                    c,
                    normal: (b - a).cross(&(c - a)),
                }
            })
            .collect();
        Ok(SdfMesh {
            tris,
            rays: ray_directions(),
            diagonal: m.bounds_diagonal(),
        })
    }

    pub fn bounds_diagonal(&self) -> f64 {
        self.diagonal
    }

    pub fn unsigned_distance(&self, p: &Vec3) -> f64 {
        self.tris
            .iter()
            .map(|t| (closest_point_on_triangle(p, &t.a, &t.b, &t.c) - p).norm_squared())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Majority vote over the ray bundle. A ray votes inside when its signed
    /// crossing count is nonzero or its crossing count is odd; ties are
    /// outside.
    pub fn is_inside(&self, p: &Vec3) -> bool {
        let votes = self
            .rays
            .iter()
            .filter(|dir| {
                let mut crossings = 0usize;
                let mut signed = 0i64;
                for t in &self.tris {
                    if ray_hits_triangle(p, dir, &t.a, &t.b, &t.c) {
                        crossings += 1;
                        signed += if dir.dot(&t.normal) > 0.0 { 1 } else { -1 };
                    }
                }
                signed != 0 || crossings % 2 == 1
            })
            .count();
        2 * votes > RAY_COUNT
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        let d = self.unsigned_distance(p);
        if d == 0.0 {
            return 0.0;
        }
        if self.is_inside(p) {
            -d
        } else {
            d
        }
    }

    pub fn eval(&self, points: &[Vec3]) -> Vec<f64> {
        points.par_iter().map(|p| self.signed_distance(p)).collect()
    }

    /// Signed distance and its gradient `±(p − q)/|p − q|`, with `q` the
    /// closest surface point. The gradient is zero on the surface.
    pub fn distance_and_gradient(&self, p: &Vec3) -> (f64, Vec3) {
        let q = self
            .tris
            .iter()
            .map(|t| closest_point_on_triangle(p, &t.a, &t.b, &t.c))
            .min_by(|a, b| (a - p).norm_squared().total_cmp(&(b - p).norm_squared()))
            .expect("mesh has faces");
        let d = (p - q).norm();
        if d == 0.0 {
            return (0.0, Vec3::zeros());
        }
        let sign = if self.is_inside(p) { -1.0 } else { 1.0 };
        (sign * d, (p - q) * (sign / d))
    }

    /// Central-difference gradient with step `h`.
    pub fn gradient(&self, p: &Vec3, h: f64) -> Vec3 {
        let mut g = Vec3::zeros();
        for c in 0..3 {
            let mut a = *p;
            let mut b = *p;
            a[c] += h;
            b[c] -= h;
            g[c] = (self.signed_distance(&a) - self.signed_distance(&b)) / (2.0 * h);
        }
        g
    }
}

pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Möller–Trumbore test for the open ray `p + t·dir`, `t > 0`.
fn ray_hits_triangle(p: &Vec3, dir: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> bool {
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-14 * e1.norm() * e2.norm() {
        return false;
    }
    let inv = 1.0 / det;
    let s = p - a;
    let u = s.dot(&h) * inv;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    e2.dot(&q) * inv > 0.0
}

pub fn sdf_eval(m: &Mesh, points: &[Vec3]) -> Result<Vec<f64>> {
    Ok(SdfMesh::new(m)?.eval(points))
}

/// Mean signed distance of the joints.
pub fn loss_sdf(m: &Mesh, joints: &[Vec3]) -> Result<f64> {
    if joints.is_empty() {
        return Err(Error::EmptySet);
    }
    let d = sdf_eval(m, joints)?;
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

/// Mean of `max(0, sdf + margin)` over the joints.
pub fn loss_sdf_hinge(m: &Mesh, joints: &[Vec3], margin: f64) -> Result<f64> {
    if joints.is_empty() {
        return Err(Error::EmptySet);
    }
    let d = sdf_eval(m, joints)?;
    Ok(hinge_mean(&d, margin))
}

pub(crate) fn hinge_mean(sdf: &[f64], margin: f64) -> f64 {
    sdf.iter().map(|d| (d + margin).max(0.0)).sum::<f64>() / sdf.len() as f64
}
