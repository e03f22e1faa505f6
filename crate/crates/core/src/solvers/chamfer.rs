//! Chamfer distance: mean squared nearest-neighbour distance in each
//! direction, summed. Nearest neighbours are found by exhaustive scan.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::Vec3;

/// Index and squared distance of the nearest point of `set` to `p`.
/// Ties go to the lowest index.
pub(crate) fn nearest(p: &Vec3, set: &[Vec3]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, q) in set.iter().enumerate() {
        let d = (p - q).norm_squared();
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn directed(a: &[Vec3], b: &[Vec3]) -> f64 {
    let d: Vec<f64> = a.par_iter().map(|p| nearest(p, b).1).collect();
    d.iter().sum::<f64>() / a.len() as f64
}

pub fn chamfer(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(directed(a, b) + directed(b, a))
}

/// Chamfer distance and its gradient with respect to the points of `b`.
pub fn chamfer_with_grad(a: &[Vec3], b: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut grad = vec![Vec3::zeros(); b.len()];
    let mut ab = 0.0;
    for p in a {
        let (k, d) = nearest(p, b);
        ab += d;
        grad[k] += (b[k] - p) * (2.0 / na);
    }
    let mut ba = 0.0;
    for (k, q) in b.iter().enumerate() {
        let (i, d) = nearest(q, a);
        ba += d;
        grad[k] += (q - a[i]) * (2.0 / nb);
    }
    Ok((ab / na + ba / nb, grad))
}

/// Skeleton loss between ground-truth and predicted joint positions; the
/// two sets may differ in size.
pub fn loss_skel(g_gt: &[Vec3], g_tgt: &[Vec3]) -> Result<f64> {
    chamfer(g_gt, g_tgt)
}
