//! Rigging, skinning and deformation quality metrics.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::solvers::chamfer::{chamfer, nearest};
use crate::weights::WeightMatrix;

/// Initial integration panels per bone for [`cd_b2b`].
pub const B2B_SAMPLES: usize = 64;

/// A bone as its two endpoints.
pub type Segment = (Vec3, Vec3);

pub fn point_segment_distance_squared(p: &Vec3, seg: &Segment) -> f64 {
    let (a, b) = seg;
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm_squared()
}

fn nearest_segment(p: &Vec3, bones: &[Segment]) -> f64 {
    bones
        .iter()
        .map(|s| point_segment_distance_squared(p, s))
        .fold(f64::INFINITY, f64::min)
}

/// Chamfer distance between joint sets.
pub fn cd_j2j(g_a: &[Vec3], g_b: &[Vec3]) -> Result<f64> {
    chamfer(g_a, g_b)
}

/// Mean squared joint-to-nearest-bone distance, symmetrized: joints of `a`
/// against bones of `b` plus joints of `b` against bones of `a`.
pub fn cd_j2b(g_a: &[Vec3], bones_a: &[Segment], g_b: &[Vec3], bones_b: &[Segment]) -> Result<f64> {
    if g_a.is_empty() || g_b.is_empty() || bones_a.is_empty() || bones_b.is_empty() {
        return Err(Error::EmptySet);
    }
    let dir = |g: &[Vec3], bones: &[Segment]| {
        g.iter().map(|p| nearest_segment(p, bones)).sum::<f64>() / g.len() as f64
    };
    Ok(dir(g_a, bones_b) + dir(g_b, bones_a))
}

/// Adaptive Simpson refinement stops once a panel's two halves agree with
/// the whole to this absolute tolerance, scaled by the squared bone length.
const B2B_TOL: f64 = 1e-12;
const B2B_MAX_DEPTH: u32 = 16;

/// Mean squared distance from points along `bone` to the nearest of `bones`,
/// integrated over the bone with adaptive Simpson seeded by `panels`
/// uniform intervals.
fn bone_to_bones(bone: &Segment, bones: &[Segment], panels: usize) -> f64 {
    let (a, b) = bone;
    let f = |t: f64| nearest_segment(&(a + (b - a) * t), bones);
    let n = panels.max(1);
    let tol = B2B_TOL * (b - a).norm_squared().max(1.0) / n as f64;
    let mut total = 0.0;
    let mut fa = f(0.0);
    for k in 0..n {
        let (t0, t1) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
        let fb = f(t1);
        let fm = f(0.5 * (t0 + t1));
        let whole = (t1 - t0) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson(&f, t0, t1, fa, fm, fb, whole, tol, B2B_MAX_DEPTH);
        fa = fb;
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fl, fr) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
    let left = (m - a) / 6.0 * (fa + 4.0 * fl + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * fr + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson(f, a, m, fa, fl, fm, left, 0.5 * tol, depth - 1) + simpson(f, m, b, fm, fr, fb, right, 0.5 * tol, depth - 1)
}

fn bones_to_bones(a: &[Segment], b: &[Segment], panels: usize) -> f64 {
    let per: Vec<f64> = a.par_iter().map(|s| bone_to_bones(s, b, panels)).collect();
    per.iter().sum::<f64>() / a.len() as f64
}

/// Bone-to-bone Chamfer distance: the squared distance from each point of a
/// bone to the nearest bone of the other skeleton, averaged along the bone
/// and then over bones; both directions are summed. Each bone starts with
/// [`B2B_SAMPLES`] Simpson panels, refined where the integrand has kinks.
pub fn cd_b2b(bones_a: &[Segment], bones_b: &[Segment]) -> Result<f64> {
    cd_b2b_with(bones_a, bones_b, B2B_SAMPLES)
}

pub fn cd_b2b_with(bones_a: &[Segment], bones_b: &[Segment], panels: usize) -> Result<f64> {
    if bones_a.is_empty() || bones_b.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(bones_to_bones(bones_a, bones_b, panels) + bones_to_bones(bones_b, bones_a, panels))
}

/// Mean per-vertex L1 distance between weight rows.
pub fn skinning_l1(pred: &WeightMatrix, gt: &WeightMatrix) -> Result<f64> {
    if pred.vertex_count() != gt.vertex_count() || pred.joint_count() != gt.joint_count() {
        return Err(Error::ShapeMismatch(format!(
            "{}×{} predicted weights vs {}×{} ground truth",
            pred.vertex_count(),
            pred.joint_count(),
            gt.vertex_count(),
            gt.joint_count()
        )));
    }
    if pred.vertex_count() == 0 {
        return Ok(0.0);
    }
    let total: f64 = pred
        .rows()
        .zip(gt.rows())
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .sum();
    Ok(total / pred.vertex_count() as f64)
}

/// Symmetric Chamfer distance with unsquared nearest distances, averaged
/// over the two directions.
pub fn deformation_cd(pred: &[Vec3], gt: &[Vec3]) -> Result<f64> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptySet);
    }
    let dir = |a: &[Vec3], b: &[Vec3]| {
        let d: Vec<f64> = a.par_iter().map(|p| nearest(p, b).1.sqrt()).collect();
        d.iter().sum::<f64>() / a.len() as f64
    };
    Ok(0.5 * (dir(pred, gt) + dir(gt, pred)))
}

/// Average and maximum per-vertex distance.
pub fn ade_mde(pred: &[Vec3], gt: &[Vec3]) -> Result<(f64, f64)> {
    if pred.len() != gt.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predicted vertices vs {} ground-truth vertices",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for (a, b) in pred.iter().zip(gt) {
        let d = (a - b).norm();
        sum += d;
        max = max.max(d);
    }
    Ok((sum / pred.len() as f64, max))
}

/// `(cd, ade, mde)` for one frame.
pub fn deformation_errors(pred: &[Vec3], gt: &[Vec3]) -> Result<(f64, f64, f64)> {
    let cd = deformation_cd(pred, gt)?;
    let (ade, mde) = ade_mde(pred, gt)?;
    Ok((cd, ade, mde))
}

/// Edge length score and the number of zero-length ground-truth edges that
/// were skipped.
pub fn els_with_skipped(pred: &[Vec3], gt: &[Vec3], edges: &[(usize, usize)]) -> Result<(f64, usize)> {
    let n = pred.len().min(gt.len());
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut skipped = 0usize;
    for &(a, b) in edges {
        for i in [a, b] {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i as i64, len: n });
            }
        }
        let e = (gt[a] - gt[b]).norm();
        if e == 0.0 {
            skipped += 1;
            continue;
        }
        let ratio = (pred[a] - pred[b]).norm() / e;
        sum += 1.0 - (ratio - 1.0).abs();
        count += 1;
    }
    if skipped > 0 {
        log::warn!("els: skipped {skipped} zero-length edge(s)");
    }
    if count == 0 {
        return Err(Error::EmptySet);
    }
    Ok((sum / count as f64, skipped))
}

pub fn els(pred: &[Vec3], gt: &[Vec3], edges: &[(usize, usize)]) -> Result<f64> {
    Ok(els_with_skipped(pred, gt, edges)?.0)
}

/// All metrics for one predicted/ground-truth pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricReport {
    pub cd_j2j: f64,
    pub cd_j2b: f64,
    pub cd_b2b: f64,
    pub skinning_l1: f64,
    pub cd: f64,
    pub ade: f64,
    pub mde: f64,
    pub els: f64,
}

impl MetricReport {
    pub const KEYS: [&'static str; 8] = ["cd_j2j", "cd_j2b", "cd_b2b", "skinning_l1", "cd", "ade", "mde", "els"];

    /// Metrics reported with an extra ×10³ column.
    pub const SCALED: [&'static str; 6] = ["cd_j2j", "cd_j2b", "cd_b2b", "cd", "ade", "mde"];

    pub fn values(&self) -> [f64; 8] {
        [
            self.cd_j2j,
            self.cd_j2b,
            self.cd_b2b,
            self.skinning_l1,
            self.cd,
            self.ade,
            self.mde,
            self.els,
        ]
    }

    /// `key = value` lines, with `key_x1e3` lines for the scaled metrics.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in Self::KEYS.iter().zip(self.values()) {
            out.push_str(&format!("{k} = {v}\n"));
            if Self::SCALED.contains(k) {
                out.push_str(&format!("{k}_x1e3 = {}\n", v * 1e3));
            }
        }
        out
    }

    /// Aligned table with rigging, skinning and deformation columns.
    pub fn to_table(&self) -> String {
        let header = ["CD-J2J", "CD-J2B", "CD-B2B", "Skin-L1", "CD", "ADE", "MDE", "ELS"];
        let cells = [
            self.cd_j2j * 1e3,
            self.cd_j2b * 1e3,
            self.cd_b2b * 1e3,
            self.skinning_l1,
            self.cd * 1e3,
            self.ade * 1e3,
            self.mde * 1e3,
            self.els,
        ];
        let mut out = String::new();
        for h in header {
            out.push_str(&format!("{h:>10}"));
        }
        out.push('\n');
        for c in cells {
            out.push_str(&format!("{c:>10.4}"));
        }
        out.push('\n');
        out.push_str("(chamfer and distance columns ×10³)\n");
        out
    }
}

/// Deformation metrics pooled over frames: CD and ADE are averaged over all
/// frames' vertices, MDE is the maximum over frames, ELS is the mean over
/// all frames' edges.
pub fn pooled_deformation(
    pred: &[Vec<Vec3>],
    gt: &[Vec<Vec3>],
    edges: &[(usize, usize)],
) -> Result<(f64, f64, f64, f64)> {
    if pred.len() != gt.len() {
        return Err(Error::size("frame count", gt.len(), pred.len()));
    }
    if pred.is_empty() {
        return Err(Error::EmptySet);
    }
    let (mut cd, mut ade, mut mde, mut els_sum) = (0.0, 0.0, 0.0f64, 0.0);
    for (p, g) in pred.iter().zip(gt) {
        let (c, a, m) = deformation_errors(p, g)?;
        cd += c;
        ade += a;
        mde = mde.max(m);
        els_sum += els(p, g, edges)?;
    }
    let n = pred.len() as f64;
    Ok((cd / n, ade / n, mde, els_sum / n))
}
