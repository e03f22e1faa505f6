//! Per-frame motion features in the character's facing frame, pose
//! reconstruction from target features, and linear blend skinning.
//!
//! Root motion `r = (Δx, Δz, Δθ, h)` is stored as a per-frame displacement:
//! `Δz` along the previous frame's facing direction, `Δx` along its lateral
//! direction, `Δθ` the yaw from the previous facing to the current one and
//! `h` the root height above `y = 0`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::{compute_facing_frame_or, yaw, FacingFrame, Mat3, RigidTransform, Rotation6D, Vec3, UP};
use crate::mesh::{DeformedMesh, Mesh};
use crate::skeleton::{skinning_transforms, PoseTransforms, Skeleton};
use crate::weights::{WeightMatrix, STOCHASTIC_TOL};

/// Thresholds for contact labels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactConfig {
    /// Height threshold as a fraction of skeleton height.
    pub height_ratio: f64,
    /// World-space speed threshold (length per second).
    pub max_speed: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        ContactConfig {
            height_ratio: 0.05,
            max_speed: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RootMotion {
    pub dx: f64,
    pub dz: f64,
    pub dtheta: f64,
    pub h: f64,
}

impl RootMotion {
    pub fn to_array(self) -> [f64; 4] {
        [self.dx, self.dz, self.dtheta, self.h]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    /// Local joint rotations; the root entry is relative to the facing frame.
    pub q: Vec<Rotation6D>,
    pub p: Vec<Vec3>,
    pub p_prev: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub r: RootMotion,
    pub c: Vec<bool>,
}

impl FrameFeatures {
    pub fn target(&self) -> TargetPose {
        TargetPose {
            q_hat: self.q.clone(),
            r_hat: self.r,
            c_hat: self.c.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetPose {
    pub q_hat: Vec<Rotation6D>,
    pub r_hat: RootMotion,
    pub c_hat: Vec<bool>,
}

/// Facing frame of a posed skeleton. Skeletons without hip and shoulder
/// pairs use the root's z axis.
pub fn facing_frame(s: &Skeleton, pose: &PoseTransforms, previous: Option<&FacingFrame>) -> FacingFrame {
    let pos = pose.positions();
    let root = pos[s.root()];
    if let Some(f) = s.facing_joints() {
        return compute_facing_frame_or(
            &pos[f.left_hip],
            &pos[f.right_hip],
            &pos[f.left_shoulder],
            &pos[f.right_shoulder],
            &root,
            previous,
        );
    }
    let z = pose.global[s.root()].rotation.column(2).into_owned();
    FacingFrame::from_facing(root, z).unwrap_or_else(|_| {
        let facing = previous.map_or_else(Vec3::z, |p| p.facing);
        FacingFrame::from_facing(root, facing).unwrap_or_else(|_| FacingFrame::world())
    })
}

fn check_pose(s: &Skeleton, pose: &PoseTransforms) -> Result<()> {
    let n = s.joint_count();
    if pose.joint_count() != n {
        return Err(Error::size("pose joint count", n, pose.joint_count()));
    }
    if pose.local_rotation.len() != n {
        return Err(Error::size("rotation count", n, pose.local_rotation.len()));
    }
    Ok(())
}

pub fn compute_frame_features(
    s: &Skeleton,
    prev: &PoseTransforms,
    cur: &PoseTransforms,
    dt: f64,
    contact: &ContactConfig,
) -> Result<FrameFeatures> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NonPositiveDt(dt));
    }
    check_pose(s, prev)?;
    check_pose(s, cur)?;
    let f_prev = facing_frame(s, prev, None);
    let f_cur = facing_frame(s, cur, Some(&f_prev));
    let basis = f_cur.basis();

    let mut q = Vec::with_capacity(s.joint_count());
    for (j, r) in cur.local_rotation.iter().enumerate() {
        let r = if j == s.root() { basis.transpose() * r } else { *r };
        q.push(Rotation6D::encode(&r)?);
    }
    let g_prev = prev.positions();
    let g_cur = cur.positions();
    let p: Vec<Vec3> = g_cur.iter().map(|g| f_cur.to_local(g)).collect();
    let p_prev: Vec<Vec3> = g_prev.iter().map(|g| f_prev.to_local(g)).collect();
    let v = p.iter().zip(&p_prev).map(|(a, b)| (a - b) / dt).collect();

    let d = f_cur.origin - f_prev.origin;
    let r = RootMotion {
        dx: d.dot(&f_prev.lateral),
        dz: d.dot(&f_prev.facing),
        dtheta: f_prev.yaw_to(&f_cur),
        h: g_cur[s.root()].y,
    };
    let h_max = contact.height_ratio * s.height();
    let c = g_cur
        .iter()
        .zip(&g_prev)
        .map(|(a, b)| a.y < h_max && (a - b).norm() / dt < contact.max_speed)
        .collect();
    Ok(FrameFeatures { q, p, p_prev, v, r, c })
}

/// Features for every frame of a clip; frame 0 is paired with itself.
pub fn clip_features(
    s: &Skeleton,
    poses: &[PoseTransforms],
    dt: f64,
    contact: &ContactConfig,
) -> Result<Vec<FrameFeatures>> {
    (0..poses.len())
        .map(|t| compute_frame_features(s, &poses[t.saturating_sub(1)], &poses[t], dt, contact))
        .collect()
}

/// Rebuilds a pose from target features and the previous facing frame
/// (given as its world-from-frame transform).
pub fn reconstruct_pose(s: &Skeleton, prev_facing: &RigidTransform, tp: &TargetPose) -> Result<PoseTransforms> {
    let n = s.joint_count();
    if tp.q_hat.len() != n {
        return Err(Error::size("target rotation count", n, tp.q_hat.len()));
    }
    let mut local = tp
        .q_hat
        .iter()
        .map(Rotation6D::decode)
        .collect::<Result<Vec<Mat3>>>()?;
    let r = tp.r_hat;
    let b_prev = prev_facing.rotation;
    let basis = yaw(r.dtheta) * b_prev;
    let lateral = b_prev.column(0).into_owned();
    let facing = b_prev.column(2).into_owned();
    let origin = prev_facing.translation + lateral * r.dx + facing * r.dz;
    let root = s.root();
    local[root] = basis * local[root];
    let root_pos = Vec3::new(origin.x, 0.0, origin.z) + UP * r.h;
    Ok(s.fk_unchecked(local, root_pos - s.offsets()[root]))
}

/// Facing frame implied by `reconstruct_pose` for the same inputs.
pub fn next_facing(prev_facing: &RigidTransform, r: &RootMotion) -> RigidTransform {
    let b = prev_facing.rotation;
    let origin = prev_facing.translation + b.column(0) * r.dx + b.column(2) * r.dz;
    RigidTransform::new(yaw(r.dtheta) * b, Vec3::new(origin.x, 0.0, origin.z))
}

/// Reconstructs a whole clip starting from `start`.
pub fn reconstruct_clip(s: &Skeleton, start: &RigidTransform, targets: &[TargetPose]) -> Result<Vec<PoseTransforms>> {
    let mut frame = *start;
    let mut out = Vec::with_capacity(targets.len());
    for tp in targets {
        out.push(reconstruct_pose(s, &frame, tp)?);
        frame = next_facing(&frame, &tp.r_hat);
    }
    Ok(out)
}

/// Weight-blended rotation/translation block `Σ_j w_j [R_j | t_j]`,
/// accumulated in ascending joint order.
pub fn blend_transforms(w: &[f64], transforms: &[RigidTransform]) -> (Mat3, Vec3) {
    let mut m = Mat3::zeros();
    let mut t = Vec3::zeros();
    for (wj, tj) in w.iter().zip(transforms) {
        if *wj != 0.0 {
            m += tj.rotation * *wj;
            t += tj.translation * *wj;
        }
    }
    (m, t)
}

fn check_lbs_inputs(vertex_count: usize, w: &WeightMatrix, joint_count: usize) -> Result<()> {
    if w.vertex_count() != vertex_count {
        return Err(Error::ShapeMismatch(format!(
            "weights have {} rows, mesh has {vertex_count} vertices",
            w.vertex_count()
        )));
    }
    if w.joint_count() != joint_count {
        return Err(Error::ShapeMismatch(format!(
            "weights have {} columns, {joint_count} transforms given",
            w.joint_count()
        )));
    }
    w.check_stochastic(STOCHASTIC_TOL)
}

pub fn apply_lbs(m: &Mesh, w: &WeightMatrix, transforms: &[RigidTransform]) -> Result<DeformedMesh> {
    check_lbs_inputs(m.vertex_count(), w, transforms.len())?;
    Ok(DeformedMesh::new(lbs_unchecked(m.vertices(), w, transforms)))
}

pub(crate) fn lbs_unchecked(vertices: &[Vec3], w: &WeightMatrix, transforms: &[RigidTransform]) -> Vec<Vec3> {
    vertices
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let (r, t) = blend_transforms(w.row(i), transforms);
            r * v + t
        })
        .collect()
}

pub fn deform_clip(m: &Mesh, w: &WeightMatrix, s: &Skeleton, clip: &[PoseTransforms]) -> Result<Vec<DeformedMesh>> {
    check_lbs_inputs(m.vertex_count(), w, s.joint_count())?;
    let rest = s.rest_pose();
    clip.par_iter()
        .map(|pose| {
            let t = skinning_transforms(&rest, pose)?;
            Ok(DeformedMesh::new(lbs_unchecked(m.vertices(), w, &t)))
        })
        .collect()
}
