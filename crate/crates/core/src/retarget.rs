//! Rule-based motion transfer between skeletons with different joint
//! counts, names and proportions.

use crate::error::{Error, Result};
use crate::math::{Mat3, Vec3};
use crate::skeleton::{ground_skeleton, side_of, PoseTransforms, Skeleton};

/// Target joint index → source joint index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointCorrespondence {
    pub map: Vec<Option<usize>>,
}

impl JointCorrespondence {
    pub fn mapped_count(&self) -> usize {
        self.map.iter().flatten().count()
    }
}

/// Lowercase name tokens split at `_`, `-`, `.`, `:`, digits and camel-case
/// boundaries.
pub fn name_tokens(name: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut prev: Option<char> = None;
    for ch in name.chars() {
        let boundary = match prev {
            None => false,
            Some(p) => {
                !ch.is_alphanumeric()
                    || (ch.is_uppercase() && p.is_lowercase())
                    || (ch.is_ascii_digit() != p.is_ascii_digit())
            }
        };
        if boundary && !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur).to_lowercase());
        }
        if ch.is_alphanumeric() {
            cur.push(ch);
        }
        prev = Some(ch);
    }
    if !cur.is_empty() {
        tokens.push(cur.to_lowercase());
    }
    tokens
}

/// Nearest strict ancestor of `j` that has an image under `map`.
fn mapped_ancestor(tgt: &Skeleton, map: &[Option<usize>], j: usize) -> Option<usize> {
    let mut cur = tgt.parent(j);
    while let Some(a) = cur {
        if map[a].is_some() {
            return Some(a);
        }
        cur = tgt.parent(a);
    }
    None
}

/// Whether mapping `t → s` keeps ancestry consistent with the pairs chosen
/// so far.
fn consistent(src: &Skeleton, tgt: &Skeleton, map: &[Option<usize>], t: usize, s: usize) -> bool {
    if let Some(a) = mapped_ancestor(tgt, map, t) {
        let img = map[a].expect("mapped ancestor");
        if img == s || !src.is_ancestor_or_self(img, s) {
            return false;
        }
    }
    // already-mapped descendants must land below `s`
    (0..tgt.joint_count()).all(|d| {
        d == t
            || !tgt.is_ancestor_or_self(t, d)
            || map[d].is_none_or(|img| img != s && src.is_ancestor_or_self(s, img))
    })
}

/// Name equality, then longest shared name token, then topological pairing
/// of children by rest offset direction. Every pair respects ancestry.
pub fn build_correspondence(src: &Skeleton, tgt: &Skeleton) -> Result<JointCorrespondence> {
    if src.joint_count() == 0 || tgt.joint_count() == 0 {
        return Err(Error::NoRoot);
    }
    let order = tgt.order().to_vec();
    let mut map: Vec<Option<usize>> = vec![None; tgt.joint_count()];
    let mut used = vec![false; src.joint_count()];

    for &t in &order {
        if let Some(s) = src.index_of(tgt.name(t)) {
            if !used[s] && consistent(src, tgt, &map, t, s) {
                map[t] = Some(s);
                used[s] = true;
            }
        }
    }

    if map[tgt.root()].is_none() && !used[src.root()] && consistent(src, tgt, &map, tgt.root(), src.root()) {
        map[tgt.root()] = Some(src.root());
        used[src.root()] = true;
    }

    for &t in &order {
        if map[t].is_some() {
            continue;
        }
        let tt = name_tokens(tgt.name(t));
        let side = side_of(tgt.name(t));
        let mut best: Option<(usize, usize)> = None;
        for s in 0..src.joint_count() {
            if used[s] || side_of(src.name(s)) != side {
                continue;
            }
            let st = name_tokens(src.name(s));
            let score = tt
                .iter()
                .filter(|a| a.chars().any(char::is_alphabetic) && st.contains(a))
                .map(|a| a.len())
                .max()
                .unwrap_or(0);
            if score > 0 && best.is_none_or(|(_, b)| score > b) && consistent(src, tgt, &map, t, s) {
                best = Some((s, score));
            }
        }
        if let Some((s, _)) = best {
            map[t] = Some(s);
            used[s] = true;
        }
    }

    for &t in &order {
        if map[t].is_some() {
            continue;
        }
        let Some(tp) = tgt.parent(t) else { continue };
        let Some(sp) = map[tp] else { continue };
        let dir_t = tgt.offsets()[t].try_normalize(1e-12).unwrap_or_else(Vec3::zeros);
        let mut best: Option<(usize, f64)> = None;
        for &s in src.children(sp) {
            if used[s] || !consistent(src, tgt, &map, t, s) {
                continue;
            }
            let dir_s = src.offsets()[s].try_normalize(1e-12).unwrap_or_else(Vec3::zeros);
            let score = dir_t.dot(&dir_s);
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((s, score));
            }
        }
        if let Some((s, _)) = best {
            map[t] = Some(s);
            used[s] = true;
        }
    }

    Ok(JointCorrespondence { map })
}

/// Target height over source height, measured on grounded rest poses.
pub fn height_ratio(src: &Skeleton, tgt: &Skeleton) -> f64 {
    let hs = ground_skeleton(src).height();
    let ht = ground_skeleton(tgt).height();
    if hs > 0.0 && ht > 0.0 {
        ht / hs
    } else {
        1.0
    }
}

/// Transfers one frame. Mapped target joints reproduce the global rotation
/// of their source image; unmapped joints keep their rest orientation
/// relative to their parent. The root displacement is scaled by the height
/// ratio.
pub fn retarget_pose(
    src_pose: &PoseTransforms,
    corr: &JointCorrespondence,
    tgt: &Skeleton,
    src: &Skeleton,
) -> Result<PoseTransforms> {
    retarget_pose_with_ratio(src_pose, corr, tgt, src, height_ratio(src, tgt))
}

pub fn retarget_pose_with_ratio(
    src_pose: &PoseTransforms,
    corr: &JointCorrespondence,
    tgt: &Skeleton,
    src: &Skeleton,
    ratio: f64,
) -> Result<PoseTransforms> {
    if src_pose.joint_count() != src.joint_count() {
        return Err(Error::size("source pose joint count", src.joint_count(), src_pose.joint_count()));
    }
    if corr.map.len() != tgt.joint_count() {
        return Err(Error::size("correspondence length", tgt.joint_count(), corr.map.len()));
    }
    let global_rot = |s: usize| -> Mat3 { src_pose.global[s].rotation };
    let mut local = vec![Mat3::identity(); tgt.joint_count()];
    for t in 0..tgt.joint_count() {
        let Some(s) = corr.map[t] else { continue };
        local[t] = match mapped_ancestor(tgt, &corr.map, t) {
            Some(a) => {
                let img = corr.map[a].expect("mapped ancestor");
                global_rot(img).transpose() * global_rot(s)
            }
            None => global_rot(s),
        };
    }
    Ok(tgt.fk_unchecked(local, src_pose.root_translation * ratio))
}

pub fn retarget_clip(
    src_poses: &[PoseTransforms],
    src: &Skeleton,
    tgt: &Skeleton,
) -> Result<(JointCorrespondence, Vec<PoseTransforms>)> {
    let corr = build_correspondence(src, tgt)?;
    let ratio = height_ratio(src, tgt);
    let poses = src_poses
        .iter()
        .map(|p| retarget_pose_with_ratio(p, &corr, tgt, src, ratio))
        .collect::<Result<Vec<_>>>()?;
    Ok((corr, poses))
}
