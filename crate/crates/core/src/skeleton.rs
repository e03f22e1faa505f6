//! Joint hierarchy, forward kinematics, grounding, lateral symmetry and
//! configuration augmentation.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{check_rotation, Mat3, RigidTransform, Vec3, UP};

/// Case-insensitive name fragments that mark toe joints.
pub const TOE_KEYWORDS: [&str; 3] = ["toe", "foot_end", "toebase"];

/// A rooted joint tree with rest-pose offsets.
///
/// Offsets are expressed in the parent's rest frame; every rest frame is
/// aligned with the world axes, so rest globals are sums of offsets along
/// the parent chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    names: Vec<String>,
    parents: Vec<Option<usize>>,
    offsets: Vec<Vec3>,
    globals: Vec<Vec3>,
    rho: Vec<usize>,
    children: Vec<Vec<usize>>,
    order: Vec<usize>,
    root: usize,
}

impl Skeleton {
    /// Builds and validates a skeleton. When `rho` is `None` the symmetry map
    /// is inferred from names and rest positions.
    pub fn new(
        names: Vec<String>,
        parents: Vec<Option<usize>>,
        offsets: Vec<Vec3>,
        rho: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::InvalidSkeleton("no joints".into()));
        }
        if parents.len() != n {
            return Err(Error::size("parent count", n, parents.len()));
        }
        if offsets.len() != n {
            return Err(Error::size("offset count", n, offsets.len()));
        }
        let mut seen = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(Error::InvalidSkeleton(format!(
                    "joint {i} has an empty or whitespace-containing name {name:?}"
                )));
            }
            if seen.insert(name.as_str(), i).is_some() {
                return Err(Error::InvalidSkeleton(format!("duplicate joint name {name:?}")));
            }
        }
        if offsets.iter().any(|o| !o.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidSkeleton("non-finite offset".into()));
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parents[i].is_none()).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(Error::NoRoot),
            _ => {
                return Err(Error::InvalidSkeleton(format!(
                    "{} roots, expected exactly one",
                    roots.len()
                )))
            }
        };
        let mut children = vec![Vec::new(); n];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n {
                    return Err(Error::IndexOutOfRange {
                        index: p as i64,
                        len: n,
                    });
                }
                if p == i {
                    return Err(Error::InvalidSkeleton(format!("joint {i} is its own parent")));
                }
                children[p].push(i);
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([root]);
        while let Some(j) = queue.pop_front() {
            order.push(j);
            queue.extend(children[j].iter().copied());
        }
        if order.len() != n {
            return Err(Error::InvalidSkeleton(
                "joint hierarchy contains a cycle or a disconnected joint".into(),
            ));
        }
        let mut globals = vec![Vec3::zeros(); n];
        for &j in &order {
            globals[j] = match parents[j] {
                Some(p) => globals[p] + offsets[j],
                None => offsets[j],
            };
        }
        let mut skel = Skeleton {
            names,
            parents,
            offsets,
            globals,
            rho: Vec::new(),
            children,
            order,
            root,
        };
        skel.rho = match rho {
            Some(rho) => {
                validate_rho(&rho, n)?;
                rho
            }
            None => infer_symmetry_map(&skel),
        };
        Ok(skel)
    }

    pub fn joint_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn parent(&self, j: usize) -> Option<usize> {
        self.parents[j]
    }

    pub fn offsets(&self) -> &[Vec3] {
        &self.offsets
    }

    /// Rest-pose global joint positions.
    pub fn globals(&self) -> &[Vec3] {
        &self.globals
    }

    pub fn rho(&self) -> &[usize] {
        &self.rho
    }

    pub fn children(&self, j: usize) -> &[usize] {
        &self.children[j]
    }

    /// Joints ordered so that every parent precedes its children.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn is_leaf(&self, j: usize) -> bool {
        self.children[j].is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Depth of each joint (root = 0).
    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![0; self.joint_count()];
        for &j in &self.order {
            if let Some(p) = self.parents[j] {
                d[j] = d[p] + 1;
            }
        }
        d
    }

    /// True when `a` is `b` or one of its ancestors.
    pub fn is_ancestor_or_self(&self, a: usize, b: usize) -> bool {
        let mut cur = Some(b);
        while let Some(c) = cur {
            if c == a {
                return true;
            }
            cur = self.parents[c];
        }
        false
    }

    /// Bones as `(parent, child)` index pairs in joint order.
    pub fn bones(&self) -> Vec<(usize, usize)> {
        (0..self.joint_count())
            .filter_map(|c| self.parents[c].map(|p| (p, c)))
            .collect()
    }

    /// Bone segments as rest-pose endpoint pairs.
    pub fn bone_segments(&self) -> Vec<(Vec3, Vec3)> {
        self.bones()
            .into_iter()
            .map(|(p, c)| (self.globals[p], self.globals[c]))
            .collect()
    }

    pub fn average_bone_length(&self) -> f64 {
        let bones = self.bones();
        if bones.is_empty() {
            return 0.0;
        }
        bones
            .iter()
            .map(|&(_, c)| self.offsets[c].norm())
            .sum::<f64>()
            / bones.len() as f64
    }

    /// Vertical extent of the rest pose.
    pub fn height(&self) -> f64 {
        let (lo, hi) = self
            .globals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| {
                (lo.min(g.y), hi.max(g.y))
            });
        hi - lo
    }

    /// Same hierarchy and names with new offsets; `rho` is kept.
    pub fn with_offsets(&self, offsets: Vec<Vec3>) -> Result<Skeleton> {
        Skeleton::new(
            self.names.clone(),
            self.parents.clone(),
            offsets,
            Some(self.rho.clone()),
        )
    }

    pub fn with_rho(&self, rho: Vec<usize>) -> Result<Skeleton> {
        validate_rho(&rho, self.joint_count())?;
        let mut s = self.clone();
        s.rho = rho;
        Ok(s)
    }

    /// Rest-pose globals from offsets, as used by gradient code.
    pub fn globals_from_offsets(&self, offsets: &[Vec3]) -> Vec<Vec3> {
        let mut g = vec![Vec3::zeros(); self.joint_count()];
        for &j in &self.order {
            g[j] = match self.parents[j] {
                Some(p) => g[p] + offsets[j],
                None => offsets[j],
            };
        }
        g
    }

    /// Joints whose names mark them as toes.
    pub fn toe_joints(&self) -> Vec<usize> {
        (0..self.joint_count())
            .filter(|&j| {
                let lower = self.names[j].to_ascii_lowercase();
                TOE_KEYWORDS.iter().any(|k| lower.contains(k))
            })
            .collect()
    }

    /// Lowest rest height over the toe joints, or over all joints when no
    /// toe is named.
    pub fn ground_contact_height(&self) -> f64 {
        let toes = self.toe_joints();
        let set: Box<dyn Iterator<Item = usize>> = if toes.is_empty() {
            Box::new(0..self.joint_count())
        } else {
            Box::new(toes.into_iter())
        };
        set.map(|j| self.globals[j].y).fold(f64::INFINITY, f64::min)
    }

    /// Hip and shoulder pairs used to build the facing frame.
    pub fn facing_joints(&self) -> Option<FacingJoints> {
        let hips = self.find_pair(&["upleg", "thigh", "hip", "leg"], &[])?;
        let shoulders = self.find_pair(
            &["upperarm", "arm", "shoulder", "clavicle", "elbow", "hand"],
            &["forearm", "lowerarm"],
        )?;
        Some(FacingJoints {
            left_hip: hips.0,
            right_hip: hips.1,
            left_shoulder: shoulders.0,
            right_shoulder: shoulders.1,
        })
    }

    fn find_pair(&self, keywords: &[&str], exclude: &[&str]) -> Option<(usize, usize)> {
        let depths = self.depths();
        for key in keywords {
            let mut best: Option<(usize, usize)> = None;
            for j in 0..self.joint_count() {
                let lower = self.names[j].to_ascii_lowercase();
                if !lower.contains(key) || exclude.iter().any(|e| lower.contains(e)) {
                    continue;
                }
                let k = self.rho[j];
                if k == j || side_of(&self.names[j]) != Some(Side::Left) {
                    continue;
                }
                // shallowest match wins
                if best.is_none_or(|(b, _)| depths[j] < depths[b]) {
                    best = Some((j, k));
                }
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    /// Rest-pose FK over per-joint local rotations.
    pub fn forward_kinematics(
        &self,
        local_rotation: &[Mat3],
        root_translation: Vec3,
    ) -> Result<PoseTransforms> {
        if local_rotation.len() != self.joint_count() {
            return Err(Error::size(
                "rotation count",
                self.joint_count(),
                local_rotation.len(),
            ));
        }
        for r in local_rotation {
            check_rotation(r)?;
        }
        Ok(self.fk_unchecked(local_rotation.to_vec(), root_translation))
    }

    pub(crate) fn fk_unchecked(
        &self,
        local_rotation: Vec<Mat3>,
        root_translation: Vec3,
    ) -> PoseTransforms {
        let n = self.joint_count();
        let mut global = vec![RigidTransform::IDENTITY; n];
        for &j in &self.order {
            let local = RigidTransform::new(local_rotation[j], self.offsets[j]);
            global[j] = match self.parents[j] {
                Some(p) => global[p].compose(&local),
                None => RigidTransform::from_translation(root_translation).compose(&local),
            };
        }
        PoseTransforms {
            local_rotation,
            root_translation,
            global,
        }
    }

    pub fn rest_pose(&self) -> PoseTransforms {
        self.fk_unchecked(vec![Mat3::identity(); self.joint_count()], Vec3::zeros())
    }
}

fn validate_rho(rho: &[usize], n: usize) -> Result<()> {
    if rho.len() != n {
        return Err(Error::size("symmetry map length", n, rho.len()));
    }
    for (j, &k) in rho.iter().enumerate() {
        if k >= n {
            return Err(Error::IndexOutOfRange {
                index: k as i64,
                len: n,
            });
        }
        if rho[k] != j {
            return Err(Error::InvalidSkeleton(format!(
                "symmetry map is not an involution at joint {j}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacingJoints {
    pub left_hip: usize,
    pub right_hip: usize,
    pub left_shoulder: usize,
    pub right_shoulder: usize,
}

/// Local rotations of a posed skeleton and the globals they produce.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTransforms {
    pub local_rotation: Vec<Mat3>,
    pub root_translation: Vec3,
    pub global: Vec<RigidTransform>,
}

impl PoseTransforms {
    pub fn joint_count(&self) -> usize {
        self.global.len()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.global.iter().map(|t| t.translation).collect()
    }
}

/// Per-joint transforms relative to the rest pose: `posed ∘ rest⁻¹`.
pub fn skinning_transforms(
    rest: &PoseTransforms,
    posed: &PoseTransforms,
) -> Result<Vec<RigidTransform>> {
    if rest.joint_count() != posed.joint_count() {
        return Err(Error::size(
            "pose joint count",
            rest.joint_count(),
            posed.joint_count(),
        ));
    }
    Ok(rest
        .global
        .iter()
        .zip(&posed.global)
        .map(|(r, p)| p.compose(&r.inverse()))
        .collect())
}

/// Translates the skeleton along up so the lowest toe rests on `y = 0`.
pub fn ground_skeleton(s: &Skeleton) -> Skeleton {
    if s.toe_joints().is_empty() {
        log::warn!("no toe joint found; grounding on the lowest joint");
    }
    let shift = -s.ground_contact_height();
    if shift == 0.0 {
        return s.clone();
    }
    let mut offsets = s.offsets.clone();
    offsets[s.root] += UP * shift;
    let mut out = s.clone();
    out.offsets = offsets;
    out.globals = out.globals_from_offsets(&out.offsets);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

const WORD_PAIRS: [(&str, &str); 3] = [("Left", "Right"), ("left", "right"), ("LEFT", "RIGHT")];
const PREFIX_PAIRS: [(&str, &str); 2] = [("L_", "R_"), ("l_", "r_")];
const SUFFIX_PAIRS: [(&str, &str); 4] = [(".L", ".R"), (".l", ".r"), ("_l", "_r"), ("_L", "_R")];

/// Lateral side encoded in a joint name, if any.
pub fn side_of(name: &str) -> Option<Side> {
    for (l, r) in WORD_PAIRS {
        if name.contains(l) {
            return Some(Side::Left);
        }
        if name.contains(r) {
            return Some(Side::Right);
        }
    }
    for (l, r) in PREFIX_PAIRS {
        if name.starts_with(l) {
            return Some(Side::Left);
        }
        if name.starts_with(r) {
            return Some(Side::Right);
        }
    }
    for (l, r) in SUFFIX_PAIRS {
        if name.ends_with(l) {
            return Some(Side::Left);
        }
        if name.ends_with(r) {
            return Some(Side::Right);
        }
    }
    None
}

fn swap_word(name: &str) -> Option<String> {
    for (l, r) in WORD_PAIRS {
        if name.contains(l) {
            return Some(name.replacen(l, r, 1));
        }
        if name.contains(r) {
            return Some(name.replacen(r, l, 1));
        }
    }
    None
}

fn swap_prefix(name: &str) -> Option<String> {
    for (l, r) in PREFIX_PAIRS {
        if let Some(rest) = name.strip_prefix(l) {
            return Some(format!("{r}{rest}"));
        }
        if let Some(rest) = name.strip_prefix(r) {
            return Some(format!("{l}{rest}"));
        }
    }
    None
}

fn swap_suffix(name: &str) -> Option<String> {
    for (l, r) in SUFFIX_PAIRS {
        if let Some(rest) = name.strip_suffix(l) {
            return Some(format!("{rest}{r}"));
        }
        if let Some(rest) = name.strip_suffix(r) {
            return Some(format!("{rest}{l}"));
        }
    }
    None
}

/// Pairs joints with their lateral counterparts.
///
/// Rules are tried in order: Left/Right word swap, `L_`/`R_` prefix,
/// `.L`/`.R` and `_l`/`_r` suffix, then mirror-position matching. Joints
/// left unpaired map to themselves.
pub fn infer_symmetry_map(s: &Skeleton) -> Vec<usize> {
    let n = s.joint_count();
    let mut rho: Vec<Option<usize>> = vec![None; n];
    let index: HashMap<&str, usize> = s
        .names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let rules: [fn(&str) -> Option<String>; 3] = [swap_word, swap_prefix, swap_suffix];
    for rule in rules {
        for j in 0..n {
            if rho[j].is_some() {
                continue;
            }
            let Some(other) = rule(&s.names[j]) else {
                continue;
            };
            if let Some(&k) = index.get(other.as_str()) {
                if k != j && rho[k].is_none() {
                    rho[j] = Some(k);
                    rho[k] = Some(j);
                }
            }
        }
    }
    let tol = 1e-3 * s.average_bone_length().max(1e-12);
    let mirrored = |k: usize| s.globals[k].component_mul(&crate::math::MIRROR);
    let nearest = |j: usize, rho: &[Option<usize>]| -> Option<usize> {
        let target = mirrored(j);
        (0..n)
            .filter(|&k| k != j && rho[k].is_none())
            .map(|k| (k, (s.globals[k] - target).norm()))
            .filter(|&(_, d)| d < tol)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k)
    };
    for j in 0..n {
        if rho[j].is_some() || s.globals[j].x.abs() <= tol {
            continue;
        }
        if let Some(k) = nearest(j, &rho) {
            if nearest(k, &rho) == Some(j) {
                rho[j] = Some(k);
                rho[k] = Some(j);
            }
        }
    }
    rho.iter()
        .enumerate()
        .map(|(j, r)| r.unwrap_or(j))
        .collect()
}

/// Ranges for [`augment_skeleton`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Number of joints to insert (mirrored pairs count twice).
    pub insert: usize,
    /// Number of joints to remove (mirrored pairs count twice).
    pub remove: usize,
    pub scale_min: f64,
    pub scale_max: f64,
    pub root_height_min: f64,
    pub root_height_max: f64,
    /// Bones shorter than this after scaling are stretched back to it.
    pub min_bone_length: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            insert: 0,
            remove: 0,
            scale_min: 0.8,
            scale_max: 1.25,
            root_height_min: 0.9,
            root_height_max: 1.1,
            min_bone_length: 1e-3,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.scale_min > 0.0
            && self.scale_min <= self.scale_max
            && self.root_height_min > 0.0
            && self.root_height_min <= self.root_height_max
            && self.min_bone_length >= 0.0
            && [self.scale_max, self.root_height_max, self.min_bone_length]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad augmentation ranges: {self:?}")))
        }
    }
}

/// Splices out joint `j`, which must have a parent and exactly one child.
/// The child's offset absorbs `o_j`, so every remaining global is unchanged.
pub fn remove_joint(s: &Skeleton, j: usize) -> Result<Skeleton> {
    let n = s.joint_count();
    if j >= n {
        return Err(Error::IndexOutOfRange {
            index: j as i64,
            len: n,
        });
    }
    let parent = s.parents[j]
        .ok_or_else(|| Error::InvalidConfig("cannot remove the root joint".into()))?;
    let [child] = s.children[j].as_slice() else {
        return Err(Error::InvalidConfig(format!(
            "joint {} has {} children; only single-child joints can be removed",
            s.names[j],
            s.children[j].len()
        )));
    };
    let remap = |i: usize| if i > j { i - 1 } else { i };
    let mut names = Vec::with_capacity(n - 1);
    let mut parents = Vec::with_capacity(n - 1);
    let mut offsets = Vec::with_capacity(n - 1);
    let mut rho = Vec::with_capacity(n - 1);
    for i in (0..n).filter(|&i| i != j) {
        names.push(s.names[i].clone());
        let (p, o) = if i == *child {
            (Some(parent), s.offsets[i] + s.offsets[j])
        } else {
            (s.parents[i], s.offsets[i])
        };
        parents.push(p.map(remap));
        offsets.push(o);
        let r = s.rho[i];
        rho.push(if r == j { remap(i) } else { remap(r) });
    }
    Skeleton::new(names, parents, offsets, Some(rho))
}

/// Inserts a joint at the midpoint of the bone ending at `child`. The new
/// joint is appended with index `joint_count()` and maps to itself under ρ.
pub fn insert_joint(s: &Skeleton, child: usize, name: &str) -> Result<Skeleton> {
    let n = s.joint_count();
    if child >= n {
        return Err(Error::IndexOutOfRange {
            index: child as i64,
            len: n,
        });
    }
    let parent = s.parents[child]
        .ok_or_else(|| Error::InvalidConfig("cannot split above the root".into()))?;
    let mut names = s.names.clone();
    let mut parents = s.parents.clone();
    let mut offsets = s.offsets.clone();
    let mut rho = s.rho.clone();
    let half = s.offsets[child] * 0.5;
    names.push(name.to_string());
    parents.push(Some(parent));
    offsets.push(half);
    rho.push(n);
    parents[child] = Some(n);
    offsets[child] = half;
    Skeleton::new(names, parents, offsets, Some(rho))
}

/// Multiplies each bone offset by a per-joint factor; the root offset's
/// height is multiplied by `root_height`.
pub fn scale_bones(s: &Skeleton, factors: &[f64], root_height: f64) -> Result<Skeleton> {
    if factors.len() != s.joint_count() {
        return Err(Error::size("scale factor count", s.joint_count(), factors.len()));
    }
    let mut offsets = s.offsets.clone();
    for (j, o) in offsets.iter_mut().enumerate() {
        if j == s.root {
            o.y *= root_height;
        } else {
            *o *= factors[j];
        }
    }
    s.with_offsets(offsets)
}

fn unique_name(s: &Skeleton, base: &str) -> String {
    if s.index_of(base).is_none() {
        return base.to_string();
    }
    (2..)
        .map(|k| format!("{base}{k}"))
        .find(|n| s.index_of(n).is_none())
        .expect("unbounded name search")
}

fn is_protected(s: &Skeleton, j: usize) -> bool {
    let lower = s.names[j].to_ascii_lowercase();
    j == s.root
        || ["hip", "pelvis", "upleg", "thigh"]
            .iter()
            .any(|k| lower.contains(k))
}

/// Randomly inserts/removes joints and rescales bones, keeping the skeleton
/// laterally symmetric. Deterministic for a given seed.
///
/// Leaves and their parents are never removed and leaf bones are never
/// split, so end sites keep their `<parent>_end` names.
pub fn augment_skeleton(s: &Skeleton, seed: u64, cfg: &AugmentConfig) -> Result<Skeleton> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = s.clone();

    let mut removed = 0;
    while removed < cfg.remove {
        let budget = cfg.remove - removed;
        let candidates: Vec<usize> = (0..out.joint_count())
            .filter(|&j| {
                out.parents[j].is_some()
                    && out.children[j].len() == 1
                    && !out.is_leaf(out.children[j][0])
                    && !is_protected(&out, j)
                    && {
                        let k = out.rho[j];
                        k == j
                            || budget >= 2
                                && out.children[k].len() == 1
                                && !out.is_leaf(out.children[k][0])
                                && !out.is_ancestor_or_self(j, k)
                                && !out.is_ancestor_or_self(k, j)
                    }
            })
            .collect();
        if candidates.is_empty() {
            log::warn!("augment: only {removed} of {} removals possible", cfg.remove);
            break;
        }
        let j = candidates[rng.gen_range(0..candidates.len())];
        let k = out.rho[j];
        out = remove_joint(&out, j)?;
        removed += 1;
        if k != j {
            let k = if k > j { k - 1 } else { k };
            out = remove_joint(&out, k)?;
            removed += 1;
        }
    }

    let mut inserted = 0;
    while inserted < cfg.insert {
        let budget = cfg.insert - inserted;
        let min_len = 2.0 * cfg.min_bone_length;
        let candidates: Vec<usize> = (0..out.joint_count())
            .filter(|&c| {
                out.parents[c].is_some()
                    && !out.is_leaf(c)
                    && out.offsets[c].norm() >= min_len
                    && (out.rho[c] == c || budget >= 2)
            })
            .collect();
        if candidates.is_empty() {
            log::warn!("augment: only {inserted} of {} insertions possible", cfg.insert);
            break;
        }
        let c = candidates[rng.gen_range(0..candidates.len())];
        let k = out.rho[c];
        let name = unique_name(&out, &format!("{}_mid", out.names[c]));
        out = insert_joint(&out, c, &name)?;
        inserted += 1;
        if k != c {
            let a = out.joint_count() - 1;
            let name = unique_name(&out, &format!("{}_mid", out.names[k]));
            out = insert_joint(&out, k, &name)?;
            let b = out.joint_count() - 1;
            let mut rho = out.rho.clone();
            rho[a] = b;
            rho[b] = a;
            out = out.with_rho(rho)?;
            inserted += 1;
        }
    }

    let n = out.joint_count();
    let mut factors = vec![1.0; n];
    for j in 0..n {
        let k = out.rho[j];
        if k < j {
            factors[j] = factors[k];
            continue;
        }
        factors[j] = if cfg.scale_min == cfg.scale_max {
            cfg.scale_min
        } else {
            rng.gen_range(cfg.scale_min..=cfg.scale_max)
        };
    }
    let root_height = if cfg.root_height_min == cfg.root_height_max {
        cfg.root_height_min
    } else {
        rng.gen_range(cfg.root_height_min..=cfg.root_height_max)
    };
    let mut scaled = scale_bones(&out, &factors, root_height)?;
    let mut offsets = scaled.offsets.clone();
    let mut clamped = false;
    for j in 0..n {
        let len = offsets[j].norm();
        if j != scaled.root && len > 0.0 && len < cfg.min_bone_length {
            offsets[j] *= cfg.min_bone_length / len;
            clamped = true;
        }
    }
    if clamped {
        scaled = scaled.with_offsets(offsets)?;
    }
    Ok(scaled)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub fn chain(offsets: &[[f64; 3]]) -> Skeleton {
        let n = offsets.len();
        Skeleton::new(
            (0..n).map(|i| format!("j{i}")).collect(),
            (0..n).map(|i| i.checked_sub(1)).collect(),
            offsets.iter().map(|o| Vec3::from(*o)).collect(),
            None,
        )
        .unwrap()
    }

    pub fn small_biped() -> Skeleton {
        let joints: &[(&str, Option<usize>, [f64; 3])] = &[
            ("Hips", None, [0.0, 1.0, 0.0]),
            ("Spine", Some(0), [0.0, 0.3, 0.0]),
            ("Head", Some(1), [0.0, 0.3, 0.0]),
            ("LeftArm", Some(1), [0.2, 0.2, 0.0]),
            ("LeftHand", Some(3), [0.4, 0.0, 0.0]),
            ("RightArm", Some(1), [-0.2, 0.2, 0.0]),
            ("RightHand", Some(5), [-0.4, 0.0, 0.0]),
            ("LeftUpLeg", Some(0), [0.1, 0.0, 0.0]),
            ("LeftLeg", Some(7), [0.0, -0.5, 0.0]),
            ("LeftFoot", Some(8), [0.0, -0.4, 0.0]),
            ("LeftToeBase", Some(9), [0.0, -0.1, 0.1]),
            ("RightUpLeg", Some(0), [-0.1, 0.0, 0.0]),
            ("RightLeg", Some(11), [0.0, -0.5, 0.0]),
            ("RightFoot", Some(12), [0.0, -0.4, 0.0]),
            ("RightToeBase", Some(13), [0.0, -0.1, 0.1]),
        ];
        Skeleton::new(
            joints.iter().map(|s| s.0.to_string()).collect(),
            joints.iter().map(|s| s.1).collect(),
            joints.iter().map(|s| Vec3::from(s.2)).collect(),
            None,
        )
        .unwrap()
    }

    fn names(n: &[&str]) -> Skeleton {
        let count = n.len();
        Skeleton::new(
            n.iter().map(|s| s.to_string()).collect(),
            (0..count).map(|i| if i == 0 { None } else { Some(0) }).collect(),
            (0..count)
                .map(|i| Vec3::new(i as f64 * 0.37, 1.0 + i as f64 * 0.11, 0.0))
                .collect(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_hierarchies() {
        let two_roots = Skeleton::new(
            vec!["a".into(), "b".into()],
            vec![None, None],
            vec![Vec3::zeros(); 2],
            None,
        );
        assert!(matches!(two_roots, Err(Error::InvalidSkeleton(_))));
        let cycle = Skeleton::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![None, Some(2), Some(1)],
            vec![Vec3::zeros(); 3],
            None,
        );
        assert!(cycle.is_err());
        let no_root = Skeleton::new(
            vec!["a".into(), "b".into()],
            vec![Some(1), Some(0)],
            vec![Vec3::zeros(); 2],
            None,
        );
        assert!(matches!(no_root, Err(Error::NoRoot)));
        let dup = Skeleton::new(
            vec!["a".into(), "a".into()],
            vec![None, Some(0)],
            vec![Vec3::zeros(); 2],
            None,
        );
        assert!(dup.is_err());
        let bad_rho = Skeleton::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![None, Some(0), Some(0)],
            vec![Vec3::zeros(); 3],
            Some(vec![0, 2, 0]),
        );
        assert!(bad_rho.is_err());
    }

    #[test]
    fn fk_two_joint_chain() {
        let s = chain(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let rest = s.forward_kinematics(&[Mat3::identity(); 2], Vec3::zeros()).unwrap();
        assert_eq!(rest.positions(), vec![Vec3::zeros(), Vec3::x()]);
        let rz = crate::math::Axis::Z.rotation(std::f64::consts::FRAC_PI_2);
        let posed = s.forward_kinematics(&[rz, Mat3::identity()], Vec3::zeros()).unwrap();
        assert_abs_diff_eq!(posed.positions()[1], Vec3::y(), epsilon = 1e-15);
    }

    #[test]
    fn fk_rest_matches_globals() {
        let s = small_biped();
        let rest = s.rest_pose();
        for (p, g) in rest.positions().iter().zip(s.globals()) {
            assert_eq!(p, g);
        }
    }

    #[test]
    fn fk_rejects_bad_input() {
        let s = chain(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        assert!(matches!(
            s.forward_kinematics(&[Mat3::identity()], Vec3::zeros()),
            Err(Error::SizeMismatch { .. })
        ));
        let shear = Mat3::new(1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(s.forward_kinematics(&[shear, Mat3::identity()], Vec3::zeros()).is_err());
    }

    #[test]
    fn skinning_transforms_cases() {
        let s = small_biped();
        let rest = s.rest_pose();
        for t in skinning_transforms(&rest, &rest).unwrap() {
            assert!(t.max_abs_diff(&RigidTransform::IDENTITY) < 1e-15);
        }
        // a rigid motion of the whole skeleton factors out of every joint
        let r = crate::math::yaw(0.7);
        let mut local = vec![Mat3::identity(); s.joint_count()];
        local[s.root()] = r;
        let t = Vec3::new(0.5, 0.0, -1.0);
        let root_shift = t + r * s.offsets()[0] - s.offsets()[0];
        let posed = s.forward_kinematics(&local, root_shift).unwrap();
        let g = RigidTransform::new(r, t);
        for tj in skinning_transforms(&rest, &posed).unwrap() {
            assert!(tj.max_abs_diff(&g) < 1e-12);
        }
        let single = chain(&[[0.0, 0.0, 0.0]]);
        let moved = single.forward_kinematics(&[Mat3::identity()], Vec3::new(0.0, 2.0, 0.0)).unwrap();
        let tj = skinning_transforms(&single.rest_pose(), &moved).unwrap();
        assert_eq!(tj[0], RigidTransform::from_translation(Vec3::new(0.0, 2.0, 0.0)));
    }

    #[test]
    fn grounding() {
        let s = small_biped();
        // toes at y = 1 - 0.5 - 0.4 - 0.1 = 0.0 → shift to 0.3 first
        let mut off = s.offsets().to_vec();
        off[0].y += 0.3;
        let raised = s.with_offsets(off.clone()).unwrap();
        let g = ground_skeleton(&raised);
        assert_abs_diff_eq!(g.ground_contact_height(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.offsets()[0].y, raised.offsets()[0].y - 0.3, epsilon = 1e-12);
        assert_eq!(&g.offsets()[1..], &raised.offsets()[1..]);
        off[0].y -= 0.5;
        let sunk = s.with_offsets(off).unwrap();
        let g2 = ground_skeleton(&sunk);
        assert_abs_diff_eq!(g2.offsets()[0].y, sunk.offsets()[0].y + 0.2, epsilon = 1e-12);
        assert_eq!(ground_skeleton(&g2), g2);
    }

    #[test]
    fn grounding_without_toes_uses_lowest_joint() {
        let s = chain(&[[0.0, 2.0, 0.0], [0.0, -0.5, 0.0]]);
        let g = ground_skeleton(&s);
        assert_abs_diff_eq!(g.globals()[1].y, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn symmetry_from_names() {
        assert_eq!(names(&["Hips", "LeftArm", "RightArm"]).rho(), &[0, 2, 1]);
        assert_eq!(names(&["Hips", "Spine"]).rho(), &[0, 1]);
        assert_eq!(
            names(&["root", "L_knee", "R_knee", "L_foot", "R_foot"]).rho(),
            &[0, 2, 1, 4, 3]
        );
        assert_eq!(names(&["root", "arm.L", "arm.R", "leg_l", "leg_r"]).rho(), &[0, 2, 1, 4, 3]);
    }

    #[test]
    fn symmetry_from_geometry() {
        let s = Skeleton::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![None, Some(0), Some(0), Some(0)],
            vec![
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.3, 0.2, 0.0),
                Vec3::new(-0.3, 0.2, 0.0),
                Vec3::new(0.0, 0.5, 0.0),
            ],
            None,
        )
        .unwrap();
        assert_eq!(s.rho(), &[0, 2, 1, 3]);
    }

    #[test]
    fn facing_joint_detection() {
        let s = small_biped();
        let f = s.facing_joints().unwrap();
        assert_eq!(s.name(f.left_hip), "LeftUpLeg");
        assert_eq!(s.name(f.right_hip), "RightUpLeg");
        assert_eq!(s.name(f.left_shoulder), "LeftArm");
        assert_eq!(s.name(f.right_shoulder), "RightArm");
        assert!(chain(&[[0.0; 3], [1.0, 0.0, 0.0]]).facing_joints().is_none());
    }

    #[test]
    fn insert_then_remove_restores() {
        let s = chain(&[[0.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 1.0, 0.0]]);
        let ins = insert_joint(&s, 1, "mid").unwrap();
        assert_eq!(ins.joint_count(), 4);
        assert_abs_diff_eq!(ins.offsets()[1].norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ins.offsets()[3].norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ins.globals()[2], s.globals()[2], epsilon = 1e-15);
        let back = remove_joint(&ins, 3).unwrap();
        assert_eq!(back.names(), s.names());
        assert_eq!(back.parents(), s.parents());
        for (a, b) in back.globals().iter().zip(s.globals()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn remove_rejects_branching_and_root() {
        let s = small_biped();
        assert!(remove_joint(&s, 0).is_err());
        assert!(remove_joint(&s, 1).is_err()); // Spine has three children
        assert!(remove_joint(&s, 4).is_err()); // leaf
        let r = remove_joint(&s, 8).unwrap();
        assert_eq!(r.joint_count(), 14);
        assert_abs_diff_eq!(
            r.globals()[r.index_of("LeftFoot").unwrap()],
            s.globals()[9],
            epsilon = 1e-15
        );
        // counterpart now maps to itself
        let right_leg = r.index_of("RightLeg").unwrap();
        assert_eq!(r.rho()[right_leg], right_leg);
    }

    #[test]
    fn uniform_scale_halves_bones() {
        let s = small_biped();
        let cfg = AugmentConfig {
            scale_min: 0.5,
            scale_max: 0.5,
            root_height_min: 1.0,
            root_height_max: 1.0,
            ..Default::default()
        };
        let a = augment_skeleton(&s, 1, &cfg).unwrap();
        assert_eq!(a.parents(), s.parents());
        for j in 1..s.joint_count() {
            assert_abs_diff_eq!(a.offsets()[j].norm(), 0.5 * s.offsets()[j].norm(), epsilon = 1e-15);
        }
    }

    #[test]
    fn augment_is_deterministic_and_symmetric() {
        let s = small_biped();
        let cfg = AugmentConfig {
            insert: 2,
            remove: 2,
            ..Default::default()
        };
        let a = augment_skeleton(&s, 42, &cfg).unwrap();
        let b = augment_skeleton(&s, 42, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.joint_count(), s.joint_count());
        for j in 0..a.joint_count() {
            let k = a.rho()[j];
            assert_eq!(a.rho()[k], j);
            let mirrored = a.globals()[k].component_mul(&crate::math::MIRROR);
            assert!((a.globals()[j] - mirrored).norm() < 1e-9, "joint {}", a.name(j));
        }
        assert!(augment_skeleton(
            &s,
            1,
            &AugmentConfig {
                scale_min: -1.0,
                ..Default::default()
            }
        )
        .is_err());
    }
}
