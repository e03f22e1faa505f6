//! Synthetic characters with known rigs, weights and motion.
//!
//! Meshes are tubes around bones. Ground-truth weights come from the
//! distance `D_j` of a vertex to the bones owned by joint `j` (the bones to
//! its children; leaves own none): with `d₁ ≤ d₂` the two smallest
//! distances, every joint with `D_j ≤ d₂` gets `1 − smoothstep(0, width,
//! D_j − d₁)` and rows are renormalized.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{axis_angle, Mat3, Vec3, MIRROR};
use crate::mesh::Mesh;
use crate::skeleton::{PoseTransforms, Skeleton};
use crate::weights::WeightMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    BipedSimple,
    BipedBranchy,
    TwoBoneCylinder,
}

impl FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "biped_simple" => Ok(Template::BipedSimple),
            "biped_branchy" => Ok(Template::BipedBranchy),
            "two_bone_cylinder" => Ok(Template::TwoBoneCylinder),
            other => Err(Error::InvalidConfig(format!("unknown template `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClipKind {
    Wave,
    Crouch,
    RandomSmooth,
}

impl FromStr for ClipKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wave" => Ok(ClipKind::Wave),
            "crouch" => Ok(ClipKind::Crouch),
            "random_smooth" => Ok(ClipKind::RandomSmooth),
            other => Err(Error::InvalidConfig(format!("unknown clip kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterParams {
    /// Vertices per ring; must be even and at least 4.
    pub ring_resolution: usize,
    /// Rings along each biped bone.
    pub rings_per_bone: usize,
    /// Rings along the two-bone cylinder.
    pub cylinder_rings: usize,
    pub cylinder_radius: f64,
    pub cylinder_bone_length: f64,
    pub radius_scale: f64,
    /// Weight falloff width as a fraction of the average bone length.
    pub falloff_ratio: f64,
    /// Relative, mirror-symmetric jitter of biped bone lengths.
    pub proportion_jitter: f64,
}

impl Default for CharacterParams {
    fn default() -> Self {
        CharacterParams {
            ring_resolution: 12,
            rings_per_bone: 5,
            cylinder_rings: 8,
            cylinder_radius: 0.15,
            cylinder_bone_length: 1.0,
            radius_scale: 1.0,
            falloff_ratio: 0.5,
            proportion_jitter: 0.05,
        }
    }
}

impl CharacterParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.ring_resolution >= 4
            && self.ring_resolution % 2 == 0
            && self.rings_per_bone >= 2
            && self.cylinder_rings >= 2
            && self.cylinder_radius > 0.0
            && self.cylinder_bone_length > 0.0
            && self.radius_scale > 0.0
            && self.falloff_ratio > 0.0
            && (0.0..0.5).contains(&self.proportion_jitter)
            && [self.cylinder_radius, self.cylinder_bone_length, self.radius_scale, self.falloff_ratio]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad character parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCharacter {
    pub skeleton: Skeleton,
    pub mesh: Mesh,
    pub gt_weights: WeightMatrix,
    pub gt_clips: Vec<Vec<PoseTransforms>>,
}

type JointSpec = (&'static str, Option<&'static str>, [f64; 3]);

const BIPED_CORE: &[JointSpec] = &[
    ("Hips", None, [0.0, 1.0, 0.0]),
    ("Spine", Some("Hips"), [0.0, 0.15, 0.0]),
    ("Neck", Some("Spine"), [0.0, 0.4, 0.0]),
    ("Head", Some("Neck"), [0.0, 0.12, 0.0]),
    ("Head_end", Some("Head"), [0.0, 0.2, 0.0]),
    ("LeftShoulder", Some("Spine"), [0.08, 0.33, 0.0]),
    ("LeftArm", Some("LeftShoulder"), [0.12, 0.0, 0.0]),
    ("LeftForeArm", Some("LeftArm"), [0.28, 0.0, 0.0]),
    ("LeftHand", Some("LeftForeArm"), [0.25, 0.0, 0.0]),
    ("RightShoulder", Some("Spine"), [-0.08, 0.33, 0.0]),
    ("RightArm", Some("RightShoulder"), [-0.12, 0.0, 0.0]),
    ("RightForeArm", Some("RightArm"), [-0.28, 0.0, 0.0]),
    ("RightHand", Some("RightForeArm"), [-0.25, 0.0, 0.0]),
    ("LeftUpLeg", Some("Hips"), [0.1, -0.05, 0.0]),
    ("LeftLeg", Some("LeftUpLeg"), [0.0, -0.45, 0.0]),
    ("LeftFoot", Some("LeftLeg"), [0.0, -0.42, 0.0]),
    ("LeftToeBase", Some("LeftFoot"), [0.0, -0.08, 0.12]),
    ("LeftToeBase_end", Some("LeftToeBase"), [0.0, 0.0, 0.08]),
    ("RightUpLeg", Some("Hips"), [-0.1, -0.05, 0.0]),
    ("RightLeg", Some("RightUpLeg"), [0.0, -0.45, 0.0]),
    ("RightFoot", Some("RightLeg"), [0.0, -0.42, 0.0]),
    ("RightToeBase", Some("RightFoot"), [0.0, -0.08, 0.12]),
    ("RightToeBase_end", Some("RightToeBase"), [0.0, 0.0, 0.08]),
];

const SIMPLE_HANDS: &[JointSpec] = &[
    ("LeftHand_end", Some("LeftHand"), [0.1, 0.0, 0.0]),
    ("RightHand_end", Some("RightHand"), [-0.1, 0.0, 0.0]),
];

const BRANCHY_HANDS: &[JointSpec] = &[
    ("LeftHandIndex1", Some("LeftHand"), [0.08, 0.0, 0.02]),
    ("LeftHandIndex2", Some("LeftHandIndex1"), [0.04, 0.0, 0.0]),
    ("LeftHandIndex2_end", Some("LeftHandIndex2"), [0.03, 0.0, 0.0]),
    ("LeftHandThumb1", Some("LeftHand"), [0.03, 0.0, 0.05]),
    ("LeftHandThumb1_end", Some("LeftHandThumb1"), [0.03, 0.0, 0.03]),
    ("RightHandIndex1", Some("RightHand"), [-0.08, 0.0, 0.02]),
    ("RightHandIndex2", Some("RightHandIndex1"), [-0.04, 0.0, 0.0]),
    ("RightHandIndex2_end", Some("RightHandIndex2"), [-0.03, 0.0, 0.0]),
    ("RightHandThumb1", Some("RightHand"), [-0.03, 0.0, 0.05]),
    ("RightHandThumb1_end", Some("RightHandThumb1"), [-0.03, 0.0, 0.03]),
];

fn skeleton_from_specs(specs: &[JointSpec]) -> Result<Skeleton> {
    let names: Vec<String> = specs.iter().map(|s| s.0.to_string()).collect();
    let parents = specs
        .iter()
        .map(|s| {
            s.1.map(|p| {
                names
                    .iter()
                    .position(|n| n == p)
                    .ok_or_else(|| Error::InvalidSkeleton(format!("unknown parent {p}")))
            })
            .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    Skeleton::new(names, parents, specs.iter().map(|s| Vec3::from(s.2)).collect(), None)
}

/// Rest skeleton of a template, before proportion jitter.
pub fn template_skeleton(template: Template, params: &CharacterParams) -> Result<Skeleton> {
    match template {
        Template::BipedSimple => skeleton_from_specs(&[BIPED_CORE, SIMPLE_HANDS].concat()),
        Template::BipedBranchy => skeleton_from_specs(&[BIPED_CORE, BRANCHY_HANDS].concat()),
        Template::TwoBoneCylinder => {
            let l = params.cylinder_bone_length;
            Skeleton::new(
                vec!["Bone0".into(), "Bone1".into(), "Bone1_end".into()],
                vec![None, Some(0), Some(1)],
                vec![Vec3::zeros(), Vec3::new(0.0, l, 0.0), Vec3::new(0.0, l, 0.0)],
                None,
            )
        }
    }
}

/// Scales limb bones by seeded factors shared across mirror pairs, then
/// re-grounds through the root height so the toes stay at `y = 0`.
fn jitter_proportions(s: &Skeleton, seed: u64, amount: f64) -> Result<Skeleton> {
    if amount == 0.0 {
        return Ok(s.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = s.joint_count();
    let mut factors = vec![1.0; n];
    for j in 0..n {
        let k = s.rho()[j];
        factors[j] = if k < j { factors[k] } else { 1.0 + rng.gen_range(-amount..=amount) };
    }
    let mut offsets: Vec<Vec3> = s
        .offsets()
        .iter()
        .enumerate()
        .map(|(j, o)| if j == s.root() { *o } else { o * factors[j] })
        .collect();
    let tmp = s.with_offsets(offsets.clone())?;
    offsets[s.root()].y -= tmp.ground_contact_height();
    s.with_offsets(offsets)
}

struct TubeBuilder {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

impl TubeBuilder {
    fn ring_basis(d: &Vec3) -> (Vec3, Vec3) {
        let reference = if d.cross(&Vec3::z()).norm() > 1e-6 * d.norm() { Vec3::z() } else { Vec3::x() };
        let u = reference.cross(d).normalize();
        let w = d.normalize().cross(&u);
        (u, w)
    }

    /// Rings from `a` to `b` at parameters `ts`; optional caps at both ends.
    fn tube(&mut self, a: &Vec3, b: &Vec3, radius: f64, ts: &[f64], res: usize, caps: bool) {
        let d = b - a;
        let (u, w) = Self::ring_basis(&d);
        let base = self.vertices.len();
        for &t in ts {
            let c = a + d * t;
            for k in 0..res {
                let th = 2.0 * PI * k as f64 / res as f64;
                self.vertices.push(c + (u * th.cos() + w * th.sin()) * radius);
            }
        }
        let idx = |ring: usize, k: usize| base + ring * res + k % res;
        for ring in 0..ts.len() - 1 {
            for k in 0..res {
                let (a0, a1, b0, b1) = (idx(ring, k), idx(ring, k + 1), idx(ring + 1, k), idx(ring + 1, k + 1));
                self.faces.push([a0, a1, b1]);
                self.faces.push([a0, b1, b0]);
            }
        }
        if caps {
            let start = self.vertices.len();
            self.vertices.push(a + d * ts[0]);
            self.vertices.push(a + d * ts[ts.len() - 1]);
            let last = ts.len() - 1;
            for k in 0..res {
                self.faces.push([start, idx(0, k + 1), idx(0, k)]);
                self.faces.push([start + 1, idx(last, k), idx(last, k + 1)]);
            }
        }
    }
}

/// Overwrites each mirrored tube with the exact mirror image of its
/// partner so that mirrored vertices agree bit for bit.
fn mirror_exactly(vertices: &mut [Vec3], bones: &[(usize, usize)], ranges: &[std::ops::Range<usize>], rho: &[usize]) {
    for (b, &(p, c)) in bones.iter().enumerate() {
        let Some(m) = bones.iter().position(|&x| x == (rho[p], rho[c])) else {
            continue;
        };
        if m < b {
            continue;
        }
        for i in ranges[b].clone() {
            let image = vertices[i].component_mul(&MIRROR);
            let j = ranges[m]
                .clone()
                .min_by(|&x, &y| (vertices[x] - image).norm_squared().total_cmp(&(vertices[y] - image).norm_squared()))
                .expect("mirrored tubes have equal size");
            if m == b && j < i {
                continue;
            }
            if j == i {
                vertices[i].x = 0.0;
            } else {
                vertices[j] = image;
            }
        }
    }
}

fn bone_radius(len: f64, scale: f64) -> f64 {
    scale * (0.25 * len).clamp(0.045, 0.09)
}

fn smoothstep(edge0: f64, edge1: f64, x: f64) -> f64 {
    let t = ((x - edge0) / (edge1 - edge0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

/// Ground-truth falloff weights (see module docs).
pub fn falloff_weights(s: &Skeleton, vertices: &[Vec3], width: f64) -> Result<WeightMatrix> {
    let n = s.joint_count();
    let g = s.globals();
    let mut data = Vec::with_capacity(vertices.len() * n);
    for v in vertices {
        let dist: Vec<f64> = (0..n)
            .map(|j| {
                s.children(j)
                    .iter()
                    .map(|&c| segment_distance(v, &g[j], &g[c]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mut sorted = dist.clone();
        sorted.sort_by(f64::total_cmp);
        let d1 = sorted[0];
        let d2 = sorted.get(1).copied().unwrap_or(d1);
        let mut row: Vec<f64> = dist
            .iter()
            .map(|&dj| if dj <= d2 && dj.is_finite() { 1.0 - smoothstep(0.0, width, dj - d1) } else { 0.0 })
            .collect();
        if !d1.is_finite() {
            row = vec![0.0; n];
            row[s.root()] = 1.0;
        }
        let sum: f64 = row.iter().sum();
        data.extend(row.iter().map(|w| w / sum));
    }
    WeightMatrix::from_flat(vertices.len(), n, data)
}

pub fn make_character(template: Template, seed: u64, params: &CharacterParams) -> Result<SyntheticCharacter> {
    params.validate()?;
    let base = template_skeleton(template, params)?;
    let res = params.ring_resolution;
    let mut tb = TubeBuilder { vertices: Vec::new(), faces: Vec::new() };
    let skeleton = match template {
        Template::TwoBoneCylinder => {
            let top = base.globals()[2];
            let rings = params.cylinder_rings;
            let ts: Vec<f64> = (0..rings).map(|i| i as f64 / (rings - 1) as f64).collect();
            tb.tube(&Vec3::zeros(), &top, params.cylinder_radius, &ts, res, false);
            base
        }
        _ => {
            let s = jitter_proportions(&base, seed, params.proportion_jitter)?;
            let g = s.globals();
            let bones = s.bones();
            let mut ranges = Vec::with_capacity(bones.len());
            for &(p, c) in &bones {
                let start = tb.vertices.len();
                let len = (g[c] - g[p]).norm();
                if len == 0.0 {
                    ranges.push(start..start);
                    continue;
                }
                let r = bone_radius(len, params.radius_scale);
                let ext = r / len;
                let m = params.rings_per_bone;
                let ts: Vec<f64> = (0..m)
                    .map(|i| -ext + (1.0 + 2.0 * ext) * i as f64 / (m - 1) as f64)
                    .collect();
                tb.tube(&g[p], &g[c], r, &ts, res, true);
                ranges.push(start..tb.vertices.len());
            }
            mirror_exactly(&mut tb.vertices, &bones, &ranges, s.rho());
            s
        }
    };
    let mesh = Mesh::new(tb.vertices, tb.faces)?;
    let width = params.falloff_ratio * skeleton.average_bone_length();
    let gt_weights = falloff_weights(&skeleton, mesh.vertices(), width)?;
    let gt_clips = vec![make_clip(&skeleton, ClipKind::RandomSmooth, 8, seed, 60f64.to_radians())?];
    Ok(SyntheticCharacter {
        skeleton,
        mesh,
        gt_weights,
        gt_clips,
    })
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Smooth bounded motion. Every non-leaf joint rotates about a fixed axis by
/// `bound·s_j·(1 − cos ω_j t)/2`, with `|s_j| ≤ 1`, so frame 0 is the rest
/// pose and no joint exceeds `bound` radians. Leaves never rotate.
pub fn make_clip(s: &Skeleton, kind: ClipKind, frames: usize, seed: u64, bound: f64) -> Result<Vec<PoseTransforms>> {
    if frames == 0 {
        return Err(Error::InvalidConfig("a clip needs at least one frame".into()));
    }
    if !(bound.is_finite() && bound >= 0.0) {
        return Err(Error::InvalidConfig(format!("bad joint angle bound {bound}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = s.joint_count();
    let height = s.height();
    struct Channel {
        axis: Vec3,
        amp: f64,
        omega: f64,
    }
    let span = frames.max(2) as f64;
    let channels: Vec<Option<Channel>> = (0..n)
        .map(|j| {
            let axis = random_unit(&mut rng);
            let amp: f64 = rng.gen_range(-1.0..=1.0);
            let omega = 2.0 * PI * rng.gen_range(0.5..1.5f64) / span;
            if s.is_leaf(j) {
                return None;
            }
            let name = s.name(j).to_ascii_lowercase();
            let active = match kind {
                ClipKind::RandomSmooth => true,
                ClipKind::Wave => ["arm", "shoulder", "hand"].iter().any(|k| name.contains(k)) || n <= 4,
                ClipKind::Crouch => ["leg", "foot", "spine"].iter().any(|k| name.contains(k)) || n <= 4,
            };
            if !active {
                return None;
            }
            let (axis, amp) = match kind {
                ClipKind::Crouch => (Vec3::x(), amp.abs() * if name.contains("upleg") { -1.0 } else { 1.0 }),
                _ => (axis, amp),
            };
            Some(Channel { axis, amp, omega })
        })
        .collect();
    let drift = Vec3::new(rng.gen_range(-0.05..0.05), 0.0, rng.gen_range(0.0..0.1)) * height;
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let tf = t as f64;
        let local: Vec<Mat3> = channels
            .iter()
            .map(|c| match c {
                Some(c) => axis_angle(&c.axis, bound * c.amp * (1.0 - (c.omega * tf).cos()) / 2.0),
                None => Mat3::identity(),
            })
            .collect();
        let phase = tf / span;
        let mut root = drift * phase;
        if kind == ClipKind::Crouch {
            root.y -= 0.1 * height * (1.0 - (2.0 * PI * phase).cos()) / 2.0;
        }
        out.push(s.fk_unchecked(local, root));
    }
    Ok(out)
}
