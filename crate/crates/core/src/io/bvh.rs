//! BVH motion capture files.
//!
//! Rotation channels are intrinsic Euler angles in degrees, composed in the
//! order they are listed. Root position channels carry the absolute root
//! position. `End Site` blocks become leaf joints named `<parent>_end`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::math::{euler_to_matrix, matrix_to_euler, Axis, Mat3, Vec3};
use crate::skeleton::{PoseTransforms, Skeleton};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    fn parse(s: &str) -> Option<Channel> {
        Some(match s {
            "Xposition" => Channel::Xposition,
            "Yposition" => Channel::Yposition,
            "Zposition" => Channel::Zposition,
            "Xrotation" => Channel::Xrotation,
            "Yrotation" => Channel::Yrotation,
            "Zrotation" => Channel::Zrotation,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
            Channel::Zrotation => "Zrotation",
        }
    }

    pub fn rotation_axis(self) -> Option<Axis> {
        match self {
            Channel::Xrotation => Some(Axis::X),
            Channel::Yrotation => Some(Axis::Y),
            Channel::Zrotation => Some(Axis::Z),
            _ => None,
        }
    }

    pub fn position_axis(self) -> Option<Axis> {
        match self {
            Channel::Xposition => Some(Axis::X),
            Channel::Yposition => Some(Axis::Y),
            Channel::Zposition => Some(Axis::Z),
            _ => None,
        }
    }

    fn rotation(axis: Axis) -> Channel {
        match axis {
            Axis::X => Channel::Xrotation,
            Axis::Y => Channel::Yrotation,
            Axis::Z => Channel::Zrotation,
        }
    }
}

/// Parsed BVH file: hierarchy, per-joint channel layout and raw frame rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BvhDocument {
    pub skeleton: Skeleton,
    pub channels: Vec<Vec<Channel>>,
    pub frames: Vec<Vec<f64>>,
    pub frame_time: f64,
}

#[derive(Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    end: (usize, usize),
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        let mut tokens = Vec::new();
        let mut last_line = 1;
        for (li, line) in text.lines().enumerate() {
            last_line = li + 1;
            let mut start = None;
            for (ci, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
                if ch.is_whitespace() {
                    if let Some(s) = start.take() {
                        tokens.push(Token {
                            text: &line[s..ci],
                            line: li + 1,
                            col: s + 1,
                        });
                    }
                } else if start.is_none() {
                    start = Some(ci);
                }
            }
        }
        Lexer {
            tokens,
            pos: 0,
            end: (last_line, 1),
        }
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .map_or(self.end, |t| (t.line, t.col))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (l, c) = self.here();
        Error::parse(l, c, msg)
    }

    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(|t| t.text)
    }

    fn next(&mut self, what: &str) -> Result<Token<'a>> {
        let tok = *self.tokens.get(self.pos).ok_or_else(|| {
            Error::parse(self.end.0, self.end.1, format!("unexpected end of file, expected {what}"))
        })?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let (l, c) = self.here();
        let tok = self.next(word)?;
        if tok.text != word {
            return Err(Error::parse(l, c, format!("expected `{word}`, found `{}`", tok.text)));
        }
        Ok(())
    }

    fn number(&mut self, what: &str) -> Result<f64> {
        let (l, c) = self.here();
        let tok = self.next(what)?;
        match tok.text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::parse(l, c, format!("expected {what}, found `{}`", tok.text))),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let (l, c) = self.here();
        let tok = self.next(what)?;
        tok.text
            .parse::<usize>()
            .map_err(|_| Error::parse(l, c, format!("expected {what}, found `{}`", tok.text)))
    }
}

struct RawJoint {
    name: String,
    parent: Option<usize>,
    offset: Vec3,
    channels: Vec<Channel>,
}

fn parse_joint(
    lx: &mut Lexer<'_>,
    name: String,
    parent: Option<usize>,
    joints: &mut Vec<RawJoint>,
) -> Result<()> {
    lx.expect("{")?;
    lx.expect("OFFSET")?;
    let offset = Vec3::new(
        lx.number("offset x")?,
        lx.number("offset y")?,
        lx.number("offset z")?,
    );
    let idx = joints.len();
    joints.push(RawJoint {
        name,
        parent,
        offset,
        channels: Vec::new(),
    });
    if lx.peek() == Some("CHANNELS") {
        lx.next("CHANNELS")?;
        let n = lx.count("channel count")?;
        if n > 6 {
            return Err(lx.err(format!("{n} channels on one joint")));
        }
        for _ in 0..n {
            let (l, c) = lx.here();
            let tok = lx.next("channel name")?;
            let ch = Channel::parse(tok.text).ok_or_else(|| Error::UnsupportedChannel {
                name: tok.text.to_string(),
                pos: crate::error::Position { line: l, column: c },
            })?;
            if joints[idx].channels.contains(&ch) {
                return Err(Error::parse(l, c, format!("duplicate channel {}", tok.text)));
            }
            joints[idx].channels.push(ch);
        }
    }
    loop {
        let (l, c) = lx.here();
        let tok = lx.next("`JOINT`, `End Site` or `}`")?;
        match tok.text {
            "}" => return Ok(()),
            "JOINT" => {
                let child = lx.next("joint name")?.text.to_string();
                parse_joint(lx, child, Some(idx), joints)?;
            }
            "End" => {
                lx.expect("Site")?;
                lx.expect("{")?;
                lx.expect("OFFSET")?;
                let offset = Vec3::new(
                    lx.number("offset x")?,
                    lx.number("offset y")?,
                    lx.number("offset z")?,
                );
                lx.expect("}")?;
                let mut name = format!("{}_end", joints[idx].name);
                while joints.iter().any(|j| j.name == name) {
                    name.push('_');
                }
                joints.push(RawJoint {
                    name,
                    parent: Some(idx),
                    offset,
                    channels: Vec::new(),
                });
            }
            other => {
                return Err(Error::parse(
                    l,
                    c,
                    format!("expected `JOINT`, `End Site` or `}}`, found `{other}`"),
                ))
            }
        }
    }
}

pub fn parse_bvh(text: &str) -> Result<BvhDocument> {
    let mut lx = Lexer::new(text);
    lx.expect("HIERARCHY")?;
    lx.expect("ROOT")?;
    let root_name = lx.next("root name")?.text.to_string();
    let mut joints = Vec::new();
    parse_joint(&mut lx, root_name, None, &mut joints)?;

    lx.expect("MOTION")?;
    let (l, c) = lx.here();
    let tok = lx.next("`Frames:`")?;
    let frame_count = match tok.text {
        "Frames:" => lx.count("frame count")?,
        "Frames" => {
            lx.expect(":")?;
            lx.count("frame count")?
        }
        other => return Err(Error::parse(l, c, format!("expected `Frames:`, found `{other}`"))),
    };
    lx.expect("Frame")?;
    let (l, c) = lx.here();
    let tok = lx.next("`Time:`")?;
    if tok.text != "Time:" {
        return Err(Error::parse(l, c, format!("expected `Time:`, found `{}`", tok.text)));
    }
    let (l, c) = lx.here();
    let frame_time = lx.number("frame time")?;
    if frame_time <= 0.0 {
        return Err(Error::parse(l, c, format!("frame time must be positive, got {frame_time}")));
    }
    let width: usize = joints.iter().map(|j| j.channels.len()).sum();
    let mut frames = Vec::with_capacity(frame_count);
    for f in 0..frame_count {
        let mut row = Vec::with_capacity(width);
        for _ in 0..width {
            row.push(lx.number(&format!("channel value (frame {f})"))?);
        }
        frames.push(row);
    }
    if lx.peek().is_some() {
        return Err(lx.err(format!(
            "trailing data after {frame_count} frames of {width} channels"
        )));
    }

    let channels = joints.iter().map(|j| j.channels.clone()).collect();
    let skeleton = Skeleton::new(
        joints.iter().map(|j| j.name.clone()).collect(),
        joints.iter().map(|j| j.parent).collect(),
        joints.iter().map(|j| j.offset).collect(),
        None,
    )?;
    Ok(BvhDocument {
        skeleton,
        channels,
        frames,
        frame_time,
    })
}

fn write_joint(doc: &BvhDocument, j: usize, depth: usize, out: &mut String) {
    let s = &doc.skeleton;
    let pad = "  ".repeat(depth);
    let o = s.offsets()[j];
    let _ = writeln!(out, "{pad}{{");
    let _ = writeln!(out, "{pad}  OFFSET {} {} {}", o.x, o.y, o.z);
    let ch = &doc.channels[j];
    if !ch.is_empty() {
        let names: Vec<&str> = ch.iter().map(|c| c.as_str()).collect();
        let _ = writeln!(out, "{pad}  CHANNELS {} {}", ch.len(), names.join(" "));
    }
    let children = s.children(j);
    for &c in children {
        if is_end_site(doc, c) {
            let o = s.offsets()[c];
            let _ = writeln!(out, "{pad}  End Site");
            let _ = writeln!(out, "{pad}  {{");
            let _ = writeln!(out, "{pad}    OFFSET {} {} {}", o.x, o.y, o.z);
            let _ = writeln!(out, "{pad}  }}");
        } else {
            let _ = writeln!(out, "{pad}  JOINT {}", s.name(c));
            write_joint(doc, c, depth + 1, out);
        }
    }
    let _ = writeln!(out, "{pad}}}");
}

/// Leaves without channels are written as `End Site` blocks.
fn is_end_site(doc: &BvhDocument, j: usize) -> bool {
    doc.skeleton.is_leaf(j) && doc.channels[j].is_empty() && doc.skeleton.parent(j).is_some()
}

pub fn write_bvh(doc: &BvhDocument) -> String {
    let s = &doc.skeleton;
    let mut out = String::from("HIERARCHY\n");
    let _ = writeln!(out, "ROOT {}", s.name(s.root()));
    write_joint(doc, s.root(), 0, &mut out);
    out.push_str("MOTION\n");
    let _ = writeln!(out, "Frames: {}", doc.frames.len());
    let _ = writeln!(out, "Frame Time: {}", doc.frame_time);
    for row in &doc.frames {
        let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&vals.join(" "));
        out.push('\n');
    }
    out
}

impl BvhDocument {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Column of each joint's first channel in a frame row.
    fn channel_starts(&self) -> Vec<usize> {
        let mut acc = 0;
        self.channels
            .iter()
            .map(|c| {
                let s = acc;
                acc += c.len();
                s
            })
            .collect()
    }

    /// Local rotations and root translation for one frame.
    pub fn pose(&self, frame: usize) -> Result<PoseTransforms> {
        let s = &self.skeleton;
        let row = self.frames.get(frame).ok_or(Error::IndexOutOfRange {
            index: frame as i64,
            len: self.frames.len(),
        })?;
        let starts = self.channel_starts();
        let mut local = vec![Mat3::identity(); s.joint_count()];
        let mut root_pos = s.offsets()[s.root()];
        for j in 0..s.joint_count() {
            let mut r = Mat3::identity();
            for (k, ch) in self.channels[j].iter().enumerate() {
                let v = row[starts[j] + k];
                if let Some(axis) = ch.rotation_axis() {
                    r *= axis.rotation(v.to_radians());
                } else if let Some(axis) = ch.position_axis() {
                    if j != s.root() {
                        return Err(Error::InvalidConfig(format!(
                            "position channels on non-root joint {} cannot be posed",
                            s.name(j)
                        )));
                    }
                    root_pos[axis.index()] = v;
                }
            }
            local[j] = r;
        }
        Ok(s.fk_unchecked(local, root_pos - s.offsets()[s.root()]))
    }

    pub fn poses(&self) -> Result<Vec<PoseTransforms>> {
        (0..self.frames.len()).map(|f| self.pose(f)).collect()
    }

    /// Builds a document from poses. Non-leaf joints get three rotation
    /// channels in `order`, the root also gets position channels, and leaves
    /// become end sites.
    pub fn from_poses(
        skeleton: &Skeleton,
        poses: &[PoseTransforms],
        frame_time: f64,
        order: [Axis; 3],
    ) -> Result<BvhDocument> {
        if frame_time <= 0.0 || !frame_time.is_finite() {
            return Err(Error::NonPositiveDt(frame_time));
        }
        let n = skeleton.joint_count();
        let rot: Vec<Channel> = order.iter().map(|&a| Channel::rotation(a)).collect();
        let channels: Vec<Vec<Channel>> = (0..n)
            .map(|j| {
                if j == skeleton.root() {
                    let mut c = vec![Channel::Xposition, Channel::Yposition, Channel::Zposition];
                    c.extend(&rot);
                    c
                } else if skeleton.is_leaf(j) {
                    Vec::new()
                } else {
                    rot.clone()
                }
            })
            .collect();
        let mut frames = Vec::with_capacity(poses.len());
        for pose in poses {
            if pose.joint_count() != n {
                return Err(Error::size("pose joint count", n, pose.joint_count()));
            }
            let mut row = Vec::new();
            for j in 0..n {
                if channels[j].is_empty() {
                    continue;
                }
                if j == skeleton.root() {
                    let p = skeleton.offsets()[j] + pose.root_translation;
                    row.extend([p.x, p.y, p.z]);
                }
                let angles = matrix_to_euler(order, &pose.local_rotation[j]);
                row.extend(angles.iter().map(|a| a.to_degrees()));
            }
            frames.push(row);
        }
        Ok(BvhDocument {
            skeleton: skeleton.clone(),
            channels,
            frames,
            frame_time,
        })
    }

    /// Rotation order of the first joint with three rotation channels.
    pub fn rotation_order(&self) -> Option<[Axis; 3]> {
        self.channels.iter().find_map(|c| {
            let axes: Vec<Axis> = c.iter().filter_map(|c| c.rotation_axis()).collect();
            (axes.len() == 3).then(|| [axes[0], axes[1], axes[2]])
        })
    }
}

/// Rotation matrix for Euler angles in degrees, intrinsic in `order`.
pub fn euler_degrees(order: [Axis; 3], degrees: [f64; 3]) -> Mat3 {
    euler_to_matrix(order, degrees.map(f64::to_radians))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const MINIMAL: &str = include_str!("../../fixtures/minimal.bvh");
    const ORDERS: &str = include_str!("../../fixtures/rotation_orders.bvh");

    #[test]
    fn minimal_fixture() {
        let doc = parse_bvh(MINIMAL).unwrap();
        assert_eq!(doc.skeleton.joint_count(), 3);
        assert_eq!(doc.skeleton.names(), &["Hips", "Chest", "Chest_end"]);
        assert_eq!(doc.frames.len(), 1);
        assert_eq!(doc.channels[0].len(), 6);
        assert_eq!(doc.channels[1].len(), 3);
        assert!(doc.channels[2].is_empty());
        let pose = doc.pose(0).unwrap();
        for (p, g) in pose.positions().iter().zip(doc.skeleton.globals()) {
            assert_abs_diff_eq!(p, g, epsilon = 1e-15);
        }
    }

    #[test]
    fn rotation_order_matters() {
        let doc = parse_bvh(ORDERS).unwrap();
        let pose = doc.pose(0).unwrap();
        let s = &doc.skeleton;
        let zxy = s.index_of("ArmZXY").unwrap();
        let xyz = s.index_of("ArmXYZ").unwrap();
        // both joints carry the angles (z=90, x=30, y=45) listed in their own order
        let rz = Axis::Z.rotation(90f64.to_radians());
        let rx = Axis::X.rotation(30f64.to_radians());
        let ry = Axis::Y.rotation(45f64.to_radians());
        assert_abs_diff_eq!(pose.local_rotation[zxy], rz * rx * ry, epsilon = 1e-12);
        assert_abs_diff_eq!(pose.local_rotation[xyz], rx * ry * rz, epsilon = 1e-12);
        let a = pose.positions()[s.index_of("ArmZXY_end").unwrap()] - pose.positions()[zxy];
        let b = pose.positions()[s.index_of("ArmXYZ_end").unwrap()] - pose.positions()[xyz];
        assert!((a - b).norm() > 0.1);
        // hand-composed end-site direction: rotation applied to the (1,0,0) offset
        assert_abs_diff_eq!(a, rz * rx * ry * Vec3::x(), epsilon = 1e-12);
    }

    #[test]
    fn round_trip_fixtures() {
        for text in [MINIMAL, ORDERS] {
            let doc = parse_bvh(text).unwrap();
            let again = parse_bvh(&write_bvh(&doc)).unwrap();
            assert_eq!(again.skeleton.names(), doc.skeleton.names());
            assert_eq!(again.channels, doc.channels);
            for (a, b) in again.frames.iter().flatten().zip(doc.frames.iter().flatten()) {
                assert!((a - b).abs() < 1e-6);
            }
            for (a, b) in again.skeleton.offsets().iter().zip(doc.skeleton.offsets()) {
                assert!((a - b).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn empty_motion_writes_zero_frames() {
        let mut doc = parse_bvh(MINIMAL).unwrap();
        doc.frames.clear();
        let text = write_bvh(&doc);
        assert!(text.contains("Frames: 0"));
        assert_eq!(parse_bvh(&text).unwrap().frames.len(), 0);
    }

    #[test]
    fn identity_pose_has_zero_rotations() {
        let doc = parse_bvh(MINIMAL).unwrap();
        let rest = doc.skeleton.rest_pose();
        let out = BvhDocument::from_poses(&doc.skeleton, &[rest], 1.0 / 30.0, [Axis::Z, Axis::X, Axis::Y])
            .unwrap();
        let row = &out.frames[0];
        // root position then all rotations
        assert_eq!(&row[3..], &[0.0; 6]);
    }

    #[test]
    fn from_poses_round_trips_rotations() {
        let doc = parse_bvh(ORDERS).unwrap();
        let poses = doc.poses().unwrap();
        let out = BvhDocument::from_poses(&doc.skeleton, &poses, doc.frame_time, [Axis::Z, Axis::X, Axis::Y])
            .unwrap();
        let back = parse_bvh(&write_bvh(&out)).unwrap().poses().unwrap();
        for (a, b) in back.iter().zip(&poses) {
            for (x, y) in a.global.iter().zip(&b.global) {
                assert!(x.max_abs_diff(y) < 1e-9);
            }
        }
    }

    #[test]
    fn positioned_errors() {
        let bad = MINIMAL.replace("OFFSET 0 1 0", "OFFSET 0 x 0");
        match parse_bvh(&bad) {
            Err(Error::Parse { pos, .. }) => assert!(pos.line > 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        let unsupported = MINIMAL.replace("Xrotation", "Wrotation");
        assert!(matches!(parse_bvh(&unsupported), Err(Error::UnsupportedChannel { .. })));
        let short = MINIMAL.trim_end().rsplit_once(' ').unwrap().0.to_string();
        assert!(matches!(parse_bvh(&short), Err(Error::Parse { .. })));
        let extra = format!("{MINIMAL} 1.0");
        assert!(parse_bvh(&extra).is_err());
        let zero_time = MINIMAL.replace("Frame Time: 0.0333333", "Frame Time: 0");
        assert!(parse_bvh(&zero_time).is_err());
    }

    #[test]
    fn seeded_mutations_never_panic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let bytes = ORDERS.as_bytes();
        for _ in 0..500 {
            let mut b = bytes.to_vec();
            for _ in 0..rng.gen_range(1..4) {
                let i = rng.gen_range(0..b.len());
                match rng.gen_range(0..3) {
                    0 => b[i] = rng.gen_range(32..127),
                    1 => {
                        b.remove(i);
                    }
                    _ => b.insert(i, b" {}-.0123456789\n"[rng.gen_range(0..16)]),
                }
            }
            let text = String::from_utf8_lossy(&b);
            if let Ok(doc) = parse_bvh(&text) {
                // whatever parses must be internally consistent
                let width: usize = doc.channels.iter().map(Vec::len).sum();
                assert!(doc.frames.iter().all(|r| r.len() == width));
            }
        }
    }
}
