//! Command-line pipeline: `synth`, `augment`, `rig`, `retarget`, `skin`,
//! `deform` and `eval`.
//!
//! Every command writes into `--out` together with a `manifest.json` that
//! lists the inputs with their SHA-256, the configuration hash and the crate
//! version. Exit codes: 0 success, 1 usage, 2 input error, 3 solver failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::animation::deform_clip;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::fixtures::{make_character, make_clip, CharacterParams, ClipKind, Template};
use crate::io::{
    parse_bvh, parse_obj, read_skeleton_json, read_text, read_weights, write_bvh, write_obj, write_skeleton_json,
    write_text, write_weights, BvhDocument,
};
use crate::math::{Axis, Vec3};
use crate::mesh::{DeformedMesh, Mesh};
use crate::metrics::{cd_b2b, cd_j2b, cd_j2j, pooled_deformation, skinning_l1, MetricReport};
use crate::retarget::retarget_clip;
use crate::skeleton::{augment_skeleton, PoseTransforms, Skeleton};
use crate::solvers::skinning::initial_logits;
use crate::solvers::{solve_rig, solve_skinning, SkinningWeights, TrainingSample};
use crate::weights::WeightMatrix;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

const DEFAULT_FRAME_TIME: f64 = 1.0 / 30.0;
const DEFAULT_ORDER: [Axis; 3] = [Axis::Z, Axis::X, Axis::Y];

#[derive(Debug, Parser)]
#[command(name = "rigskin", version, about = "Rig, skin and animate character meshes")]
pub struct Cli {
    /// Worker threads (0 uses every core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// TOML file with [solver], [contact] and [augment] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic character bundle.
    Synth {
        #[command(flatten)]
        common: Common,
        /// biped_simple, biped_branchy or two_bone_cylinder.
        #[arg(long, default_value = "biped_simple")]
        template: String,
        /// wave, crouch or random_smooth.
        #[arg(long, default_value = "random_smooth")]
        clip: String,
        #[arg(long, default_value_t = 30)]
        frames: usize,
        /// Joint angle bound in degrees.
        #[arg(long, default_value_t = 45.0)]
        max_angle: f64,
    },
    /// Randomly modify a skeleton's configuration.
    Augment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        skeleton: PathBuf,
        /// Joints to remove; overrides the config file.
        #[arg(long)]
        remove: Option<usize>,
        /// Joints to insert; overrides the config file.
        #[arg(long)]
        insert: Option<usize>,
    },
    /// Fit a source skeleton to a mesh.
    Rig {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mesh: PathBuf,
        /// Source skeleton (JSON or BVH).
        #[arg(long)]
        skeleton: PathBuf,
        /// Ground-truth joints to fit against (JSON or BVH).
        #[arg(long)]
        gt_skeleton: Option<PathBuf>,
    },
    /// Transfer motion onto another skeleton.
    Retarget {
        #[command(flatten)]
        common: Common,
        /// Source motion.
        #[arg(long)]
        motion: PathBuf,
        /// Target skeleton (JSON or BVH).
        #[arg(long)]
        skeleton: PathBuf,
    },
    /// Fit skinning weights from posed training frames.
    Skin {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        skeleton: PathBuf,
        /// Training motion on `--skeleton`.
        #[arg(long)]
        motion: PathBuf,
        /// Directory of frame_NNNNN.obj deformed meshes, one per motion frame.
        #[arg(long, conflicts_with = "gt_weights", required_unless_present = "gt_weights")]
        deformed_dir: Option<PathBuf>,
        /// Build training frames by deforming the mesh with these weights.
        #[arg(long)]
        gt_weights: Option<PathBuf>,
        /// Skeleton the ground-truth weights refer to (defaults to `--skeleton`).
        #[arg(long, requires = "gt_weights")]
        gt_skeleton: Option<PathBuf>,
        /// Motion on the ground-truth skeleton (defaults to `--motion`).
        #[arg(long, requires = "gt_weights")]
        gt_motion: Option<PathBuf>,
        /// Use at most this many evenly spaced frames.
        #[arg(long, default_value_t = 8)]
        max_frames: usize,
    },
    /// Deform a mesh by a motion with linear blend skinning.
    Deform {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        skeleton: PathBuf,
        #[arg(long)]
        motion: PathBuf,
    },
    /// Compare predicted assets against ground truth.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "gt_skeleton")]
        pred_skeleton: Option<PathBuf>,
        #[arg(long)]
        gt_skeleton: Option<PathBuf>,
        #[arg(long, requires = "gt_weights")]
        pred_weights: Option<PathBuf>,
        #[arg(long)]
        gt_weights: Option<PathBuf>,
        #[arg(long, requires = "gt_frames")]
        pred_frames: Option<PathBuf>,
        #[arg(long)]
        gt_frames: Option<PathBuf>,
    },
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    if cli.threads > 0 {
        // fails only when a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) => EXIT_USAGE,
        e if e.is_parse_error() => EXIT_INPUT,
        _ => EXIT_SOLVER,
    }
}

struct Manifest {
    command: &'static str,
    seed: u64,
    config: PipelineConfig,
    inputs: Vec<(String, String)>,
    outputs: Vec<String>,
}

impl Manifest {
    fn new(command: &'static str, common: &Common, config: &PipelineConfig) -> Self {
        Manifest {
            command,
            seed: common.seed,
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        let text = read_text(path)?;
        self.inputs.push((path.display().to_string(), sha256_hex(text.as_bytes())));
        Ok(text)
    }

    fn write(&mut self, out: &Path, name: &str, text: &str) -> Result<()> {
        write_text(&out.join(name), text)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(self, out: &Path) -> Result<()> {
        let value = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config_hash": self.config.hash(),
            "inputs": self.inputs.iter().map(|(p, h)| json!({"path": p, "sha256": h})).collect::<Vec<_>>(),
            "outputs": self.outputs,
        });
        let text = serde_json::to_string_pretty(&value).expect("manifest serializes") + "\n";
        write_text(&out.join("manifest.json"), &text)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { pos, msg } => Error::Parse {
            pos,
            msg: format!("{}: {msg}", path.display()),
        },
        Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
        Error::UnsupportedChannel { name, pos } => Error::UnsupportedChannel {
            name: format!("{name} in {}", path.display()),
            pos,
        },
        other => other,
    }
}

fn is_bvh(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("bvh"))
}

fn load_mesh(m: &mut Manifest, path: &Path) -> Result<Mesh> {
    parse_obj(&m.read(path)?).map_err(|e| in_file(path, e))
}

fn load_skeleton(m: &mut Manifest, path: &Path) -> Result<Skeleton> {
    let text = m.read(path)?;
    if is_bvh(path) {
        Ok(parse_bvh(&text).map_err(|e| in_file(path, e))?.skeleton)
    } else {
        read_skeleton_json(&text).map_err(|e| in_file(path, e))
    }
}

fn load_motion(m: &mut Manifest, path: &Path) -> Result<BvhDocument> {
    parse_bvh(&m.read(path)?).map_err(|e| in_file(path, e))
}

fn load_weights(m: &mut Manifest, path: &Path) -> Result<(Vec<String>, WeightMatrix)> {
    read_weights(&m.read(path)?).map_err(|e| in_file(path, e))
}

/// Poses of a motion replayed on `s`, matching joints by name.
fn poses_on(s: &Skeleton, doc: &BvhDocument, path: &Path) -> Result<Vec<PoseTransforms>> {
    let index: Vec<usize> = s
        .names()
        .iter()
        .map(|n| {
            doc.skeleton.index_of(n).ok_or_else(|| {
                Error::ShapeMismatch(format!("{}: motion has no joint named `{n}`", path.display()))
            })
        })
        .collect::<Result<_>>()?;
    if doc.skeleton.joint_count() != s.joint_count() {
        return Err(Error::ShapeMismatch(format!(
            "{}: motion has {} joints, skeleton has {}",
            path.display(),
            doc.skeleton.joint_count(),
            s.joint_count()
        )));
    }
    doc.poses()?
        .into_iter()
        .map(|p| {
            let local = index.iter().map(|&k| p.local_rotation[k]).collect::<Vec<_>>();
            s.forward_kinematics(&local, p.root_translation)
        })
        .collect()
}

fn check_columns(names: &[String], s: &Skeleton, path: &Path) -> Result<()> {
    if names != s.names() {
        return Err(Error::ShapeMismatch(format!(
            "{}: weight columns do not match the skeleton's joints",
            path.display()
        )));
    }
    Ok(())
}

fn frame_name(i: usize) -> String {
    format!("frame_{i:05}.obj")
}

fn evenly_spaced(count: usize, max: usize) -> Vec<usize> {
    if max == 0 || count <= max {
        return (0..count).collect();
    }
    let mut idx: Vec<usize> = (0..max).map(|k| k * (count - 1) / (max - 1).max(1)).collect();
    idx.dedup();
    idx
}

fn execute(cli: &Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    match &cli.command {
        Command::Synth {
            common,
            template,
            clip,
            frames,
            max_angle,
        } => cmd_synth(common, &config, template.parse()?, clip.parse()?, *frames, *max_angle),
        Command::Augment {
            common,
            skeleton,
            remove,
            insert,
        } => cmd_augment(common, &config, skeleton, *remove, *insert),
        Command::Rig {
            common,
            mesh,
            skeleton,
            gt_skeleton,
        } => cmd_rig(common, &config, mesh, skeleton, gt_skeleton.as_deref()),
        Command::Retarget { common, motion, skeleton } => cmd_retarget(common, &config, motion, skeleton),
        Command::Skin {
            common,
            mesh,
            skeleton,
            motion,
            deformed_dir,
            gt_weights,
            gt_skeleton,
            gt_motion,
            max_frames,
        } => {
            let source = match (deformed_dir, gt_weights) {
                (Some(d), _) => TrainingSource::Frames(d),
                (None, Some(w)) => TrainingSource::Weights {
                    weights: w,
                    skeleton: gt_skeleton.as_deref(),
                    motion: gt_motion.as_deref(),
                },
                (None, None) => {
                    return Err(Error::InvalidConfig("skin needs --deformed-dir or --gt-weights".into()))
                }
            };
            cmd_skin(common, &config, mesh, skeleton, motion, source, *max_frames)
        }
        Command::Deform {
            common,
            mesh,
            weights,
            skeleton,
            motion,
        } => cmd_deform(common, &config, mesh, weights, skeleton, motion),
        Command::Eval {
            common,
            pred_skeleton,
            gt_skeleton,
            pred_weights,
            gt_weights,
            pred_frames,
            gt_frames,
        } => cmd_eval(
            common,
            &config,
            EvalInputs {
                pred_skeleton: pred_skeleton.as_deref(),
                gt_skeleton: gt_skeleton.as_deref(),
                pred_weights: pred_weights.as_deref(),
                gt_weights: gt_weights.as_deref(),
                pred_frames: pred_frames.as_deref(),
                gt_frames: gt_frames.as_deref(),
            },
        ),
    }
}

fn cmd_synth(
    common: &Common,
    config: &PipelineConfig,
    template: Template,
    clip: ClipKind,
    frames: usize,
    max_angle: f64,
) -> Result<()> {
    let mut m = Manifest::new("synth", common, config);
    let c = make_character(template, common.seed, &CharacterParams::default())?;
    let poses = make_clip(&c.skeleton, clip, frames, common.seed, max_angle.to_radians())?;
    let doc = BvhDocument::from_poses(&c.skeleton, &poses, DEFAULT_FRAME_TIME, DEFAULT_ORDER)?;
    let out = &common.out;
    m.write(out, "mesh.obj", &write_obj(c.mesh.vertices(), c.mesh.faces()))?;
    m.write(out, "skeleton.json", &write_skeleton_json(&c.skeleton))?;
    m.write(out, "weights.txt", &write_weights(&c.gt_weights, c.skeleton.names())?)?;
    m.write(out, "motion.bvh", &write_bvh(&doc))?;
    m.finish(out)
}

fn cmd_augment(
    common: &Common,
    config: &PipelineConfig,
    skeleton: &Path,
    remove: Option<usize>,
    insert: Option<usize>,
) -> Result<()> {
    let mut m = Manifest::new("augment", common, config);
    let s = load_skeleton(&mut m, skeleton)?;
    let mut cfg = config.augment.clone();
    if let Some(r) = remove {
        cfg.remove = r;
    }
    if let Some(i) = insert {
        cfg.insert = i;
    }
    m.config.augment = cfg.clone();
    let a = augment_skeleton(&s, common.seed, &cfg)?;
    m.write(&common.out, "skeleton.json", &write_skeleton_json(&a))?;
    m.finish(&common.out)
}

fn cmd_rig(
    common: &Common,
    config: &PipelineConfig,
    mesh: &Path,
    skeleton: &Path,
    gt_skeleton: Option<&Path>,
) -> Result<()> {
    let mut m = Manifest::new("rig", common, config);
    let mesh = load_mesh(&mut m, mesh)?;
    let source = load_skeleton(&mut m, skeleton)?;
    let gt = gt_skeleton.map(|p| load_skeleton(&mut m, p)).transpose()?;
    let mut cfg = config.solver.clone();
    cfg.seed = common.seed;
    let solution = solve_rig(&mesh, &source, &cfg, gt.as_ref().map(|g| g.globals()))?;
    let target = &solution.target_skeleton;
    let mut diag = json!({
        "initial_scale": solution.initial_scale,
        "steps": solution.loss_trace.len() - 1,
        "initial_loss": solution.loss_trace[0],
        "final_loss": solution.loss_trace.last(),
        "height": target.height(),
    });
    if let Some(g) = &gt {
        diag["cd_j2j"] = json!(cd_j2j(target.globals(), g.globals())?);
    }
    m.write(&common.out, "skeleton.json", &write_skeleton_json(target))?;
    m.write(
        &common.out,
        "rig.json",
        &(serde_json::to_string_pretty(&diag).expect("diagnostics serialize") + "\n"),
    )?;
    m.finish(&common.out)
}

fn cmd_retarget(common: &Common, config: &PipelineConfig, motion: &Path, skeleton: &Path) -> Result<()> {
    let mut m = Manifest::new("retarget", common, config);
    let doc = load_motion(&mut m, motion)?;
    let tgt = load_skeleton(&mut m, skeleton)?;
    let (corr, poses) = retarget_clip(&doc.poses()?, &doc.skeleton, &tgt)?;
    log::info!("retarget: {} of {} target joints mapped", corr.mapped_count(), tgt.joint_count());
    let order = doc.rotation_order().unwrap_or(DEFAULT_ORDER);
    let out = BvhDocument::from_poses(&tgt, &poses, doc.frame_time, order)?;
    m.write(&common.out, "motion.bvh", &write_bvh(&out))?;
    m.finish(&common.out)
}

enum TrainingSource<'a> {
    Frames(&'a Path),
    Weights {
        weights: &'a Path,
        skeleton: Option<&'a Path>,
        motion: Option<&'a Path>,
    },
}

fn cmd_skin(
    common: &Common,
    config: &PipelineConfig,
    mesh_path: &Path,
    skeleton: &Path,
    motion: &Path,
    source: TrainingSource<'_>,
    max_frames: usize,
) -> Result<()> {
    let mut m = Manifest::new("skin", common, config);
    let mesh = load_mesh(&mut m, mesh_path)?;
    let s = load_skeleton(&mut m, skeleton)?;
    let doc = load_motion(&mut m, motion)?;
    let poses = poses_on(&s, &doc, motion)?;
    let deformed: Vec<DeformedMesh> = match source {
        TrainingSource::Frames(dir) => (0..poses.len())
            .map(|i| {
                let path = dir.join(frame_name(i));
                let frame = load_mesh(&mut m, &path)?;
                if frame.vertex_count() != mesh.vertex_count() {
                    return Err(Error::ShapeMismatch(format!(
                        "{}: {} vertices, mesh has {}",
                        path.display(),
                        frame.vertex_count(),
                        mesh.vertex_count()
                    )));
                }
                Ok(DeformedMesh::new(frame.vertices().to_vec()))
            })
            .collect::<Result<_>>()?,
        TrainingSource::Weights {
            weights,
            skeleton: gt_skel,
            motion: gt_motion,
        } => {
            let (names, w) = load_weights(&mut m, weights)?;
            let gs = match gt_skel {
                Some(p) => load_skeleton(&mut m, p)?,
                None => s.clone(),
            };
            check_columns(&names, &gs, weights)?;
            let gt_poses = match gt_motion {
                Some(p) => {
                    let d = load_motion(&mut m, p)?;
                    poses_on(&gs, &d, p)?
                }
                None => poses_on(&gs, &doc, motion)?,
            };
            if gt_poses.len() != poses.len() {
                return Err(Error::ShapeMismatch(format!(
                    "ground-truth motion has {} frames, training motion has {}",
                    gt_poses.len(),
                    poses.len()
                )));
            }
            deform_clip(&mesh, &w, &gs, &gt_poses)?
        }
    };
    let samples: Vec<TrainingSample> = evenly_spaced(poses.len(), max_frames)
        .into_iter()
        .map(|i| TrainingSample {
            pose: poses[i].clone(),
            gt_deformed: deformed[i].clone(),
        })
        .collect();
    let mut cfg = config.solver.clone();
    cfg.seed = common.seed;
    let (weights, diag) = match solve_skinning(&mesh, &s, &samples, &cfg) {
        Ok(fit) => {
            let diag = json!({
                "status": "converged",
                "samples": samples.len(),
                "steps": fit.loss_trace.len() - 1,
                "initial_loss": fit.initial_loss(),
                "final_loss": fit.final_loss(),
                "tied_joints": fit.tied_joints.iter().map(|&j| s.name(j)).collect::<Vec<_>>(),
            });
            (fit.weights.into_weights(), diag)
        }
        Err(Error::Unidentifiable) => {
            log::warn!("every training frame is the rest pose; writing distance-based initial weights");
            eprintln!("warning: {}", Error::Unidentifiable);
            let z = initial_logits(&mesh, &s, &cfg);
            let w = SkinningWeights::from_logits(mesh.vertex_count(), s.joint_count(), z, cfg.n_d)?;
            (w.into_weights(), json!({"status": "unidentifiable", "samples": samples.len()}))
        }
        Err(e) => return Err(e),
    };
    m.write(&common.out, "weights.txt", &write_weights(&weights, s.names())?)?;
    m.write(
        &common.out,
        "skin.json",
        &(serde_json::to_string_pretty(&diag).expect("diagnostics serialize") + "\n"),
    )?;
    m.finish(&common.out)
}

fn cmd_deform(
    common: &Common,
    config: &PipelineConfig,
    mesh: &Path,
    weights: &Path,
    skeleton: &Path,
    motion: &Path,
) -> Result<()> {
    let mut m = Manifest::new("deform", common, config);
    let mesh = load_mesh(&mut m, mesh)?;
    let (names, w) = load_weights(&mut m, weights)?;
    let s = load_skeleton(&mut m, skeleton)?;
    check_columns(&names, &s, weights)?;
    let doc = load_motion(&mut m, motion)?;
    let poses = poses_on(&s, &doc, motion)?;
    let frames = deform_clip(&mesh, &w, &s, &poses)?;
    for (i, f) in frames.iter().enumerate() {
        m.write(&common.out, &frame_name(i), &write_obj(&f.vertices, mesh.faces()))?;
    }
    m.finish(&common.out)
}

struct EvalInputs<'a> {
    pred_skeleton: Option<&'a Path>,
    gt_skeleton: Option<&'a Path>,
    pred_weights: Option<&'a Path>,
    gt_weights: Option<&'a Path>,
    pred_frames: Option<&'a Path>,
    gt_frames: Option<&'a Path>,
}

/// Aligns two weight matrices on the union of their joint names; joints
/// missing from one side get zero weight there.
fn align_weights(
    pred_names: &[String],
    pred: &WeightMatrix,
    gt_names: &[String],
    gt: &WeightMatrix,
) -> Result<(WeightMatrix, WeightMatrix)> {
    if pred.vertex_count() != gt.vertex_count() {
        return Err(Error::ShapeMismatch(format!(
            "{} predicted weight rows vs {} ground-truth rows",
            pred.vertex_count(),
            gt.vertex_count()
        )));
    }
    let mut union: Vec<&String> = gt_names.iter().collect();
    union.extend(pred_names.iter().filter(|n| !gt_names.contains(n)));
    let expand = |names: &[String], w: &WeightMatrix| {
        let cols: Vec<Option<usize>> = union.iter().map(|n| names.iter().position(|x| x == *n)).collect();
        let data = (0..w.vertex_count())
            .flat_map(|i| cols.iter().map(move |c| c.map_or(0.0, |j| w.get(i, j))))
            .collect();
        WeightMatrix::from_flat(w.vertex_count(), union.len(), data)
    };
    Ok((expand(pred_names, pred)?, expand(gt_names, gt)?))
}

fn load_frames(m: &mut Manifest, dir: &Path) -> Result<Vec<Mesh>> {
    let mut frames = Vec::new();
    loop {
        let path = dir.join(frame_name(frames.len()));
        if !path.exists() {
            break;
        }
        frames.push(load_mesh(m, &path)?);
    }
    if frames.is_empty() {
        return Err(Error::Io {
            path: dir.join(frame_name(0)).display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no frames found"),
        });
    }
    Ok(frames)
}

fn cmd_eval(common: &Common, config: &PipelineConfig, inputs: EvalInputs<'_>) -> Result<()> {
    let mut m = Manifest::new("eval", common, config);
    let mut report = MetricReport {
        cd_j2j: f64::NAN,
        cd_j2b: f64::NAN,
        cd_b2b: f64::NAN,
        skinning_l1: f64::NAN,
        cd: f64::NAN,
        ade: f64::NAN,
        mde: f64::NAN,
        els: f64::NAN,
    };
    if let (Some(p), Some(g)) = (inputs.pred_skeleton, inputs.gt_skeleton) {
        let pred = load_skeleton(&mut m, p)?;
        let gt = load_skeleton(&mut m, g)?;
        let (pb, gb) = (pred.bone_segments(), gt.bone_segments());
        report.cd_j2j = cd_j2j(pred.globals(), gt.globals())?;
        report.cd_j2b = cd_j2b(pred.globals(), &pb, gt.globals(), &gb)?;
        report.cd_b2b = if pb.is_empty() || gb.is_empty() { f64::NAN } else { cd_b2b(&pb, &gb)? };
    }
    if let (Some(p), Some(g)) = (inputs.pred_weights, inputs.gt_weights) {
        let (pn, pw) = load_weights(&mut m, p)?;
        let (gn, gw) = load_weights(&mut m, g)?;
        let (pa, ga) = align_weights(&pn, &pw, &gn, &gw)?;
        report.skinning_l1 = skinning_l1(&pa, &ga)?;
    }
    if let (Some(p), Some(g)) = (inputs.pred_frames, inputs.gt_frames) {
        let pred = load_frames(&mut m, p)?;
        let gt = load_frames(&mut m, g)?;
        let verts = |f: &[Mesh]| f.iter().map(|x| x.vertices().to_vec()).collect::<Vec<Vec<Vec3>>>();
        let (cd, ade, mde, els) = pooled_deformation(&verts(&pred), &verts(&gt), gt[0].edges())?;
        report.cd = cd;
        report.ade = ade;
        report.mde = mde;
        report.els = els;
    }
    let mut text = report.to_text();
    let _ = writeln!(text);
    m.write(&common.out, "report.txt", &text)?;
    m.write(&common.out, "table.txt", &report.to_table())?;
    m.finish(&common.out)
}
