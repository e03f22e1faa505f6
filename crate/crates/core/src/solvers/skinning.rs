//! Skinning weights from deformed-mesh reconstruction.
//!
//! The free variables are the logits `z`; weights are `softmax(z / √n_d)`
//! and each training sample is reconstructed with linear blend skinning.
//! The objective is `λ_vtx·L_vtx + λ_edge·L_edge` averaged over samples.
//! Descent directions are gradients scaled by a diagonal Gauss-Newton
//! preconditioner, with a backtracking line search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::softmax::{softmax_rows, SkinningWeights};
use super::{backtrack, SolverConfig, Step};
use crate::error::{Error, Result};
use crate::math::{RigidTransform, Vec3};
use crate::mesh::{DeformedMesh, Mesh};
use crate::skeleton::{skinning_transforms, PoseTransforms, Skeleton};

/// Offset applied below the smallest active logit of a row for joints that
/// cannot be told apart from another joint.
pub const TIED_LOGIT_GAP: f64 = 40.0;

/// One posed frame and the mesh it should deform into.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub pose: PoseTransforms,
    pub gt_deformed: DeformedMesh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkinningFit {
    pub weights: SkinningWeights,
    /// Loss after every accepted step, starting with the initial loss.
    pub loss_trace: Vec<f64>,
    /// Joints pinned to ~zero weight because their transforms duplicate
    /// another joint's in every sample.
    pub tied_joints: Vec<usize>,
}

impl SkinningFit {
    pub fn initial_loss(&self) -> f64 {
        self.loss_trace[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace is never empty")
    }
}

fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

/// Distance-based warm start `−β·d(V_i, bones of j)` with a seeded
/// perturbation. A joint owns the bones to its children; leaves own their
/// own position.
pub fn initial_logits(mesh: &Mesh, s: &Skeleton, cfg: &SolverConfig) -> Vec<f64> {
    let n = s.joint_count();
    let g = s.globals();
    let avg = s.average_bone_length();
    let beta = if avg > 0.0 { cfg.init_sharpness / avg } else { cfg.init_sharpness };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut z = Vec::with_capacity(mesh.vertex_count() * n);
    for v in mesh.vertices() {
        for j in 0..n {
            let d = if s.is_leaf(j) {
                (v - g[j]).norm()
            } else {
                s.children(j)
                    .iter()
                    .map(|&c| point_segment_distance(v, &g[j], &g[c]))
                    .fold(f64::INFINITY, f64::min)
            };
            z.push(-beta * d);
        }
    }
    for zi in &mut z {
        *zi += cfg.init_noise * rng.gen_range(-1.0..1.0);
    }
    z
}

/// Groups joints whose skinning transforms coincide in every sample and
/// returns all but one representative per group (non-leaves preferred).
fn tied_joints(s: &Skeleton, transforms: &[Vec<RigidTransform>]) -> Vec<usize> {
    let n = s.joint_count();
    let mut group: Vec<usize> = (0..n).collect();
    for j in 0..n {
        for k in 0..j {
            if group[k] == k
                && transforms
                    .iter()
                    .all(|t| t[j].max_abs_diff(&t[k]) <= 1e-12)
            {
                group[j] = k;
                break;
            }
        }
    }
    let mut masked = Vec::new();
    for head in (0..n).filter(|&k| group[k] == k) {
        let members: Vec<usize> = (0..n).filter(|&j| group[j] == head).collect();
        if members.len() < 2 {
            continue;
        }
        let keep = members
            .iter()
            .copied()
            .find(|&j| !s.is_leaf(j))
            .unwrap_or(members[0]);
        masked.extend(members.into_iter().filter(|&j| j != keep));
    }
    masked.sort_unstable();
    masked
}

struct Problem<'a> {
    rest: &'a [Vec3],
    edges: &'a [(usize, usize)],
    /// Per-vertex Gauss-Newton curvature factor.
    curvature: Vec<f64>,
    transforms: Vec<Vec<RigidTransform>>,
    /// `T_j·v_i` per sample, indexed `i·cols + j`.
    moved: Vec<Vec<Vec3>>,
    gt: Vec<&'a [Vec3]>,
    cols: usize,
    n_d: f64,
    lambda_vtx: f64,
    lambda_edge: f64,
}

struct Evaluation {
    loss: f64,
    grad: Vec<f64>,
    curvature: Vec<f64>,
}

impl Problem<'_> {
    fn rows(&self) -> usize {
        self.rest.len()
    }

    fn deform(&self, w: &[f64], moved: &[Vec3]) -> Vec<Vec3> {
        let cols = self.cols;
        (0..self.rows())
            .into_par_iter()
            .map(|i| {
                let row = i * cols..(i + 1) * cols;
                w[row.clone()]
                    .iter()
                    .zip(&moved[row])
                    .fold(Vec3::zeros(), |acc, (wj, u)| acc + u * *wj)
            })
            .collect()
    }

    /// Loss of one sample and, optionally, its gradient w.r.t. the
    /// reconstructed vertices.
    fn sample_loss(&self, pred: &[Vec3], gt: &[Vec3], want_grad: bool) -> (f64, Vec<Vec3>) {
        let nv = self.rows().max(1) as f64;
        let ne = self.edges.len().max(1) as f64;
        let mut grad = if want_grad { vec![Vec3::zeros(); pred.len()] } else { Vec::new() };
        let mut vtx = 0.0;
        for (i, (p, g)) in pred.iter().zip(gt).enumerate() {
            let d = p - g;
            vtx += d.norm_squared();
            if want_grad {
                grad[i] = d * (2.0 * self.lambda_vtx / nv);
            }
        }
        let mut edge = 0.0;
        for &(a, b) in self.edges {
            let d = (pred[a] - pred[b]) - (gt[a] - gt[b]);
            edge += d.norm_squared();
            if want_grad {
                let gd = d * (2.0 * self.lambda_edge / ne);
                grad[a] += gd;
                grad[b] -= gd;
            }
        }
        let loss = self.lambda_vtx * vtx / nv
            + if self.edges.is_empty() { 0.0 } else { self.lambda_edge * edge / ne };
        (loss, grad)
    }

    fn loss(&self, z: &[f64]) -> f64 {
        let w = softmax_rows(z, self.rows(), self.cols, self.n_d);
        let ns = self.transforms.len() as f64;
        let mut total = 0.0;
        for (m, gt) in self.moved.iter().zip(&self.gt) {
            let pred = self.deform(&w, m);
            total += self.sample_loss(&pred, gt, false).0;
        }
        total / ns
    }

    fn evaluate(&self, z: &[f64]) -> Evaluation {
        let (rows, cols) = (self.rows(), self.cols);
        let w = softmax_rows(z, rows, cols, self.n_d);
        let ns = self.transforms.len() as f64;
        let mut loss = 0.0;
        let mut preds = Vec::with_capacity(self.transforms.len());
        let mut vgrads = Vec::with_capacity(self.transforms.len());
        for (m, gt) in self.moved.iter().zip(&self.gt) {
            let pred = self.deform(&w, m);
            let (l, g) = self.sample_loss(&pred, gt, true);
            loss += l;
            preds.push(pred);
            vgrads.push(g);
        }
        loss /= ns;
        let inv_tau = 1.0 / self.n_d.sqrt();
        let per_vertex: Vec<(Vec<f64>, Vec<f64>)> = (0..rows)
            .into_par_iter()
            .map(|i| {
                let wi = &w[i * cols..(i + 1) * cols];
                let mut dl_dw = vec![0.0; cols];
                let mut curv = vec![0.0; cols];
                for (s, m) in self.moved.iter().enumerate() {
                    let gi = vgrads[s][i];
                    let pi = preds[s][i];
                    for j in 0..cols {
                        let u = m[i * cols + j];
                        dl_dw[j] += gi.dot(&u) / ns;
                        let jac = (u - pi) * (inv_tau * wi[j]);
                        curv[j] += self.curvature[i] * jac.norm_squared() / ns;
                    }
                }
                let mean: f64 = wi.iter().zip(&dl_dw).map(|(a, g)| a * g).sum();
                let dz = wi
                    .iter()
                    .zip(&dl_dw)
                    .map(|(a, g)| inv_tau * a * (g - mean))
                    .collect();
                (dz, curv)
            })
            .collect();
        let mut grad = Vec::with_capacity(rows * cols);
        let mut curvature = Vec::with_capacity(rows * cols);
        for (g, c) in per_vertex {
            grad.extend(g);
            curvature.extend(c);
        }
        Evaluation { loss, grad, curvature }
    }
}

fn check_samples(mesh: &Mesh, s: &Skeleton, samples: &[TrainingSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("skinning needs at least one training sample".into()));
    }
    if mesh.vertex_count() == 0 {
        return Err(Error::EmptyMesh);
    }
    for sample in samples {
        if sample.pose.joint_count() != s.joint_count() {
            return Err(Error::size("pose joint count", s.joint_count(), sample.pose.joint_count()));
        }
        if sample.gt_deformed.vertex_count() != mesh.vertex_count() {
            return Err(Error::ShapeMismatch(format!(
                "deformed frame has {} vertices, mesh has {}",
                sample.gt_deformed.vertex_count(),
                mesh.vertex_count()
            )));
        }
    }
    Ok(())
}

fn pin_tied(z: &mut [f64], cols: usize, tied: &[usize], tau: f64) {
    if tied.is_empty() {
        return;
    }
    for row in z.chunks_mut(cols) {
        let floor = row
            .iter()
            .enumerate()
            .filter(|(j, _)| tied.binary_search(j).is_err())
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        for &j in tied {
            row[j] = floor - TIED_LOGIT_GAP * tau;
        }
    }
}

/// Loss and logit gradient, exposed for gradient checks.
pub fn skinning_loss_and_grad(
    mesh: &Mesh,
    s: &Skeleton,
    samples: &[TrainingSample],
    logits: &[f64],
    cfg: &SolverConfig,
) -> Result<(f64, Vec<f64>)> {
    check_samples(mesh, s, samples)?;
    let cols = s.joint_count();
    if logits.len() != mesh.vertex_count() * cols {
        return Err(Error::size("logit count", mesh.vertex_count() * cols, logits.len()));
    }
    let problem = build_problem(mesh, s, samples, cfg)?;
    let e = problem.evaluate(logits);
    Ok((e.loss, e.grad))
}

fn build_problem<'a>(
    mesh: &'a Mesh,
    s: &Skeleton,
    samples: &'a [TrainingSample],
    cfg: &SolverConfig,
) -> Result<Problem<'a>> {
    let rest = s.rest_pose();
    let transforms = samples
        .iter()
        .map(|x| skinning_transforms(&rest, &x.pose))
        .collect::<Result<Vec<_>>>()?;
    let nv = mesh.vertex_count();
    let ne = mesh.edges().len();
    let mut degree = vec![0usize; nv];
    for &(a, b) in mesh.edges() {
        degree[a] += 1;
        degree[b] += 1;
    }
    let curvature = degree
        .iter()
        .map(|&d| {
            2.0 * cfg.lambda_vtx / nv as f64
                + if ne > 0 { 2.0 * cfg.lambda_edge * d as f64 / ne as f64 } else { 0.0 }
        })
        .collect();
    let moved = transforms
        .iter()
        .map(|t| {
            mesh.vertices()
                .iter()
                .flat_map(|v| t.iter().map(move |tj| tj.apply(v)))
                .collect()
        })
        .collect();
    Ok(Problem {
        moved,
        rest: mesh.vertices(),
        edges: mesh.edges(),
        curvature,
        transforms,
        gt: samples.iter().map(|x| x.gt_deformed.vertices.as_slice()).collect(),
        cols: s.joint_count(),
        n_d: cfg.n_d,
        lambda_vtx: cfg.lambda_vtx,
        lambda_edge: cfg.lambda_edge,
    })
}

pub fn solve_skinning(
    mesh: &Mesh,
    s: &Skeleton,
    samples: &[TrainingSample],
    cfg: &SolverConfig,
) -> Result<SkinningFit> {
    cfg.validate()?;
    check_samples(mesh, s, samples)?;
    let rows = mesh.vertex_count();
    let cols = s.joint_count();
    let tau = cfg.n_d.sqrt();
    let problem = build_problem(mesh, s, samples, cfg)?;

    if cols == 1 {
        let weights = SkinningWeights::from_logits(rows, 1, vec![0.0; rows], cfg.n_d)?;
        let loss = problem.loss(weights.logits());
        return Ok(SkinningFit {
            weights,
            loss_trace: vec![loss],
            tied_joints: Vec::new(),
        });
    }
    let all_rest = problem
        .transforms
        .iter()
        .flatten()
        .all(|t| t.max_abs_diff(&RigidTransform::IDENTITY) <= 1e-12);
    if all_rest {
        log::warn!("every training pose is the rest pose; skinning weights are unidentifiable");
        return Err(Error::Unidentifiable);
    }

    let tied = tied_joints(s, &problem.transforms);
    if !tied.is_empty() {
        log::debug!("pinning {} joint(s) with duplicated transforms", tied.len());
    }
    let mut z = initial_logits(mesh, s, cfg);
    pin_tied(&mut z, cols, &tied, tau);
    let mut active = vec![true; cols];
    for &j in &tied {
        active[j] = false;
    }

    let mut loss = problem.loss(&z);
    if !loss.is_finite() {
        return Err(Error::NonFinite(0));
    }
    let mut trace = vec![loss];
    let mut step = cfg.initial_step;
    for iter in 0..cfg.max_iters {
        if loss == 0.0 {
            break;
        }
        let e = problem.evaluate(&z);
        if !e.loss.is_finite() || e.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(iter));
        }
        let (sum, count) = e
            .curvature
            .iter()
            .enumerate()
            .filter(|(k, _)| active[k % cols])
            .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
        let damping = 1e-6 * sum / count.max(1) as f64 + f64::MIN_POSITIVE;
        let direction: Vec<f64> = e
            .grad
            .iter()
            .zip(&e.curvature)
            .enumerate()
            .map(|(k, (g, c))| if active[k % cols] { g / (c + damping) } else { 0.0 })
            .collect();
        let pinned_loss = |x: &[f64]| {
            let mut x = x.to_vec();
            pin_tied(&mut x, cols, &tied, tau);
            Ok(problem.loss(&x))
        };
        match backtrack(&mut z, &direction, loss, &mut step, cfg.max_backoffs, pinned_loss)? {
            Step::Accepted { loss: next } => {
                pin_tied(&mut z, cols, &tied, tau);
                let rel = (loss - next) / loss.max(f64::MIN_POSITIVE);
                loss = next;
                trace.push(loss);
                if rel < cfg.rel_tol {
                    break;
                }
            }
            Step::Stalled => break,
        }
    }

    log::info!(
        "skinning: {} steps, loss {:.3e} -> {:.3e}",
        trace.len() - 1,
        trace[0],
        loss
    );
    Ok(SkinningFit {
        weights: SkinningWeights::from_logits(rows, cols, z, cfg.n_d)?,
        loss_trace: trace,
        tied_joints: tied,
    })
}
