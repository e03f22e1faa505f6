//! Rig fitting: symmetric offset residuals `Δo` with `o_tgt = o_src + Δo`.
//!
//! The objective is `λ_skel·CD(g_gt, g_tgt) + λ_sdf·mean max(0, sdf + margin)`
//! when ground-truth joints are given, otherwise the hinge term alone. The
//! residual starts at a uniform rescaling of the source skeleton and is
//! kept symmetric by projecting every step. The result is grounded.

use rayon::prelude::*;

use super::chamfer::chamfer_with_grad;
use super::sdf::{hinge_mean, SdfMesh};
use super::symmetry::symmetrize_residual;
use super::{backtrack, SolverConfig, Step};
use crate::error::{Error, Result};
use crate::math::{Vec3, UP};
use crate::mesh::{point_bounds, Mesh};
use crate::skeleton::Skeleton;

#[derive(Debug, Clone, PartialEq)]
pub struct RigSolution {
    pub delta_o: Vec<Vec3>,
    pub target_skeleton: Skeleton,
    pub loss_trace: Vec<f64>,
    /// Uniform scale used to initialize the residual.
    pub initial_scale: f64,
}

/// Fixed inputs of the rig objective.
pub struct RigObjective<'a> {
    source: &'a Skeleton,
    sdf: Option<SdfMesh>,
    g_gt: Option<&'a [Vec3]>,
    margin: f64,
    lambda_skel: f64,
    lambda_sdf: f64,
}

fn height_of(points: &[Vec3]) -> f64 {
    point_bounds(points).map(|(lo, hi)| hi.y - lo.y).unwrap_or(0.0)
}

impl<'a> RigObjective<'a> {
    pub fn new(mesh: &Mesh, source: &'a Skeleton, g_gt: Option<&'a [Vec3]>, cfg: &SolverConfig) -> Result<Self> {
        if mesh.vertex_count() == 0 {
            return Err(Error::EmptyMesh);
        }
        if g_gt.is_some_and(<[Vec3]>::is_empty) {
            return Err(Error::EmptySet);
        }
        let sdf = if cfg.lambda_sdf > 0.0 { Some(SdfMesh::new(mesh)?) } else { None };
        let height = match g_gt {
            Some(g) => height_of(g),
            None => mesh.height(),
        };
        Ok(RigObjective {
            source,
            sdf,
            g_gt,
            margin: cfg.sdf_margin_ratio * height,
            lambda_skel: cfg.lambda_skel,
            lambda_sdf: cfg.lambda_sdf,
        })
    }

    fn globals(&self, delta_o: &[Vec3]) -> Vec<Vec3> {
        let o: Vec<Vec3> = self
            .source
            .offsets()
            .iter()
            .zip(delta_o)
            .map(|(a, b)| a + b)
            .collect();
        self.source.globals_from_offsets(&o)
    }

    pub fn loss(&self, delta_o: &[Vec3]) -> Result<f64> {
        Ok(self.loss_and_grad_inner(delta_o, false)?.0)
    }

    /// Loss and its gradient with respect to an unconstrained `Δo`.
    pub fn loss_and_grad(&self, delta_o: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
        self.loss_and_grad_inner(delta_o, true)
    }

    fn loss_and_grad_inner(&self, delta_o: &[Vec3], want_grad: bool) -> Result<(f64, Vec<Vec3>)> {
        let n = self.source.joint_count();
        if delta_o.len() != n {
            return Err(Error::size("residual count", n, delta_o.len()));
        }
        let g = self.globals(delta_o);
        let mut dg = vec![Vec3::zeros(); n];
        let mut loss = 0.0;
        if let Some(gt) = self.g_gt {
            let (cd, grad) = chamfer_with_grad(gt, &g)?;
            loss += self.lambda_skel * cd;
            for (d, gr) in dg.iter_mut().zip(grad) {
                *d += gr * self.lambda_skel;
            }
        }
        if let Some(sdf) = &self.sdf {
            if want_grad {
                let dd: Vec<(f64, Vec3)> = g.par_iter().map(|p| sdf.distance_and_gradient(p)).collect();
                let d: Vec<f64> = dd.iter().map(|x| x.0).collect();
                loss += self.lambda_sdf * hinge_mean(&d, self.margin);
                for (j, (dj, gj)) in dd.iter().enumerate() {
                    if dj + self.margin > 0.0 {
                        dg[j] += gj * (self.lambda_sdf / n as f64);
                    }
                }
            } else {
                loss += self.lambda_sdf * hinge_mean(&sdf.eval(&g), self.margin);
            }
        }
        if !want_grad {
            return Ok((loss, Vec::new()));
        }
        // every joint below k moves with o_k
        let mut acc = dg;
        for &j in self.source.order().iter().rev() {
            if let Some(p) = self.source.parent(j) {
                let a = acc[j];
                acc[p] += a;
            }
        }
        Ok((loss, acc))
    }
}

fn flatten(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

fn unflatten(x: &[f64]) -> Vec<Vec3> {
    x.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}

pub fn solve_rig(mesh: &Mesh, source: &Skeleton, cfg: &SolverConfig, g_gt: Option<&[Vec3]>) -> Result<RigSolution> {
    cfg.validate()?;
    let objective = RigObjective::new(mesh, source, g_gt, cfg)?;
    let rho = source.rho();

    let src_height = source.height();
    let target_height = match g_gt {
        Some(g) => height_of(g),
        None => mesh.height(),
    };
    let scale = if src_height > 0.0 && target_height > 0.0 {
        target_height / src_height
    } else {
        1.0
    };
    let init: Vec<Vec3> = source.offsets().iter().map(|o| o * (scale - 1.0)).collect();
    let mut x = flatten(&symmetrize_residual(&init, rho)?);

    let mut loss = objective.loss(&unflatten(&x))?;
    if !loss.is_finite() {
        return Err(Error::NonFinite(0));
    }
    let mut trace = vec![loss];
    let mut step = cfg.initial_step;
    for iter in 0..cfg.rig_max_iters {
        if loss == 0.0 {
            break;
        }
        let (_, grad) = objective.loss_and_grad(&unflatten(&x))?;
        let grad = symmetrize_residual(&grad, rho)?;
        if grad.iter().any(|g| !g.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite(iter));
        }
        let direction = flatten(&grad);
        if direction.iter().all(|d| *d == 0.0) {
            break;
        }
        let eval = |t: &[f64]| objective.loss(&unflatten(t));
        match backtrack(&mut x, &direction, loss, &mut step, cfg.max_backoffs, eval)? {
            Step::Accepted { loss: next } => {
                x = flatten(&symmetrize_residual(&unflatten(&x), rho)?);
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

    let mut delta_o = unflatten(&x);
    let fitted = with_residual(source, &delta_o)?;
    let shift = -fitted.ground_contact_height();
    let root = source.root();
    delta_o[root] += UP * shift;
    let target_skeleton = with_residual(source, &delta_o)?;
    log::info!(
        "rig: {} steps, loss {:.3e} -> {:.3e}, initial scale {scale:.4}",
        trace.len() - 1,
        trace[0],
        loss
    );
    Ok(RigSolution {
        delta_o,
        target_skeleton,
        loss_trace: trace,
        initial_scale: scale,
    })
}

/// Skeleton with offsets `o_src + Δo`.
pub fn with_residual(source: &Skeleton, delta_o: &[Vec3]) -> Result<Skeleton> {
    if delta_o.len() != source.joint_count() {
        return Err(Error::size("residual count", source.joint_count(), delta_o.len()));
    }
    source.with_offsets(
        source
            .offsets()
            .iter()
            .zip(delta_o)
            .map(|(a, b)| a + b)
            .collect(),
    )
}
