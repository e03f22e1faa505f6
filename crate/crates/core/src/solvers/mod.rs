//! Skinning-weight and rig fitting solvers with their losses.

pub mod chamfer;
pub mod losses;
pub mod rig;
pub mod sdf;
pub mod skinning;
pub mod softmax;
pub mod symmetry;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chamfer::{chamfer, chamfer_with_grad, loss_skel};
pub use losses::{loss_edge, loss_vtx};
pub use rig::{solve_rig, RigSolution};
pub use sdf::{loss_sdf, loss_sdf_hinge, sdf_eval};
pub use skinning::{solve_skinning, SkinningFit, TrainingSample};
pub use softmax::{softmax_rows, SkinningWeights, DEFAULT_N_D};
pub use symmetry::symmetrize_residual;

/// Optimizer settings shared by both solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub seed: u64,
    /// Softmax scale constant; logits are divided by its square root.
    pub n_d: f64,
    pub max_iters: usize,
    pub rig_max_iters: usize,
    /// Stop once the relative loss decrease falls below this.
    pub rel_tol: f64,
    pub max_backoffs: usize,
    pub initial_step: f64,
    /// Amplitude of the seeded logit perturbation.
    pub init_noise: f64,
    /// Logit falloff is `init_sharpness / average bone length`.
    pub init_sharpness: f64,
    pub lambda_vtx: f64,
    pub lambda_edge: f64,
    pub lambda_skel: f64,
    pub lambda_sdf: f64,
    /// Hinge margin as a fraction of skeleton height.
    pub sdf_margin_ratio: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            n_d: DEFAULT_N_D,
            max_iters: 2000,
            rig_max_iters: 500,
            rel_tol: 1e-8,
            max_backoffs: 20,
            initial_step: 1.0,
            init_noise: 1e-3,
            init_sharpness: 4.0,
            lambda_vtx: 1.0,
            lambda_edge: 1.0,
            lambda_skel: 1.0,
            lambda_sdf: 1.0,
            sdf_margin_ratio: 0.02,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.n_d, self.initial_step];
        let nonneg = [
            self.rel_tol,
            self.init_noise,
            self.init_sharpness,
            self.lambda_vtx,
            self.lambda_edge,
            self.lambda_skel,
            self.lambda_sdf,
            self.sdf_margin_ratio,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0))
            || nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::InvalidConfig(format!("bad solver settings: {self:?}")));
        }
        Ok(())
    }
}

/// Outcome of one backtracking step.
pub(crate) enum Step {
    Accepted { loss: f64 },
    Stalled,
}

/// Backtracking line search along `-direction`: halve the step until the
/// loss does not increase, at most `max_backoffs` times. On success the step
/// doubles for the next call.
pub(crate) fn backtrack<F>(
    x: &mut Vec<f64>,
    direction: &[f64],
    loss: f64,
    step: &mut f64,
    max_backoffs: usize,
    mut eval: F,
) -> Result<Step>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut trial = vec![0.0; x.len()];
    for _ in 0..=max_backoffs {
        for ((t, xi), d) in trial.iter_mut().zip(x.iter()).zip(direction) {
            *t = xi - *step * d;
        }
        let l = eval(&trial)?;
        if l.is_finite() && l <= loss {
            std::mem::swap(x, &mut trial);
            *step *= 2.0;
            return Ok(Step::Accepted { loss: l });
        }
        *step *= 0.5;
    }
    Ok(Step::Stalled)
}
