//! Rigging, skinning and deformation of character meshes from skeletal motion.
//!
//! The pipeline fits a source skeleton to a mesh by optimizing symmetric
//! offset residuals, retargets motion onto the fitted skeleton, optimizes
//! softmax skinning weights by reconstructing deformed meshes, and deforms the
//! mesh with linear blend skinning.

pub mod animation;
pub mod cli;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod math;
pub mod mesh;
pub mod metrics;
pub mod retarget;
pub mod skeleton;
pub mod solvers;
pub mod weights;

pub use error::{Error, Result};
pub use math::{FacingFrame, Mat3, RigidTransform, Rotation6D, Vec3};
pub use mesh::{DeformedMesh, DescriptorField, Mesh};
pub use skeleton::{PoseTransforms, Skeleton};
pub use solvers::{RigSolution, SkinningWeights};
pub use weights::WeightMatrix;
