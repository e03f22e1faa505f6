//! TOML pipeline configuration.
//!
//! ```toml
//! [solver]
//! max_iters = 1000
//!
//! [contact]
//! height_ratio = 0.05
//!
//! [augment]
//! remove = 2
//! ```
//!
//! Missing sections and keys take their defaults; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::animation::ContactConfig;
use crate::error::{Error, Result};
use crate::skeleton::AugmentConfig;
use crate::solvers::SolverConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub solver: SolverConfig,
    pub contact: ContactConfig,
    pub augment: AugmentConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&crate::io::read_text(path)?).map_err(|e| match e {
            Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.augment.validate()?;
        if !(self.contact.height_ratio >= 0.0 && self.contact.max_speed >= 0.0) {
            return Err(Error::InvalidConfig(format!("bad contact thresholds: {:?}", self.contact)));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
