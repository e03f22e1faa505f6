//! Skeleton JSON: `{"names": [...], "parents": [null, 0, ...], "offsets": [[x, y, z], ...], "rho": [...]}`.
//!
//! `rho` is optional; when absent the symmetry map is inferred.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::skeleton::Skeleton;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkeletonJson {
    names: Vec<String>,
    parents: Vec<Option<usize>>,
    offsets: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<Vec<usize>>,
}

pub fn write_skeleton_json(s: &Skeleton) -> String {
    let doc = SkeletonJson {
        names: s.names().to_vec(),
        parents: s.parents().to_vec(),
        offsets: s.offsets().iter().map(|o| [o.x, o.y, o.z]).collect(),
        rho: Some(s.rho().to_vec()),
    };
    serde_json::to_string_pretty(&doc).expect("skeleton serializes") + "\n"
}

pub fn read_skeleton_json(text: &str) -> Result<Skeleton> {
    let doc: SkeletonJson = serde_json::from_str(text).map_err(|e| {
        Error::Schema(format!("line {} column {}: {e}", e.line(), e.column()))
    })?;
    if doc.offsets.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Schema("non-finite offset".into()));
    }
    Skeleton::new(
        doc.names,
        doc.parents,
        doc.offsets.iter().map(|o| Vec3::new(o[0], o[1], o[2])).collect(),
        doc.rho,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::tests::{chain, small_biped};

    #[test]
    fn chain_round_trip() {
        let s = chain(&[[0.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.5, 0.25]]);
        let back = read_skeleton_json(&write_skeleton_json(&s)).unwrap();
        assert_eq!(back.names(), s.names());
        assert_eq!(back.parents(), s.parents());
        for (a, b) in back.offsets().iter().zip(s.offsets()) {
            assert!((a - b).norm() < 1e-7);
        }
    }

    #[test]
    fn missing_rho_is_inferred() {
        let s = small_biped();
        let mut v: serde_json::Value = serde_json::from_str(&write_skeleton_json(&s)).unwrap();
        v.as_object_mut().unwrap().remove("rho");
        let back = read_skeleton_json(&v.to_string()).unwrap();
        assert_eq!(back.rho(), s.rho());
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(read_skeleton_json("{}"), Err(Error::Schema(_))));
        assert!(matches!(
            read_skeleton_json(r#"{"names":["a"],"parents":[null],"offsets":[[0,0]]}"#),
            Err(Error::Schema(_))
        ));
        assert!(read_skeleton_json(r#"{"names":["a","b"],"parents":[null],"offsets":[[0,0,0]]}"#).is_err());
        assert!(read_skeleton_json("not json").is_err());
    }
}
