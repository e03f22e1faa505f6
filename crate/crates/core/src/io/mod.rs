//! Text formats for motion, meshes, skeletons, weights and descriptors.

pub mod bvh;
pub mod descriptors;
pub mod obj;
pub mod skeleton_json;
pub mod weights_file;

use std::path::Path;

use crate::error::{Error, Result};

pub use bvh::{parse_bvh, write_bvh, BvhDocument, Channel};
pub use descriptors::{read_descriptors, write_descriptors};
pub use obj::{parse_obj, write_obj};
pub use skeleton_json::{read_skeleton_json, write_skeleton_json};
pub use weights_file::{read_weights, write_weights};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses a float token, reporting its 1-based position on failure.
pub(crate) fn parse_f64(tok: &str, line: usize, col: usize) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(line, col, format!("expected a number, found `{tok}`"))),
    }
}

/// Whitespace-separated tokens of one line with 1-based columns.
pub(crate) fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let start = rest.find(|c: char| !c.is_whitespace())?;
        let tail = &rest[start..];
        let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
        let col = offset + start + 1;
        let tok = &tail[..len];
        offset += start + len;
        rest = &tail[len..];
        Some((col, tok))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_columns() {
        let t: Vec<_> = tokens("  ab c\td").collect();
        assert_eq!(t, vec![(3, "ab"), (6, "c"), (8, "d")]);
        assert_eq!(tokens("   ").count(), 0);
    }
}
