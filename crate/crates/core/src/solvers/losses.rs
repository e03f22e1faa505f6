//! Reconstruction losses on deformed vertex positions.

use crate::error::{Error, Result};
use crate::math::Vec3;

fn check_len(pred: &[Vec3], gt: &[Vec3]) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predicted vertices vs {} ground-truth vertices",
            pred.len(),
            gt.len()
        )));
    }
    Ok(())
}

/// Mean squared vertex error.
pub fn loss_vtx(pred: &[Vec3], gt: &[Vec3]) -> Result<f64> {
    check_len(pred, gt)?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred.iter().zip(gt).map(|(a, b)| (a - b).norm_squared()).sum();
    Ok(sum / pred.len() as f64)
}

/// Mean squared difference of edge vectors.
pub fn loss_edge(pred: &[Vec3], gt: &[Vec3], edges: &[(usize, usize)]) -> Result<f64> {
    check_len(pred, gt)?;
    for &(a, b) in edges {
        for i in [a, b] {
            if i >= pred.len() {
                return Err(Error::IndexOutOfRange {
                    index: i as i64,
                    len: pred.len(),
                });
            }
        }
    }
    if edges.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = edges
        .iter()
        .map(|&(a, b)| ((pred[a] - pred[b]) - (gt[a] - gt[b])).norm_squared())
        .sum();
    Ok(sum / edges.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vtx_examples() {
        let a = vec![Vec3::zeros(), Vec3::x()];
        assert_eq!(loss_vtx(&a, &a).unwrap(), 0.0);
        let b = vec![Vec3::x(), Vec3::x()];
        assert_eq!(loss_vtx(&a, &b).unwrap(), 0.5);
        let t = Vec3::new(1.0, 2.0, -2.0);
        let c: Vec<Vec3> = a.iter().map(|v| v + t).collect();
        assert!((loss_vtx(&c, &a).unwrap() - 9.0).abs() < 1e-12);
        assert!(loss_vtx(&a, &a[..1]).is_err());
    }

    #[test]
    fn edge_examples() {
        let gt = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        let edges = [(0, 1), (0, 2)];
        let shifted: Vec<Vec3> = gt.iter().map(|v| v + Vec3::new(5.0, 5.0, 5.0)).collect();
        assert_eq!(loss_edge(&shifted, &gt, &edges).unwrap(), 0.0);
        assert_eq!(loss_edge(&gt, &gt, &edges).unwrap(), 0.0);
        let mut bent = gt.clone();
        bent[1] += Vec3::x();
        assert_eq!(loss_edge(&bent, &gt, &edges).unwrap(), 0.5);
        assert!(matches!(loss_edge(&gt, &gt, &[(0, 7)]), Err(Error::IndexOutOfRange { index: 7, .. })));
    }
}
