use crate::error::{Error, Result};
use crate::math::{Vec3, MIRROR};

/// `Δo_j ← ½(Δo_j + Δo_ρ(j) ⊙ [−1, 1, 1])`.
///
/// This is an orthogonal projection onto mirror-symmetric residuals, so it
/// is idempotent and maps a gradient to the gradient of the composed loss.
pub fn symmetrize_residual(delta_o: &[Vec3], rho: &[usize]) -> Result<Vec<Vec3>> {
    if delta_o.len() != rho.len() {
        return Err(Error::size("symmetry map length", delta_o.len(), rho.len()));
    }
    delta_o
        .iter()
        .zip(rho)
        .map(|(d, &k)| {
            let m = delta_o.get(k).ok_or(Error::IndexOutOfRange {
                index: k as i64,
                len: delta_o.len(),
            })?;
            Ok((d + m.component_mul(&MIRROR)) * 0.5)
        })
        .collect()
}
