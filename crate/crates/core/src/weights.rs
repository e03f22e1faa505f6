//! Dense row-major skinning weight matrix (vertices × joints).

use crate::error::{Error, Result};

/// Tolerance on row sums for a matrix to count as row-stochastic.
pub const STOCHASTIC_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "weight row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(rows.len(), cols, data)
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::size("weight entry count", rows * cols, data.len()));
        }
        Ok(WeightMatrix { rows, cols, data })
    }

    /// Every vertex bound to joint `j` with weight 1.
    pub fn one_hot(rows: usize, cols: usize, j: usize) -> Self {
        let mut data = vec![0.0; rows * cols];
        for i in 0..rows {
            data[i * cols + j] = 1.0;
        }
        WeightMatrix { rows, cols, data }
    }

    pub fn vertex_count(&self) -> usize {
        self.rows
    }

    pub fn joint_count(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Fails on the first row with a negative/non-finite entry or a sum off
    /// by more than `tol`.
    pub fn check_stochastic(&self, tol: f64) -> Result<()> {
        for (i, r) in self.rows().enumerate() {
            let sum: f64 = r.iter().sum();
            if !sum.is_finite() || (sum - 1.0).abs() > tol || r.iter().any(|&w| !(w >= 0.0)) {
                return Err(Error::NotStochastic { row: i, sum });
            }
        }
        Ok(())
    }

    /// Convex combination `α·self + (1 − α)·other`.
    pub fn blend(&self, other: &WeightMatrix, alpha: f64) -> Result<WeightMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch("weight matrices differ in shape".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        Ok(WeightMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }
}
