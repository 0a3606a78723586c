//! Real symmetric matrices with packed storage and the eigensolves built on them.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues in `(-EPS_PSD, 0)` are treated as round-off and clamped to zero;
/// anything more negative makes a matrix non-PSD.
pub const EPS_PSD: f64 = 1e-10;

/// A real symmetric `dim × dim` matrix. Each off-diagonal entry is stored once
/// (packed lower triangle), so `get(i, j) == get(j, i)` holds structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    packed: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            packed: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the lower triangle only.
    pub fn from_lower_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut packed = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                packed.push(f(i, j));
            }
        }
        Self { dim, packed }
    }

    /// Accepts a full row-major array; rejects it unless it is symmetric to
    /// within `1e-12` relative to its largest entry. The stored value is the
    /// mean of the two mirrored entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::invalid("matrix must have at least one row"));
        }
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        let scale = rows
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(1.0);
        for i in 0..dim {
            for j in 0..i {
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i},{j}): {} vs {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        Ok(Self::from_lower_fn(dim, |i, j| {
            0.5 * (rows[i][j] + rows[j][i])
        }))
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        Self::from_lower_fn(m.nrows(), |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            }
        })
    }

    /// `scale · v ⊗ v`.
    pub fn outer(v: &[f64], scale: f64) -> Self {
        Self::from_lower_fn(v.len(), |i, j| scale * v[i] * v[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.packed[packed_index(i, j)] = value;
    }

    /// The stored (lower-triangle) entries in packed row order.
    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            packed: self.packed.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        Ok(Self {
            dim: self.dim,
            packed: self
                .packed
                .iter()
                .zip(&other.packed)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.packed
            .iter()
            .zip(&other.packed)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `(A u, v)` in the standard inner product.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            let row = i * (i + 1) / 2;
            acc += self.packed[row + i] * u[i] * v[i];
            for j in 0..i {
                acc += self.packed[row + j] * (u[i] * v[j] + u[j] * v[i]);
            }
        }
        acc
    }

    /// `(A v, v)`.
    #[inline]
    pub fn quadratic(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            let row = i * (i + 1) / 2;
            let mut off = 0.0;
            for j in 0..i {
                off += self.packed[row + j] * v[j];
            }
            acc += v[i] * (self.packed[row + i] * v[i] + 2.0 * off);
        }
        acc
    }

    /// `Tr(A B)` for symmetric `A`, `B`: the Frobenius inner product.
    pub fn trace_product(&self, other: &Self) -> Result<f64> {
        self.check_dim(other.dim)?;
        let mut acc = 0.0;
        for i in 0..self.dim {
            let row = i * (i + 1) / 2;
            acc += self.packed[row + i] * other.packed[row + i];
            for j in 0..i {
                acc += 2.0 * self.packed[row + j] * other.packed[row + j];
            }
        }
        Ok(acc)
    }

    pub fn eigen(&self) -> Eigen {
        let se = SymmetricEigen::new(self.to_dense());
        Eigen {
            values: se.eigenvalues.iter().copied().collect(),
            vectors: se.eigenvectors,
        }
    }

    /// Spectral norm `max |λ|`.
    pub fn spectral_norm(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        self.eigen()
            .values
            .iter()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }
}

/// Eigendecomposition of a symmetric matrix; eigenvectors are the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Validates `m` as PSD within [`EPS_PSD`] and returns its eigendecomposition
/// with the clamped spectrum: negative round-off is set to zero, and so are
/// eigenvalues below `64·ε·dim·λ_max`, which keeps the range of rank-deficient
/// covariances exact.
pub fn psd_eigen(m: &SymmetricMatrix) -> Result<Eigen> {
    let mut eig = m.eigen();
    let min = eig.min_value();
    if m.dim() > 0 && min < -EPS_PSD {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let max = eig.values.iter().copied().fold(0.0, f64::max);
    let floor = 64.0 * f64::EPSILON * m.dim() as f64 * max;
    for v in &mut eig.values {
        if *v <= floor {
            *v = 0.0;
        }
    }
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_storage_is_symmetric() {
        let mut m = SymmetricMatrix::zeros(3);
        m.set(0, 2, 5.0);
        assert_eq!(m.get(2, 0), 5.0);
        assert_eq!(m.packed().len(), 6);
    }

    #[test]
    fn from_rows_rejects_asymmetric() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 1.0]];
        assert!(SymmetricMatrix::from_rows(&rows).is_err());
        let rows = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let m = SymmetricMatrix::from_rows(&rows).unwrap();
        assert_eq!(m.to_rows(), rows);
    }

    #[test]
    fn quadratic_matches_bilinear_and_dense() {
        let m = SymmetricMatrix::from_lower_fn(4, |i, j| (i as f64 + 1.0) * 0.3 - j as f64 * 0.7);
        let v = [0.3, -1.2, 2.0, 0.5];
        let dense = m.to_dense();
        let dv = nalgebra::DVector::from_column_slice(&v);
        let expected = dv.dot(&(&dense * &dv));
        assert!((m.quadratic(&v) - expected).abs() < 1e-12);
        assert!((m.bilinear(&v, &v) - expected).abs() < 1e-12);
    }

    #[test]
    fn trace_product_matches_dense() {
        let a = SymmetricMatrix::from_lower_fn(3, |i, j| (i * 3 + j) as f64);
        let b = SymmetricMatrix::from_lower_fn(3, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let dense = (a.to_dense() * b.to_dense()).trace();
        assert!((a.trace_product(&b).unwrap() - dense).abs() < 1e-12);
    }

    #[test]
    fn psd_rejects_negative_and_clamps_roundoff() {
        let m = SymmetricMatrix::from_diagonal(&[1.0, -1e-3]);
        assert!(matches!(psd_eigen(&m), Err(Error::NotPsd { .. })));
        let m = SymmetricMatrix::from_diagonal(&[1.0, -1e-11]);
        let eig = psd_eigen(&m).unwrap();
        assert!(eig.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = SymmetricMatrix::from_diagonal(&[3.0, -5.0, 1.0]);
        assert!((m.spectral_norm() - 5.0).abs() < 1e-12);
    }
}
