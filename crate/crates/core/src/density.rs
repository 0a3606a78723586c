//! Quantum states: density operators and normalized pure-state vectors.

use crate::error::{Error, Result};
use crate::matrix::{psd_eigen, SymmetricMatrix};

/// Allowed deviation of a density operator's trace from one.
pub const TRACE_TOL: f64 = 1e-12;

/// PSD symmetric matrix with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: SymmetricMatrix,
}

impl DensityOperator {
    pub fn new(matrix: SymmetricMatrix) -> Result<Self> {
        psd_eigen(&matrix)?;
        let trace = matrix.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceMismatch {
                trace,
                expected: 1.0,
            });
        }
        Ok(Self { matrix })
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: SymmetricMatrix::identity(dim).scaled(1.0 / dim as f64),
        }
    }

    /// Rescales a PSD matrix with positive trace to unit trace.
    pub fn normalized(matrix: SymmetricMatrix) -> Result<Self> {
        let trace = matrix.trace();
        if !(trace > 0.0) {
            return Err(Error::TraceMismatch {
                trace,
                expected: 1.0,
            });
        }
        Self::new(matrix.scaled(1.0 / trace))
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `Tr(D A)`.
    pub fn expectation(&self, observable: &SymmetricMatrix) -> Result<f64> {
        self.matrix.trace_product(observable)
    }
}

impl From<&PureState> for DensityOperator {
    fn from(state: &PureState) -> Self {
        Self {
            matrix: state.projector(),
        }
    }
}

/// Unit vector `Ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    vector: Vec<f64>,
}

impl PureState {
    pub fn new(vector: Vec<f64>) -> Result<Self> {
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { vector })
    }

    /// Divides by the Euclidean norm; fails on the zero vector.
    pub fn normalize(mut vector: Vec<f64>) -> Result<Self> {
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        vector.iter_mut().for_each(|x| *x /= norm);
        Self::new(vector)
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    /// `Ψ ⊗ Ψ`.
    pub fn projector(&self) -> SymmetricMatrix {
        SymmetricMatrix::outer(&self.vector, 1.0)
    }
}
