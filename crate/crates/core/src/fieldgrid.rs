//! Classical fields on a uniform grid over `[-L, L]`.
//!
//! A field is the vector of its grid values `ψᵢ = ψ(xᵢ)`; the inner product is
//! `(ψ, φ) = Δ Σ ψᵢ φᵢ`. With uniform weights the map `u = √Δ ψ` is an isometry
//! onto `R^d` with the standard product, and because it is a scalar multiple
//! of the identity an operator has the same matrix in both coordinates. All
//! Gaussian states and functionals here live in the `u` coordinates.

use crate::density::{DensityOperator, PureState};
use crate::error::{Error, Result};
use crate::functional::AnalyticFunctional;
use crate::matrix::SymmetricMatrix;
use crate::rng::{Estimate, RngSeed};
use crate::whitenoise::BackgroundField;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    half_width: f64,
    points: Vec<f64>,
    spacing: f64,
}

impl FieldGrid {
    /// `d` equally spaced points covering `[-L, L]`, endpoints included.
    pub fn new(half_width: f64, d: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid("grid half-width must be positive"));
        }
        if d < 2 {
            return Err(Error::invalid("grid needs at least two points"));
        }
        let spacing = 2.0 * half_width / (d - 1) as f64;
        let points = (0..d).map(|i| -half_width + i as f64 * spacing).collect();
        Ok(Self {
            half_width,
            points,
            spacing,
        })
    }

    /// Grid with half the spacing: `2(d−1)+1` points on the same interval.
    pub fn refined(&self) -> Self {
        Self::new(self.half_width, 2 * (self.len() - 1) + 1).expect("refinement of a valid grid")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Index of the grid point equal to `x` (within `1e-9 Δ`).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = ((x + self.half_width) / self.spacing).round();
        if i < 0.0 || i >= self.len() as f64 {
            return None;
        }
        let i = i as usize;
        ((self.points[i] - x).abs() <= 1e-9 * self.spacing).then_some(i)
    }

    /// `Δ Σ ψᵢ φᵢ`.
    pub fn inner(&self, psi: &[f64], phi: &[f64]) -> f64 {
        self.spacing * psi.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `(A ψ, ψ)` in the grid inner product.
    pub fn quadratic(&self, a: &SymmetricMatrix, psi: &[f64]) -> f64 {
        self.spacing * a.quadratic(psi)
    }

    /// `u = √Δ ψ`.
    pub fn to_orthonormal(&self, psi: &[f64]) -> Vec<f64> {
        let s = self.spacing.sqrt();
        psi.iter().map(|x| s * x).collect()
    }

    pub fn from_orthonormal(&self, u: &[f64]) -> Vec<f64> {
        let s = self.spacing.sqrt();
        u.iter().map(|x| x / s).collect()
    }

    /// `ψ ↦ (Aψ, ψ)_grid` as a functional of the orthonormal coordinates.
    pub fn functional(&self, a: &SymmetricMatrix) -> AnalyticFunctional {
        AnalyticFunctional::quadratic(a)
    }

    /// Operator of `f(ψ) = ½ ψ(x₀)²`: `A = e₀⊗e₀ / (2Δ)`, so that
    /// `(Aψ, ψ)_grid = ½ ψ(x₀)²`. Its norm `1/(2Δ)` diverges as `Δ → 0`.
    pub fn delta_observable(&self, i0: usize) -> Result<SymmetricMatrix> {
        if i0 >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i0,
                dim: self.len(),
            });
        }
        let mut a = SymmetricMatrix::zeros(self.len());
        a.set(i0, i0, 0.5 / self.spacing);
        Ok(a)
    }

    /// `x̂ = diag(xᵢ)`, the operator of `f(ψ) = ∫ x ψ(x)² dx` up to the factor
    /// `½ f″(0)`.
    pub fn position_observable(&self) -> SymmetricMatrix {
        SymmetricMatrix::from_diagonal(&self.points)
    }

    /// Density operator for a named profile.
    pub fn density(&self, profile: DensityProfile) -> Result<DensityOperator> {
        match profile {
            DensityProfile::Uniform => Ok(DensityOperator::maximally_mixed(self.len())),
            DensityProfile::GaussianProfile { width } => {
                let weights: Vec<f64> = self
                    .points
                    .iter()
                    .map(|&x| self.spacing * gaussian_bump(x, width))
                    .collect();
                DensityOperator::normalized(SymmetricMatrix::from_diagonal(&weights))
            }
            DensityProfile::Point { index } => {
                if index >= self.len() {
                    return Err(Error::IndexOutOfRange {
                        index,
                        dim: self.len(),
                    });
                }
                let mut e = vec![0.0; self.len()];
                e[index] = 1.0;
                Ok(DensityOperator::from(&PureState::new(e)?))
            }
        }
    }

    /// Grid values of a Gaussian bump normalized in the grid norm.
    pub fn bump_state(&self, width: f64) -> Result<Vec<f64>> {
        let raw: Vec<f64> = self
            .points
            .iter()
            .map(|&x| gaussian_bump(x, width))
            .collect();
        let norm = self.inner(&raw, &raw).sqrt();
        if !(norm > 0.0) {
            return Err(Error::invalid("bump vanishes on the grid"));
        }
        Ok(raw.into_iter().map(|v| v / norm).collect())
    }

    /// Monte Carlo estimate of `E f(P_Ψ η)` for `f(ψ) = ½ψ(x₀)²`, standard white
    /// noise `η`, and a grid-normalized `Ψ` given by its grid values.
    pub fn delta_projection_average(
        &self,
        i0: usize,
        psi: &[f64],
        n: usize,
        seed: RngSeed,
    ) -> Result<Estimate> {
        if psi.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: psi.len(),
            });
        }
        let f = self.functional(&self.delta_observable(i0)?);
        let field = BackgroundField::new(self.len(), 1.0, seed)?;
        field.projected_average(&self.to_orthonormal(psi), &f, n)
    }
}

fn gaussian_bump(x: f64, width: f64) -> f64 {
    (-0.5 * (x / width).powi(2)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityProfile {
    /// `I / d`.
    Uniform,
    /// Diagonal `D` with `Dᵢᵢ ∝ Δ exp(−xᵢ²/(2w²))`.
    GaussianProfile { width: f64 },
    /// `eᵢ ⊗ eᵢ`.
    Point { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservableKind {
    Delta { x0: f64 },
    Position,
}

impl ObservableKind {
    pub fn build(&self, grid: &FieldGrid) -> Result<SymmetricMatrix> {
        match *self {
            ObservableKind::Delta { x0 } => {
                let i0 = grid
                    .index_of(x0)
                    .ok_or_else(|| Error::invalid(format!("x0 = {x0} is not a grid point")))?;
                grid.delta_observable(i0)
            }
            ObservableKind::Position => Ok(grid.position_observable()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRow {
    pub points: usize,
    pub spacing: f64,
    pub norm: f64,
}

/// Operator norm of an observable on successively refined grids, starting at
/// `coarse` and halving `Δ` each step.
pub fn observable_norm_growth(
    coarse: &FieldGrid,
    refinements: usize,
    kind: ObservableKind,
) -> Result<Vec<NormRow>> {
    if refinements < 3 {
        return Err(Error::invalid("need at least three grid resolutions"));
    }
    let mut grid = coarse.clone();
    let mut rows = Vec::with_capacity(refinements);
    for step in 0..refinements {
        if step > 0 {
            grid = grid.refined();
        }
        let a = kind.build(&grid)?;
        rows.push(NormRow {
            points: grid.len(),
            spacing: grid.spacing(),
            norm: a.spectral_norm(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = FieldGrid::new(1.0, 5).unwrap();
        assert_eq!(g.points(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.index_of(0.5), Some(3));
        assert_eq!(g.index_of(0.3), None);
        assert_eq!(g.refined().len(), 9);
        assert!(FieldGrid::new(1.0, 1).is_err());
        assert!(FieldGrid::new(0.0, 4).is_err());
    }

    #[test]
    fn delta_quadratic_form_reads_point_value() {
        let g = FieldGrid::new(2.0, 9).unwrap();
        let i0 = g.index_of(0.5).unwrap();
        let a = g.delta_observable(i0).unwrap();
        let mut psi: Vec<f64> = g.points().iter().map(|x| x.sin()).collect();
        psi[i0] = 2.0;
        assert!((g.quadratic(&a, &psi) - 2.0).abs() < 1e-15);
        psi[i0] = 0.0;
        assert_eq!(g.quadratic(&a, &psi), 0.0);
        assert!(g.delta_observable(9).is_err());
    }

    #[test]
    fn functional_in_orthonormal_coordinates_matches_grid_form() {
        let g = FieldGrid::new(1.0, 7).unwrap();
        let a = g.position_observable();
        let psi: Vec<f64> = g.points().iter().map(|x| 1.0 + x * x).collect();
        let u = g.to_orthonormal(&psi);
        let f = g.functional(&a);
        assert!((f.eval(&u).unwrap() - g.quadratic(&a, &psi)).abs() < 1e-14);
        let back = g.from_orthonormal(&u);
        assert!(back.iter().zip(&psi).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn position_expectations() {
        let g = FieldGrid::new(1.0, 11).unwrap();
        let x = g.position_observable();
        let d = g.density(DensityProfile::Uniform).unwrap();
        assert!(d.expectation(&x).unwrap().abs() < 1e-15);
        let d = g.density(DensityProfile::Point { index: 7 }).unwrap();
        assert_eq!(d.expectation(&x).unwrap(), g.points()[7]);
    }

    #[test]
    fn norm_growth_requires_three_levels() {
        let g = FieldGrid::new(1.0, 5).unwrap();
        assert!(observable_norm_growth(&g, 2, ObservableKind::Position).is_err());
        let rows = observable_norm_growth(&g, 3, ObservableKind::Position).unwrap();
        assert!(rows.iter().all(|r| (r.norm - 1.0).abs() < 1e-12));
    }

    #[test]
    fn bump_state_is_normalized() {
        let g = FieldGrid::new(3.0, 61).unwrap();
        let psi = g.bump_state(0.5).unwrap();
        assert!((g.inner(&psi, &psi) - 1.0).abs() < 1e-14);
    }
}
