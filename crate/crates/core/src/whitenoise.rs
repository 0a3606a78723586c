//! Scaled white-noise background field `ξ = √α η` on `R^d` and its
//! one-dimensional projections `ξ_Ψ = (Ψ, ξ)`.
//!
//! Every check that compares several projections evaluates them on the same
//! draw of `ξ`, so identities such as linearity are tested pathwise.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::functional::AnalyticFunctional;
use crate::rng::{map_chunks, merge_moments, Estimate, Moments, RngSeed, SampleRng};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundField {
    pub dim: usize,
    pub alpha: f64,
    pub seed: RngSeed,
}

impl BackgroundField {
    pub fn new(dim: usize, alpha: f64, seed: RngSeed) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("field dimension must be at least 1"));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!(
                "alpha must be non-negative, got {alpha}"
            )));
        }
        Ok(Self { dim, alpha, seed })
    }

    #[inline]
    fn fill(&self, rng: &mut SampleRng, out: &mut [f64], scale: f64) {
        for x in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *x = scale * z;
        }
    }

    fn check(&self, psi: &[f64]) -> Result<()> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: psi.len(),
            });
        }
        Ok(())
    }

    /// Runs `body` once per draw of `ξ`, chunk by chunk.
    fn fold_draws<T, F>(&self, n: usize, init: impl Fn() -> T + Sync, body: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut T, &[f64]) + Sync,
    {
        let scale = self.alpha.sqrt();
        map_chunks(n, self.seed, |rng, _, count| {
            let mut acc = init();
            let mut xi = vec![0.0; self.dim];
            for _ in 0..count {
                self.fill(rng, &mut xi, scale);
                body(&mut acc, &xi);
            }
            acc
        })
    }

    /// `n` i.i.d. draws of `ξ ~ N(0, αI)`.
    pub fn draw(&self, n: usize) -> Vec<Vec<f64>> {
        self.fold_draws(n, Vec::new, |acc: &mut Vec<Vec<f64>>, xi| {
            acc.push(xi.to_vec())
        })
        .into_iter()
        .flatten()
        .collect()
    }

    /// `ξ_Ψ(ω) = (Ψ, ξ(ω))` for each given draw.
    pub fn project(&self, psi: &[f64], draws: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check(psi)?;
        Ok(draws.iter().map(|xi| dot(psi, xi)).collect())
    }

    pub fn projected(&self, psi: Vec<f64>) -> Result<ProjectedVariable> {
        self.check(&psi)?;
        Ok(ProjectedVariable { psi, field: *self })
    }

    /// `max_ω |ξ_{λ₁Ψ₁+λ₂Ψ₂}(ω) − λ₁ξ_{Ψ₁}(ω) − λ₂ξ_{Ψ₂}(ω)|` over `n` shared draws.
    pub fn linearity_check(
        &self,
        psi1: &[f64],
        psi2: &[f64],
        lambda1: f64,
        lambda2: f64,
        n: usize,
    ) -> Result<f64> {
        self.check(psi1)?;
        self.check(psi2)?;
        let combined: Vec<f64> = psi1
            .iter()
            .zip(psi2)
            .map(|(a, b)| lambda1 * a + lambda2 * b)
            .collect();
        let parts = self.fold_draws(
            n,
            || 0.0f64,
            |acc, xi| {
                let lhs = dot(&combined, xi);
                let rhs = lambda1 * dot(psi1, xi) + lambda2 * dot(psi2, xi);
                *acc = acc.max((lhs - rhs).abs());
            },
        );
        Ok(parts.into_iter().fold(0.0, f64::max))
    }

    /// `(1/α) · sample covariance of (ξ_{Ψ₁}, ξ_{Ψ₂})`, an estimate of `(Ψ₁, Ψ₂)`.
    pub fn scalar_product_recovery(
        &self,
        psi1: &[f64],
        psi2: &[f64],
        n: usize,
    ) -> Result<Estimate> {
        self.check(psi1)?;
        self.check(psi2)?;
        if n < 2 {
            return Err(Error::invalid("need at least two draws"));
        }
        if self.alpha == 0.0 {
            return Err(Error::invalid(
                "alpha must be positive to rescale the covariance",
            ));
        }
        let parts = self.fold_draws(
            n,
            || (0.0f64, 0.0f64, Moments::default()),
            |acc, xi| {
                let x = dot(psi1, xi);
                let y = dot(psi2, xi);
                acc.0 += x;
                acc.1 += y;
                acc.2.push(x * y);
            },
        );
        let nf = n as f64;
        let (sx, sy) = parts
            .iter()
            .fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let products = merge_moments(&parts.iter().map(|p| p.2).collect::<Vec<_>>());
        let sxy = products.mean() * nf;
        let cov = (sxy - sx * sy / nf) / (nf - 1.0);
        let stderr = (products.variance() / nf).sqrt();
        Ok(Estimate {
            mean: cov / self.alpha,
            stderr: stderr / self.alpha,
            samples: n,
        })
    }

    /// Monte Carlo estimate of `E f(ξ_Ψ(ω) Ψ)`.
    pub fn projected_average(
        &self,
        psi: &[f64],
        f: &AnalyticFunctional,
        n: usize,
    ) -> Result<Estimate> {
        self.check(psi)?;
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: f.dim(),
            });
        }
        let parts = self.fold_draws(
            n,
            || (Moments::default(), vec![0.0; self.dim]),
            |acc, xi| {
                let c = dot(psi, xi);
                for (p, &s) in acc.1.iter_mut().zip(psi) {
                    *p = c * s;
                }
                acc.0.push(f.eval_unchecked(&acc.1));
            },
        );
        Ok(merge_moments(&parts.iter().map(|p| p.0).collect::<Vec<_>>()).estimate())
    }
}

/// `ξ_Ψ = (Ψ, ξ)` for a fixed `Ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedVariable {
    psi: Vec<f64>,
    field: BackgroundField,
}

impl ProjectedVariable {
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// `E ξ_Ψ² = α ‖Ψ‖²`.
    pub fn exact_variance(&self) -> f64 {
        self.field.alpha * dot(&self.psi, &self.psi)
    }

    /// Sample mean and unbiased variance of `n` draws, with the standard errors
    /// of the mean and of `E ξ_Ψ²`.
    pub fn moments(&self, n: usize) -> (Estimate, Estimate) {
        let parts = self.field.fold_draws(
            n,
            || (Moments::default(), Moments::default()),
            |acc, xi| {
                let x = dot(&self.psi, xi);
                acc.0.push(x);
                acc.1.push(x * x);
            },
        );
        let first = merge_moments(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
        let second = merge_moments(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
        (first.estimate(), second.estimate())
    }
}
