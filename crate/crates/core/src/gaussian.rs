//! Zero-mean Gaussian measures on `R^d`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::matrix::{psd_eigen, SymmetricMatrix};
use crate::rng::{map_chunks, merge_moments, Estimate, Moments, RngSeed, SampleRng};

/// Relative tolerance when matching a state's dispersion against `α`.
pub const DISPERSION_RTOL: f64 = 1e-9;

/// Zero-mean Gaussian measure with covariance `B`.
///
/// Sampling uses the eigendecomposition `B = Σ λᵢ vᵢ vᵢᵀ`: a draw is
/// `Σ √λᵢ zᵢ vᵢ` with `zᵢ` standard normal, summed over the nonzero
/// eigenvalues only. Singular covariances (pure states, `B = 0`) need no
/// regularization and their samples stay in the range of `B`.
#[derive(Debug, Clone)]
pub struct GaussianState {
    covariance: SymmetricMatrix,
    /// `√λᵢ vᵢ` for each nonzero eigenvalue, column-major `dim × rank`.
    factor: Vec<f64>,
    rank: usize,
    eigenvalues: Vec<f64>,
}

impl GaussianState {
    pub fn new(covariance: SymmetricMatrix) -> Result<Self> {
        if covariance.dim() == 0 {
            return Err(Error::invalid("Gaussian state needs dimension ≥ 1"));
        }
        let eig = psd_eigen(&covariance)?;
        let dim = covariance.dim();
        let mut factor = Vec::new();
        let mut rank = 0;
        for (k, &lambda) in eig.values.iter().enumerate() {
            if lambda > 0.0 {
                let s = lambda.sqrt();
                factor.extend(eig.vectors.column(k).iter().map(|v| s * v));
                rank += 1;
            }
        }
        debug_assert_eq!(factor.len(), dim * rank);
        Ok(Self {
            covariance,
            factor,
            rank,
            eigenvalues: eig.values,
        })
    }

    /// The state in `S_G^α` with `B = α D`.
    pub fn from_density(density: &DensityOperator, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Self::new(density.matrix().scaled(alpha))
    }

    pub fn covariance(&self) -> &SymmetricMatrix {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.covariance.dim()
    }

    /// Clamped eigenvalues of the covariance.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `E‖ψ‖² = Tr B`.
    pub fn dispersion(&self) -> f64 {
        self.covariance.trace()
    }

    /// Writes one draw into `out` (length `dim`).
    #[inline]
    pub fn fill_sample(&self, rng: &mut SampleRng, out: &mut [f64]) {
        let dim = self.dim();
        out.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..self.rank {
            let z: f64 = rng.sample(StandardNormal);
            let col = &self.factor[k * dim..(k + 1) * dim];
            for (o, c) in out.iter_mut().zip(col) {
                *o += c * z;
            }
        }
    }

    /// `n` i.i.d. draws from `N(0, B)`.
    pub fn sample(&self, n: usize, seed: RngSeed) -> Vec<Vec<f64>> {
        let dim = self.dim();
        map_chunks(n, seed, |rng, _, count| {
            (0..count)
                .map(|_| {
                    let mut v = vec![0.0; dim];
                    self.fill_sample(rng, &mut v);
                    v
                })
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }

    /// Monte Carlo estimate of `E f(ψ)` from `n` draws.
    pub fn mc_mean<F>(&self, n: usize, seed: RngSeed, f: F) -> Estimate
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let dim = self.dim();
        let parts = map_chunks(n, seed, |rng, _, count| {
            let mut acc = Moments::default();
            let mut v = vec![0.0; dim];
            for _ in 0..count {
                self.fill_sample(rng, &mut v);
                acc.push(f(&v));
            }
            acc
        });
        merge_moments(&parts).estimate()
    }

    /// Empirical mean vector and (mean-centred, unbiased) covariance of `n` draws.
    pub fn empirical_moments(&self, n: usize, seed: RngSeed) -> (Vec<f64>, SymmetricMatrix) {
        let dim = self.dim();
        let packed_len = dim * (dim + 1) / 2;
        let parts = map_chunks(n, seed, |rng, _, count| {
            let mut sum = vec![0.0; dim];
            let mut prod = vec![0.0; packed_len];
            let mut v = vec![0.0; dim];
            for _ in 0..count {
                self.fill_sample(rng, &mut v);
                let mut p = 0;
                for i in 0..dim {
                    sum[i] += v[i];
                    for j in 0..=i {
                        prod[p] += v[i] * v[j];
                        p += 1;
                    }
                }
            }
            (sum, prod)
        });
        let mut sum = vec![0.0; dim];
        let mut prod = vec![0.0; packed_len];
        for (s, p) in &parts {
            sum.iter_mut().zip(s).for_each(|(a, b)| *a += b);
            prod.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        }
        let nf = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
        let mut p = 0;
        let cov = SymmetricMatrix::from_lower_fn(dim, |i, j| {
            let c = (prod[p] - nf * mean[i] * mean[j]) / (nf - 1.0);
            p += 1;
            c
        });
        (mean, cov)
    }
}

/// Alias matching the construction operation's name.
pub fn make_state(covariance: SymmetricMatrix) -> Result<GaussianState> {
    GaussianState::new(covariance)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    Ok(())
}

/// `D = B / α` for a state whose dispersion is `α` (relative tolerance
/// [`DISPERSION_RTOL`]). If the quotient's trace misses one by more than the
/// density tolerance it is renormalized by its trace.
pub fn scale_to_density(state: &GaussianState, alpha: f64) -> Result<DensityOperator> {
    check_alpha(alpha)?;
    let trace = state.dispersion();
    if ((trace - alpha) / alpha).abs() > DISPERSION_RTOL {
        return Err(Error::TraceMismatch {
            trace,
            expected: alpha,
        });
    }
    let d = state.covariance().scaled(1.0 / alpha);
    match DensityOperator::new(d.clone()) {
        Err(Error::TraceMismatch { .. }) => DensityOperator::normalized(d),
        other => other,
    }
}

/// Outcome of [`chebyshov_tail`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshovTail {
    /// `α / C` with `α = Tr B`.
    pub bound: f64,
    /// Fraction of draws with `‖ψ‖² > C`.
    pub empirical: f64,
    /// Binomial standard error `√(p̂(1−p̂)/n)`.
    pub stderr: f64,
    pub samples: usize,
}

/// Compares `P(‖ψ‖² > C)` with the Chebyshov bound `E‖ψ‖²/C`.
pub fn chebyshov_tail(
    state: &GaussianState,
    threshold: f64,
    n: usize,
    seed: RngSeed,
) -> Result<ChebyshovTail> {
    if !(threshold > 0.0) {
        return Err(Error::invalid("threshold must be positive"));
    }
    if n == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let dim = state.dim();
    let hits: usize = map_chunks(n, seed, |rng, _, count| {
        let mut v = vec![0.0; dim];
        let mut hits = 0usize;
        for _ in 0..count {
            state.fill_sample(rng, &mut v);
            if v.iter().map(|x| x * x).sum::<f64>() > threshold {
                hits += 1;
            }
        }
        hits
    })
    .into_iter()
    .sum();
    let p = hits as f64 / n as f64;
    Ok(ChebyshovTail {
        bound: state.dispersion() / threshold,
        empirical: p,
        stderr: (p * (1.0 - p) / n as f64).sqrt(),
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::PureState;

    #[test]
    fn zero_covariance_is_degenerate() {
        let s = GaussianState::new(SymmetricMatrix::zeros(3)).unwrap();
        assert_eq!(s.dispersion(), 0.0);
        assert_eq!(s.rank(), 0);
        for v in s.sample(100, RngSeed::new(1, 0)) {
            assert!(v.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn scaled_identity_dispersion() {
        let s = GaussianState::new(SymmetricMatrix::identity(5).scaled(0.3)).unwrap();
        assert!((s.dispersion() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_psd() {
        let m = SymmetricMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(GaussianState::new(m), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn pure_state_samples_stay_on_the_line() {
        let psi = PureState::normalize(vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let alpha = 0.01;
        let s = GaussianState::new(SymmetricMatrix::outer(psi.vector(), alpha)).unwrap();
        assert!((s.dispersion() - alpha).abs() < 1e-15);
        assert_eq!(s.rank(), 1);
        for v in s.sample(2000, RngSeed::new(3, 0)) {
            let along: f64 = v.iter().zip(psi.vector()).map(|(a, b)| a * b).sum();
            let off = v
                .iter()
                .zip(psi.vector())
                .map(|(a, b)| (a - along * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(off <= 1e-12, "off-line component {off}");
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = GaussianState::new(SymmetricMatrix::identity(3)).unwrap();
        let a = s.sample(40_000, RngSeed::new(9, 2));
        let b = s.sample(40_000, RngSeed::new(9, 2));
        assert_eq!(a, b);
        let c = s.sample(40_000, RngSeed::new(9, 3));
        assert_ne!(a, c);
    }

    #[test]
    fn scale_to_density_examples() {
        let alpha = 0.2;
        let psi = PureState::normalize(vec![1.0, 1.0]).unwrap();
        let s = GaussianState::new(SymmetricMatrix::outer(psi.vector(), alpha)).unwrap();
        let d = scale_to_density(&s, alpha).unwrap();
        assert!(d.matrix().max_abs_diff(&psi.projector()) < 1e-15);

        let s = GaussianState::new(SymmetricMatrix::identity(4).scaled(alpha / 4.0)).unwrap();
        let d = scale_to_density(&s, alpha).unwrap();
        assert!(
            d.matrix()
                .max_abs_diff(&SymmetricMatrix::identity(4).scaled(0.25))
                < 1e-15
        );

        assert!(matches!(
            scale_to_density(&s, 2.0 * alpha),
            Err(Error::TraceMismatch { .. })
        ));
    }

    #[test]
    fn scale_to_density_renormalizes_within_dispersion_tolerance() {
        let alpha = 0.5;
        let s =
            GaussianState::new(SymmetricMatrix::identity(2).scaled(0.25 * (1.0 + 1e-10))).unwrap();
        let d = scale_to_density(&s, alpha).unwrap();
        assert!((d.matrix().trace() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn chebyshov_bound_formula() {
        let s = GaussianState::new(SymmetricMatrix::identity(4).scaled(0.01 / 4.0)).unwrap();
        let t = chebyshov_tail(&s, 1.0, 1000, RngSeed::new(1, 0)).unwrap();
        assert!((t.bound - 0.01).abs() < 1e-15);
        let t = chebyshov_tail(&s, 1e6, 10_000, RngSeed::new(1, 0)).unwrap();
        assert_eq!(t.empirical, 0.0);
    }
}
