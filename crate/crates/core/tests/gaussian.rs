mod common;

use common::*;
use dequant::gaussian::{chebyshov_tail, scale_to_density};
use dequant::{DensityOperator, GaussianState, PureState, RngSeed, SymmetricMatrix};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const N: usize = 1_000_000;

fn check_empirical_covariance(b: &SymmetricMatrix, seed: RngSeed) {
    let state = GaussianState::new(b.clone()).unwrap();
    let (mean, cov) = state.empirical_moments(N, seed);
    let n = N as f64;
    let mean_norm = dot(&mean, &mean).sqrt();
    assert!(
        mean_norm <= 4.0 * (b.trace() / n).sqrt(),
        "mean norm {mean_norm}"
    );
    for i in 0..b.dim() {
        for j in 0..=i {
            let tol = 4.0 * ((b.get(i, i) * b.get(j, j) + b.get(i, j).powi(2)) / n).sqrt();
            let err = (cov.get(i, j) - b.get(i, j)).abs();
            assert!(
                err <= tol,
                "entry ({i},{j}): |{} − {}| > {tol}",
                cov.get(i, j),
                b.get(i, j)
            );
        }
    }
}

#[test]
fn identity_covariance_law_of_large_numbers() {
    let b = SymmetricMatrix::identity(2);
    let state = GaussianState::new(b.clone()).unwrap();
    let (_, cov) = state.empirical_moments(N, RngSeed::new(1, 0));
    let tol = 4.0 / (N as f64).sqrt();
    assert!(tol <= 5e-3);
    assert!(cov.max_abs_diff(&b) <= tol);
}

#[test]
fn empirical_covariance_for_random_states() {
    let mut r = rng(21);
    for (k, d) in [2usize, 5, 16].into_iter().enumerate() {
        let b = random_psd(&mut r, d, d as f64 * 0.7);
        check_empirical_covariance(&b, RngSeed::new(100 + k as u64, 0));
    }
    // Rank-deficient covariance.
    let psi = unit_vec(&mut r, 6);
    check_empirical_covariance(&SymmetricMatrix::outer(&psi, 0.3), RngSeed::new(200, 0));
}

#[test]
fn density_and_covariance_recover_each_other() {
    let mut r = rng(22);
    for d in [1, 3, 8] {
        let alpha = 0.01;
        let b = random_psd(&mut r, d, alpha);
        let state = GaussianState::new(b.clone()).unwrap();
        let density = scale_to_density(&state, alpha).unwrap();
        assert!((density.matrix().trace() - 1.0).abs() <= 1e-12);
        let back = density.matrix().scaled(alpha);
        assert!(back.max_abs_diff(&b) <= 1e-15 * alpha * d as f64);

        let rho = random_density(&mut r, d);
        let state = GaussianState::from_density(&rho, alpha).unwrap();
        let d2 = scale_to_density(&state, alpha).unwrap();
        assert!(d2.matrix().max_abs_diff(rho.matrix()) <= 1e-15);
    }
}

#[test]
fn pure_state_scales_to_projector() {
    let mut r = rng(23);
    let psi = PureState::new(unit_vec(&mut r, 5)).unwrap();
    let alpha = 0.05;
    let state = GaussianState::new(SymmetricMatrix::outer(psi.vector(), alpha)).unwrap();
    assert!((state.dispersion() - alpha).abs() <= 1e-15);
    let d = scale_to_density(&state, alpha).unwrap();
    assert!(d.matrix().max_abs_diff(&psi.projector()) <= 1e-15);
}

/// `P(‖ψ‖² > C)` for `B = (α/d) I`: `‖ψ‖² = (α/d) χ²_d`.
fn chi_square_tail(alpha: f64, d: usize, c: f64) -> f64 {
    1.0 - ChiSquared::new(d as f64).unwrap().cdf(c * d as f64 / alpha)
}

#[test]
fn chebyshov_against_chi_square_oracle() {
    let alpha = 0.01;
    let state = GaussianState::new(SymmetricMatrix::identity(4).scaled(alpha / 4.0)).unwrap();
    let tail = chebyshov_tail(&state, 0.05, 100_000, RngSeed::new(31, 0)).unwrap();
    let exact = chi_square_tail(alpha, 4, 0.05);
    assert!((tail.bound - 0.2).abs() < 1e-15);
    assert!(tail.empirical <= 0.2);
    let se = (exact * (1.0 - exact) / 100_000.0).sqrt();
    assert!(
        (tail.empirical - exact).abs() <= 4.0 * se,
        "{} vs {exact}",
        tail.empirical
    );
}

#[test]
fn chebyshov_holds_across_states_and_thresholds() {
    let mut r = rng(32);
    for (s, d) in [2usize, 4, 8].into_iter().enumerate() {
        let alpha = 0.1 / (s + 1) as f64;
        let state = GaussianState::new(random_psd(&mut r, d, alpha)).unwrap();
        for (t, c) in [0.01, 0.05, 0.2, 1.0].into_iter().enumerate() {
            let tail =
                chebyshov_tail(&state, c, 50_000, RngSeed::new(40 + s as u64, t as u64)).unwrap();
            assert!(tail.empirical <= tail.bound + 3.0 * tail.stderr);
        }
    }
}

#[test]
fn large_threshold_tail_vanishes() {
    let state = GaussianState::new(SymmetricMatrix::identity(3).scaled(0.01)).unwrap();
    let tail = chebyshov_tail(&state, 10.0, 100_000, RngSeed::new(5, 0)).unwrap();
    assert_eq!(tail.empirical, 0.0);
    let _ = DensityOperator::maximally_mixed(3);
}
