mod common;

use common::*;
use dequant::wick::{for_each_matching, matching_count};
use dequant::{average_form, gaussian_moment, GaussianState, RngSeed, SymmetricMatrix};

#[test]
fn matching_enumeration_counts() {
    let expected = [1u64, 1, 3, 15, 105, 945, 10395, 135135, 2027025];
    for (k, &e) in expected.iter().enumerate() {
        assert_eq!(for_each_matching(2 * k, |_| {}), e);
        assert_eq!(matching_count(2 * k), e);
    }
}

#[test]
fn fourth_moment_matches_three_pairing_formula() {
    let mut r = rng(1);
    for case in 0..20 {
        let d = 2 + case % 5;
        let dm = random_psd(&mut r, d, 1.0);
        let phi: Vec<Vec<f64>> = (0..4).map(|_| normal_vec(&mut r, d)).collect();
        let p = |i: usize, j: usize| dm.bilinear(&phi[i], &phi[j]);
        let formula = p(0, 2) * p(1, 3) + p(1, 2) * p(0, 3) + p(0, 1) * p(2, 3);
        let refs: Vec<&[f64]> = phi.iter().map(|v| v.as_slice()).collect();
        let m = gaussian_moment(&dm, &refs).unwrap();
        assert!(
            (m - formula).abs() <= 1e-12 * formula.abs().max(1.0),
            "{m} vs {formula}"
        );
    }
}

#[test]
fn moments_are_permutation_invariant_and_homogeneous() {
    let mut r = rng(2);
    let dm = random_psd(&mut r, 3, 2.0);
    let phi: Vec<Vec<f64>> = (0..6).map(|_| normal_vec(&mut r, 3)).collect();
    let refs: Vec<&[f64]> = phi.iter().map(|v| v.as_slice()).collect();
    let base = gaussian_moment(&dm, &refs).unwrap();
    for shift in 1..6 {
        let mut rotated = refs.clone();
        rotated.rotate_left(shift);
        rotated.swap(0, 3);
        assert!(
            (gaussian_moment(&dm, &rotated).unwrap() - base).abs() <= 1e-12 * base.abs().max(1.0)
        );
    }
    let c: f64 = 1.7;
    let scaled = gaussian_moment(&dm.scaled(c), &refs).unwrap();
    assert!((scaled - c.powi(3) * base).abs() <= 1e-12 * scaled.abs().max(1.0));
}

#[test]
fn scalar_moments() {
    let d = SymmetricMatrix::identity(1);
    let one = [1.0];
    let mut df = 1.0;
    for k in 1..=8usize {
        df *= (2 * k - 1) as f64;
        let args = vec![&one[..]; 2 * k];
        assert_eq!(gaussian_moment(&d, &args).unwrap(), df);
    }
}

#[test]
fn average_form_agrees_with_monte_carlo() {
    let mut r = rng(3);
    let n = 1_000_000;
    for case in 0..50u64 {
        let d = 1 + (case as usize % 3);
        let degree = 2 * (1 + (case as usize / 3) % 3);
        let density = random_density(&mut r, d);
        let form = random_form(&mut r, degree, d);
        let exact = average_form(density.matrix(), &form).unwrap();
        let state = GaussianState::new(density.matrix().clone()).unwrap();
        let mc = state.mc_mean(n, RngSeed::new(case, 0), |psi| form.eval_diag(psi).unwrap());
        assert!(
            mc.within(exact, 4.0),
            "case {case} (d={d}, k={degree}): exact {exact}, mc {} ± {}",
            mc.mean,
            mc.stderr
        );
    }
}

#[test]
fn odd_degree_averages_vanish() {
    let mut r = rng(4);
    for degree in [1, 3, 5, 7] {
        let form = random_form(&mut r, degree, 2);
        assert_eq!(
            average_form(&random_psd(&mut r, 2, 1.0), &form).unwrap(),
            0.0
        );
    }
}
