#![allow(dead_code)]

use dequant::{DensityOperator, SymmetricForm, SymmetricMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn unit_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v = normal_vec(rng, d);
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, d: usize) -> SymmetricMatrix {
    SymmetricMatrix::from_lower_fn(d, |_, _| rng.sample(StandardNormal))
}

/// `G Gᵀ` with Gaussian `G`, rescaled to the requested trace.
pub fn random_psd(rng: &mut ChaCha8Rng, d: usize, trace: f64) -> SymmetricMatrix {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let m = SymmetricMatrix::from_dense(&(&g * g.transpose()));
    let t = m.trace();
    m.scaled(trace / t)
}

pub fn random_density(rng: &mut ChaCha8Rng, d: usize) -> DensityOperator {
    DensityOperator::normalized(random_psd(rng, d, 1.0)).unwrap()
}

pub fn random_form(rng: &mut ChaCha8Rng, degree: usize, d: usize) -> SymmetricForm {
    SymmetricForm::from_canonical_fn(degree, d, |_| rng.sample(StandardNormal)).unwrap()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
