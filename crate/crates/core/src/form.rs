//! Symmetric multilinear forms with one coefficient per non-decreasing
//! multi-index.
//!
//! A degree-`k` form on `R^d` is stored as `C(d+k-1, k)` coefficients in
//! lexicographic order of the canonical indices `i₁ ≤ … ≤ i_k`. The
//! coefficient at a canonical index is the common value of the fully
//! symmetric tensor on every permutation of that index, so
//!
//! ```text
//! A(ψ,…,ψ) = Σ_canonical c · mult(c) · ψ_{c₁}…ψ_{c_k},   mult(c) = k! / Π m_j!
//! ```
//!
//! where `m_j` counts repeats of index `j` in `c`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// Largest supported form degree. Wick pairings at order `2·MAX_DEGREE` stay
/// enumerable and canonical storage stays small for the dimensions used here.
pub const MAX_DEGREE: usize = 8;

/// Default number of random unit vectors used by [`norm_form`] for degree > 2.
pub const NORM_SAMPLES: usize = 4096;

const NORM_SEED: u64 = 0x6e6f_726d_5f66_6f72;

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Number of non-decreasing tuples of length `len` over `alphabet` symbols.
fn multiset_count(alphabet: usize, len: usize) -> usize {
    if len == 0 {
        1
    } else if alphabet == 0 {
        0
    } else {
        binomial(alphabet + len - 1, len)
    }
}

/// Number of stored coefficients for a degree-`degree` form on `R^dim`.
pub fn coefficient_count(degree: usize, dim: usize) -> usize {
    multiset_count(dim, degree)
}

/// Lexicographic rank of a canonical index among all canonical indices.
pub fn canonical_rank(idx: &[usize], dim: usize) -> usize {
    let k = idx.len();
    let mut rank = 0;
    let mut prev = 0;
    for (p, &ip) in idx.iter().enumerate() {
        for v in prev..ip {
            rank += multiset_count(dim - v, k - p - 1);
        }
        prev = ip;
    }
    rank
}

/// `k! / Π m_j!` for a sorted index.
pub fn multiplicity(idx: &[usize]) -> f64 {
    let mut denom = 1.0;
    let mut run = 1usize;
    for w in idx.windows(2) {
        if w[0] == w[1] {
            run += 1;
            denom *= run as f64;
        } else {
            run = 1;
        }
    }
    factorial(idx.len()) / denom
}

/// Calls `f(rank, idx)` for every canonical index in lexicographic order.
pub fn for_each_canonical(degree: usize, dim: usize, mut f: impl FnMut(usize, &[usize])) {
    if dim == 0 {
        return;
    }
    let mut idx = vec![0usize; degree];
    let mut rank = 0;
    loop {
        f(rank, &idx);
        rank += 1;
        match idx.iter().rposition(|&v| v + 1 < dim) {
            None => return,
            Some(p) => {
                let next = idx[p] + 1;
                for slot in &mut idx[p..] {
                    *slot = next;
                }
            }
        }
    }
}

/// Advances `v` to the next lexicographic permutation; false when `v` was the last.
pub(crate) fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Dense row-major degree-`k` coefficient array, `dim^k` entries, no symmetry assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    degree: usize,
    dim: usize,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(degree: usize, dim: usize) -> Self {
        Self {
            degree,
            dim,
            data: vec![0.0; dim.pow(degree as u32)],
        }
    }

    pub fn from_fn(degree: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(degree, dim);
        let mut idx = vec![0usize; degree];
        for slot in 0..t.data.len() {
            let mut rem = slot;
            for p in (0..degree).rev() {
                idx[p] = rem % dim;
                rem /= dim;
            }
            t.data[slot] = f(&idx);
        }
        t
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    /// Full contraction `Σ_{j} T[j] Π_p args[p][j_p]`.
    pub fn contract(&self, args: &[&[f64]]) -> f64 {
        let mut acc = 0.0;
        let mut idx = vec![0usize; self.degree];
        for slot in 0..self.data.len() {
            let mut rem = slot;
            for p in (0..self.degree).rev() {
                idx[p] = rem % self.dim;
                rem /= self.dim;
            }
            let mut term = self.data[slot];
            for (p, &i) in idx.iter().enumerate() {
                term *= args[p][i];
            }
            acc += term;
        }
        acc
    }
}

/// A symmetric `degree`-linear form on `R^dim` in canonical storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricForm {
    degree: usize,
    dim: usize,
    coeffs: Vec<f64>,
}

fn check_shape(degree: usize, dim: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::DegreeOverCap {
            degree,
            cap: MAX_DEGREE,
        });
    }
    if degree == 0 {
        return Err(Error::invalid("form degree must be at least 1"));
    }
    if dim == 0 {
        return Err(Error::invalid("form dimension must be at least 1"));
    }
    Ok(())
}

impl SymmetricForm {
    pub fn zeros(degree: usize, dim: usize) -> Result<Self> {
        check_shape(degree, dim)?;
        Ok(Self {
            degree,
            dim,
            coeffs: vec![0.0; coefficient_count(degree, dim)],
        })
    }

    /// Coefficients in lexicographic canonical order.
    pub fn from_coeffs(degree: usize, dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_shape(degree, dim)?;
        let expected = coefficient_count(degree, dim);
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coeffs.len(),
            });
        }
        Ok(Self {
            degree,
            dim,
            coeffs,
        })
    }

    /// Builds a form from `f(canonical index)`.
    pub fn from_canonical_fn(
        degree: usize,
        dim: usize,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        let mut form = Self::zeros(degree, dim)?;
        for_each_canonical(degree, dim, |r, idx| form.coeffs[r] = f(idx));
        Ok(form)
    }

    /// The form whose values are the average of `raw` over all argument permutations.
    pub fn symmetrize(raw: &DenseTensor) -> Result<Self> {
        let (degree, dim) = (raw.degree(), raw.dim());
        Self::from_canonical_fn(degree, dim, |idx| {
            let mut perm = idx.to_vec();
            let mut sum = 0.0;
            let mut count = 0usize;
            loop {
                sum += raw.get(&perm);
                count += 1;
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            sum / count as f64
        })
    }

    /// Degree-2 form `(u, v) ↦ (A u, v)`.
    pub fn from_matrix(m: &SymmetricMatrix) -> Self {
        let dim = m.dim();
        let mut coeffs = Vec::with_capacity(coefficient_count(2, dim));
        for i in 0..dim {
            for j in i..dim {
                coeffs.push(m.get(i, j));
            }
        }
        Self {
            degree: 2,
            dim,
            coeffs,
        }
    }

    /// Inverse of [`from_matrix`](Self::from_matrix); `None` unless degree is 2.
    pub fn to_matrix(&self) -> Option<SymmetricMatrix> {
        if self.degree != 2 {
            return None;
        }
        let mut m = SymmetricMatrix::zeros(self.dim);
        let mut r = 0;
        for i in 0..self.dim {
            for j in i..self.dim {
                m.set(i, j, self.coeffs[r]);
                r += 1;
            }
        }
        Some(m)
    }

    /// Degree-1 form `u ↦ (a, u)`.
    pub fn from_vector(a: &[f64]) -> Result<Self> {
        Self::from_coeffs(1, a.len(), a.to_vec())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient at any (not necessarily sorted) index.
    pub fn get(&self, idx: &[usize]) -> f64 {
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        self.coeffs[canonical_rank(&sorted, self.dim)]
    }

    /// Sets the coefficient shared by every permutation of `idx`.
    pub fn set(&mut self, idx: &[usize], value: f64) -> Result<()> {
        if idx.len() != self.degree {
            return Err(Error::DimensionMismatch {
                expected: self.degree,
                found: idx.len(),
            });
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.dim) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                dim: self.dim,
            });
        }
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        let r = canonical_rank(&sorted, self.dim);
        self.coeffs[r] = value;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            degree: self.degree,
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.degree != self.degree {
            return Err(Error::invalid(format!(
                "cannot add forms of degree {} and {}",
                self.degree, other.degree
            )));
        }
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(Self {
            degree: self.degree,
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Calls `f(idx, coeff · mult(idx))` for every nonzero coefficient: the
    /// monomial expansion of `A(ψ,…,ψ)`.
    pub fn for_each_monomial(&self, mut f: impl FnMut(&[usize], f64)) {
        for_each_canonical(self.degree, self.dim, |r, idx| {
            let c = self.coeffs[r];
            if c != 0.0 {
                f(idx, c * multiplicity(idx));
            }
        });
    }

    /// Multilinear evaluation `A(args[0], …, args[k-1])`.
    pub fn eval(&self, args: &[&[f64]]) -> Result<f64> {
        if args.len() != self.degree {
            return Err(Error::DimensionMismatch {
                expected: self.degree,
                found: args.len(),
            });
        }
        for a in args {
            if a.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: a.len(),
                });
            }
        }
        let mut total = 0.0;
        let mut perm = vec![0usize; self.degree];
        for_each_canonical(self.degree, self.dim, |r, idx| {
            let c = self.coeffs[r];
            if c == 0.0 {
                return;
            }
            perm.copy_from_slice(idx);
            let mut s = 0.0;
            loop {
                s += perm
                    .iter()
                    .enumerate()
                    .map(|(p, &i)| args[p][i])
                    .product::<f64>();
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            total += c * s;
        });
        Ok(total)
    }

    /// Diagonal evaluation `A(ψ, …, ψ)`.
    pub fn eval_diag(&self, psi: &[f64]) -> Result<f64> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: psi.len(),
            });
        }
        Ok(self.eval_diag_unchecked(psi))
    }

    pub(crate) fn eval_diag_unchecked(&self, psi: &[f64]) -> f64 {
        let mut total = 0.0;
        self.for_each_monomial(|idx, w| {
            total += w * idx.iter().map(|&i| psi[i]).product::<f64>();
        });
        total
    }

    /// Gradient of `ψ ↦ A(ψ, …, ψ)`.
    pub fn gradient_diag(&self, psi: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.dim];
        self.for_each_monomial(|idx, w| {
            for q in 0..idx.len() {
                let rest: f64 = idx
                    .iter()
                    .enumerate()
                    .filter(|&(r, _)| r != q)
                    .map(|(_, &i)| psi[i])
                    .product();
                grad[idx[q]] += w * rest;
            }
        });
        grad
    }
}

/// Result of [`norm_form`]: a lower bound on `sup_{‖ψ‖≤1} |A(ψ,…,ψ)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormNorm {
    pub value: f64,
    /// Random starting points used; zero when the value is exact.
    pub samples: usize,
}

/// Norm of a symmetric form over the real unit ball. Exact for degree 1 and 2.
pub fn norm_form(form: &SymmetricForm) -> FormNorm {
    norm_form_with(form, NORM_SAMPLES)
}

pub fn norm_form_with(form: &SymmetricForm, samples: usize) -> FormNorm {
    if form.is_zero() {
        return FormNorm {
            value: 0.0,
            samples: 0,
        };
    }
    match form.degree() {
        1 => FormNorm {
            value: form.coeffs().iter().map(|c| c * c).sum::<f64>().sqrt(),
            samples: 0,
        },
        2 => FormNorm {
            value: form.to_matrix().expect("degree 2").spectral_norm(),
            samples: 0,
        },
        _ => FormNorm {
            value: sampled_norm(form, samples.max(1)),
            samples: samples.max(1),
        },
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

fn sampled_norm(form: &SymmetricForm, samples: usize) -> f64 {
    const REFINE: usize = 8;
    const ITERS: usize = 200;
    let dim = form.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_SEED);
    let mut starts: Vec<(f64, Vec<f64>)> = Vec::with_capacity(samples);
    while starts.len() < samples {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if normalize(&mut v) {
            starts.push((form.eval_diag_unchecked(&v).abs(), v));
        }
    }
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = starts[0].0;
    for (value, start) in starts.into_iter().take(REFINE) {
        best = best.max(hill_climb(form, start, value, ITERS));
    }
    best
}

/// Projected gradient ascent of `|A(ψ,…,ψ)|` on the unit sphere with step halving.
fn hill_climb(form: &SymmetricForm, mut psi: Vec<f64>, mut value: f64, iters: usize) -> f64 {
    let mut step = 1.0;
    for _ in 0..iters {
        let p = form.eval_diag_unchecked(&psi);
        let mut g = form.gradient_diag(&psi);
        let sign = p.signum();
        let radial: f64 = g.iter().zip(&psi).map(|(a, b)| a * b).sum();
        for (gi, &x) in g.iter_mut().zip(&psi) {
            *gi = sign * (*gi - radial * x);
        }
        let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm < 1e-14 * value.max(1e-300) {
            break;
        }
        let mut improved = false;
        while step > 1e-12 {
            let mut cand: Vec<f64> = psi
                .iter()
                .zip(&g)
                .map(|(x, gi)| x + step * gi / gnorm)
                .collect();
            if normalize(&mut cand) {
                let v = form.eval_diag_unchecked(&cand).abs();
                if v > value {
                    psi = cand;
                    value = v;
                    improved = true;
                    step = (step * 2.0).min(1.0);
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    value
}
