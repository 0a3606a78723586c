//! Classical variables as truncated Taylor stacks.
//!
//! An [`AnalyticFunctional`] stores the derivative forms `f⁽ᵏ⁾(0)` for
//! `1 ≤ k ≤ MAX_DEGREE` and evaluates
//!
//! ```text
//! f(ψ) = Σ_k f⁽ᵏ⁾(0)(ψ,…,ψ) / k!
//! ```
//!
//! There is no constant term, so `f(0) = 0` always holds.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::form::{factorial, multiplicity, norm_form, FormNorm, SymmetricForm};
use crate::matrix::SymmetricMatrix;

/// Flattened monomial table used for fast repeated evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
struct MonomialTable {
    weights: Vec<f64>,
    /// End offset into `indices` of each monomial.
    ends: Vec<u32>,
    indices: Vec<u32>,
}

impl MonomialTable {
    fn build(terms: &BTreeMap<usize, SymmetricForm>) -> Self {
        let mut table = Self::default();
        for (&k, form) in terms {
            let inv = 1.0 / factorial(k);
            form.for_each_monomial(|idx, w| {
                table.weights.push(w * inv);
                table.indices.extend(idx.iter().map(|&i| i as u32));
                table.ends.push(table.indices.len() as u32);
            });
        }
        table
    }

    #[inline]
    fn eval(&self, psi: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut start = 0usize;
        for (w, &end) in self.weights.iter().zip(&self.ends) {
            let end = end as usize;
            let mut p = *w;
            for &i in &self.indices[start..end] {
                p *= psi[i as usize];
            }
            total += p;
            start = end;
        }
        total
    }
}

/// `f(ψ) = Σ_k f⁽ᵏ⁾(0)(ψ,…,ψ)/k!` with `f⁽ᵏ⁾(0)` stored per degree.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticFunctional {
    dim: usize,
    terms: BTreeMap<usize, SymmetricForm>,
    table: MonomialTable,
}

impl AnalyticFunctional {
    /// Each form is taken as the derivative `f⁽ᵏ⁾(0)` for its degree `k`.
    pub fn new(dim: usize, derivatives: impl IntoIterator<Item = SymmetricForm>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("functional dimension must be at least 1"));
        }
        let mut terms = BTreeMap::new();
        for form in derivatives {
            if form.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: form.dim(),
                });
            }
            let k = form.degree();
            if terms.insert(k, form).is_some() {
                return Err(Error::invalid(format!("degree {k} given twice")));
            }
        }
        let table = MonomialTable::build(&terms);
        Ok(Self { dim, terms, table })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(dim, [])
    }

    /// `f(ψ) = (A ψ, ψ)`, so `f″(0) = 2A`.
    pub fn quadratic(a: &SymmetricMatrix) -> Self {
        Self::new(a.dim(), [SymmetricForm::from_matrix(&a.scaled(2.0))])
            .expect("shape is valid by construction")
    }

    /// `f(ψ) = (a, ψ)`.
    pub fn linear(a: &[f64]) -> Result<Self> {
        Self::new(a.len(), [SymmetricForm::from_vector(a)?])
    }

    /// Functional whose degree-`k` homogeneous part has values `P(ψ,…,ψ)` for
    /// each given form `P`; stores `f⁽ᵏ⁾(0) = k!·P`.
    pub fn from_homogeneous(
        dim: usize,
        parts: impl IntoIterator<Item = SymmetricForm>,
    ) -> Result<Self> {
        Self::new(
            dim,
            parts.into_iter().map(|p| {
                let k = p.degree();
                p.scaled(factorial(k))
            }),
        )
    }

    /// `f(ψ) = Σₙ (Aₙ ψ, ψ)ⁿ` for `n = 1..=N`, `N = matrices.len()`.
    pub fn quadratic_power_series(matrices: &[SymmetricMatrix]) -> Result<Self> {
        let dim = matrices
            .first()
            .map(|m| m.dim())
            .ok_or_else(|| Error::invalid("need at least one matrix"))?;
        let parts = matrices
            .iter()
            .enumerate()
            .map(|(i, a)| power_of_quadratic(a, i + 1))
            .collect::<Result<Vec<_>>>()?;
        Self::from_homogeneous(dim, parts)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `f⁽ᵏ⁾(0)`, if stored.
    pub fn derivative(&self, k: usize) -> Option<&SymmetricForm> {
        self.terms.get(&k)
    }

    /// Stored `(k, f⁽ᵏ⁾(0))` pairs in increasing degree.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &SymmetricForm)> {
        self.terms.iter().map(|(&k, f)| (k, f))
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().next_back().copied().unwrap_or(0)
    }

    /// True if every stored odd-degree term is identically zero.
    pub fn is_even(&self) -> bool {
        self.terms.iter().all(|(k, f)| k % 2 == 0 || f.is_zero())
    }

    pub fn eval(&self, psi: &[f64]) -> Result<f64> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: psi.len(),
            });
        }
        Ok(self.table.eval(psi))
    }

    /// Evaluation without the length check; `psi.len()` must equal `dim`.
    #[inline]
    pub fn eval_unchecked(&self, psi: &[f64]) -> f64 {
        debug_assert_eq!(psi.len(), self.dim);
        self.table.eval(psi)
    }

    /// `f″(0)` as a matrix; zero if there is no quadratic term.
    pub fn second_derivative(&self) -> SymmetricMatrix {
        self.terms
            .get(&2)
            .and_then(SymmetricForm::to_matrix)
            .unwrap_or_else(|| SymmetricMatrix::zeros(self.dim))
    }

    /// `f_α = f / α`.
    pub fn amplify(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        self.map_terms(|_, f| f.scaled(1.0 / alpha))
    }

    /// Applies `g` to every stored term.
    pub fn map_terms(
        &self,
        mut g: impl FnMut(usize, &SymmetricForm) -> SymmetricForm,
    ) -> Result<Self> {
        Self::new(self.dim, self.terms.iter().map(|(&k, f)| g(k, f)))
    }

    /// Keeps only the terms for which `keep(k)` is true.
    pub fn filter_degrees(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        Self::new(
            self.dim,
            self.terms
                .iter()
                .filter(|(&k, _)| keep(k))
                .map(|(_, f)| f.clone()),
        )
        .expect("subset of a valid functional")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut terms = self.terms.clone();
        for (&k, f) in &other.terms {
            let merged = match terms.get(&k) {
                Some(g) => g.add(f)?,
                None => f.clone(),
            };
            terms.insert(k, merged);
        }
        Self::new(self.dim, terms.into_values())
    }

    /// Smallest-`c` envelope `‖f⁽ⁿ⁾(0)‖ ≤ c·rⁿ` with `r = maxₙ ‖f⁽ⁿ⁾(0)‖^{1/n}`.
    pub fn growth_envelope(&self) -> GrowthEnvelope {
        let norms: Vec<(usize, FormNorm)> =
            self.terms.iter().map(|(&k, f)| (k, norm_form(f))).collect();
        let r = norms
            .iter()
            .map(|(k, n)| n.value.powf(1.0 / *k as f64))
            .fold(0.0, f64::max);
        let c = if r > 0.0 {
            norms
                .iter()
                .map(|(k, n)| n.value / r.powi(*k as i32))
                .fold(0.0, f64::max)
        } else {
            0.0
        };
        GrowthEnvelope { c, r, norms }
    }
}

/// Exponential-growth envelope of the derivative norms.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthEnvelope {
    pub c: f64,
    pub r: f64,
    /// Norm estimate used for each stored degree.
    pub norms: Vec<(usize, FormNorm)>,
}

impl GrowthEnvelope {
    /// Checks `‖f⁽ⁿ⁾(0)‖ ≤ c·rⁿ (1 + rtol)` for every stored degree.
    pub fn holds(&self, rtol: f64) -> bool {
        self.norms
            .iter()
            .all(|(k, n)| n.value <= self.c * self.r.powi(*k as i32) * (1.0 + rtol))
    }
}

/// Homogeneous polynomial in the monomial basis: sorted index → coefficient.
type Monomials = BTreeMap<Vec<usize>, f64>;

fn quadratic_monomials(a: &SymmetricMatrix) -> Monomials {
    let mut m = Monomials::new();
    for i in 0..a.dim() {
        for j in i..a.dim() {
            let c = if i == j {
                a.get(i, i)
            } else {
                2.0 * a.get(i, j)
            };
            if c != 0.0 {
                m.insert(vec![i, j], c);
            }
        }
    }
    m
}

fn multiply(p: &Monomials, q: &Monomials) -> Monomials {
    let mut out = Monomials::new();
    for (a, ca) in p {
        for (b, cb) in q {
            let mut idx: Vec<usize> = a.iter().chain(b).copied().collect();
            idx.sort_unstable();
            *out.entry(idx).or_insert(0.0) += ca * cb;
        }
    }
    out
}

/// Symmetric form `P` of degree `2n` with `P(ψ,…,ψ) = (Aψ, ψ)ⁿ`.
pub fn power_of_quadratic(a: &SymmetricMatrix, n: usize) -> Result<SymmetricForm> {
    if n == 0 {
        return Err(Error::invalid("power must be at least 1"));
    }
    let base = quadratic_monomials(a);
    let mut acc = base.clone();
    for _ in 1..n {
        acc = multiply(&acc, &base);
    }
    let mut form = SymmetricForm::zeros(2 * n, a.dim())?;
    for (idx, c) in acc {
        form.set(&idx, c / multiplicity(&idx))?;
    }
    Ok(form)
}
