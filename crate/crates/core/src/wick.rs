//! Exact Gaussian moments by perfect-matching (Isserlis/Wick) enumeration.
//!
//! For a zero-mean Gaussian with covariance `D`,
//!
//! ```text
//! E Π_{i=1}^{2k} (φᵢ, ψ) = Σ_{matchings M} Π_{(i,j)∈M} (D φᵢ, φⱼ)
//! ```
//!
//! over the `(2k−1)!!` perfect matchings of `{1..2k}`; odd moments vanish.

use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::form::{SymmetricForm, MAX_DEGREE};
use crate::matrix::SymmetricMatrix;
use crate::sum::CompensatedSum;

/// Largest moment order supported.
pub const MAX_ORDER: usize = 2 * MAX_DEGREE;

/// `(2k−1)!! = 1·3·5·…·(2k−1)`, the number of perfect matchings of `2k` points.
pub fn matching_count(order: usize) -> u64 {
    if order % 2 == 1 {
        return 0;
    }
    (1..order as u64).step_by(2).product()
}

/// Visits every perfect matching of `{0..order}` in a fixed order: the smallest
/// unpaired index is paired with each larger unpaired index in turn. Returns
/// the number of matchings visited.
pub fn for_each_matching(order: usize, mut f: impl FnMut(&[(usize, usize)])) -> u64 {
    if order % 2 == 1 {
        return 0;
    }
    let mut used = vec![false; order];
    let mut pairs = Vec::with_capacity(order / 2);
    let mut count = 0;
    visit(&mut used, &mut pairs, &mut f, &mut count);
    count
}

fn visit(
    used: &mut [bool],
    pairs: &mut Vec<(usize, usize)>,
    f: &mut impl FnMut(&[(usize, usize)]),
    count: &mut u64,
) {
    let Some(first) = used.iter().position(|&u| !u) else {
        f(pairs);
        *count += 1;
        return;
    };
    used[first] = true;
    for second in first + 1..used.len() {
        if used[second] {
            continue;
        }
        used[second] = true;
        pairs.push((first, second));
        visit(used, pairs, f, count);
        pairs.pop();
        used[second] = false;
    }
    used[first] = false;
}

/// Sum over perfect matchings of products of `gram` entries (the hafnian of a
/// symmetric `m × m` row-major matrix).
pub fn hafnian(gram: &[f64], m: usize) -> f64 {
    debug_assert_eq!(gram.len(), m * m);
    if m % 2 == 1 {
        return 0.0;
    }
    if m == 0 {
        return 1.0;
    }
    let mut acc = CompensatedSum::new();
    let mut used = vec![false; m];
    hafnian_rec(gram, m, &mut used, 1.0, &mut acc);
    acc.value()
}

fn hafnian_rec(gram: &[f64], m: usize, used: &mut [bool], prod: f64, acc: &mut CompensatedSum) {
    let Some(first) = used.iter().position(|&u| !u) else {
        acc.add(prod);
        return;
    };
    used[first] = true;
    for second in first + 1..m {
        if used[second] {
            continue;
        }
        let g = gram[first * m + second];
        if g != 0.0 {
            used[second] = true;
            hafnian_rec(gram, m, used, prod * g, acc);
            used[second] = false;
        }
    }
    used[first] = false;
}

/// `E Π (φᵢ, ψ)` for `ψ ~ N(0, D)`: zero for odd counts, the matching sum otherwise.
pub fn gaussian_moment(d: &SymmetricMatrix, args: &[&[f64]]) -> Result<f64> {
    let m = args.len();
    if m > MAX_ORDER {
        return Err(Error::DegreeOverCap {
            degree: m,
            cap: MAX_ORDER,
        });
    }
    for a in args {
        d.check_dim(a.len())?;
    }
    if m % 2 == 1 {
        return Ok(0.0);
    }
    let dphi: Vec<Vec<f64>> = args.iter().map(|a| d.mul_vec(a)).collect();
    let mut gram = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            gram[i * m + j] = dphi[i].iter().zip(args[j]).map(|(x, y)| x * y).sum();
        }
    }
    Ok(hafnian(&gram, m))
}

/// `∫ A(ψ,…,ψ) dρ_D(ψ) = Tr e(k, D) A`, contracted over canonical index classes.
pub fn average_form(d: &SymmetricMatrix, form: &SymmetricForm) -> Result<f64> {
    d.check_dim(form.dim())?;
    let k = form.degree();
    if k % 2 == 1 {
        return Ok(0.0);
    }
    let mut acc = CompensatedSum::new();
    let mut gram = vec![0.0; k * k];
    form.for_each_monomial(|idx, w| {
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                gram[a * k + b] = d.get(i, j);
            }
        }
        acc.add(w * hafnian(&gram, k));
    });
    Ok(acc.value())
}

/// Observable of the order-`2n` generalized quantum model: forms
/// `(A₂, A₄, …, A₂ₙ)` where entry `j` has degree `2(j+1)`. Any entry may be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableMultiple {
    dim: usize,
    entries: Vec<SymmetricForm>,
}

impl ObservableMultiple {
    pub fn new(dim: usize, entries: Vec<SymmetricForm>) -> Result<Self> {
        for (j, e) in entries.iter().enumerate() {
            if e.degree() != 2 * (j + 1) {
                return Err(Error::invalid(format!(
                    "entry {j} must have degree {}, found {}",
                    2 * (j + 1),
                    e.degree()
                )));
            }
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.dim(),
                });
            }
        }
        Ok(Self { dim, entries })
    }

    /// All-zero multiple of order `2n`.
    pub fn zeros(dim: usize, n: usize) -> Result<Self> {
        let entries = (1..=n)
            .map(|k| SymmetricForm::zeros(2 * k, dim))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `n` in `N_quant,2n`.
    pub fn order(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[SymmetricForm] {
        &self.entries
    }

    /// `A₂ₖ`, `k ≥ 1`.
    pub fn entry(&self, k: usize) -> Option<&SymmetricForm> {
        k.checked_sub(1).and_then(|j| self.entries.get(j))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(SymmetricForm::is_zero)
    }
}

/// `⟨A⟩_D = Σₖ Tr e(2k, D) A₂ₖ`.
pub fn generalized_trace(d: &DensityOperator, multiple: &ObservableMultiple) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for e in multiple.entries() {
        acc.add(average_form(d.matrix(), e)?);
    }
    Ok(acc.value())
}
