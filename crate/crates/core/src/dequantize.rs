//! Classical → quantum maps and the verification of the asymptotic coupling
//! between Gaussian averages and trace formulas.
//!
//! For `ρ` with covariance `B = αD`, `Tr D = 1`:
//!
//! ```text
//! ⟨f⟩_ρ = (α/2) Tr D f″(0) + Σ_{k≥2} α^k/(2k)! · ∫ f⁽²ᵏ⁾(0)(φ,…,φ) dρ_D(φ)
//! ```
//!
//! The quadratic map `T(f) = ½ f″(0)` keeps the first term; the order-`2n`
//! map keeps `A₂ₖ = α^{k−1}/(2k)! · f⁽²ᵏ⁾(0)` for `k ≤ n`.

use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::form::{factorial, SymmetricForm, MAX_DEGREE};
use crate::functional::AnalyticFunctional;
use crate::gaussian::{check_alpha, scale_to_density, GaussianState};
use crate::matrix::SymmetricMatrix;
use crate::rng::{Estimate, RngSeed};
use crate::sum::CompensatedSum;
use crate::wick::{average_form, ObservableMultiple};

/// Draws used for the Monte Carlo estimate of `∫ e^{r‖ψ‖} dρ_D`.
pub const BOUND_SAMPLES: usize = 100_000;

/// Largest `n` accepted by [`quantize_higher`].
pub const MAX_HIGHER_ORDER: usize = MAX_DEGREE / 2;

/// `T(f) = ½ f″(0)`.
pub fn quantize_variable(f: &AnalyticFunctional) -> SymmetricMatrix {
    f.second_derivative().scaled(0.5)
}

/// `D = cov ρ / α`.
pub fn quantize_state(rho: &GaussianState, alpha: f64) -> Result<DensityOperator> {
    scale_to_density(rho, alpha)
}

/// Exact `∫ f dρ` for the Gaussian with covariance `cov`: each Taylor term is
/// integrated by Wick contraction and divided by `k!`.
pub fn classical_average(f: &AnalyticFunctional, cov: &SymmetricMatrix) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for (k, form) in f.terms() {
        acc.add(average_form(cov, form)? / factorial(k));
    }
    Ok(acc.value())
}

/// `Σ_{k≥2} α^k/(2k)! · ∫ f⁽²ᵏ⁾(0)(φ,…,φ) dρ_D(φ)`: everything in `⟨f⟩_ρ`
/// beyond the first-order term. Odd terms integrate to zero and are skipped.
pub fn higher_order_terms(
    f: &AnalyticFunctional,
    density: &DensityOperator,
    alpha: f64,
) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for (degree, form) in f.terms() {
        if degree < 4 || degree % 2 == 1 {
            continue;
        }
        let k = degree / 2;
        acc.add(alpha.powi(k as i32) / factorial(degree) * average_form(density.matrix(), form)?);
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    /// Draws for the optional Monte Carlo cross-check of `⟨f⟩_ρ`.
    pub mc_samples: Option<usize>,
    /// Draws for the rest-term bound.
    pub bound_samples: usize,
    /// The cross-check uses `seed`; the bound uses stream `seed.stream + 1`.
    pub seed: RngSeed,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            mc_samples: None,
            bound_samples: BOUND_SAMPLES,
            seed: RngSeed::default(),
        }
    }
}

/// Classical average, its first-order quantum prediction, and the remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub alpha: f64,
    /// `⟨f⟩_ρ`, exact: `α · quantum_avg` plus [`higher_order_terms`].
    pub classical_avg: f64,
    /// `½ Tr D f″(0)`.
    pub quantum_avg: f64,
    /// `classical_avg − α · quantum_avg`.
    pub residual: f64,
    /// `α² · c_f · ∫ e^{r_f‖ψ‖} dρ_D`, Monte Carlo with standard error.
    pub rest_bound: Estimate,
    pub envelope_c: f64,
    pub envelope_r: f64,
    /// Sample mean of `f` under `ρ`.
    pub mc_avg: Option<Estimate>,
}

/// Builds the report for `ρ ∈ S_G^α`.
pub fn expansion_report(
    f: &AnalyticFunctional,
    rho: &GaussianState,
    alpha: f64,
    opts: &ReportOptions,
) -> Result<ExpansionReport> {
    if f.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: f.dim(),
        });
    }
    let density = quantize_state(rho, alpha)?;
    let quantum_avg = density.expectation(&quantize_variable(f))?;
    let classical_avg = alpha * quantum_avg + higher_order_terms(f, &density, alpha)?;
    let residual = classical_avg - alpha * quantum_avg;

    let envelope = f.growth_envelope();
    let integral = if envelope.c == 0.0 {
        Estimate {
            mean: 0.0,
            stderr: 0.0,
            samples: 0,
        }
    } else {
        let rho_d = GaussianState::new(density.matrix().clone())?;
        let r = envelope.r;
        let bound_seed = opts.seed.with_stream(opts.seed.stream.wrapping_add(1));
        rho_d.mc_mean(opts.bound_samples, bound_seed, |psi| {
            (r * psi.iter().map(|x| x * x).sum::<f64>().sqrt()).exp()
        })
    };
    let rest_bound = integral.scaled(envelope.c * alpha * alpha);

    let mc_avg = opts
        .mc_samples
        .map(|n| rho.mc_mean(n, opts.seed, |psi| f.eval_unchecked(psi)));

    Ok(ExpansionReport {
        alpha,
        classical_avg,
        quantum_avg,
        residual,
        rest_bound,
        envelope_c: envelope.c,
        envelope_r: envelope.r,
        mc_avg,
    })
}

/// `{10⁻¹, 10⁻¹·⁵, …, 10⁻⁴}`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..7).map(|i| 10f64.powf(-1.0 - 0.5 * i as f64)).collect()
}

/// Checks that a grid is non-empty, positive and strictly decreasing.
pub fn validate_alpha_grid(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::invalid("alpha grid is empty"));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    if alphas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("alpha grid must be strictly decreasing"));
    }
    Ok(())
}

/// Reports along the family `B = αD` with `D` fixed.
pub fn scan(
    f: &AnalyticFunctional,
    density: &DensityOperator,
    alphas: &[f64],
    opts: &ReportOptions,
) -> Result<Vec<ExpansionReport>> {
    validate_alpha_grid(alphas)?;
    alphas
        .iter()
        .map(|&alpha| {
            let rho = GaussianState::from_density(density, alpha)?;
            expansion_report(f, &rho, alpha, opts)
        })
        .collect()
}

/// Log–log least-squares fit `|residual| ≈ C · α^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub alphas: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Which grid points cleared the noise floor and entered the fit.
    pub used: Vec<bool>,
    pub fitted_slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

/// Points with `|residual| ≤ NOISE_FLOOR · ε · |classical|` are excluded.
pub const NOISE_FLOOR: f64 = 100.0;

/// Minimum number of usable points for a fit.
pub const MIN_FIT_POINTS: usize = 4;

pub fn fit_order(reports: &[ExpansionReport]) -> Result<OrderFit> {
    let alphas: Vec<f64> = reports.iter().map(|r| r.alpha).collect();
    let residuals: Vec<f64> = reports.iter().map(|r| r.residual).collect();
    let classical: Vec<f64> = reports.iter().map(|r| r.classical_avg).collect();
    fit_residuals(&alphas, &residuals, &classical)
}

pub fn fit_residuals(alphas: &[f64], residuals: &[f64], classical: &[f64]) -> Result<OrderFit> {
    if alphas.len() != residuals.len() || alphas.len() != classical.len() {
        return Err(Error::invalid("grid, residual and average lengths differ"));
    }
    validate_alpha_grid(alphas)?;
    let used: Vec<bool> = residuals
        .iter()
        .zip(classical)
        .map(|(r, c)| r.abs() > NOISE_FLOOR * f64::EPSILON * c.abs() && *r != 0.0)
        .collect();
    let points: Vec<(f64, f64)> = alphas
        .iter()
        .zip(residuals)
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|((a, r), _)| (a.ln(), r.abs().ln()))
        .collect();
    if points.is_empty() {
        return Err(Error::ExactRegime);
    }
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::invalid(format!(
            "only {} grid points above the noise floor; need {MIN_FIT_POINTS}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let slope_stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(OrderFit {
        alphas: alphas.to_vec(),
        residuals: residuals.to_vec(),
        used,
        fitted_slope: slope,
        slope_stderr,
        intercept,
    })
}

/// Output of [`quantize_higher`].
#[derive(Debug, Clone, PartialEq)]
pub struct HigherQuantization {
    pub multiple: ObservableMultiple,
    /// Nonzero terms of degree above `2n` that the map discards.
    pub truncated_degrees: Vec<usize>,
    /// Nonzero odd-degree terms; their Gaussian averages vanish.
    pub odd_degrees: Vec<usize>,
}

/// `T₂ₙ(f) = (½ f″(0), α/4! f⁽⁴⁾(0), …, α^{n−1}/(2n)! f⁽²ⁿ⁾(0))`.
pub fn quantize_higher(f: &AnalyticFunctional, alpha: f64, n: usize) -> Result<HigherQuantization> {
    check_alpha(alpha)?;
    if n == 0 || n > MAX_HIGHER_ORDER {
        return Err(Error::invalid(format!(
            "order n must be in 1..={MAX_HIGHER_ORDER}, got {n}"
        )));
    }
    let dim = f.dim();
    let entries = (1..=n)
        .map(|k| match f.derivative(2 * k) {
            Some(form) => Ok(form.scaled(alpha.powi(k as i32 - 1) / factorial(2 * k))),
            None => SymmetricForm::zeros(2 * k, dim),
        })
        .collect::<Result<Vec<_>>>()?;
    let nonzero = |k: &usize| f.derivative(*k).is_some_and(|t| !t.is_zero());
    let truncated_degrees = f
        .terms()
        .map(|(k, _)| k)
        .filter(|&k| k > 2 * n && k % 2 == 0)
        .filter(nonzero)
        .collect();
    let odd_degrees = f
        .terms()
        .map(|(k, _)| k)
        .filter(|k| k % 2 == 1)
        .filter(nonzero)
        .collect();
    Ok(HigherQuantization {
        multiple: ObservableMultiple::new(dim, entries)?,
        truncated_degrees,
        odd_degrees,
    })
}
