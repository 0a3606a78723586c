use std::time::Instant;

use serde_json::{json, Map, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use dequant::dequantize::{
    classical_average, expansion_report, fit_order, quantize_higher, quantize_state, ReportOptions,
};
use dequant::fieldgrid::{DensityProfile, FieldGrid};
use dequant::form::for_each_canonical;
use dequant::rng::map_chunks;
use dequant::whitenoise::BackgroundField;
use dequant::wick::matching_count;
use dequant::{
    chebyshov_tail, gaussian_moment, generalized_trace, DensityOperator, Error, GaussianState,
    PureState, RngSeed, SymmetricMatrix,
};

use crate::config::{Command, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::report::ResultRow;

/// Largest number of rows `wick-check` will enumerate over basis vectors.
pub const MAX_WICK_CASES: usize = 10_000;

const LINEARITY_WEIGHTS: (f64, f64) = (0.75, -1.25);

struct Clock {
    enabled: bool,
}

impl Clock {
    fn time<T>(&self, f: impl FnOnce() -> CliResult<T>) -> CliResult<(T, u64)> {
        let start = Instant::now();
        let out = f()?;
        let ms = if self.enabled {
            start.elapsed().as_millis() as u64
        } else {
            0
        };
        Ok((out, ms))
    }

    fn row(&self, f: impl FnOnce() -> CliResult<ResultRow>) -> CliResult<ResultRow> {
        let (mut row, ms) = self.time(f)?;
        row.wall_time_ms = ms;
        Ok(row)
    }
}

pub struct Outcome {
    pub rows: Vec<ResultRow>,
    pub summary: Map<String, Value>,
}

pub fn execute(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let clock = Clock {
        enabled: cfg.timing,
    };
    match cfg.command {
        Command::VerifyTrace => verify_trace(cfg, &clock),
        Command::AsymptoticScan => asymptotic_scan(cfg, &clock),
        Command::WickCheck => wick_check(cfg, &clock),
        Command::PureState => pure_state(cfg, &clock),
        Command::HigherOrder => higher_order(cfg, &clock),
        Command::Chebyshov => chebyshov(cfg, &clock),
        Command::Fieldgrid => fieldgrid(cfg, &clock),
    }
}

fn stream(cfg: &ExperimentConfig, i: usize) -> RngSeed {
    RngSeed::new(cfg.seed, 2 * i as u64)
}

fn density(cfg: &ExperimentConfig) -> &DensityOperator {
    cfg.density.as_ref().expect("command has a density")
}

fn verify_trace(cfg: &ExperimentConfig, clock: &Clock) -> CliResult<Outcome> {
    let f = cfg.functional.as_ref().expect("validated");
    let d = density(cfg);
    let observable = dequant::dequantize::quantize_variable(f);
    let name = cfg.command.name();
    let rows = cfg
        .alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            clock.row(|| {
                let rho = GaussianState::from_density(d, alpha)?;
                let exact = classical_average(f, rho.covariance())?;
                let predicted = rho.covariance().trace_product(&observable)?;
                let mut row = ResultRow::new(name, "trace", cfg.seed)
                    .alpha(alpha)
                    .compare(exact, predicted);
                if let Some(n) = cfg.samples {
                    row = row.mc(rho.mc_mean(n, stream(cfg, i), |psi| f.eval_unchecked(psi)));
                }
                Ok(row)
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Outcome {
        rows,
        summary: Map::new(),
    })
}

fn asymptotic_scan(cfg: &ExperimentConfig, clock: &Clock) -> CliResult<Outcome> {
    let f = cfg.functional.as_ref().expect("validated");
    let d = density(cfg);
    let opts = ReportOptions {
        mc_samples: cfg.samples,
        bound_samples: cfg.bound_samples,
        seed: RngSeed::new(cfg.seed, 0),
    };
    let mut reports = Vec::with_capacity(cfg.alphas.len());
    let mut times = Vec::with_capacity(cfg.alphas.len());
    for &alpha in &cfg.alphas {
        let (rep, ms) = clock.time(|| {
            let rho = GaussianState::from_density(d, alpha)?;
            Ok(expansion_report(f, &rho, alpha, &opts)?)
        })?;
        reports.push(rep);
        times.push(ms);
    }

    let mut summary = Map::new();
    let slope = match fit_order(&reports) {
        Ok(fit) => {
            summary.insert("fitted_slope".into(), json!(fit.fitted_slope));
            summary.insert("slope_stderr".into(), json!(fit.slope_stderr));
            summary.insert(
                "fit_points".into(),
                json!(fit.used.iter().filter(|&&u| u).count()),
            );
            Some(fit.fitted_slope)
        }
        Err(Error::ExactRegime) => {
            summary.insert(
                "fit".into(),
                json!("exact: every residual is below the noise floor"),
            );
            None
        }
        Err(e) => {
            summary.insert("fit".into(), json!(e.to_string()));
            None
        }
    };
    if let Some(rep) = reports.first() {
        summary.insert("envelope_c".into(), json!(rep.envelope_c));
        summary.insert("envelope_r".into(), json!(rep.envelope_r));
    }

    let rows = reports
        .iter()
        .zip(times)
        .map(|(rep, ms)| {
            let mut row = ResultRow::new(cfg.command.name(), "expansion", cfg.seed)
                .alpha(rep.alpha)
                .compare(rep.classical_avg, rep.alpha * rep.quantum_avg)
                .slope(slope)
                .bound(rep.rest_bound.mean);
            if let Some(mc) = rep.mc_avg {
                row = row.mc(mc);
            }
            row.wall_time_ms = ms;
            row
        })
        .collect();
    Ok(Outcome { rows, summary })
}

fn double_factorial_odd(order: usize) -> f64 {
    if order % 2 == 1 {
        return 0.0;
    }
    (1..order).step_by(2).map(|k| k as f64).product()
}

fn basis(dim: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}

fn wick_check(cfg: &ExperimentConfig, clock: &Clock) -> CliResult<Outcome> {
    let cov = cfg
        .covariance
        .as_ref()
        .expect("wick-check has a covariance");
    let state = GaussianState::new(cov.clone())?;
    let name = cfg.command.name();
    let k = cfg.order;

    let cases: Vec<(String, Vec<Vec<f64>>)> = match &cfg.vectors {
        Some(vs) => vec![("vectors".into(), vs.clone())],
        None => {
            let count = dequant::form::coefficient_count(k, cfg.dim);
            if count > MAX_WICK_CASES {
                return Err(CliError::config(format!(
                    "{count} basis cases exceed the limit of {MAX_WICK_CASES}; give `vectors`"
                )));
            }
            let mut cases = Vec::with_capacity(count);
            for_each_canonical(k, cfg.dim, |_, idx| {
                let label = idx
                    .iter()
                    .map(|i| format!("e{i}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                cases.push((label, idx.iter().map(|&i| basis(cfg.dim, i)).collect()));
            });
            cases
        }
    };

    let mut rows = vec![clock.row(|| {
        Ok(ResultRow::new(name, "matchings", cfg.seed)
            .compare(matching_count(k) as f64, double_factorial_odd(k)))
    })?];
    for (i, (label, vectors)) in cases.iter().enumerate() {
        rows.push(clock.row(|| {
            let args: Vec<&[f64]> = vectors.iter().map(|v| v.as_slice()).collect();
            let exact = gaussian_moment(cov, &args)?;
            let mut row = ResultRow::new(name, label.clone(), cfg.seed).exact(exact);
            if let Some(n) = cfg.samples {
                row = row.mc(state.mc_mean(n, stream(cfg, i), |psi| {
                    vectors
                        .iter()
                        .map(|v| v.iter().zip(psi).map(|(a, b)| a * b).sum::<f64>())
                        .product()
                }));
            }
            Ok(row)
        })?);
    }
    let mut summary = Map::new();
    summary.insert("matching_count".into(), json!(matching_count(k)));
    Ok(Outcome { rows, summary })
}

fn pure_state(cfg: &ExperimentConfig, clock: &Clock) -> CliResult<Outcome> {
    let psi = PureState::normalize(cfg.psi.clone().expect("validated"))?;
    let psi2 = cfg.psi2.as_ref().expect("validated");
    let n = cfg.samples.expect("pure-state samples");
    let name = cfg.command.name();
    let projector = psi.projector();
    let u = psi.vector();
    let mut rows = Vec::new();
    for (i, &alpha) in cfg.alphas.iter().enumerate() {
        let rho = GaussianState::new(SymmetricMatrix::outer(u, alpha))?;
        rows.push(clock.row(|| {
            let dim = rho.dim();
            let worst = map_chunks(n, stream(cfg, i), |rng, _, count| {
                let mut s = vec![0.0; dim];
                let mut worst = 0.0f64;
                for _ in 0..count {
                    rho.fill_sample(rng, &mut s);
                    let c: f64 = s.iter().zip(u).map(|(a, b)| a * b).sum();
                    let off = s
                        .iter()
                        .zip(u)
                        .map(|(a, b)| (a - c * b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    worst = worst.max(off);
                }
                worst
            })
            .into_iter()
            .fold(0.0, f64::max);
            Ok(ResultRow::new(name, "span-distance", cfg.seed)
                .alpha(alpha)
                .compare(worst, 0.0))
        })?);
        rows.push(clock.row(|| {
            let d = quantize_state(&rho, alpha)?;
            Ok(ResultRow::new(name, "projector-distance", cfg.seed)
                .alpha(alpha)
                .compare(d.matrix().max_abs_diff(&projector), 0.0))
        })?);
        let field =
            BackgroundField::new(cfg.dim, alpha, stream(cfg, i).with_stream(2 * i as u64 + 1))?;
        rows.push(clock.row(|| {
            let est = field.scalar_product_recovery(u, psi2, n)?;
            let exact: f64 = u.iter().zip(psi2).map(|(a, b)| a * b).sum();
            Ok(ResultRow::new(name, "scalar-product", cfg.seed)
                .alpha(alpha)
                .exact(exact)
                .mc(est))
        })?);
        rows.push(clock.row(|| {
            let (l1, l2) = LINEARITY_WEIGHTS;
            let dev = field.linearity_check(u, psi2, l1, l2, n)?;
            Ok(ResultRow::new(name, "linearity-deviation", cfg.seed)
                .alpha(alpha)
                .compare(dev, 0.0))
        })?);
    }
    Ok(Outcome {
        rows,
        summary: Map::new(),
    })
}

fn higher_order(cfg: &ExperimentConfig, clock: &Clock) -> CliResult<Outcome> {
    let f = cfg.functional.as_ref().expect("validated");
    let d = density(cfg);
    let name = cfg.command.name();
    let mut summary = Map::new();
    let mut rows = Vec::new();
    for (i, &alpha) in cfg.alphas.iter().enumerate() {
        let h = quantize_higher(f, alpha, cfg.order)?;
        if i == 0 {
            summary.insert("truncated_degrees".into(), json!(h.truncated_degrees));
            summary.insert("odd_degrees".into(), json!(h.odd_degrees));
        }
        rows.push(clock.row(|| {
            let rho = GaussianState::from_density(d, alpha)?;
            let exact = classical_average(f, rho.covariance())?;
            let predicted = alpha * generalized_trace(d, &h.multiple)?;
            let mut row = ResultRow::new(name, format!("n={}", cfg.order), cfg.seed)
                .alpha(alpha)
                .compare(exact, predicted);
            if let Some(n) = cfg.samples {
                row = row.mc(rho.mc_mean(n, stream(cfg, i), |psi| f.eval_unchecked(psi)));
            }
            Ok(row)
        })?);
    }
    Ok(Outcome { rows, summary })
}

/// `P(‖ψ‖² > C)` for `ψ ~ N(0, (α/d) I)`.
pub fn isotropic_tail(dim: usize, alpha: f64, threshold: f64) -> f64 {
    let chi2 = ChiSquared::new(dim as f64).expect("positive degrees of freedom");
    chi2.sf(threshold * dim as f64 / alpha)
}

fn chebyshov(cfg: &ExperimentConfig, clock: &Clock) -> CliResult<Outcome> {
    let d = density(cfg);
    let n = cfg.samples.expect("chebyshov samples");
    let name = cfg.command.name();
    let isotropic = d
        .matrix()
        .max_abs_diff(DensityOperator::maximally_mixed(cfg.dim).matrix())
        <= 1e-15;
    let mut rows = Vec::new();
    let mut case = 0;
    for &alpha in &cfg.alphas {
        let rho = GaussianState::from_density(d, alpha)?;
        for &factor in &cfg.threshold_factors {
            let threshold = factor * alpha;
            rows.push(clock.row(|| {
                let tail = chebyshov_tail(&rho, threshold, n, stream(cfg, case))?;
                let mut row = ResultRow::new(name, format!("C/alpha={factor:e}"), cfg.seed)
                    .alpha(alpha)
                    .bound(tail.bound)
                    .mc(dequant::Estimate {
                        mean: tail.empirical,
                        stderr: tail.stderr,
                        samples: tail.samples,
                    });
                if isotropic {
                    row = row.exact(isotropic_tail(cfg.dim, alpha, threshold));
                }
                Ok(row)
            })?);
            case += 1;
        }
    }
    let mut summary = Map::new();
    summary.insert("isotropic".into(), json!(isotropic));
    Ok(Outcome { rows, summary })
}

fn fieldgrid(cfg: &ExperimentConfig, clock: &Clock) -> CliResult<Outcome> {
    let g = cfg.grid.as_ref().expect("fieldgrid has a grid");
    let name = cfg.command.name();
    let n = cfg.samples.expect("fieldgrid samples");
    let mut grid = FieldGrid::new(g.half_width, g.points)?;
    let mut rows = Vec::new();

    rows.push(clock.row(|| {
        let psi = grid.bump_state(g.bump_width)?;
        let i0 = grid.index_of(g.x0).expect("validated");
        let est = grid.delta_projection_average(i0, &psi, n, stream(cfg, 0))?;
        Ok(
            ResultRow::new(name, format!("projection d={}", grid.len()), cfg.seed)
                .alpha(1.0)
                .exact(0.5 * psi[i0] * psi[i0])
                .mc(est),
        )
    })?);

    let mut traces: Vec<Vec<f64>> = vec![Vec::new(); cfg.alphas.len()];
    let mut norms = Vec::new();
    for step in 0..g.refinements {
        if step > 0 {
            grid = grid.refined();
        }
        let i0 = grid.index_of(g.x0).expect("refinement keeps grid points");
        let a = grid.delta_observable(i0)?;
        let profile = match g.profile.as_str() {
            "uniform" => DensityProfile::Uniform,
            "gaussian-profile" => DensityProfile::GaussianProfile {
                width: g.profile_width,
            },
            _ => DensityProfile::Point {
                index: grid
                    .index_of(g.point_x)
                    .expect("refinement keeps grid points"),
            },
        };
        let d = grid.density(profile)?;
        let f = grid.functional(&a);
        rows.push(clock.row(|| {
            let norm = a.spectral_norm();
            norms.push(norm);
            Ok(
                ResultRow::new(name, format!("delta-norm d={}", grid.len()), cfg.seed)
                    .compare(norm, 0.5 / grid.spacing()),
            )
        })?);
        for (j, &alpha) in cfg.alphas.iter().enumerate() {
            rows.push(clock.row(|| {
                let exact = alpha * d.expectation(&a)?;
                let rho = GaussianState::from_density(&d, alpha)?;
                let wick = classical_average(&f, rho.covariance())?;
                traces[j].push(exact);
                Ok(
                    ResultRow::new(name, format!("delta-trace d={}", grid.len()), cfg.seed)
                        .alpha(alpha)
                        .compare(exact, wick),
                )
            })?);
        }
    }

    let mut summary = Map::new();
    let ratios: Vec<f64> = norms.windows(2).map(|w| w[1] / w[0]).collect();
    summary.insert("norm_ratios".into(), json!(ratios));
    let cauchy: Vec<f64> = traces
        .iter()
        .map(|t| {
            let (a, b) = (t[t.len() - 2], t[t.len() - 1]);
            ((b - a) / b).abs()
        })
        .collect();
    summary.insert("cauchy_relative_change".into(), json!(cauchy));
    Ok(Outcome { rows, summary })
}
