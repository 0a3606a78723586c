//! Experiment configuration.
//!
//! Configs are TOML. Every key except `command` is optional:
//!
//! ```toml
//! command = "asymptotic-scan"   # verify-trace | asymptotic-scan | wick-check | pure-state
//!                               # | higher-order | chebyshov | fieldgrid
//! dim = 3
//! seed = 42
//! samples = 100000              # Monte Carlo budget, at least 1000 for sampling commands
//! bound_samples = 100000        # draws for the rest-term bound
//! alpha_grid = [0.1, 0.01, 0.001, 0.0001]   # strictly decreasing; or `alpha = 0.1`
//! functional_file = "f.txt"     # relative to the config file; or inline text in `functional`
//! order = 4                     # wick-check: moment order; higher-order: n
//! vectors = [[1, 0], [1, 0], [0, 1], [0, 1]]  # wick-check: explicit arguments
//! psi = [0.6, 0.8]              # pure-state
//! psi2 = [1.0, 0.0]
//! threshold_factors = [1, 2, 4, 8, 16]        # chebyshov: C = factor * alpha
//! out = "results.csv"
//!
//! [density]                     # trace-one operator D
//! preset = "random"             # maximally-mixed | random | pure (with `vector`)
//! # entries = [[0.5, 0.0], [0.0, 0.5]]
//! # diagonal = [0.25, 0.75]
//!
//! [covariance]                  # wick-check only; defaults to the identity
//! preset = "identity"
//!
//! [grid]                        # fieldgrid only
//! half_width = 4.0
//! points = 17
//! x0 = 0.5
//! profile = "gaussian-profile"  # uniform | gaussian-profile | point
//! profile_width = 1.0
//! point_x = 0.5
//! refinements = 5
//! bump_width = 0.5
//! ```
//!
//! Command-line flags override the corresponding keys.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dequant::dequantize::{
    default_alpha_grid, validate_alpha_grid, BOUND_SAMPLES, MAX_HIGHER_ORDER,
};
use dequant::{AnalyticFunctional, DensityOperator, GaussianState, RngSeed, SymmetricMatrix};

use crate::error::{CliError, CliResult};
use crate::functional_file::parse_functional;

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const MIN_MC_SAMPLES: usize = 1_000;
pub const DEFAULT_DIM: usize = 3;
pub const DEFAULT_SEED: u64 = 0;

/// Stream reserved for drawing the `random` density preset.
const PRESET_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyTrace,
    AsymptoticScan,
    WickCheck,
    PureState,
    HigherOrder,
    Chebyshov,
    Fieldgrid,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyTrace => "verify-trace",
            Command::AsymptoticScan => "asymptotic-scan",
            Command::WickCheck => "wick-check",
            Command::PureState => "pure-state",
            Command::HigherOrder => "higher-order",
            Command::Chebyshov => "chebyshov",
            Command::Fieldgrid => "fieldgrid",
        }
    }

    fn samples_by_default(self) -> bool {
        !matches!(self, Command::AsymptoticScan | Command::HigherOrder)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub preset: Option<String>,
    pub entries: Option<Vec<Vec<f64>>>,
    pub diagonal: Option<Vec<f64>>,
    pub vector: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: Option<f64>,
    pub points: Option<usize>,
    pub x0: Option<f64>,
    pub profile: Option<String>,
    pub profile_width: Option<f64>,
    pub point_x: Option<f64>,
    pub refinements: Option<usize>,
    pub bump_width: Option<f64>,
}

/// The config file as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Command,
    pub dim: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub bound_samples: Option<usize>,
    pub alpha: Option<f64>,
    pub alpha_grid: Option<Vec<f64>>,
    pub functional: Option<String>,
    pub functional_file: Option<PathBuf>,
    pub density: Option<MatrixSpec>,
    pub covariance: Option<MatrixSpec>,
    pub order: Option<usize>,
    pub vectors: Option<Vec<Vec<f64>>>,
    pub psi: Option<Vec<f64>>,
    pub psi2: Option<Vec<f64>>,
    pub threshold_factors: Option<Vec<f64>>,
    pub grid: Option<GridSpec>,
    pub out: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub alpha_grid: Option<Vec<f64>>,
    pub dim: Option<usize>,
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub half_width: f64,
    pub points: usize,
    pub x0: f64,
    pub profile: String,
    pub profile_width: f64,
    pub point_x: f64,
    pub refinements: usize,
    pub bump_width: f64,
}

/// A validated experiment with every default filled in.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Command,
    pub dim: usize,
    pub seed: u64,
    pub samples: Option<usize>,
    pub bound_samples: usize,
    pub alphas: Vec<f64>,
    pub functional: Option<AnalyticFunctional>,
    pub functional_source: String,
    pub density: Option<DensityOperator>,
    pub density_source: String,
    pub covariance: Option<SymmetricMatrix>,
    pub order: usize,
    pub vectors: Option<Vec<Vec<f64>>>,
    pub psi: Option<Vec<f64>>,
    pub psi2: Option<Vec<f64>>,
    pub threshold_factors: Vec<f64>,
    pub grid: Option<GridConfig>,
    pub out: PathBuf,
    pub timing: bool,
}

pub fn load_file(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new("CONFIG_IO", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> CliResult<FileConfig> {
    toml::from_str(text).map_err(|e| CliError::new("CONFIG_PARSE", e.to_string()))
}

fn require(cond: bool, message: impl FnOnce() -> String) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::config(message()))
    }
}

fn check_finite(name: &str, values: &[f64]) -> CliResult<()> {
    require(values.iter().all(|v| v.is_finite()), || {
        format!("`{name}` must be finite")
    })
}

fn check_len(name: &str, values: &[f64], dim: usize) -> CliResult<()> {
    check_finite(name, values)?;
    require(values.len() == dim, || {
        format!("`{name}` has length {}, expected dim = {dim}", values.len())
    })
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], dim: usize) -> CliResult<SymmetricMatrix> {
    require(rows.len() == dim, || {
        format!("`{name}.entries` has {} rows, expected {dim}", rows.len())
    })?;
    for row in rows {
        check_len(&format!("{name}.entries row"), row, dim)?;
    }
    Ok(SymmetricMatrix::from_rows(rows)?)
}

fn random_density(dim: usize, seed: u64) -> CliResult<DensityOperator> {
    let columns = GaussianState::new(SymmetricMatrix::identity(dim))?
        .sample(dim, RngSeed::new(seed, PRESET_STREAM));
    let gram = SymmetricMatrix::from_lower_fn(dim, |i, j| {
        columns.iter().map(|g| g[i] * g[j]).sum::<f64>()
    });
    Ok(DensityOperator::normalized(gram)?)
}

fn matrix_spec_kind(name: &str, spec: &MatrixSpec) -> CliResult<()> {
    let given = [
        spec.preset.is_some(),
        spec.entries.is_some(),
        spec.diagonal.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    require(given == 1, || {
        format!("`{name}` needs exactly one of `preset`, `entries`, `diagonal`")
    })?;
    require(
        spec.vector.is_none() || spec.preset.as_deref() == Some("pure"),
        || format!("`{name}.vector` is only used with preset = \"pure\""),
    )
}

fn build_density(spec: &MatrixSpec, dim: usize, seed: u64) -> CliResult<DensityOperator> {
    matrix_spec_kind("density", spec)?;
    if let Some(rows) = &spec.entries {
        return Ok(DensityOperator::new(matrix_from_rows(
            "density", rows, dim,
        )?)?);
    }
    if let Some(diag) = &spec.diagonal {
        check_len("density.diagonal", diag, dim)?;
        return Ok(DensityOperator::new(SymmetricMatrix::from_diagonal(diag))?);
    }
    match spec.preset.as_deref().unwrap_or_default() {
        "maximally-mixed" => Ok(DensityOperator::maximally_mixed(dim)),
        "random" => random_density(dim, seed),
        "pure" => {
            let v = spec
                .vector
                .as_ref()
                .ok_or_else(|| CliError::config("preset \"pure\" needs `density.vector`"))?;
            check_len("density.vector", v, dim)?;
            Ok(DensityOperator::from(&dequant::PureState::normalize(
                v.clone(),
            )?))
        }
        other => Err(CliError::config(format!(
            "unknown density preset `{other}` (maximally-mixed, random, pure)"
        ))),
    }
}

fn build_covariance(spec: &MatrixSpec, dim: usize) -> CliResult<SymmetricMatrix> {
    matrix_spec_kind("covariance", spec)?;
    let m = if let Some(rows) = &spec.entries {
        matrix_from_rows("covariance", rows, dim)?
    } else if let Some(diag) = &spec.diagonal {
        check_len("covariance.diagonal", diag, dim)?;
        SymmetricMatrix::from_diagonal(diag)
    } else {
        match spec.preset.as_deref().unwrap_or_default() {
            "identity" => SymmetricMatrix::identity(dim),
            other => {
                return Err(CliError::config(format!(
                    "unknown covariance preset `{other}` (identity)"
                )))
            }
        }
    };
    GaussianState::new(m.clone())?;
    Ok(m)
}

fn describe_matrix_spec(spec: &MatrixSpec) -> String {
    serde_json::to_string(spec).expect("plain data serializes")
}

impl ExperimentConfig {
    /// Applies overrides and defaults, then validates. Relative paths in the
    /// file are resolved against `base_dir`.
    pub fn resolve(file: FileConfig, overrides: &Overrides, base_dir: &Path) -> CliResult<Self> {
        let command = file.command;
        let seed = overrides.seed.or(file.seed).unwrap_or(DEFAULT_SEED);

        let (functional, functional_source) = match (&file.functional, &file.functional_file) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "give either `functional` or `functional_file`, not both",
                ))
            }
            (Some(text), None) => (Some(parse_functional(text)?), "inline".to_string()),
            (None, Some(path)) => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| CliError::new("CONFIG_IO", format!("{}: {e}", full.display())))?;
                (
                    Some(parse_functional(&text)?),
                    format!("file:{}", path.display()),
                )
            }
            (None, None) => (None, "none".to_string()),
        };

        let dim = match (overrides.dim.or(file.dim), &functional) {
            _ if command == Command::Fieldgrid => 0,
            (Some(d), Some(f)) if d != f.dim() => {
                return Err(CliError::config(format!(
                    "dim = {d} but the functional has dim {}",
                    f.dim()
                )))
            }
            (Some(d), _) => d,
            (None, Some(f)) => f.dim(),
            (None, None) => DEFAULT_DIM,
        };
        require(command == Command::Fieldgrid || dim >= 1, || {
            "dim must be at least 1".into()
        })?;

        let alphas = match (&overrides.alpha_grid, &file.alpha_grid, file.alpha) {
            (Some(g), _, _) => g.clone(),
            (None, Some(_), Some(_)) => {
                return Err(CliError::config(
                    "give either `alpha` or `alpha_grid`, not both",
                ))
            }
            (None, Some(g), None) => g.clone(),
            (None, None, Some(a)) => vec![a],
            (None, None, None) if command == Command::Fieldgrid => vec![0.1],
            (None, None, None) => default_alpha_grid(),
        };
        require(!alphas.is_empty(), || "alpha grid is empty".into())?;
        check_finite("alpha_grid", &alphas)?;
        require(alphas.iter().all(|&a| a > 0.0), || {
            "alpha values must be positive".into()
        })?;
        validate_alpha_grid(&alphas).map_err(|e| CliError::config(format!("alpha grid: {e}")))?;

        let samples = match overrides.samples.or(file.samples) {
            Some(n) => Some(n),
            None if command.samples_by_default() => Some(DEFAULT_SAMPLES),
            None => None,
        };
        if let Some(n) = samples {
            require(n >= MIN_MC_SAMPLES, || {
                format!("sample budget {n} is below the minimum of {MIN_MC_SAMPLES}")
            })?;
        }
        let bound_samples = file.bound_samples.unwrap_or(BOUND_SAMPLES);
        require(bound_samples >= MIN_MC_SAMPLES, || {
            format!("bound_samples {bound_samples} is below the minimum of {MIN_MC_SAMPLES}")
        })?;

        let needs_functional = matches!(
            command,
            Command::VerifyTrace | Command::AsymptoticScan | Command::HigherOrder
        );
        require(!needs_functional || functional.is_some(), || {
            format!(
                "`{}` needs `functional` or `functional_file`",
                command.name()
            )
        })?;
        if command == Command::VerifyTrace {
            let f = functional.as_ref().expect("checked above");
            require(f.terms().all(|(k, t)| k == 2 || t.is_zero()), || {
                "verify-trace needs a purely quadratic functional (degree-2 entries only)".into()
            })?;
        }

        let uses_density = matches!(
            command,
            Command::VerifyTrace
                | Command::AsymptoticScan
                | Command::HigherOrder
                | Command::Chebyshov
        );
        let (density, density_source) = if uses_density {
            let spec = file.density.clone().unwrap_or(MatrixSpec {
                preset: Some("random".into()),
                ..Default::default()
            });
            (
                Some(build_density(&spec, dim, seed)?),
                describe_matrix_spec(&spec),
            )
        } else {
            require(file.density.is_none(), || {
                format!("`{}` does not use `density`", command.name())
            })?;
            (None, "none".to_string())
        };

        let covariance = if command == Command::WickCheck {
            let spec = file.covariance.clone().unwrap_or(MatrixSpec {
                preset: Some("identity".into()),
                ..Default::default()
            });
            Some(build_covariance(&spec, dim)?)
        } else {
            require(file.covariance.is_none(), || {
                format!("`{}` does not use `covariance`", command.name())
            })?;
            None
        };

        let order = match command {
            Command::WickCheck => {
                let k = file.order.unwrap_or(4);
                require((1..=dequant::wick::MAX_ORDER).contains(&k), || {
                    format!("order must be in 1..={}", dequant::wick::MAX_ORDER)
                })?;
                k
            }
            Command::HigherOrder => {
                let n = file.order.unwrap_or(2);
                require((1..=MAX_HIGHER_ORDER).contains(&n), || {
                    format!("order must be in 1..={MAX_HIGHER_ORDER}")
                })?;
                n
            }
            _ => file.order.unwrap_or(0),
        };

        if let Some(vs) = &file.vectors {
            require(command == Command::WickCheck, || {
                "`vectors` is only used by wick-check".into()
            })?;
            require(vs.len() == order, || {
                format!("{} vectors given for order {order}", vs.len())
            })?;
            for v in vs {
                check_len("vectors", v, dim)?;
            }
        }

        let (psi, psi2) = if command == Command::PureState {
            let psi = file.psi.clone().unwrap_or_else(|| {
                let mut e = vec![0.0; dim];
                e[0] = 1.0;
                e
            });
            check_len("psi", &psi, dim)?;
            let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
            require(norm > 0.0, || "`psi` must be nonzero".into())?;
            let psi2 = file.psi2.clone().unwrap_or_else(|| {
                let mut e = vec![0.0; dim];
                e[dim - 1] += 1.0;
                e
            });
            check_len("psi2", &psi2, dim)?;
            (Some(psi), Some(psi2))
        } else {
            require(file.psi.is_none() && file.psi2.is_none(), || {
                "`psi`/`psi2` are only used by pure-state".into()
            })?;
            (None, None)
        };

        let threshold_factors = file
            .threshold_factors
            .clone()
            .unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0, 16.0]);
        check_finite("threshold_factors", &threshold_factors)?;
        require(
            !threshold_factors.is_empty() && threshold_factors.iter().all(|&c| c > 0.0),
            || "threshold_factors must be positive".into(),
        )?;

        let grid = if command == Command::Fieldgrid {
            let g = file.grid.clone().unwrap_or_default();
            let half_width = g.half_width.unwrap_or(4.0);
            let x0 = g.x0.unwrap_or(0.5);
            let cfg = GridConfig {
                half_width,
                points: overrides.dim.or(g.points).unwrap_or(17),
                x0,
                profile: g.profile.unwrap_or_else(|| "gaussian-profile".into()),
                profile_width: g.profile_width.unwrap_or(half_width / 4.0),
                point_x: g.point_x.unwrap_or(x0),
                refinements: g.refinements.unwrap_or(5),
                bump_width: g.bump_width.unwrap_or(half_width / 8.0),
            };
            check_finite(
                "grid",
                &[
                    cfg.half_width,
                    cfg.x0,
                    cfg.profile_width,
                    cfg.point_x,
                    cfg.bump_width,
                ],
            )?;
            require(cfg.half_width > 0.0, || {
                "grid.half_width must be positive".into()
            })?;
            require(cfg.points >= 2, || "grid.points must be at least 2".into())?;
            require((3..=12).contains(&cfg.refinements), || {
                "grid.refinements must be in 3..=12".into()
            })?;
            require(cfg.profile_width > 0.0 && cfg.bump_width > 0.0, || {
                "grid widths must be positive".into()
            })?;
            require(
                ["uniform", "gaussian-profile", "point"].contains(&cfg.profile.as_str()),
                || {
                    format!(
                        "unknown grid profile `{}` (uniform, gaussian-profile, point)",
                        cfg.profile
                    )
                },
            )?;
            let coarse = dequant::fieldgrid::FieldGrid::new(cfg.half_width, cfg.points)?;
            for x in [cfg.x0, cfg.point_x] {
                require(coarse.index_of(x).is_some(), || {
                    format!(
                        "x = {x} is not a point of the coarse grid (spacing {})",
                        coarse.spacing()
                    )
                })?;
            }
            Some(cfg)
        } else {
            require(file.grid.is_none(), || {
                "`grid` is only used by fieldgrid".into()
            })?;
            None
        };

        let dim = grid.as_ref().map_or(dim, |g| g.points);

        let out = overrides
            .out
            .clone()
            .or_else(|| file.out.as_ref().map(|p| base_dir.join(p)))
            .ok_or_else(|| CliError::config("no output path (`--out` or `out`)"))?;

        Ok(Self {
            command,
            dim,
            seed,
            samples,
            bound_samples,
            alphas,
            functional,
            functional_source,
            density,
            density_source,
            covariance,
            order,
            vectors: file.vectors,
            psi,
            psi2,
            threshold_factors,
            grid,
            out,
            timing: overrides.timing,
        })
    }

    /// Resolved settings and library tolerances, as `(key, value)` pairs.
    pub fn header(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| {
            let mut s = String::new();
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    s.push(';');
                }
                write!(s, "{x:e}").unwrap();
            }
            s
        };
        let mut h: Vec<(String, String)> = vec![
            ("command".into(), self.command.name().into()),
            ("dim".into(), self.dim.to_string()),
            ("seed".into(), self.seed.to_string()),
            (
                "samples".into(),
                self.samples
                    .map_or_else(|| "none".into(), |n| n.to_string()),
            ),
            ("bound_samples".into(), self.bound_samples.to_string()),
            ("alpha_grid".into(), list(&self.alphas)),
            ("functional".into(), self.functional_source.clone()),
            ("density".into(), self.density_source.clone()),
        ];
        match self.command {
            Command::WickCheck => {
                h.push(("order".into(), self.order.to_string()));
                h.push((
                    "vectors".into(),
                    self.vectors
                        .as_ref()
                        .map_or_else(|| "basis".into(), |v| serde_json::to_string(v).unwrap()),
                ));
                h.push((
                    "covariance".into(),
                    serde_json::to_string(&self.covariance.as_ref().map(|c| c.to_rows())).unwrap(),
                ));
            }
            Command::HigherOrder => h.push(("order".into(), self.order.to_string())),
            Command::PureState => {
                h.push(("psi".into(), list(self.psi.as_deref().unwrap_or_default())));
                h.push((
                    "psi2".into(),
                    list(self.psi2.as_deref().unwrap_or_default()),
                ));
            }
            Command::Chebyshov => {
                h.push(("threshold_factors".into(), list(&self.threshold_factors)))
            }
            Command::Fieldgrid => {
                let g = self.grid.as_ref().expect("fieldgrid has a grid");
                h.push(("grid.half_width".into(), format!("{:e}", g.half_width)));
                h.push(("grid.points".into(), g.points.to_string()));
                h.push(("grid.x0".into(), format!("{:e}", g.x0)));
                h.push(("grid.profile".into(), g.profile.clone()));
                h.push((
                    "grid.profile_width".into(),
                    format!("{:e}", g.profile_width),
                ));
                h.push(("grid.point_x".into(), format!("{:e}", g.point_x)));
                h.push(("grid.refinements".into(), g.refinements.to_string()));
                h.push(("grid.bump_width".into(), format!("{:e}", g.bump_width)));
            }
            _ => {}
        }
        h.extend([
            ("eps_psd".into(), format!("{:e}", dequant::EPS_PSD)),
            (
                "trace_tol".into(),
                format!("{:e}", dequant::density::TRACE_TOL),
            ),
            (
                "dispersion_rtol".into(),
                format!("{:e}", dequant::gaussian::DISPERSION_RTOL),
            ),
            (
                "norm_samples".into(),
                dequant::form::NORM_SAMPLES.to_string(),
            ),
            (
                "noise_floor".into(),
                format!("{:e}", dequant::dequantize::NOISE_FLOOR),
            ),
            (
                "min_fit_points".into(),
                dequant::dequantize::MIN_FIT_POINTS.to_string(),
            ),
            (
                "rng".into(),
                format!("chacha8 chunk={}", dequant::rng::CHUNK),
            ),
            ("timing".into(), self.timing.to_string()),
        ]);
        h
    }
}
