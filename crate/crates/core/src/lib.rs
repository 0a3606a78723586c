//! Finite-dimensional Gaussian measures, Wick moments and the classical →
//! quantum correspondence between Gaussian averages and trace formulas.
//!
//! - [`form`], [`matrix`], [`density`]: symmetric forms and matrices, density
//!   operators, pure states.
//! - [`gaussian`]: zero-mean Gaussian states, sampling, scaling to densities.
//! - [`functional`]: classical variables as truncated Taylor stacks.
//! - [`wick`]: exact Gaussian moments and generalized traces.
//! - [`dequantize`]: the maps `T`, `T₂ₙ` and the expansion/residual reports.
//! - [`whitenoise`]: background field and its one-dimensional projections.
//! - [`fieldgrid`]: grid fields, delta and position observables.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod dequantize;
pub mod error;
pub mod fieldgrid;
pub mod form;
pub mod functional;
pub mod gaussian;
pub mod matrix;
pub mod rng;
pub mod sum;
pub mod whitenoise;
pub mod wick;

pub use density::{DensityOperator, PureState};
pub use error::{Error, Result};
pub use form::{norm_form, DenseTensor, FormNorm, SymmetricForm, MAX_DEGREE};
pub use functional::{AnalyticFunctional, GrowthEnvelope};
pub use gaussian::{chebyshov_tail, scale_to_density, GaussianState};
pub use matrix::{SymmetricMatrix, EPS_PSD};
pub use rng::{Estimate, RngSeed};
pub use wick::{average_form, gaussian_moment, generalized_trace, ObservableMultiple};
