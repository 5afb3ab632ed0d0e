//! Estimation of the limit set of a bivariate sample on exponential margins,
//! and of the extremal dependence measures that can be read off its boundary.
//!
//! The core is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! the common `f64` case.

// `!(a > b)` is used on purpose so that NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod copulas;
pub mod error;
pub mod gpd;
pub mod io;
pub mod local;
pub mod margins;
pub mod measures;
pub mod optim;
pub mod resample;
pub mod scalar;
pub mod smooth;
pub mod splines;
pub mod stats;
pub mod study;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type RawSample = margins::RawSample<f64>;
pub type BivariateSample = margins::BivariateSample<f64>;
pub type PolarSample = margins::PolarSample<f64>;
pub type CopulaSpec = copulas::CopulaSpec<f64>;
pub type GpdFit = gpd::GpdFit<f64>;
pub type SplineBasis = splines::SplineBasis<f64>;
pub type SplineSurface = splines::SplineSurface<f64>;
pub type AngleGrid = local::AngleGrid<f64>;
pub type LocalQuantiles = local::LocalQuantiles<f64>;
pub type LocalConfig = local::LocalConfig<f64>;
pub type LimitSetEstimate = local::LimitSetEstimate<f64>;
pub type SmoothConfig = smooth::SmoothConfig<f64>;
pub type FitResult = smooth::FitResult<f64>;
pub type DependenceSummary = measures::DependenceSummary<f64>;
pub type StudyConfig = study::StudyConfig<f64>;
