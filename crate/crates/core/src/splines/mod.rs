//! Spline-based threshold and GPD models for the radial variable as smooth
//! functions of the angle.

mod basis;
mod gam;
mod quantreg;

pub use basis::{build_basis, SplineBasis};
pub use gam::{fit_gpd_gam, fit_gpd_gam_from, predict_radial_quantile, GamFit, SplineSurface};
pub use quantreg::{check_loss, rq_fit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::margins::PolarSample;
use crate::Scalar;

/// Conditional quantile of `R | W = w` modelled as `exp(spline(w))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve<T> {
    pub basis: SplineBasis<T>,
    pub coefficients: Vec<T>,
    pub level: T,
}

impl<T: Scalar> ThresholdCurve<T> {
    pub fn log_threshold(&self, w: T) -> T {
        self.basis.combine(&self.coefficients, w)
    }

    pub fn threshold(&self, w: T) -> T {
        self.log_threshold(w).exp()
    }
}

/// Quantile regression of `log r` on the spline basis at level `q_u`.
pub fn fit_threshold_quantile<T: Scalar>(polar: &PolarSample<T>, basis: &SplineBasis<T>, q_u: T) -> Result<ThresholdCurve<T>> {
    if !(q_u > T::zero() && q_u < T::one()) {
        return Err(Error::InvalidInput(format!("threshold level {q_u} must lie in (0, 1)")));
    }
    if polar.len() < basis.dimension() * 2 {
        return Err(Error::TooFew { needed: basis.dimension() * 2, got: polar.len() });
    }
    let log_r: Vec<T> = polar.r.iter().map(|r| r.ln()).collect();
    let design = basis.design(&polar.w);
    let coefficients = rq_fit(&design, &log_r, q_u)?;
    Ok(ThresholdCurve { basis: basis.clone(), coefficients, level: q_u })
}
