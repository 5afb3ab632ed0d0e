//! Generalised Pareto distribution: distribution function, the high radial
//! quantile formula and constrained maximum-likelihood fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, Optimum};
use crate::stats::mean;
use crate::Scalar;

/// Below this magnitude the shape is treated as zero (exponential tail).
pub const SHAPE_ZERO_TOL: f64 = 1e-6;
/// Open interval the fitted shape is constrained to.
pub const SHAPE_LOWER: f64 = -0.95;
pub const SHAPE_UPPER: f64 = 1.0;
/// Default minimum number of excesses for a fit.
pub const MIN_EXCESSES: usize = 10;

/// Threshold exceedance model `R - u | R > u ~ GPD(scale, shape)`, with
/// `exceedance_rate = Pr(R > u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdFit<T> {
    pub threshold: T,
    pub scale: T,
    pub shape: T,
    pub exceedance_rate: T,
}

impl<T: Scalar> GpdFit<T> {
    pub fn new(threshold: T, scale: T, shape: T, exceedance_rate: T) -> Result<Self> {
        if !(scale > T::zero()) {
            return Err(Error::InvalidInput(format!("GPD scale must be positive, got {scale}")));
        }
        if !(exceedance_rate > T::zero() && exceedance_rate <= T::one()) {
            return Err(Error::InvalidInput(format!(
                "exceedance rate must lie in (0, 1], got {exceedance_rate}"
            )));
        }
        Ok(Self { threshold, scale, shape, exceedance_rate })
    }
}

/// `Pr(R < r | R > u)` under the fitted GPD.
pub fn gpd_cdf<T: Scalar>(fit: &GpdFit<T>, r: T) -> Result<T> {
    if !(r > fit.threshold) {
        return Err(Error::Domain(format!("r = {r} must exceed the threshold {}", fit.threshold)));
    }
    let y = (r - fit.threshold) / fit.scale;
    if fit.shape.abs() <= T::lit(SHAPE_ZERO_TOL) {
        return Ok(-(-y).exp_m1());
    }
    let base = T::one() + fit.shape * y;
    if base <= T::zero() {
        return Ok(T::one());
    }
    Ok(T::one() - base.powf(-fit.shape.recip()))
}

/// Quantile `r_q` with `Pr(R < r_q) = q`, extrapolated through the GPD tail.
pub fn radial_quantile<T: Scalar>(fit: &GpdFit<T>, q: T) -> Result<T> {
    let tail = T::one() - q;
    if !(q < T::one()) || tail > fit.exceedance_rate {
        return Err(Error::Domain(format!(
            "quantile level {q} lies below the threshold (exceedance rate {})",
            fit.exceedance_rate
        )));
    }
    let ratio = fit.exceedance_rate / tail;
    let shape = fit.shape;
    if shape.abs() <= T::lit(SHAPE_ZERO_TOL) {
        Ok(fit.threshold + fit.scale * ratio.ln())
    } else {
        Ok(fit.threshold + fit.scale / shape * (ratio.powf(shape) - T::one()))
    }
}

/// GPD log-density of an excess `y > 0`; `-inf` outside the support.
pub fn log_density<T: Scalar>(y: T, scale: T, shape: T) -> T {
    if !(scale > T::zero()) || y < T::zero() {
        return T::neg_infinity();
    }
    let v = y / scale;
    let x = shape * v;
    if x <= -T::one() {
        return T::neg_infinity();
    }
    // (1 + 1/ξ) log(1 + ξv) = log1p(x) + v log1p(x)/x
    let l1p = x.ln_1p();
    let ratio = if x.abs() < T::epsilon() { T::one() } else { l1p / x };
    -scale.ln() - l1p - v * ratio
}

pub fn log_likelihood<T: Scalar>(excesses: &[T], scale: T, shape: T) -> T {
    excesses.iter().map(|&y| log_density(y, scale, shape)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdMle<T> {
    pub scale: T,
    pub shape: T,
    pub log_likelihood: T,
    pub iterations: usize,
    /// Shape estimate pressed against the lower constraint.
    pub at_shape_bound: bool,
}

fn shape_from_unconstrained<T: Scalar>(theta: T) -> T {
    let lo = T::lit(SHAPE_LOWER);
    let width = T::lit(SHAPE_UPPER - SHAPE_LOWER);
    lo + width / (T::one() + (-theta).exp())
}

fn shape_to_unconstrained<T: Scalar>(shape: T) -> T {
    let p = (shape - T::lit(SHAPE_LOWER)) / T::lit(SHAPE_UPPER - SHAPE_LOWER);
    (p / (T::one() - p)).ln()
}

/// Maximum-likelihood GPD fit to positive excesses with the shape constrained
/// to `(-0.95, 1)`. Optimises over `(log σ, logit-mapped ξ)` by Nelder–Mead,
/// starting from the mean excess and `ξ = 0`.
pub fn fit_gpd_mle<T: Scalar>(excesses: &[T], min_excesses: usize) -> Result<GpdMle<T>> {
    if excesses.len() < min_excesses.max(2) {
        return Err(Error::TooFew { needed: min_excesses.max(2), got: excesses.len() });
    }
    if let Some(i) = excesses.iter().position(|&y| !(y > T::zero()) || !y.is_finite()) {
        return Err(Error::InvalidInput(format!("excess {i} is not a positive finite value")));
    }
    let m = mean(excesses);
    let spread = excesses.iter().fold(T::zero(), |s, &y| s.max((y - m).abs()));
    if spread <= T::sqrt_eps() * m {
        return Err(Error::Degenerate("all excesses are equal".into()));
    }

    let objective = |p: &[T]| -log_likelihood(excesses, p[0].exp(), shape_from_unconstrained(p[1]));
    let start = [m.ln(), shape_to_unconstrained(T::zero())];
    // floored so single precision can still meet it
    let tol = (T::epsilon().sqrt() * T::lit(1e-4)).max(T::epsilon() * T::lit(64.0));
    let mut opt = nelder_mead(objective, &start, T::lit(0.3), tol, 4000);
    // restart from the best vertex to guard against a collapsed simplex
    let restart = nelder_mead(objective, &opt.x, T::lit(0.05), tol, 4000);
    if restart.value <= opt.value {
        opt = Optimum { iterations: opt.iterations + restart.iterations, ..restart };
    }
    if !opt.converged || !opt.value.is_finite() {
        return Err(Error::NonConvergence(format!(
            "GPD likelihood after {} iterations: -loglik = {}",
            opt.iterations, opt.value
        )));
    }
    let shape = shape_from_unconstrained(opt.x[1]);
    Ok(GpdMle {
        scale: opt.x[0].exp(),
        shape,
        log_likelihood: -opt.value,
        iterations: opt.iterations,
        at_shape_bound: shape - T::lit(SHAPE_LOWER) < T::lit(1e-3),
    })
}
