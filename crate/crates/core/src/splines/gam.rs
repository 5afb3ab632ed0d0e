//! GPD regression for threshold excesses with a spline log-scale and a
//! constant shape.

use serde::{Deserialize, Serialize};

use super::{SplineBasis, ThresholdCurve};
use crate::error::{Error, Result};
use crate::gpd::{log_density, radial_quantile, GpdFit, MIN_EXCESSES, SHAPE_LOWER, SHAPE_UPPER};
use crate::margins::PolarSample;
use crate::optim::{cholesky_solve, nelder_mead, newton_maximize, SecondOrder};
use crate::stats::mean;
use crate::Scalar;

/// Fitted threshold and tail model over the observed angular range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineSurface<T> {
    pub threshold: ThresholdCurve<T>,
    pub log_scale_coef: Vec<T>,
    pub shape: T,
    pub w_min: T,
    pub w_max: T,
    pub log_likelihood: T,
    pub n_exceedances: usize,
    /// Inverse observed information for `(log-scale coefficients, ξ)`, row-major.
    pub covariance: Vec<T>,
}

impl<T: Scalar> SplineSurface<T> {
    pub fn threshold_at(&self, w: T) -> T {
        self.threshold.threshold(w)
    }

    pub fn log_scale_at(&self, w: T) -> T {
        self.threshold.basis.combine(&self.log_scale_coef, w)
    }

    pub fn scale_at(&self, w: T) -> T {
        self.log_scale_at(w).exp()
    }

    /// Standard error of the fitted log-scale at `w`.
    pub fn log_scale_se(&self, w: T) -> T {
        let b = self.threshold.basis.evaluate(w);
        let dim = self.log_scale_coef.len() + 1;
        let mut v = T::zero();
        for i in 0..b.len() {
            for j in 0..b.len() {
                v = v + b[i] * self.covariance[i * dim + j] * b[j];
            }
        }
        v.max(T::zero()).sqrt()
    }

    pub fn exceedance_rate(&self) -> T {
        T::one() - self.threshold.level
    }
}

/// Radial quantile `r_q(w)` from the fitted surface. Angles outside the
/// observed range are refused.
pub fn predict_radial_quantile<T: Scalar>(surface: &SplineSurface<T>, w: T, q: T) -> Result<T> {
    if !(w >= surface.w_min && w <= surface.w_max) {
        return Err(Error::NotEstimable(format!(
            "angle {w} lies outside the observed range [{}, {}]",
            surface.w_min, surface.w_max
        )));
    }
    let fit = GpdFit::new(surface.threshold_at(w), surface.scale_at(w), surface.shape, surface.exceedance_rate())?;
    radial_quantile(&fit, q)
}

/// Result of the penalised-free GPD regression.
#[derive(Debug, Clone, PartialEq)]
pub struct GamFit<T> {
    pub coefficients: Vec<T>,
    pub shape: T,
    pub log_likelihood: T,
    pub covariance: Vec<T>,
    pub converged: bool,
}

// h(x) = ln(1+x)/x² − 1/(x(1+x)) and h'(x), with series near zero
fn h_and_derivative<T: Scalar>(x: T) -> (T, T) {
    if x.abs() < T::lit(0.1) {
        let mut h = T::zero();
        let mut dh = T::zero();
        let mut pow = T::one();
        let mut pow_prev = T::zero();
        for k in 0..40usize {
            let coef = T::count(k + 1) / T::count(k + 2);
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            h = h + sign * coef * pow;
            if k > 0 {
                dh = dh + sign * coef * T::count(k) * pow_prev;
            }
            pow_prev = pow;
            pow = pow * x;
        }
        (h, dh)
    } else {
        let l = x.ln_1p();
        let opx = T::one() + x;
        let h = l / (x * x) - T::one() / (x * opx);
        let dh = T::one() / (opx * x * x) - T::lit(2.0) * l / (x * x * x)
            + (T::one() + T::lit(2.0) * x) / (x * x * opx * opx);
        (h, dh)
    }
}

fn in_shape_bounds<T: Scalar>(shape: T) -> bool {
    shape > T::lit(SHAPE_LOWER) && shape < T::lit(SHAPE_UPPER)
}

fn gam_value<T: Scalar>(design: &[T], y: &[T], params: &[T]) -> T {
    let p = params.len() - 1;
    let shape = params[p];
    if !in_shape_bounds(shape) {
        return T::neg_infinity();
    }
    let mut total = T::zero();
    for (i, &yi) in y.iter().enumerate() {
        let eta: T = (0..p).map(|k| design[i * p + k] * params[k]).sum();
        let v = log_density(yi, eta.exp(), shape);
        if !v.is_finite() {
            return T::neg_infinity();
        }
        total = total + v;
    }
    total
}

fn gam_second_order<T: Scalar>(design: &[T], y: &[T], params: &[T]) -> SecondOrder<T> {
    let p = params.len() - 1;
    let dim = p + 1;
    let shape = params[p];
    let mut gradient = vec![T::zero(); dim];
    let mut hessian = vec![T::zero(); dim * dim];
    let value = gam_value(design, y, params);
    if !value.is_finite() {
        return SecondOrder { value, gradient, hessian };
    }
    for (i, &yi) in y.iter().enumerate() {
        let row = &design[i * p..(i + 1) * p];
        let eta: T = row.iter().zip(params).map(|(&b, &c)| b * c).sum();
        let v = yi / eta.exp();
        let x = shape * v;
        let opx = T::one() + x;
        let (h, dh) = h_and_derivative(x);
        let l_eta = -T::one() + (T::one() + shape) * v / opx;
        let l_eta_eta = -(T::one() + shape) * v / (opx * opx);
        let l_eta_xi = v * (T::one() - v) / (opx * opx);
        let l_xi = v * v * h - v / opx;
        let l_xi_xi = v * v * v * dh + v * v / (opx * opx);
        for a in 0..p {
            if row[a] == T::zero() {
                continue;
            }
            gradient[a] = gradient[a] + l_eta * row[a];
            for b in a..p {
                hessian[a * dim + b] = hessian[a * dim + b] + l_eta_eta * row[a] * row[b];
            }
            hessian[a * dim + p] = hessian[a * dim + p] + l_eta_xi * row[a];
        }
        gradient[p] = gradient[p] + l_xi;
        hessian[p * dim + p] = hessian[p * dim + p] + l_xi_xi;
    }
    for a in 0..dim {
        for b in 0..a {
            hessian[a * dim + b] = hessian[b * dim + a];
        }
    }
    SecondOrder { value, gradient, hessian }
}

fn invert_spd<T: Scalar>(a: &[T], dim: usize) -> Vec<T> {
    let mut out = vec![T::nan(); dim * dim];
    for j in 0..dim {
        let mut e = vec![T::zero(); dim];
        e[j] = T::one();
        if let Some(col) = cholesky_solve(a, &e) {
            for i in 0..dim {
                out[i * dim + j] = col[i];
            }
        } else {
            return vec![T::nan(); dim * dim];
        }
    }
    out
}

/// Maximum-likelihood GPD regression with `log σ = design · β` and constant
/// `ξ ∈ (−0.95, 1)`, Newton iterations from the given start.
pub fn fit_gpd_gam_from<T: Scalar>(design: &[T], excesses: &[T], start: &[T]) -> Result<GamFit<T>> {
    let n = excesses.len();
    let dim = start.len();
    if dim < 2 || design.len() != n * (dim - 1) {
        return Err(Error::InvalidInput("design and start sizes disagree".into()));
    }
    let grad_tol = T::epsilon().sqrt() * T::lit(1e-3);
    let mut opt = newton_maximize(
        |p: &[T]| gam_second_order(design, excesses, p),
        |p: &[T]| gam_value(design, excesses, p),
        start,
        grad_tol,
        200,
    );
    if !opt.converged {
        // fall back to a derivative-free polish
        let nm = nelder_mead(|p: &[T]| -gam_value(design, excesses, p), &opt.x, T::lit(0.05), T::epsilon().sqrt() * T::lit(1e-4), 20_000);
        if -nm.value >= opt.value {
            opt.x = nm.x;
            opt.value = -nm.value;
            opt.converged = nm.converged;
        }
    }
    if !opt.value.is_finite() {
        return Err(Error::NonConvergence("GPD regression likelihood is not finite".into()));
    }
    let info = gam_second_order(design, excesses, &opt.x);
    let neg_h: Vec<T> = info.hessian.iter().map(|&h| -h).collect();
    let covariance = invert_spd(&neg_h, dim);
    Ok(GamFit {
        coefficients: opt.x[..dim - 1].to_vec(),
        shape: opt.x[dim - 1],
        log_likelihood: opt.value,
        covariance,
        converged: opt.converged,
    })
}

/// Fits the GPD regression to the excesses of `r` above the threshold curve.
pub fn fit_gpd_gam<T: Scalar>(polar: &PolarSample<T>, threshold: &ThresholdCurve<T>) -> Result<SplineSurface<T>> {
    let basis: &SplineBasis<T> = &threshold.basis;
    let mut ws = Vec::new();
    let mut excesses = Vec::new();
    for (&r, &w) in polar.r.iter().zip(&polar.w) {
        let u = threshold.threshold(w);
        if r > u {
            ws.push(w);
            excesses.push(r - u);
        }
    }
    let needed = MIN_EXCESSES.max(2 * basis.dimension());
    if excesses.len() < needed {
        return Err(Error::TooFew { needed, got: excesses.len() });
    }
    let design = basis.design(&ws);
    let mut start = vec![mean(&excesses).ln(); basis.dimension()];
    start.push(T::zero());
    let fit = fit_gpd_gam_from(&design, &excesses, &start)?;
    if !fit.converged {
        return Err(Error::NonConvergence("GPD regression did not converge".into()));
    }
    let (w_min, w_max) = polar.angle_range();
    Ok(SplineSurface {
        threshold: threshold.clone(),
        log_scale_coef: fit.coefficients,
        shape: fit.shape,
        w_min,
        w_max,
        log_likelihood: fit.log_likelihood,
        n_exceedances: excesses.len(),
        covariance: fit.covariance,
    })
}
