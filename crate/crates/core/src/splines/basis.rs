//! Clamped B-spline bases on the unit interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// B-spline basis of degree 1–3 whose breakpoints span the observed angular
/// range, with the central breakpoint pinned to `1/2` and the exterior knots
/// placed at 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis<T> {
    degree: usize,
    breakpoints: Vec<T>,
    knots: Vec<T>,
}

impl<T: Scalar> SplineBasis<T> {
    /// Builds the basis from explicit breakpoints (strictly increasing, within `[0, 1]`).
    pub fn from_breakpoints(degree: usize, breakpoints: Vec<T>) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(Error::InvalidInput(format!("spline degree must be 1, 2 or 3, got {degree}")));
        }
        if breakpoints.len() < degree + 1 || breakpoints.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "{} knots are too few for a degree-{degree} spline",
                breakpoints.len()
            )));
        }
        if breakpoints.windows(2).any(|p| !(p[0] < p[1])) {
            return Err(Error::InvalidInput("spline knots must be strictly increasing".into()));
        }
        let (first, last) = (breakpoints[0], breakpoints[breakpoints.len() - 1]);
        if first < T::zero() || last > T::one() {
            return Err(Error::InvalidInput("spline knots must lie in [0, 1]".into()));
        }
        let mut knots = vec![T::zero(); degree];
        knots.extend_from_slice(&breakpoints);
        knots.extend(std::iter::repeat_n(T::one(), degree));
        Ok(Self { degree, breakpoints, knots })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    /// Full knot vector including the exterior knots.
    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn dimension(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Interval on which the basis is a partition of unity.
    pub fn span(&self) -> (T, T) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    /// Index of the first non-zero basis function at `x` together with the
    /// `degree + 1` non-zero values. `x` is clamped into [`Self::span`].
    pub fn evaluate_local(&self, x: T) -> (usize, Vec<T>) {
        let p = self.degree;
        let t = &self.knots;
        let (lo, hi) = self.span();
        let x = x.max(lo).min(hi);
        let n = self.dimension();
        // largest span with t[span] <= x < t[span + 1], capped at the last interval
        let mut span = p;
        while span + 1 < n && t[span + 1] <= x {
            span += 1;
        }
        let mut values = vec![T::zero(); p + 1];
        let mut left = vec![T::zero(); p + 1];
        let mut right = vec![T::zero(); p + 1];
        values[0] = T::one();
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = T::zero();
            for r in 0..j {
                let temp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        (span - p, values)
    }

    /// Dense vector of all basis function values at `x`.
    pub fn evaluate(&self, x: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.dimension()];
        let (first, values) = self.evaluate_local(x);
        for (k, v) in values.into_iter().enumerate() {
            out[first + k] = v;
        }
        out
    }

    /// `Σ_k B_k(x) c_k`.
    pub fn combine(&self, coefficients: &[T], x: T) -> T {
        let (first, values) = self.evaluate_local(x);
        values.iter().zip(&coefficients[first..]).map(|(&b, &c)| b * c).sum()
    }

    /// Row-major design matrix for the points `xs`.
    pub fn design(&self, xs: &[T]) -> Vec<T> {
        let dim = self.dimension();
        let mut out = vec![T::zero(); xs.len() * dim];
        for (row, &x) in xs.iter().enumerate() {
            let (first, values) = self.evaluate_local(x);
            for (k, v) in values.into_iter().enumerate() {
                out[row * dim + first + k] = v;
            }
        }
        out
    }
}

/// Basis with `kappa` knots evenly spaced over `[w_min, w_max]`, the central
/// one moved to exactly `1/2`.
pub fn build_basis<T: Scalar>(degree: usize, kappa: usize, w_min: T, w_max: T) -> Result<SplineBasis<T>> {
    if kappa < degree + 1 || kappa < 3 {
        return Err(Error::InvalidInput(format!(
            "kappa = {kappa} knots is too few for a degree-{degree} spline"
        )));
    }
    let half = T::lit(0.5);
    if !(w_min < half && half < w_max) {
        return Err(Error::InvalidInput(format!(
            "angular range [{w_min}, {w_max}] must contain 1/2 in its interior"
        )));
    }
    let step = (w_max - w_min) / T::count(kappa - 1);
    let mut knots: Vec<T> = (0..kappa).map(|i| w_min + step * T::count(i)).collect();
    knots[kappa - 1] = w_max;
    let centre = if kappa % 2 == 1 {
        kappa / 2
    } else {
        (0..kappa)
            .min_by(|&a, &b| {
                (knots[a] - half).abs().partial_cmp(&(knots[b] - half).abs()).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(kappa / 2)
    };
    knots[centre] = half;
    SplineBasis::from_breakpoints(degree, knots)
}
