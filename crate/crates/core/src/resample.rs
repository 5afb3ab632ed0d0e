//! Stationary bootstrap for serially dependent bivariate series.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::rng_for;
use crate::error::{Error, Result};
use crate::margins::{to_exponential_margins, RawSample};
use crate::measures::{summarize, DependenceSummary};
use crate::smooth::{estimate, SmoothConfig};
use crate::stats::{quantile_sorted, sort_floats};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapPlan {
    pub n: usize,
    pub block_mean: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl BootstrapPlan {
    pub fn new(n: usize, block_mean: f64, replicates: usize, seed: u64) -> Result<Self> {
        let plan = Self { n, block_mean, replicates, seed };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.block_mean >= 1.0) || !self.block_mean.is_finite() {
            return Err(Error::InvalidInput(format!("mean block length must be at least 1, got {}", self.block_mean)));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidInput("at least one bootstrap replicate is required".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("cannot resample an empty series".into()));
        }
        Ok(())
    }
}

/// Draws block lengths `1 + Geometric(1/L)`, whose mean is `L`.
pub fn block_length<R: Rng + ?Sized>(block_mean: f64, rng: &mut R) -> usize {
    let geometric = Geometric::new(1.0 / block_mean).unwrap_or_else(|_| Geometric::new(1.0).expect("p = 1 is valid"));
    let extra = geometric.sample(rng);
    1usize.saturating_add(usize::try_from(extra).unwrap_or(usize::MAX))
}

/// Zero-based resampled indices for replicate `b`: blocks of geometric length
/// starting at uniform positions and wrapping around the end of the series.
pub fn stationary_bootstrap_indices(plan: &BootstrapPlan, replicate: usize) -> Vec<usize> {
    let mut rng = rng_for(plan.seed, replicate as u64);
    let n = plan.n;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let start = rng.random_range(0..n);
        let len = block_length(plan.block_mean, &mut rng).min(n - out.len());
        out.extend((0..len).map(|k| (start + k) % n));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
}

/// Central percentile interval containing `coverage` of the values.
pub fn percentile_interval<T: Scalar>(values: &[T], coverage: T) -> Option<Interval<T>> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sort_floats(&mut sorted);
    let tail = (T::one() - coverage) / T::lit(2.0);
    Some(Interval { lower: quantile_sorted(&sorted, tail), upper: quantile_sorted(&sorted, T::one() - tail) })
}

/// Pointwise percentile intervals for each measure across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureIntervals<T> {
    pub coverage: T,
    pub eta: Option<Interval<T>>,
    pub alpha1: Option<Interval<T>>,
    pub alpha2: Option<Interval<T>>,
    pub beta1: Option<Interval<T>>,
    pub beta2: Option<Interval<T>>,
    pub omega_grid: Vec<T>,
    pub lambda: Vec<Option<Interval<T>>>,
    pub delta_grid: Vec<T>,
    pub tau1: Vec<Option<Interval<T>>>,
    pub tau2: Vec<Option<Interval<T>>>,
}

pub fn measure_intervals<T: Scalar>(summaries: &[&DependenceSummary<T>], omega_grid: &[T], delta_grid: &[T], coverage: T) -> MeasureIntervals<T> {
    let scalar = |f: &dyn Fn(&DependenceSummary<T>) -> Option<T>| -> Option<Interval<T>> {
        let v: Vec<T> = summaries.iter().filter_map(|s| f(s)).collect();
        percentile_interval(&v, coverage)
    };
    let curve = |len: usize, f: &dyn Fn(&DependenceSummary<T>, usize) -> Option<T>| -> Vec<Option<Interval<T>>> {
        (0..len)
            .map(|j| {
                let v: Vec<T> = summaries.iter().filter_map(|s| f(s, j)).collect();
                percentile_interval(&v, coverage)
            })
            .collect()
    };
    MeasureIntervals {
        coverage,
        eta: scalar(&|s| Some(s.eta)),
        alpha1: scalar(&|s| Some(s.alpha1)),
        alpha2: scalar(&|s| Some(s.alpha2)),
        beta1: scalar(&|s| s.beta1),
        beta2: scalar(&|s| s.beta2),
        omega_grid: omega_grid.to_vec(),
        lambda: curve(omega_grid.len(), &|s, j| s.lambda.get(j).copied()),
        delta_grid: delta_grid.to_vec(),
        tau1: curve(delta_grid.len(), &|s, j| s.tau1.get(j).copied().flatten()),
        tau2: curve(delta_grid.len(), &|s, j| s.tau2.get(j).copied().flatten()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport<T> {
    pub plan: BootstrapPlan,
    /// One entry per replicate; failures carry the error message.
    pub replicates: Vec<std::result::Result<DependenceSummary<T>, String>>,
    pub failures: usize,
    pub intervals: MeasureIntervals<T>,
}

/// Refits the full pipeline, rank transform included, on each stationary
/// bootstrap resample of the raw series.
pub fn bootstrap_measures<T: Scalar>(
    raw: &RawSample<T>,
    config: &SmoothConfig<T>,
    plan: &BootstrapPlan,
    omega_grid: &[T],
    delta_grid: &[T],
    beta_level: T,
) -> Result<BootstrapReport<T>> {
    plan.validate()?;
    if plan.n != raw.len() {
        return Err(Error::InvalidInput(format!("plan is for {} rows but the series has {}", plan.n, raw.len())));
    }
    let replicates: Vec<std::result::Result<DependenceSummary<T>, String>> = (0..plan.replicates)
        .into_par_iter()
        .map(|b| {
            let idx = stationary_bootstrap_indices(plan, b);
            let resampled = raw.select(&idx);
            let sample = to_exponential_margins(&resampled);
            estimate(&sample, config)
                .and_then(|fit| summarize(&fit.boundary, &sample, omega_grid, delta_grid, beta_level))
                .map_err(|e| e.to_string())
        })
        .collect();
    let ok: Vec<&DependenceSummary<T>> = replicates.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failures = replicates.len() - ok.len();
    let intervals = measure_intervals(&ok, omega_grid, delta_grid, T::lit(0.95));
    Ok(BootstrapReport { plan: *plan, replicates, failures, intervals })
}
