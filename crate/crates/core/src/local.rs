//! Per-angle radial quantile estimation and the scaling/truncation step that
//! turns radial quantiles into a boundary estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpd::{fit_gpd_mle, radial_quantile, GpdFit, MIN_EXCESSES};
use crate::margins::{to_polar, BivariateSample, PolarSample};
use crate::measures::hill_eta;
use crate::stats::{quantile_sorted, sort_floats};
use crate::Scalar;

/// Tuning parameters shared by the local and smooth stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(default)]
pub struct LocalConfig<T> {
    /// Number of evaluation angles (odd).
    pub k: usize,
    /// Angular neighbourhood size.
    pub m: usize,
    /// Threshold quantile level.
    pub q_u: T,
    /// Target radial quantile level.
    pub q: T,
    /// Exceedances used for the Hill-type anchor of the scaling step.
    pub eta_exceedances: usize,
}

impl<T: Scalar> Default for LocalConfig<T> {
    fn default() -> Self {
        Self { k: 199, m: 100, q_u: T::lit(0.5), q: T::lit(0.999), eta_exceedances: 500 }
    }
}

impl<T: Scalar> LocalConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.k < 3 || self.k.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("k must be odd and at least 3, got {}", self.k)));
        }
        if self.m < 2 {
            return Err(Error::InvalidInput(format!("m must be at least 2, got {}", self.m)));
        }
        if !(self.q_u > T::zero() && self.q_u < self.q && self.q < T::one()) {
            return Err(Error::InvalidInput(format!(
                "quantile levels must satisfy 0 < q_u < q < 1, got q_u = {}, q = {}",
                self.q_u, self.q
            )));
        }
        if self.eta_exceedances < 2 {
            return Err(Error::InvalidInput("eta_exceedances must be at least 2".into()));
        }
        Ok(())
    }
}

/// Sorted evaluation angles, always containing `1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid<T> {
    pub angles: Vec<T>,
}

impl<T> AngleGrid<T> {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// `k − 1` empirical angle quantiles at evenly spaced levels from 0 to 1
/// (so the observed minimum and maximum are included) together with `1/2`.
pub fn select_angles<T: Scalar>(polar: &PolarSample<T>, k: usize) -> Result<AngleGrid<T>> {
    if k < 3 || k.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "k must be odd and at least 3 so the grid is symmetric about 1/2, got {k}"
        )));
    }
    if k > polar.len() {
        return Err(Error::TooFew { needed: k, got: polar.len() });
    }
    let mut sorted = polar.w.clone();
    sort_floats(&mut sorted);
    let denom = T::count(k - 2);
    let mut angles: Vec<T> = (0..k - 1).map(|j| quantile_sorted(&sorted, T::count(j) / denom)).collect();
    angles.push(T::lit(0.5));
    sort_floats(&mut angles);
    Ok(AngleGrid { angles })
}

/// Threshold and GPD fit in the neighbourhood of one evaluation angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFit<T> {
    pub w: T,
    /// Angular half-width reaching the `m`-th nearest neighbour.
    pub epsilon: T,
    pub m: usize,
    pub threshold: T,
    pub scale: T,
    pub shape: T,
    pub radial_quantile: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalQuantiles<T> {
    pub fits: Vec<LocalFit<T>>,
    pub q_u: T,
    pub q: T,
}

impl<T: Scalar> LocalQuantiles<T> {
    pub fn angles(&self) -> Vec<T> {
        self.fits.iter().map(|f| f.w).collect()
    }

    pub fn radial_quantiles(&self) -> Vec<T> {
        self.fits.iter().map(|f| f.radial_quantile).collect()
    }
}

/// Indices of the `m` observations with angles closest to `w`, ties in
/// distance going to the lower index.
pub fn nearest_angles<T: Scalar>(angles: &[T], w: T, m: usize) -> Vec<usize> {
    let key = |i: usize| ((angles[i] - w).abs(), i);
    let cmp = |a: &usize, b: &usize| {
        let (da, ia) = key(*a);
        let (db, ib) = key(*b);
        da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal).then(ia.cmp(&ib))
    };
    let mut idx: Vec<usize> = (0..angles.len()).collect();
    if m < idx.len() {
        idx.select_nth_unstable_by(m - 1, cmp);
        idx.truncate(m);
    }
    idx.sort_by(cmp);
    idx
}

fn fit_angle<T: Scalar>(polar: &PolarSample<T>, w: T, m: usize, q_u: T, q: T) -> Result<LocalFit<T>> {
    let idx = nearest_angles(&polar.w, w, m);
    let epsilon = idx.iter().map(|&i| (polar.w[i] - w).abs()).fold(T::zero(), T::max);
    let mut radii: Vec<T> = idx.iter().map(|&i| polar.r[i]).collect();
    sort_floats(&mut radii);
    let threshold = quantile_sorted(&radii, q_u);
    let excesses: Vec<T> = radii.iter().filter(|&&r| r > threshold).map(|&r| r - threshold).collect();
    let mle = fit_gpd_mle(&excesses, MIN_EXCESSES)?;
    let fit = GpdFit::new(threshold, mle.scale, mle.shape, T::one() - q_u)?;
    Ok(LocalFit {
        w,
        epsilon,
        m,
        threshold,
        scale: mle.scale,
        shape: mle.shape,
        radial_quantile: radial_quantile(&fit, q)?,
    })
}

/// GPD fits to the radii of the `m` nearest angular neighbours of each grid
/// angle, giving the local radial quantile estimates.
pub fn local_quantiles<T: Scalar>(polar: &PolarSample<T>, grid: &AngleGrid<T>, m: usize, q_u: T, q: T) -> Result<LocalQuantiles<T>> {
    if m > polar.len() {
        return Err(Error::TooFew { needed: m, got: polar.len() });
    }
    if !(q_u < q) {
        return Err(Error::InvalidInput(format!("threshold level {q_u} must be below {q}")));
    }
    // grid is sorted, so repeated angles are adjacent and fitted once
    let mut distinct: Vec<(usize, T)> = Vec::new();
    for (j, &w) in grid.angles.iter().enumerate() {
        if distinct.last().is_none_or(|&(_, prev)| prev != w) {
            distinct.push((j, w));
        }
    }
    let fitted: Vec<Result<LocalFit<T>>> = distinct
        .par_iter()
        .map(|&(j, w)| fit_angle(polar, w, m, q_u, q).map_err(|e| Error::AngleFit { index: j, source: Box::new(e) }))
        .collect();
    let mut fits = Vec::with_capacity(grid.len());
    let mut cursor = 0;
    let fitted: Vec<LocalFit<T>> = fitted.into_iter().collect::<Result<_>>()?;
    for &w in &grid.angles {
        while distinct[cursor].1 != w {
            cursor += 1;
        }
        fits.push(fitted[cursor]);
    }
    Ok(LocalQuantiles { fits, q_u, q })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySource {
    Local,
    Smooth(usize),
    Truth,
}

impl std::fmt::Display for BoundarySource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundarySource::Local => write!(f, "local"),
            BoundarySource::Smooth(d) => write!(f, "smooth-degree-{d}"),
            BoundarySource::Truth => write!(f, "truth"),
        }
    }
}

/// Boundary estimate in `[0, 1]²` with both coordinate maxima equal to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSetEstimate<T> {
    pub w: Vec<T>,
    pub x1: Vec<T>,
    pub x2: Vec<T>,
    /// Step-one multiplier applied to the raw points.
    pub scaling_factor: T,
    pub source: BoundarySource,
}

impl<T: Scalar> LimitSetEstimate<T> {
    /// Builds an estimate from given points, checking the output invariants.
    pub fn from_points(w: Vec<T>, x1: Vec<T>, x2: Vec<T>, source: BoundarySource) -> Result<Self> {
        let est = Self { w, x1, x2, scaling_factor: T::one(), source };
        est.check()?;
        Ok(est)
    }

    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }

    pub fn points(&self) -> Vec<(T, T)> {
        self.x1.iter().copied().zip(self.x2.iter().copied()).collect()
    }

    /// Verifies that coordinates lie in `[0, 1]` and that each coordinate
    /// attains exactly one.
    pub fn check(&self) -> Result<()> {
        if self.x1.is_empty() || self.x1.len() != self.x2.len() || self.w.len() != self.x1.len() {
            return Err(Error::Invariant("boundary must have matching non-empty w, x1, x2 columns".into()));
        }
        for (j, (&a, &b)) in self.x1.iter().zip(&self.x2).enumerate() {
            let ok = |v: T| v >= T::zero() && v <= T::one();
            if !ok(a) || !ok(b) {
                return Err(Error::Invariant(format!("boundary point {j} = ({a}, {b}) lies outside [0, 1]^2")));
            }
        }
        let m1 = self.x1.iter().copied().fold(T::zero(), T::max);
        let m2 = self.x2.iter().copied().fold(T::zero(), T::max);
        if m1 != T::one() || m2 != T::one() {
            return Err(Error::Invariant(format!("coordinate maxima are ({m1}, {m2}), not exactly one")));
        }
        Ok(())
    }
}

fn rescale_coordinate<T: Scalar>(values: &mut [T]) {
    let max = values.iter().copied().fold(T::zero(), T::max);
    if max >= T::one() {
        for v in values.iter_mut() {
            *v = v.min(T::one());
        }
    } else {
        for v in values.iter_mut() {
            *v = *v / max;
        }
    }
}

/// Two-step map onto `[0, 1]²`: scale so the largest coordinate-wise minimum
/// equals `eta_h`, then per coordinate truncate at one if the maximum reaches
/// one, otherwise divide by the maximum.
pub fn scale_truncate<T: Scalar>(w: &[T], tilde: &[(T, T)], eta_h: T, source: BoundarySource) -> Result<LimitSetEstimate<T>> {
    if tilde.is_empty() || w.len() != tilde.len() {
        return Err(Error::InvalidInput("angles and points must be non-empty and of equal length".into()));
    }
    if !(eta_h > T::zero() && eta_h <= T::one()) {
        return Err(Error::InvalidInput(format!("eta_h = {eta_h} must lie in (0, 1]")));
    }
    if let Some(j) = tilde.iter().position(|&(a, b)| !(a >= T::zero() && b >= T::zero() && a.is_finite() && b.is_finite())) {
        return Err(Error::InvalidInput(format!("raw boundary point {j} is negative or non-finite")));
    }
    let max_min = tilde.iter().map(|&(a, b)| a.min(b)).fold(T::zero(), T::max);
    if !(max_min > T::zero()) {
        return Err(Error::Degenerate("every raw boundary point lies on an axis; scaling is undefined".into()));
    }
    let factor = eta_h / max_min;
    let mut x1: Vec<T> = tilde.iter().map(|&(a, _)| a * factor).collect();
    let mut x2: Vec<T> = tilde.iter().map(|&(_, b)| b * factor).collect();
    rescale_coordinate(&mut x1);
    rescale_coordinate(&mut x2);
    let est = LimitSetEstimate { w: w.to_vec(), x1, x2, scaling_factor: factor, source };
    est.check()?;
    Ok(est)
}

/// Everything produced by the local stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalEstimate<T> {
    pub boundary: LimitSetEstimate<T>,
    pub quantiles: LocalQuantiles<T>,
    pub eta_h: T,
}

pub(crate) fn back_transform<T: Scalar>(w: &[T], r: &[T]) -> Vec<(T, T)> {
    w.iter().zip(r).map(|(&w, &r)| (r * w, r * (T::one() - w))).collect()
}

/// Local boundary estimate from a sample on exponential margins.
pub fn estimate_local<T: Scalar>(sample: &BivariateSample<T>, config: &LocalConfig<T>) -> Result<LocalEstimate<T>> {
    config.validate()?;
    let polar = to_polar(sample)?;
    let eta_h = hill_eta(sample, config.eta_exceedances)?;
    estimate_local_polar(&polar, config, eta_h)
}

pub(crate) fn estimate_local_polar<T: Scalar>(polar: &PolarSample<T>, config: &LocalConfig<T>, eta_h: T) -> Result<LocalEstimate<T>> {
    let grid = select_angles(polar, config.k)?;
    let quantiles = local_quantiles(polar, &grid, config.m, config.q_u, config.q)?;
    let tilde = back_transform(&grid.angles, &quantiles.radial_quantiles());
    let boundary = scale_truncate(&grid.angles, &tilde, eta_h, BoundarySource::Local)?;
    Ok(LocalEstimate { boundary, quantiles, eta_h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::{rng_for, sample, CopulaSpec};
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn st(tilde: &[(f64, f64)], eta: f64) -> LimitSetEstimate<f64> {
        let w: Vec<f64> = tilde.iter().map(|&(a, b)| a / (a + b)).collect();
        scale_truncate(&w, tilde, eta, BoundarySource::Local).unwrap()
    }

    #[test]
    fn scale_truncate_hand_traces() {
        let out = st(&[(2.0, 0.5), (1.5, 1.5), (0.5, 2.0)], 0.75);
        assert_eq!(out.scaling_factor, 0.5);
        assert_eq!(out.points(), vec![(1.0, 0.25), (0.75, 0.75), (0.25, 1.0)]);

        let fixed = [(1.0, 0.25), (0.75, 0.75), (0.25, 1.0)];
        assert_eq!(st(&fixed, 0.75).points(), fixed.to_vec());

        let out = st(&[(3.0, 0.3), (2.4, 2.4), (0.3, 3.0)], 0.5);
        let f = 0.5 / 2.4;
        assert_eq!(out.scaling_factor, f);
        let (hi, mid, lo) = (3.0 * f, 2.4 * f, 0.3 * f);
        assert_eq!(out.points(), vec![(1.0, lo / hi), (mid / hi, mid / hi), (lo / hi, 1.0)]);
        for (a, b) in out.points().into_iter().zip([(1.0, 0.1), (0.8, 0.8), (0.1, 1.0)]) {
            assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
        }
    }

    #[test]
    fn scale_truncate_rejects_axis_points() {
        let w = [1.0, 0.0];
        assert!(scale_truncate(&w, &[(1.0, 0.0), (0.0, 2.0)], 0.5, BoundarySource::Local).is_err());
        assert!(scale_truncate(&[0.5], &[(1.0, 1.0)], 0.0, BoundarySource::Local).is_err());
    }

    #[test]
    fn scale_truncate_invariants_on_random_sets() {
        let mut rng = rng_for(2, 0);
        for _ in 0..500 {
            let n = rng.random_range(1..30);
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>() * 5.0, rng.random::<f64>() * 5.0 + 1e-3)).collect();
            let eta = rng.random::<f64>() * 0.99 + 0.01;
            let out = st(&pts, eta);
            out.check().unwrap();
            let induced = out.points().iter().map(|p| p.0.min(p.1)).fold(0.0, f64::max);
            let step1_max = |i: usize| pts.iter().map(|p| if i == 0 { p.0 } else { p.1 }).fold(0.0, f64::max) * out.scaling_factor;
            if step1_max(0) < 1.0 && step1_max(1) < 1.0 {
                assert!(induced >= eta - 1e-12);
            }
        }
    }

    #[test]
    fn angle_grid_rule() {
        let polar = PolarSample { r: vec![1.0; 101], w: (0..=100).map(|i| i as f64 / 100.0).collect() };
        let grid = select_angles(&polar, 3).unwrap();
        assert_eq!(grid.angles, vec![0.0, 0.5, 1.0]);
        let grid = select_angles(&polar, 11).unwrap();
        assert_eq!(grid.len(), 11);
        assert!(grid.angles.contains(&0.5));
        assert!(select_angles(&polar, 4).is_err());

        let flat = PolarSample { r: vec![1.0; 10], w: vec![0.4; 10] };
        assert_eq!(select_angles(&flat, 3).unwrap().angles, vec![0.4, 0.4, 0.5]);
    }

    #[test]
    fn neighbour_ties_follow_index_order() {
        let angles = [0.4, 0.6, 0.5, 0.4, 0.6];
        assert_eq!(nearest_angles(&angles, 0.5, 3), vec![2, 0, 1]);
        assert_eq!(nearest_angles(&angles, 0.5, 5).len(), 5);
    }

    fn exp_polar(n: usize, seed: u64) -> PolarSample<f64> {
        let mut rng = rng_for(seed, 0);
        PolarSample {
            r: (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect(),
            w: (0..n).map(|_| rng.random()).collect(),
        }
    }

    #[test]
    fn exponential_radii_give_log500_quantiles() {
        let polar = exp_polar(20_000, 9);
        let grid = AngleGrid { angles: vec![0.2, 0.5, 0.8] };
        let lq = local_quantiles(&polar, &grid, 4000, 0.5, 0.999).unwrap();
        for f in &lq.fits {
            assert!((f.threshold - 2f64.ln()).abs() < 0.06);
            assert!((f.scale - 1.0).abs() < 0.1 && f.shape.abs() < 0.1);
            let expected = f.threshold + 500f64.ln() * f.scale;
            assert!((f.radial_quantile - expected).abs() < 0.6, "{} vs {expected}", f.radial_quantile);
            assert_eq!(f.m, 4000);
            assert!(f.radial_quantile > f.threshold);
        }
    }

    #[test]
    fn full_neighbourhood_gives_identical_fits() {
        let polar = exp_polar(300, 10);
        let grid = AngleGrid { angles: vec![0.1, 0.5, 0.9] };
        let lq = local_quantiles(&polar, &grid, 300, 0.5, 0.99).unwrap();
        assert_eq!(lq.fits[0].threshold, lq.fits[2].threshold);
        assert_eq!(lq.fits[0].radial_quantile, lq.fits[1].radial_quantile);
    }

    #[test]
    fn doubling_radii_doubles_fit() {
        let polar = exp_polar(2000, 11);
        let doubled = PolarSample { r: polar.r.iter().map(|r| r * 2.0).collect(), w: polar.w.clone() };
        let grid = AngleGrid { angles: vec![0.3, 0.5] };
        let a = local_quantiles(&polar, &grid, 200, 0.5, 0.999).unwrap();
        let b = local_quantiles(&doubled, &grid, 200, 0.5, 0.999).unwrap();
        for (fa, fb) in a.fits.iter().zip(&b.fits) {
            assert!((fb.threshold - 2.0 * fa.threshold).abs() < 1e-12);
            assert!((fb.scale / fa.scale - 2.0).abs() < 1e-4);
            assert!(((fb.radial_quantile - fb.threshold) / (fa.radial_quantile - fa.threshold) - 2.0).abs() < 1e-3);
        }
    }

    #[test]
    fn independence_boundary_near_simplex() {
        // single local fits at the default m are too noisy for a tight check, so
        // average the diagonal point over replicates with wider neighbourhoods
        let config = LocalConfig { m: 1000, k: 51, ..LocalConfig::default() };
        let reps = 8;
        let (mut s1, mut s2) = (0.0, 0.0);
        for seed in 0..reps {
            let x = sample(&CopulaSpec::<f64>::gaussian(0.0).unwrap(), 10_000, 300 + seed).unwrap();
            let est = estimate_local(&x, &config).unwrap();
            let centre = est.boundary.w.iter().position(|&w| w == 0.5).unwrap();
            s1 += est.boundary.x1[centre];
            s2 += est.boundary.x2[centre];
        }
        let (m1, m2) = (s1 / reps as f64, s2 / reps as f64);
        assert!((m1 - 0.5).abs() < 0.05 && (m2 - 0.5).abs() < 0.05, "({m1}, {m2})");
    }

    #[test]
    fn permutation_invariance() {
        let x = sample(&CopulaSpec::<f64>::logistic(0.5).unwrap(), 3000, 32).unwrap();
        let mut rows = x.rows().to_vec();
        rows.shuffle(&mut rng_for(1, 1));
        let y = BivariateSample::new(rows).unwrap();
        let config = LocalConfig { k: 51, ..LocalConfig::default() };
        let a = estimate_local(&x, &config).unwrap();
        let b = estimate_local(&y, &config).unwrap();
        // neighbour tie-breaking by index can only matter for exactly equal angles
        for (pa, pb) in a.boundary.points().iter().zip(b.boundary.points()) {
            assert!((pa.0 - pb.0).abs() < 1e-9 && (pa.1 - pb.1).abs() < 1e-9);
        }
    }
}
