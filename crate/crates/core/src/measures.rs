//! Extremal dependence measures read off a boundary set, the conditional
//! extremes working-model fit, and the classical threshold-based baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local::LimitSetEstimate;
use crate::margins::BivariateSample;
use crate::optim::golden_section_max;
use crate::stats::{mean, quantile_sorted, sort_floats};
use crate::Scalar;

/// Which variable plays the role of the large one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    First,
    Second,
}

fn oriented<T: Scalar>(points: &[(T, T)], component: Component) -> impl Iterator<Item = (T, T)> + '_ {
    points.iter().map(move |&(a, b)| match component {
        Component::First => (a, b),
        Component::Second => (b, a),
    })
}

/// `max_j min(x1_j, x2_j)`.
pub fn eta_from_boundary<T: Scalar>(points: &[(T, T)]) -> T {
    points.iter().map(|&(a, b)| a.min(b)).fold(T::zero(), T::max)
}

/// `[max_j min(x1_j/ω, x2_j/(1−ω))]⁻¹` clamped to `[max(ω, 1−ω), 1]`;
/// one at the endpoints.
pub fn lambda_from_boundary<T: Scalar>(points: &[(T, T)], omega: T) -> T {
    if !(omega > T::zero() && omega < T::one()) {
        return T::one();
    }
    let comp = T::one() - omega;
    let m = points.iter().map(|&(a, b)| (a / omega).min(b / comp)).fold(T::zero(), T::max);
    m.recip().max(omega.max(comp)).min(T::one())
}

/// `max{x_i : x_other ≤ δ x_i}`, or `None` when no point qualifies.
pub fn tau_from_boundary<T: Scalar>(points: &[(T, T)], delta: T, component: Component) -> Option<T> {
    oriented(points, component)
        .filter(|&(a, b)| b <= delta * a)
        .map(|(a, _)| a)
        .fold(None, |m: Option<T>, a| Some(m.map_or(a, |m| m.max(a))))
}

/// `max{x_other : x_i = 1}`.
pub fn alpha_from_boundary<T: Scalar>(points: &[(T, T)], component: Component) -> Result<T> {
    oriented(points, component)
        .filter(|&(a, _)| a == T::one())
        .map(|(_, b)| b)
        .fold(None, |m: Option<T>, b| Some(m.map_or(b, |m| m.max(b))))
        .ok_or_else(|| Error::Invariant("no boundary point has the conditioning coordinate equal to one".into()))
}

/// Fitted conditional extremes working model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaFit<T> {
    pub beta: T,
    pub mu: T,
    pub sigma: T,
    pub threshold: T,
    pub n_exceedances: usize,
}

pub const BETA_MIN_EXCEEDANCES: usize = 50;
const BETA_UPPER: f64 = 0.999_999;

/// Normal working-model fit of `X_other | X_i = x ~ N(αx + x^β μ, (x^β σ)²)`
/// for `x > u` with `α` fixed, profiled over `μ` and `σ`.
pub fn beta_fit<T: Scalar>(sample: &BivariateSample<T>, alpha: T, threshold: T, component: Component) -> Result<BetaFit<T>> {
    let pairs: Vec<(T, T)> = oriented(sample.rows_as_pairs().as_slice(), component)
        .filter(|&(a, _)| a > threshold)
        .collect();
    if pairs.len() < BETA_MIN_EXCEEDANCES {
        return Err(Error::TooFew { needed: BETA_MIN_EXCEEDANCES, got: pairs.len() });
    }
    if !(threshold > T::zero()) {
        return Err(Error::InvalidInput(format!("beta threshold {threshold} must be positive")));
    }
    let log_x: Vec<T> = pairs.iter().map(|&(a, _)| a.ln()).collect();
    let sum_log_x: T = log_x.iter().copied().sum();
    let n = T::count(pairs.len());
    let moments = |beta: T| -> (T, T) {
        let z: Vec<T> = pairs
            .iter()
            .zip(&log_x)
            .map(|(&(a, b), &lx)| (b - alpha * a) * (-beta * lx).exp())
            .collect();
        let mu = mean(&z);
        let var = z.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() / n;
        (mu, var)
    };
    let profile = |beta: T| -> T {
        let (_, var) = moments(beta);
        -beta * sum_log_x - T::lit(0.5) * n * var.ln()
    };
    let upper = T::lit(BETA_UPPER);
    let steps = 100;
    let mut best = (T::zero(), T::neg_infinity());
    for i in 0..=steps {
        let b = upper * T::count(i) / T::count(steps);
        let (_, var) = moments(b);
        if !(var > T::epsilon() * T::epsilon()) {
            return Err(Error::Degenerate("working-model residuals are identically zero".into()));
        }
        let v = profile(b);
        if v > best.1 {
            best = (b, v);
        }
    }
    let h = upper / T::count(steps);
    let (lo, hi) = ((best.0 - h).max(T::zero()), (best.0 + h).min(upper));
    let (beta, value) = golden_section_max(profile, lo, hi, T::sqrt_eps() * T::lit(1e-2));
    let beta = if value >= best.1 { beta } else { best.0 };
    let (mu, var) = moments(beta);
    Ok(BetaFit { beta, mu, sigma: var.sqrt(), threshold, n_exceedances: pairs.len() })
}

/// Hill-type estimate of `η`: mean excess of the top `k` values of
/// `min(X1, X2)` over the next largest, truncated at one.
pub fn hill_eta<T: Scalar>(sample: &BivariateSample<T>, k: usize) -> Result<T> {
    let mut m: Vec<T> = sample.rows().iter().map(|r| r[0].min(r[1])).collect();
    top_mean_excess(&mut m, k).map(|v| v.min(T::one()))
}

fn top_mean_excess<T: Scalar>(values: &mut [T], k: usize) -> Result<T> {
    let n = values.len();
    if k == 0 || k >= n {
        return Err(Error::TooFew { needed: k + 1, got: n });
    }
    sort_floats(values);
    let u = values[n - k - 1];
    let excess = values[n - k..].iter().map(|&v| v - u).sum::<T>() / T::count(k);
    if !(excess > T::zero()) {
        return Err(Error::Degenerate("largest structure-variable values are all tied".into()));
    }
    Ok(excess)
}

/// `s_n(j)` for `j = 0..=n`: the number of observations whose components are
/// both among the `j` largest (counting ties generously).
pub fn joint_top_counts<T: Scalar>(sample: &BivariateSample<T>) -> Vec<usize> {
    let n = sample.len();
    let rank_from_top = |col: usize| -> Vec<usize> {
        let values = sample.column(col);
        let mut sorted = values.clone();
        sort_floats(&mut sorted);
        values
            .iter()
            .map(|&v| {
                // number of values strictly greater, plus one
                let not_greater = sorted.partition_point(|&s| s <= v);
                n - not_greater + 1
            })
            .collect()
    };
    let r1 = rank_from_top(0);
    let r2 = rank_from_top(1);
    let mut hist = vec![0usize; n + 2];
    for (a, b) in r1.into_iter().zip(r2) {
        hist[a.max(b)] += 1;
    }
    let mut s = vec![0usize; n + 1];
    let mut acc = 0;
    for j in 0..=n {
        acc += hist[j];
        s[j] = acc;
    }
    s
}

/// Peng-type estimate `log 2 / log(s_n(2c)/s_n(c))`, truncated at one.
pub fn peng_eta<T: Scalar>(sample: &BivariateSample<T>, c: usize) -> Result<T> {
    if c == 0 || 2 * c > sample.len() {
        return Err(Error::InvalidInput(format!("need 0 < 2c <= n, got c = {c}, n = {}", sample.len())));
    }
    let s = joint_top_counts(sample);
    peng_from_counts(&s, c)
}

pub fn peng_from_counts<T: Scalar>(s: &[usize], c: usize) -> Result<T> {
    let (sc, s2c) = (s[c], s[2 * c]);
    if sc == 0 || s2c == sc {
        return Err(Error::NotEstimable(format!("joint counts s(c) = {sc}, s(2c) = {s2c}")));
    }
    let v = T::lit(2.0).ln() / (T::count(s2c).ln() - T::count(sc).ln());
    Ok(v.min(T::one()))
}

/// Draisma-type estimate `Σ_{j≤c} s_n(j) / (c s_n(c) − Σ_{j≤c} s_n(j))`, truncated at one.
pub fn draisma_eta<T: Scalar>(sample: &BivariateSample<T>, c: usize) -> Result<T> {
    if c == 0 || 2 * c > sample.len() {
        return Err(Error::InvalidInput(format!("need 0 < 2c <= n, got c = {c}, n = {}", sample.len())));
    }
    let s = joint_top_counts(sample);
    draisma_from_counts(&s, c)
}

pub fn draisma_from_counts<T: Scalar>(s: &[usize], c: usize) -> Result<T> {
    let total: usize = s[1..=c].iter().sum();
    let sc = s[c];
    if sc == 0 || c * sc <= total {
        return Err(Error::NotEstimable(format!("joint counts give a non-positive denominator (s(c) = {sc})")));
    }
    Ok((T::count(total) / T::count(c * sc - total)).min(T::one()))
}

/// Reciprocal mean excess of `min(X1/ω, X2/(1−ω))` above its empirical
/// `level` quantile, truncated at one.
pub fn hill_lambda<T: Scalar>(sample: &BivariateSample<T>, omega: T, level: T) -> Result<T> {
    if !(omega > T::zero() && omega < T::one()) {
        return Err(Error::InvalidInput(format!("omega = {omega} must lie in (0, 1)")));
    }
    let comp = T::one() - omega;
    let mut m: Vec<T> = sample.rows().iter().map(|r| (r[0] / omega).min(r[1] / comp)).collect();
    sort_floats(&mut m);
    let u = quantile_sorted(&m, level);
    let excess = strict_mean_excess(&m, u).ok_or_else(|| Error::Degenerate("no values above the lambda threshold".into()))?;
    Ok(excess.recip().min(T::one()))
}

fn strict_mean_excess<T: Scalar>(values: &[T], u: T) -> Option<T> {
    let (sum, count) = values.iter().filter(|&&v| v > u).fold((T::zero(), 0usize), |(s, c), &v| (s + v - u, c + 1));
    (count > 0 && sum > T::zero()).then(|| sum / T::count(count))
}

pub const HILL_TAU_MIN_POINTS: usize = 20;

/// Mean excess of `{x_i : x_other ≤ δ x_i}` above its empirical `level`
/// quantile, truncated at one; `None` with fewer than 20 qualifying points.
pub fn hill_tau<T: Scalar>(sample: &BivariateSample<T>, delta: T, component: Component, level: T) -> Option<T> {
    let pairs = sample.rows_as_pairs();
    let mut v: Vec<T> = oriented(&pairs, component).filter(|&(a, b)| b <= delta * a).map(|(a, _)| a).collect();
    if v.len() < HILL_TAU_MIN_POINTS {
        return None;
    }
    sort_floats(&mut v);
    let u = quantile_sorted(&v, level);
    strict_mean_excess(&v, u).map(|e| e.min(T::one()))
}

/// All geometric measures from one boundary set plus the working-model `β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceSummary<T> {
    pub eta: T,
    pub omega_grid: Vec<T>,
    pub lambda: Vec<T>,
    pub delta_grid: Vec<T>,
    pub tau1: Vec<Option<T>>,
    pub tau2: Vec<Option<T>>,
    pub alpha1: T,
    pub alpha2: T,
    pub beta1: Option<T>,
    pub beta2: Option<T>,
    pub chi: Option<T>,
}

/// Geometric measures from the boundary alone (`β` left empty).
pub fn geometric_measures<T: Scalar>(boundary: &LimitSetEstimate<T>, omega_grid: &[T], delta_grid: &[T]) -> Result<DependenceSummary<T>> {
    let pts = boundary.points();
    Ok(DependenceSummary {
        eta: eta_from_boundary(&pts),
        omega_grid: omega_grid.to_vec(),
        lambda: omega_grid.iter().map(|&w| lambda_from_boundary(&pts, w)).collect(),
        delta_grid: delta_grid.to_vec(),
        tau1: delta_grid.iter().map(|&d| tau_from_boundary(&pts, d, Component::First)).collect(),
        tau2: delta_grid.iter().map(|&d| tau_from_boundary(&pts, d, Component::Second)).collect(),
        alpha1: alpha_from_boundary(&pts, Component::First)?,
        alpha2: alpha_from_boundary(&pts, Component::Second)?,
        beta1: None,
        beta2: None,
        chi: None,
    })
}

/// Geometric measures plus `β` fitted above the empirical `beta_level`
/// quantile of each conditioning margin. A failed `β` fit leaves it empty.
pub fn summarize<T: Scalar>(
    boundary: &LimitSetEstimate<T>,
    sample: &BivariateSample<T>,
    omega_grid: &[T],
    delta_grid: &[T],
    beta_level: T,
) -> Result<DependenceSummary<T>> {
    let mut s = geometric_measures(boundary, omega_grid, delta_grid)?;
    let beta_for = |alpha: T, col: usize, component: Component| -> Option<T> {
        let mut margin = sample.column(col);
        sort_floats(&mut margin);
        let u = quantile_sorted(&margin, beta_level);
        beta_fit(sample, alpha, u, component).ok().map(|f| f.beta)
    };
    s.beta1 = beta_for(s.alpha1, 0, Component::First);
    s.beta2 = beta_for(s.alpha2, 1, Component::Second);
    Ok(s)
}

/// Threshold-based baseline estimates on the same grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary<T> {
    pub eta_hill: Option<T>,
    pub eta_peng: Option<T>,
    pub eta_draisma: Option<T>,
    pub omega_grid: Vec<T>,
    pub lambda_hill: Vec<Option<T>>,
    pub delta_grid: Vec<T>,
    pub tau1_hill: Vec<Option<T>>,
    pub tau2_hill: Vec<Option<T>>,
}

/// Default thresholds: 500 exceedances for `η`, `c = 500`, the 0.95 quantile
/// for `λ` and the 0.85 quantile for `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(default)]
pub struct BaselineConfig<T> {
    pub eta_exceedances: usize,
    pub count_c: usize,
    pub lambda_level: T,
    pub tau_level: T,
}

impl<T: Scalar> Default for BaselineConfig<T> {
    fn default() -> Self {
        Self { eta_exceedances: 500, count_c: 500, lambda_level: T::lit(0.95), tau_level: T::lit(0.85) }
    }
}

pub fn baselines<T: Scalar>(sample: &BivariateSample<T>, omega_grid: &[T], delta_grid: &[T], config: &BaselineConfig<T>) -> BaselineSummary<T> {
    let counts = (2 * config.count_c <= sample.len() && config.count_c > 0).then(|| joint_top_counts(sample));
    BaselineSummary {
        eta_hill: hill_eta(sample, config.eta_exceedances).ok(),
        eta_peng: counts.as_ref().and_then(|s| peng_from_counts(s, config.count_c).ok()),
        eta_draisma: counts.as_ref().and_then(|s| draisma_from_counts(s, config.count_c).ok()),
        omega_grid: omega_grid.to_vec(),
        lambda_hill: omega_grid.iter().map(|&w| hill_lambda(sample, w, config.lambda_level).ok()).collect(),
        delta_grid: delta_grid.to_vec(),
        tau1_hill: delta_grid.iter().map(|&d| hill_tau(sample, d, Component::First, config.tau_level)).collect(),
        tau2_hill: delta_grid.iter().map(|&d| hill_tau(sample, d, Component::Second, config.tau_level)).collect(),
    }
}

/// Whether the estimable entries of a `δ`-indexed curve never decrease.
pub fn is_nondecreasing<T: Scalar>(curve: &[Option<T>]) -> bool {
    let values: Vec<T> = curve.iter().flatten().copied().collect();
    values.windows(2).all(|p| p[1] >= p[0])
}

/// Checks the exact identities linking the measures of one boundary set and
/// returns a description of every violation.
pub fn self_consistency_violations<T: Scalar>(boundary: &LimitSetEstimate<T>, summary: &DependenceSummary<T>) -> Vec<String> {
    let mut out = Vec::new();
    if let Err(e) = boundary.check() {
        out.push(e.to_string());
    }
    let (eta, a1, a2) = (summary.eta, summary.alpha1, summary.alpha2);
    if eta < a1.max(a2) {
        out.push(format!("eta {eta} is below max(alpha1, alpha2) = {}", a1.max(a2)));
    }
    let one = T::one();
    if (eta == one) != (a1 == one) || (a1 == one) != (a2 == one) {
        out.push(format!("eta = {eta}, alpha1 = {a1}, alpha2 = {a2} disagree on asymptotic dependence"));
    }
    let corner = boundary.points().iter().any(|&(a, b)| a == one && b == one);
    if corner != (eta == one) {
        out.push(format!("corner (1, 1) present = {corner} but eta = {eta}"));
    }
    let pts = boundary.points();
    let lambda_half = lambda_from_boundary(&pts, T::lit(0.5));
    let expected = (T::lit(2.0) * eta).recip().min(one);
    if lambda_half != expected {
        out.push(format!("lambda(1/2) = {lambda_half} but 1/(2 eta) = {expected}"));
    }
    for (component, tau, alpha) in [(Component::First, &summary.tau1, a1), (Component::Second, &summary.tau2, a2)] {
        if !is_nondecreasing(tau) {
            out.push(format!("tau for {component:?} is not nondecreasing"));
        }
        // max{eta, sup_{δ<1} τ(δ)} = 1 wherever the grid reaches alpha
        let reaches = summary.delta_grid.iter().any(|&d| d < one && d >= alpha);
        if reaches {
            let sup = summary
                .delta_grid
                .iter()
                .zip(tau)
                .filter(|(&d, _)| d < one)
                .filter_map(|(_, t)| *t)
                .fold(T::zero(), T::max);
            if eta.max(sup) != one {
                out.push(format!("max(eta, sup tau) = {} for {component:?}", eta.max(sup)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::{rng_for, sample, CopulaSpec};
    use crate::local::BoundarySource;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn hand() -> Vec<(f64, f64)> {
        vec![(1.0, 0.25), (0.75, 0.75), (0.25, 1.0)]
    }

    #[test]
    fn geometric_hand_values() {
        let g = hand();
        assert_eq!(eta_from_boundary(&g), 0.75);
        assert_eq!(alpha_from_boundary(&g, Component::First).unwrap(), 0.25);
        assert_eq!(alpha_from_boundary(&g, Component::Second).unwrap(), 0.25);
        assert_eq!(lambda_from_boundary(&g, 0.5), 1.0 / 1.5);
        assert_eq!(lambda_from_boundary(&g, 0.0), 1.0);
        assert_eq!(tau_from_boundary(&g, 1.0, Component::First), Some(1.0));
        assert_eq!(tau_from_boundary(&g, 0.25, Component::First), Some(1.0));
        assert_eq!(tau_from_boundary(&g, 0.2, Component::First), None);
        let corner = vec![(1.0, 1.0), (0.3, 0.2)];
        assert_eq!(eta_from_boundary(&corner), 1.0);
        assert_eq!(alpha_from_boundary(&corner, Component::First).unwrap(), 1.0);
        assert!(alpha_from_boundary(&[(0.5, 0.5)], Component::First).is_err());
    }

    #[test]
    fn permutation_and_duplication_invariance() {
        let mut g = hand();
        g.reverse();
        g.push((0.75, 0.75));
        assert_eq!(eta_from_boundary(&g), 0.75);
        assert_eq!(lambda_from_boundary(&g, 0.3), lambda_from_boundary(&hand(), 0.3));
        assert_eq!(tau_from_boundary(&g, 0.5, Component::Second), tau_from_boundary(&hand(), 0.5, Component::Second));
    }

    fn pairs_sample(rows: Vec<[f64; 2]>) -> BivariateSample<f64> {
        BivariateSample::new(rows).unwrap()
    }

    #[test]
    fn hill_eta_hand_and_truncation() {
        // three largest minima exceed the fourth largest (1.0) by 0.2, 0.4, 0.6
        let rows = vec![[0.1, 0.5], [1.0, 1.0], [1.2, 3.0], [1.4, 1.4], [2.0, 1.6], [0.3, 0.2]];
        assert!((hill_eta(&pairs_sample(rows), 3).unwrap() - 0.4).abs() < 1e-12);
        let rows = vec![[0.0, 0.0], [1.3, 1.3]];
        assert_eq!(hill_eta(&pairs_sample(rows), 1).unwrap(), 1.0);
    }

    #[test]
    fn hill_eta_independence() {
        let x = sample(&CopulaSpec::<f64>::gaussian(0.0).unwrap(), 10_000, 40).unwrap();
        assert!((hill_eta(&x, 500).unwrap() - 0.5).abs() < 0.05);
    }

    fn brute_counts(x: &BivariateSample<f64>) -> Vec<usize> {
        let n = x.len();
        let rows = x.rows();
        (0..=n)
            .map(|j| {
                (0..n)
                    .filter(|&l| {
                        let g1 = (0..n).filter(|&i| rows[i][0] > rows[l][0]).count() + 1;
                        let g2 = (0..n).filter(|&i| rows[i][1] > rows[l][1]).count() + 1;
                        g1.max(g2) <= j
                    })
                    .count()
            })
            .collect()
    }

    #[test]
    fn joint_counts_match_double_loop() {
        let x = pairs_sample(vec![[0.5, 2.0], [1.5, 0.1], [3.0, 2.5], [0.2, 0.3], [2.0, 2.0]]);
        let s = joint_top_counts(&x);
        assert_eq!(s, brute_counts(&x));
        assert_eq!(s, vec![0, 1, 2, 2, 3, 5]);
        assert_eq!(peng_from_counts::<f64>(&s, 2).unwrap(), 1.0);
        assert_eq!(draisma_from_counts::<f64>(&s, 2).unwrap(), 1.0);
        let s_flat = vec![0, 0, 1, 1, 1];
        assert!(peng_from_counts::<f64>(&s_flat, 2).is_err());
        let y = sample(&CopulaSpec::<f64>::logistic(0.6).unwrap(), 60, 1).unwrap();
        assert_eq!(joint_top_counts(&y), brute_counts(&y));
        let s = joint_top_counts(&y);
        let expected = (2f64.ln() / ((s[20] as f64).ln() - (s[10] as f64).ln())).min(1.0);
        assert_eq!(peng_from_counts::<f64>(&s, 10).unwrap(), expected);
    }

    #[test]
    fn comonotone_counts() {
        let rows: Vec<[f64; 2]> = (0..40).map(|i| [i as f64 * 0.1, i as f64 * 0.1]).collect();
        let x = pairs_sample(rows);
        let s = joint_top_counts(&x);
        assert!((0..=40).all(|j| s[j] == j));
        assert_eq!(peng_eta(&x, 10).unwrap(), 1.0);
        let c: f64 = 10.0;
        let raw = (c * (c + 1.0) / 2.0) / (c * c - c * (c + 1.0) / 2.0);
        assert!((raw - (c + 1.0) / (c - 1.0)).abs() < 1e-12);
        assert_eq!(draisma_eta(&x, 10).unwrap(), raw.min(1.0));
    }

    #[test]
    fn hill_lambda_and_tau_oracles() {
        let x = sample(&CopulaSpec::<f64>::gaussian(0.0).unwrap(), 10_000, 41).unwrap();
        assert!((hill_lambda(&x, 0.5, 0.95).unwrap() - 1.0).abs() < 0.05);
        assert!((hill_tau(&x, 1.0, Component::First, 0.85).unwrap() - 1.0).abs() < 0.05);
        let spec = CopulaSpec::<f64>::logistic(0.5).unwrap();
        let y = sample(&spec, 10_000, 42).unwrap();
        let t = hill_tau(&y, 0.25, Component::First, 0.85).unwrap();
        assert!((t - spec.true_tau(0.25)).abs() < 0.12, "{t}");
        let rows = vec![[1.0, 0.5]; 5];
        assert!(hill_tau(&pairs_sample(rows), 1.0, Component::First, 0.85).is_none());
    }

    #[test]
    fn lambda_half_identity_with_hill() {
        let x = sample(&CopulaSpec::<f64>::gaussian(0.6).unwrap(), 5000, 43).unwrap();
        let mut m: Vec<f64> = x.rows().iter().map(|r| 2.0 * r[0].min(r[1])).collect();
        m.sort_by(f64::total_cmp);
        let u = quantile_sorted(&m, 0.95);
        let me = strict_mean_excess(&m, u).unwrap();
        assert_eq!(hill_lambda(&x, 0.5, 0.95).unwrap(), me.recip().min(1.0));
    }

    #[test]
    fn beta_recovers_working_model() {
        let mut rng = rng_for(44, 0);
        let rows: Vec<[f64; 2]> = (0..100_000)
            .map(|_| {
                let x = 5.0 - (1.0 - rng.random::<f64>()).ln();
                let z: f64 = StandardNormal.sample(&mut rng);
                [x, (0.5 * x + x.powf(0.3) * z).max(0.0)]
            })
            .collect();
        let s = pairs_sample(rows);
        let fit = beta_fit(&s, 0.5, 5.0, Component::First).unwrap();
        assert!((fit.beta - 0.3).abs() < 0.1, "{}", fit.beta);
        assert!(fit.mu.abs() < 0.2 && (fit.sigma - 1.0).abs() < 0.2);
    }

    #[test]
    fn beta_degenerate_and_small() {
        let rows: Vec<[f64; 2]> = (1..=200).map(|i| [i as f64, i as f64]).collect();
        let s = pairs_sample(rows);
        assert!(matches!(beta_fit(&s, 1.0, 1.0, Component::First), Err(Error::Degenerate(_))));
        assert!(matches!(beta_fit(&s, 1.0, 180.0, Component::First), Err(Error::TooFew { .. })));
    }

    #[test]
    fn beta_near_zero_for_logistic_at_high_threshold() {
        // single fits are noisy and biased upwards at moderate thresholds, so
        // check the replicate mean far in the tail
        use rayon::prelude::*;
        let betas: Vec<f64> = (0..20u64)
            .into_par_iter()
            .map(|seed| {
                let x = sample(&CopulaSpec::<f64>::logistic(0.5).unwrap(), 1_000_000, 100 + seed).unwrap();
                let mut m = x.column(0);
                sort_floats(&mut m);
                beta_fit(&x, 1.0, quantile_sorted(&m, 0.999), Component::First).unwrap().beta
            })
            .collect();
        let mean = betas.iter().sum::<f64>() / betas.len() as f64;
        assert!(mean <= 0.15, "{mean}");
    }

    #[test]
    fn consistency_on_hand_set() {
        let b = LimitSetEstimate::from_points(vec![0.8, 0.5, 0.2], vec![1.0, 0.75, 0.25], vec![0.25, 0.75, 1.0], BoundarySource::Local).unwrap();
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let s = geometric_measures(&b, &grid, &grid).unwrap();
        assert!(self_consistency_violations(&b, &s).is_empty());
        assert!(is_nondecreasing(&s.tau1));
    }
}
