//! Small empirical-statistics helpers.

use crate::Scalar;

/// Empirical quantile with linear interpolation between order statistics
/// (the `type = 7` rule). `sorted` must be ascending and non-empty.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], p: T) -> T {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = T::count(n - 1) * p.max(T::zero()).min(T::one());
    let lo = h.floor();
    let lo_idx = lo.to_usize().unwrap_or(0).min(n - 1);
    let hi_idx = (lo_idx + 1).min(n - 1);
    let frac = h - lo;
    sorted[lo_idx] + frac * (sorted[hi_idx] - sorted[lo_idx])
}

/// Empirical quantile of an unsorted slice.
pub fn quantile<T: Scalar>(values: &[T], p: T) -> T {
    let mut sorted = values.to_vec();
    sort_floats(&mut sorted);
    quantile_sorted(&sorted, p)
}

pub fn sort_floats<T: Scalar>(values: &mut [T]) {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
}

pub fn mean<T: Scalar>(values: &[T]) -> T {
    values.iter().copied().sum::<T>() / T::count(values.len())
}

/// Mean excess of `values` strictly above `threshold`, with the number of excesses.
pub fn mean_excess<T: Scalar>(values: &[T], threshold: T) -> (T, usize) {
    let (sum, count) = values
        .iter()
        .filter(|&&v| v > threshold)
        .fold((T::zero(), 0usize), |(s, c), &v| (s + (v - threshold), c + 1));
    if count == 0 {
        (T::nan(), 0)
    } else {
        (sum / T::count(count), count)
    }
}
