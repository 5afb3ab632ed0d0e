//! Marginal standardisation to exponential scale and pseudo-polar coordinates.
//!
//! Observations are mapped to standard exponential margins with the rank and
//! probability-integral transform `x = -log{1 - rank(y)/(n+1)}`, using average
//! ranks for ties. The pseudo-polar representation is `r = x1 + x2`,
//! `w = x1 / r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Paired observations on their original scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSample<T> {
    rows: Vec<[T; 2]>,
}

impl<T: Scalar> RawSample<T> {
    pub fn new(rows: Vec<[T; 2]>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFew { needed: 2, got: rows.len() });
        }
        if let Some(row) = rows.iter().position(|r| !r[0].is_finite() || !r[1].is_finite()) {
            return Err(Error::NonFinite { row });
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[[T; 2]] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows picked by `indices`, in that order (used by the bootstrap).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self { rows: indices.iter().map(|&i| self.rows[i]).collect() }
    }
}

/// Paired observations on standard exponential margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateSample<T> {
    rows: Vec<[T; 2]>,
}

impl<T: Scalar> BivariateSample<T> {
    pub fn new(rows: Vec<[T; 2]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::TooFew { needed: 1, got: 0 });
        }
        for (row, r) in rows.iter().enumerate() {
            if !r[0].is_finite() || !r[1].is_finite() {
                return Err(Error::NonFinite { row });
            }
            if r[0] < T::zero() || r[1] < T::zero() {
                return Err(Error::InvalidInput(format!(
                    "row {row} has a negative coordinate on exponential scale"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[[T; 2]] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, i: usize) -> Vec<T> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    /// The sample with its two coordinates exchanged.
    pub fn swapped(&self) -> Self {
        Self { rows: self.rows.iter().map(|r| [r[1], r[0]]).collect() }
    }

    /// Reinterprets the sample as raw data, e.g. to re-apply the rank transform.
    pub fn to_raw(&self) -> RawSample<T> {
        RawSample { rows: self.rows.clone() }
    }

    pub fn rows_as_pairs(&self) -> Vec<(T, T)> {
        self.rows.iter().map(|r| (r[0], r[1])).collect()
    }
}

/// Radial/angular representation of a [`BivariateSample`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarSample<T> {
    pub r: Vec<T>,
    pub w: Vec<T>,
}

impl<T: Scalar> PolarSample<T> {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Observed angular range `[w^m, w^M]`.
    pub fn angle_range(&self) -> (T, T) {
        self.w.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &w| {
            (lo.min(w), hi.max(w))
        })
    }
}

/// Average ranks (1-based) of `values`.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![T::zero(); n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their mean rank
        let avg = T::count(start + 1 + end) / T::lit(2.0);
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

/// Rank transform each margin onto the standard exponential scale.
pub fn to_exponential_margins<T: Scalar>(raw: &RawSample<T>) -> BivariateSample<T> {
    let n = raw.len();
    let denom = T::count(n + 1);
    let mut rows = vec![[T::zero(); 2]; n];
    for margin in 0..2 {
        let values: Vec<T> = raw.rows.iter().map(|r| r[margin]).collect();
        for (row, rank) in rows.iter_mut().zip(average_ranks(&values)) {
            row[margin] = -(-rank / denom).ln_1p();
        }
    }
    BivariateSample { rows }
}

pub fn to_polar<T: Scalar>(sample: &BivariateSample<T>) -> Result<PolarSample<T>> {
    let n = sample.len();
    let mut r = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for (row, x) in sample.rows.iter().enumerate() {
        let radius = x[0] + x[1];
        if radius <= T::zero() {
            return Err(Error::AtOrigin { row });
        }
        r.push(radius);
        w.push(x[0] / radius);
    }
    Ok(PolarSample { r, w })
}

#[inline]
pub fn from_polar<T: Scalar>(r: T, w: T) -> (T, T) {
    (r * w, r * (T::one() - w))
}
