//! Smoothed boundary estimates from spline threshold and GPD regressions,
//! and selection of the spline degree against the local estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local::{back_transform, estimate_local_polar, scale_truncate, select_angles, AngleGrid, BoundarySource, LimitSetEstimate, LocalConfig, LocalQuantiles};
use crate::margins::{to_polar, BivariateSample, PolarSample};
use crate::measures::hill_eta;
use crate::splines::{build_basis, fit_gpd_gam, fit_threshold_quantile, predict_radial_quantile, SplineSurface};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(default)]
pub struct SmoothConfig<T> {
    #[serde(flatten)]
    pub local: LocalConfig<T>,
    /// Number of spline knots.
    pub kappa: usize,
    pub degrees: Vec<usize>,
}

impl<T: Scalar> Default for SmoothConfig<T> {
    fn default() -> Self {
        Self { local: LocalConfig::default(), kappa: 7, degrees: vec![1, 2, 3] }
    }
}

impl<T: Scalar> SmoothConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.local.validate()?;
        if self.degrees.is_empty() || self.degrees.iter().any(|d| !(1..=3).contains(d)) {
            return Err(Error::InvalidInput(format!("spline degrees must be drawn from 1, 2, 3, got {:?}", self.degrees)));
        }
        if self.kappa < 3 {
            return Err(Error::InvalidInput(format!("kappa must be at least 3, got {}", self.kappa)));
        }
        Ok(())
    }
}

/// One smoothed candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeFit<T> {
    pub degree: usize,
    pub boundary: LimitSetEstimate<T>,
    pub surface: SplineSurface<T>,
    pub radial_quantiles: Vec<T>,
}

/// Smoothed boundary for one spline degree, evaluated on the local grid and
/// scaled with the same anchor.
pub fn estimate_smooth_polar<T: Scalar>(
    polar: &PolarSample<T>,
    grid: &AngleGrid<T>,
    config: &SmoothConfig<T>,
    degree: usize,
    eta_h: T,
) -> Result<DegreeFit<T>> {
    let (w_min, w_max) = polar.angle_range();
    let basis = build_basis(degree, config.kappa, w_min, w_max)?;
    let curve = fit_threshold_quantile(polar, &basis, config.local.q_u)?;
    let surface = fit_gpd_gam(polar, &curve)?;
    let angles: Vec<T> = grid.angles.iter().copied().filter(|&w| w >= w_min && w <= w_max).collect();
    let radial_quantiles = angles
        .iter()
        .map(|&w| predict_radial_quantile(&surface, w, config.local.q))
        .collect::<Result<Vec<T>>>()?;
    let tilde = back_transform(&angles, &radial_quantiles);
    let boundary = scale_truncate(&angles, &tilde, eta_h, BoundarySource::Smooth(degree))?;
    Ok(DegreeFit { degree, boundary, surface, radial_quantiles })
}

pub fn estimate_smooth_degree<T: Scalar>(sample: &BivariateSample<T>, config: &SmoothConfig<T>, degree: usize) -> Result<DegreeFit<T>> {
    config.validate()?;
    let polar = to_polar(sample)?;
    let grid = select_angles(&polar, config.local.k)?;
    let eta_h = hill_eta(sample, config.local.eta_exceedances)?;
    estimate_smooth_polar(&polar, &grid, config, degree, eta_h)
}

/// `Σ_j |local_j − smooth_j|`.
pub fn absolute_error<T: Scalar>(local: &LocalQuantiles<T>, candidate: &DegreeFit<T>) -> Result<T> {
    if local.fits.len() != candidate.radial_quantiles.len()
        || local.fits.iter().zip(&candidate.boundary.w).any(|(f, &w)| f.w != w)
    {
        return Err(Error::InvalidInput("candidate and local estimates use different angle grids".into()));
    }
    Ok(local.fits.iter().zip(&candidate.radial_quantiles).map(|(f, &r)| (f.radial_quantile - r).abs()).sum())
}

/// Index of the candidate closest to the local radial quantiles; ties go to
/// the lower degree.
pub fn select_degree<T: Scalar>(local: &LocalQuantiles<T>, candidates: &[DegreeFit<T>]) -> Result<(usize, Vec<T>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no smoothed candidates to choose from".into()));
    }
    let scores = candidates.iter().map(|c| absolute_error(local, c)).collect::<Result<Vec<T>>>()?;
    let mut best = 0;
    for i in 1..candidates.len() {
        let better = scores[i] < scores[best] || (scores[i] == scores[best] && candidates[i].degree < candidates[best].degree);
        if better {
            best = i;
        }
    }
    Ok((best, scores))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeScore<T> {
    pub degree: usize,
    /// Sum of absolute differences to the local radial quantiles; `None` if the fit failed.
    pub score: Option<T>,
    pub error: Option<String>,
}

/// End-to-end estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitResult<T> {
    pub boundary: LimitSetEstimate<T>,
    pub local: LimitSetEstimate<T>,
    pub local_quantiles: LocalQuantiles<T>,
    pub chosen_degree: usize,
    pub scores: Vec<DegreeScore<T>>,
    pub candidates: Vec<DegreeFit<T>>,
    pub eta_h: T,
    pub config: SmoothConfig<T>,
}

impl<T: Scalar> FitResult<T> {
    pub fn chosen(&self) -> &DegreeFit<T> {
        self.candidates
            .iter()
            .find(|c| c.degree == self.chosen_degree)
            .unwrap_or(&self.candidates[0])
    }
}

/// Local stage, the smoothed candidates for each configured degree and the
/// final selection. Candidates that fail to fit are reported and skipped.
pub fn estimate<T: Scalar>(sample: &BivariateSample<T>, config: &SmoothConfig<T>) -> Result<FitResult<T>> {
    config.validate()?;
    let polar = to_polar(sample)?;
    let eta_h = hill_eta(sample, config.local.eta_exceedances)?;
    let local = estimate_local_polar(&polar, &config.local, eta_h)?;
    let grid = AngleGrid { angles: local.boundary.w.clone() };
    let attempts: Vec<(usize, Result<DegreeFit<T>>)> = config
        .degrees
        .par_iter()
        .map(|&d| (d, estimate_smooth_polar(&polar, &grid, config, d, eta_h)))
        .collect();
    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    let mut first_error = None;
    for (d, attempt) in attempts {
        match attempt {
            Ok(fit) => candidates.push(fit),
            Err(e) => {
                failures.push(DegreeScore { degree: d, score: None, error: Some(e.to_string()) });
                first_error.get_or_insert(e);
            }
        }
    }
    if candidates.is_empty() {
        return Err(first_error.unwrap_or_else(|| Error::InvalidInput("no spline degrees configured".into())));
    }
    let (best, values) = select_degree(&local.quantiles, &candidates)?;
    let mut scores: Vec<DegreeScore<T>> = candidates
        .iter()
        .zip(values)
        .map(|(c, s)| DegreeScore { degree: c.degree, score: Some(s), error: None })
        .chain(failures)
        .collect();
    scores.sort_by_key(|s| s.degree);
    Ok(FitResult {
        boundary: candidates[best].boundary.clone(),
        local: local.boundary,
        local_quantiles: local.quantiles,
        chosen_degree: candidates[best].degree,
        scores,
        candidates,
        eta_h,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::{sample, CopulaSpec};
    use crate::local::LocalFit;

    fn fake_candidate(degree: usize, w: &[f64], r: &[f64]) -> DegreeFit<f64> {
        let basis = build_basis(1, 3, 0.0, 1.0).unwrap();
        let threshold = crate::splines::ThresholdCurve { basis, coefficients: vec![0.0; 3], level: 0.5 };
        let surface = SplineSurface {
            threshold,
            log_scale_coef: vec![0.0; 3],
            shape: 0.0,
            w_min: 0.0,
            w_max: 1.0,
            log_likelihood: 0.0,
            n_exceedances: 0,
            covariance: vec![0.0; 16],
        };
        let boundary = LimitSetEstimate::from_points(w.to_vec(), vec![1.0, 0.5, 0.1], vec![0.1, 0.5, 1.0], BoundarySource::Smooth(degree)).unwrap();
        DegreeFit { degree, boundary, surface, radial_quantiles: r.to_vec() }
    }

    fn fake_local(w: &[f64], r: &[f64]) -> LocalQuantiles<f64> {
        let fits = w
            .iter()
            .zip(r)
            .map(|(&w, &r)| LocalFit { w, epsilon: 0.1, m: 10, threshold: 1.0, scale: 1.0, shape: 0.0, radial_quantile: r })
            .collect();
        LocalQuantiles { fits, q_u: 0.5, q: 0.999 }
    }

    #[test]
    fn selection_rule() {
        let w = [0.2, 0.5, 0.8];
        let local = fake_local(&w, &[5.0, 6.0, 7.0]);
        let exact = fake_candidate(3, &w, &[5.0, 6.0, 7.0]);
        let off = fake_candidate(1, &w, &[5.5, 6.0, 7.0]);
        let (best, scores) = select_degree(&local, &[off.clone(), exact.clone()]).unwrap();
        assert_eq!(best, 1);
        assert_eq!(scores, vec![0.5, 0.0]);
        // ties go to the lower degree
        let tie_a = fake_candidate(2, &w, &[5.5, 6.0, 7.0]);
        let tie_b = fake_candidate(1, &w, &[5.0, 6.5, 7.0]);
        let (best, _) = select_degree(&local, &[tie_a, tie_b.clone()]).unwrap();
        assert_eq!(best, 1);
        let other = fake_local(&[0.1, 0.5, 0.8], &[5.0, 6.0, 7.0]);
        assert!(select_degree(&other, &[tie_b]).is_err());
    }

    #[test]
    fn end_to_end_logistic() {
        let x = sample(&CopulaSpec::<f64>::logistic(0.5).unwrap(), 10_000, 50).unwrap();
        let fit = estimate(&x, &SmoothConfig::default()).unwrap();
        fit.boundary.check().unwrap();
        fit.local.check().unwrap();
        assert_eq!(fit.scores.len(), 3);
        assert!(fit.boundary.w.contains(&0.5));
        let chosen = fit.scores.iter().find(|s| s.degree == fit.chosen_degree).unwrap().score.unwrap();
        assert!(fit.scores.iter().all(|s| s.score.is_none_or(|v| chosen <= v)));
        // the logistic boundary passes near the corner (1, 1)
        let eta = crate::measures::eta_from_boundary(&fit.boundary.points());
        assert!(eta > 0.85, "{eta}");
    }

    #[test]
    fn degree_one_curve_is_piecewise_linear() {
        let x = sample(&CopulaSpec::<f64>::gaussian(0.5).unwrap(), 5000, 51).unwrap();
        let fit = estimate_smooth_degree(&x, &SmoothConfig::default(), 1).unwrap();
        let s = &fit.surface;
        let knots = s.threshold.basis.breakpoints().to_vec();
        // midpoint of a knot interval equals the average of its ends
        for win in knots.windows(2) {
            let mid = 0.5 * (win[0] + win[1]);
            let avg = 0.5 * (s.log_scale_at(win[0]) + s.log_scale_at(win[1]));
            assert!((s.log_scale_at(mid) - avg).abs() < 1e-10);
        }
    }
}
