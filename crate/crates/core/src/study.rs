//! Replicated simulation studies comparing the boundary-based estimators with
//! the threshold-based baselines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{rng_for, sample_with, true_measures, CopulaSpec};
use crate::error::{Error, Result};
use crate::measures::{baselines, is_nondecreasing, self_consistency_violations, summarize, BaselineConfig, BaselineSummary, DependenceSummary};
use crate::smooth::{estimate, SmoothConfig};
use crate::stats::{mean, quantile_sorted, sort_floats};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(default)]
pub struct StudyConfig<T> {
    pub models: Vec<CopulaSpec<T>>,
    pub replicates: usize,
    pub n: usize,
    pub fit: SmoothConfig<T>,
    /// Knot counts to compare; each reuses the same simulated samples.
    pub kappas: Vec<usize>,
    pub omega_grid: Vec<T>,
    pub delta_grid: Vec<T>,
    pub beta_level: T,
    pub baselines: BaselineConfig<T>,
    pub include_baselines: bool,
    pub seed: u64,
}

/// `start, start + step, …` up to `end` inclusive (within rounding).
pub fn grid<T: Scalar>(start: T, end: T, step: T) -> Result<Vec<T>> {
    if !(step > T::zero()) || !(end >= start) {
        return Err(Error::InvalidInput(format!("invalid grid {start}:{end}:{step}")));
    }
    let count = ((end - start) / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    Ok((0..=count).map(|i| start + step * T::count(i)).map(|v| v.min(end)).collect())
}

impl<T: Scalar> Default for StudyConfig<T> {
    fn default() -> Self {
        let inner = grid(T::lit(0.01), T::lit(0.99), T::lit(0.01)).unwrap_or_default();
        Self {
            models: Vec::new(),
            replicates: 100,
            n: 10_000,
            fit: SmoothConfig::default(),
            kappas: vec![7],
            omega_grid: inner.clone(),
            delta_grid: inner,
            beta_level: T::lit(0.9),
            baselines: BaselineConfig::default(),
            include_baselines: true,
            seed: 1,
        }
    }
}

/// Everything recorded for one successful replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord<T> {
    pub summary: DependenceSummary<T>,
    pub baselines: Option<BaselineSummary<T>>,
    pub chosen_degree: usize,
    pub eta_h: T,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResults<T> {
    pub model: CopulaSpec<T>,
    pub kappa: usize,
    pub truth: DependenceSummary<T>,
    pub replicates: Vec<std::result::Result<ReplicateRecord<T>, String>>,
}

impl<T: Scalar> CellResults<T> {
    pub fn successes(&self) -> impl Iterator<Item = &ReplicateRecord<T>> {
        self.replicates.iter().filter_map(|r| r.as_ref().ok())
    }

    pub fn failures(&self) -> usize {
        self.replicates.iter().filter(|r| r.is_err()).count()
    }

    /// Counts of the chosen spline degree, indexed by degree − 1.
    pub fn degree_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for r in self.successes() {
            if (1..=3).contains(&r.chosen_degree) {
                c[r.chosen_degree - 1] += 1;
            }
        }
        c
    }

    /// Fractions of replicates whose first-component `τ` curve never
    /// decreases, for the boundary estimator and the Hill-type baseline. The
    /// baseline is judged over the `δ` values where the boundary estimate
    /// exists.
    pub fn tau_monotone_rates(&self) -> (T, Option<T>) {
        let ok: Vec<&ReplicateRecord<T>> = self.successes().collect();
        if ok.is_empty() {
            return (T::nan(), None);
        }
        let g = ok.iter().filter(|r| is_nondecreasing(&r.summary.tau1)).count();
        let h: Vec<bool> = ok
            .iter()
            .filter_map(|r| {
                r.baselines.as_ref().map(|b| {
                    let common: Vec<Option<T>> =
                        r.summary.tau1.iter().zip(&b.tau1_hill).map(|(g, h)| g.and(*h)).collect();
                    is_nondecreasing(&common)
                })
            })
            .collect();
        let h_rate = (!h.is_empty()).then(|| T::count(h.iter().filter(|&&m| m).count()) / T::count(h.len()));
        (T::count(g) / T::count(ok.len()), h_rate)
    }

    pub fn violation_count(&self) -> usize {
        self.successes().map(|r| r.violations.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StudyResults<T> {
    pub config: StudyConfig<T>,
    pub cells: Vec<CellResults<T>>,
}

fn run_replicate<T: Scalar>(config: &StudyConfig<T>, spec: &CopulaSpec<T>, kappa: usize, model_index: usize, replicate: usize) -> Result<ReplicateRecord<T>> {
    let stream = ((model_index as u64) << 32) | replicate as u64;
    let mut rng = rng_for(config.seed, stream);
    let x = sample_with(spec, config.n, &mut rng)?;
    let fit_config = SmoothConfig { kappa, ..config.fit.clone() };
    let fit = estimate(&x, &fit_config)?;
    let summary = summarize(&fit.boundary, &x, &config.omega_grid, &config.delta_grid, config.beta_level)?;
    let mut violations = self_consistency_violations(&fit.boundary, &summary);
    let local_summary = crate::measures::geometric_measures(&fit.local, &config.omega_grid, &config.delta_grid)?;
    violations.extend(self_consistency_violations(&fit.local, &local_summary).into_iter().map(|v| format!("local: {v}")));
    let baseline = config.include_baselines.then(|| baselines(&x, &config.omega_grid, &config.delta_grid, &config.baselines));
    Ok(ReplicateRecord { summary, baselines: baseline, chosen_degree: fit.chosen_degree, eta_h: fit.eta_h, violations })
}

/// Runs every (model, κ) cell. Replicate `b` of model `i` always sees the
/// same simulated sample regardless of thread count or κ.
pub fn run_study<T: Scalar>(config: &StudyConfig<T>) -> Result<StudyResults<T>> {
    config.fit.validate()?;
    if config.kappas.is_empty() {
        return Err(Error::InvalidInput("at least one kappa value is required".into()));
    }
    let mut cells = Vec::new();
    for (i, spec) in config.models.iter().enumerate() {
        let spec = spec.validated()?;
        for &kappa in &config.kappas {
            let replicates = (0..config.replicates)
                .into_par_iter()
                .map(|b| run_replicate(config, &spec, kappa, i, b).map_err(|e| e.to_string()))
                .collect();
            cells.push(CellResults {
                truth: true_measures(&spec, &config.omega_grid, &config.delta_grid),
                model: spec,
                kappa,
                replicates,
            });
        }
    }
    Ok(StudyResults { config: config.clone(), cells })
}

/// One row of the error table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow<T> {
    pub model: String,
    pub kappa: usize,
    pub estimator: String,
    pub measure: String,
    pub grid_value: Option<T>,
    pub truth: Option<T>,
    pub estimates: usize,
    pub failures: usize,
    pub mean: Option<T>,
    pub bias: Option<T>,
    pub rmse: Option<T>,
    pub q025: Option<T>,
    pub q975: Option<T>,
}

fn row<T: Scalar>(cell: &CellResults<T>, estimator: &str, measure: &str, grid_value: Option<T>, truth: Option<T>, values: Vec<T>) -> TableRow<T> {
    let total = cell.replicates.len();
    let estimates = values.len();
    let (mean_v, bias, rmse, q025, q975) = if values.is_empty() {
        (None, None, None, None, None)
    } else {
        let m = mean(&values);
        let mut sorted = values.clone();
        sort_floats(&mut sorted);
        let bias = truth.map(|t| m - t);
        let rmse = truth.map(|t| (values.iter().map(|&v| (v - t) * (v - t)).sum::<T>() / T::count(values.len())).sqrt());
        (Some(m), bias, rmse, Some(quantile_sorted(&sorted, T::lit(0.025))), Some(quantile_sorted(&sorted, T::lit(0.975))))
    };
    TableRow {
        model: cell.model.label(),
        kappa: cell.kappa,
        estimator: estimator.to_string(),
        measure: measure.to_string(),
        grid_value,
        truth,
        estimates,
        failures: total - estimates,
        mean: mean_v,
        bias,
        rmse,
        q025,
        q975,
    }
}

impl<T: Scalar> StudyResults<T> {
    /// Bias, RMSE and 95% bands per (model, κ, estimator, measure, grid value).
    /// Cells with no estimates still get a row carrying the failure count.
    pub fn table(&self) -> Vec<TableRow<T>> {
        let mut rows = Vec::new();
        for cell in &self.cells {
            let ok: Vec<&ReplicateRecord<T>> = cell.successes().collect();
            let t = &cell.truth;
            let g = |f: &dyn Fn(&DependenceSummary<T>) -> Option<T>| ok.iter().filter_map(|r| f(&r.summary)).collect::<Vec<T>>();
            let b = |f: &dyn Fn(&BaselineSummary<T>) -> Option<T>| ok.iter().filter_map(|r| r.baselines.as_ref().and_then(f)).collect::<Vec<T>>();
            rows.push(row(cell, "G", "eta", None, Some(t.eta), g(&|s| Some(s.eta))));
            rows.push(row(cell, "G", "alpha1", None, Some(t.alpha1), g(&|s| Some(s.alpha1))));
            rows.push(row(cell, "G", "alpha2", None, Some(t.alpha2), g(&|s| Some(s.alpha2))));
            rows.push(row(cell, "G", "beta1", None, t.beta1, g(&|s| s.beta1)));
            rows.push(row(cell, "G", "beta2", None, t.beta2, g(&|s| s.beta2)));
            if self.config.include_baselines {
                rows.push(row(cell, "H", "eta", None, Some(t.eta), b(&|s| s.eta_hill)));
                rows.push(row(cell, "P", "eta", None, Some(t.eta), b(&|s| s.eta_peng)));
                rows.push(row(cell, "D", "eta", None, Some(t.eta), b(&|s| s.eta_draisma)));
            }
            for (j, &w) in t.omega_grid.iter().enumerate() {
                rows.push(row(cell, "G", "lambda", Some(w), Some(t.lambda[j]), g(&|s| s.lambda.get(j).copied())));
                if self.config.include_baselines {
                    rows.push(row(cell, "H", "lambda", Some(w), Some(t.lambda[j]), b(&|s| s.lambda_hill.get(j).copied().flatten())));
                }
            }
            for (j, &d) in t.delta_grid.iter().enumerate() {
                rows.push(row(cell, "G", "tau1", Some(d), t.tau1[j], g(&|s| s.tau1.get(j).copied().flatten())));
                rows.push(row(cell, "G", "tau2", Some(d), t.tau2[j], g(&|s| s.tau2.get(j).copied().flatten())));
                if self.config.include_baselines {
                    rows.push(row(cell, "H", "tau1", Some(d), t.tau1[j], b(&|s| s.tau1_hill.get(j).copied().flatten())));
                    rows.push(row(cell, "H", "tau2", Some(d), t.tau2[j], b(&|s| s.tau2_hill.get(j).copied().flatten())));
                }
            }
        }
        rows
    }

    /// Per-cell summary: degree counts, monotonicity rates, failures and
    /// self-consistency violations.
    pub fn cell_summaries(&self) -> Vec<CellSummary<T>> {
        self.cells
            .iter()
            .map(|c| {
                let (g, h) = c.tau_monotone_rates();
                CellSummary {
                    model: c.model.label(),
                    kappa: c.kappa,
                    replicates: c.replicates.len(),
                    failures: c.failures(),
                    degree_counts: c.degree_counts(),
                    tau1_monotone_g: g,
                    tau1_monotone_h: h,
                    violations: c.violation_count(),
                    failure_messages: c.replicates.iter().filter_map(|r| r.as_ref().err().cloned()).collect(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary<T> {
    pub model: String,
    pub kappa: usize,
    pub replicates: usize,
    pub failures: usize,
    pub degree_counts: [usize; 3],
    pub tau1_monotone_g: T,
    pub tau1_monotone_h: Option<T>,
    pub violations: usize,
    pub failure_messages: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        let g = grid(0.0, 1.0, 0.25).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(grid(0.01, 0.99, 0.01).unwrap().len(), 99);
        assert!(grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn small_study_is_deterministic() {
        let config = StudyConfig {
            models: vec![CopulaSpec::<f64>::logistic(0.5).unwrap()],
            replicates: 3,
            n: 3000,
            fit: SmoothConfig { local: crate::local::LocalConfig { k: 51, ..Default::default() }, ..Default::default() },
            ..StudyConfig::default()
        };
        let a = run_study(&config).unwrap();
        let b = run_study(&config).unwrap();
        assert_eq!(a, b);
        let rows = a.table();
        assert!(rows.iter().any(|r| r.estimator == "H" && r.measure == "eta"));
        assert_eq!(a.cell_summaries()[0].violations, 0);
    }

    #[test]
    fn zero_replicates_give_empty_rows() {
        let config: StudyConfig<f64> = StudyConfig { models: vec![CopulaSpec::<f64>::gaussian(0.5).unwrap()], replicates: 0, ..StudyConfig::default() };
        let res = run_study(&config).unwrap();
        assert!(res.table().iter().all(|r| r.estimates == 0 && r.mean.is_none()));
    }
}
