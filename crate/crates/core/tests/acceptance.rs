//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use limitset::copulas::{rng_for, sample, true_boundary, CopulaSpec};
use limitset::gpd::fit_gpd_mle;
use limitset::local::{scale_truncate, BoundarySource};
use limitset::margins::to_polar;
use limitset::measures::geometric_measures;
use limitset::resample::{block_length, stationary_bootstrap_indices, BootstrapPlan};
use limitset::splines::{build_basis, fit_threshold_quantile};
use limitset::study::{grid, run_study, CellResults, StudyConfig, StudyResults};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// Closed forms written out independently of the library.
fn lambda_closed(spec: &CopulaSpec<f64>, w: f64) -> f64 {
    let hi = w.max(1.0 - w);
    match *spec {
        CopulaSpec::Gaussian { rho } => {
            let t = w.min(1.0 - w) / hi;
            if t >= rho * rho {
                (1.0 - 2.0 * rho * (w * (1.0 - w)).sqrt()) / (1.0 - rho * rho)
            } else {
                hi
            }
        }
        CopulaSpec::InvertedLogistic { gamma } => (w.powf(1.0 / gamma) + (1.0 - w).powf(1.0 / gamma)).powf(gamma),
        _ => hi,
    }
}

fn tau_closed(spec: &CopulaSpec<f64>, d: f64) -> f64 {
    match *spec {
        CopulaSpec::Gaussian { rho } if d < rho * rho => (1.0 - rho * rho) / (1.0 + d - 2.0 * rho * d.sqrt()),
        CopulaSpec::Logistic { gamma } => gamma / (1.0 + gamma * d - d),
        _ => 1.0,
    }
}

fn eta_closed(spec: &CopulaSpec<f64>) -> f64 {
    match *spec {
        CopulaSpec::Gaussian { rho } => (1.0 + rho) / 2.0,
        CopulaSpec::InvertedLogistic { gamma } => 2f64.powf(-gamma),
        _ => 1.0,
    }
}

fn alpha_closed(spec: &CopulaSpec<f64>) -> f64 {
    match *spec {
        CopulaSpec::Gaussian { rho } => rho * rho,
        CopulaSpec::InvertedLogistic { .. } => 0.0,
        _ => 1.0,
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut models = Vec::new();
    for p in [0.25, 0.5, 0.75] {
        models.push(CopulaSpec::gaussian(p).unwrap());
        models.push(CopulaSpec::logistic(p).unwrap());
        models.push(CopulaSpec::inverted_logistic(p).unwrap());
    }
    models.push(CopulaSpec::asymmetric_logistic(0.5, 0.5, 0.5).unwrap());
    let grid99 = grid(0.01, 0.99, 0.01).unwrap();
    assert_eq!(grid99.len(), 99);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for spec in &models {
        let g = true_boundary(spec, 10_000).unwrap().to_limit_set();
        let s = geometric_measures(&g, &grid99, &grid99).unwrap();
        let mut err = |what: String, got: f64, want: f64, tol: f64| {
            let e = (got - want).abs();
            worst = worst.max(e);
            if !(e <= tol) {
                failures.push(format!("{} {what}: {got} vs {want}", spec.label()));
            }
        };
        err("eta".into(), s.eta, eta_closed(spec), 1e-3);
        err("alpha1".into(), s.alpha1, alpha_closed(spec), 1e-3);
        for (j, &w) in grid99.iter().enumerate() {
            let near_switch = match *spec {
                CopulaSpec::Gaussian { rho } => (w.min(1.0 - w) / w.max(1.0 - w) - rho * rho).abs() < 0.05,
                _ => false,
            };
            err(format!("lambda({w})"), s.lambda[j], lambda_closed(spec, w), if near_switch { 1e-2 } else { 1e-3 });
        }
        for (j, &d) in grid99.iter().enumerate() {
            // an inestimable point counts as a miss
            err(format!("tau1({d})"), s.tau1[j].unwrap_or(f64::NAN), tau_closed(spec, d), 1e-3);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("{} models, max abs error {worst:.2e}, {secs:.2}s", models.len());
    if !failures.is_empty() {
        return Err(format!("{detail}; {}", failures.join("; ")));
    }
    ensure(secs < 10.0, detail)
}

const LOGISTIC_075: usize = 0;
const LOGISTIC_05: usize = 1;
const GAUSSIAN_05: usize = 2;
const INVLOG_05: usize = 3;

fn study() -> &'static StudyResults<f64> {
    static STUDY: OnceLock<StudyResults<f64>> = OnceLock::new();
    STUDY.get_or_init(|| {
        let config = StudyConfig {
            models: vec![
                CopulaSpec::logistic(0.75).unwrap(),
                CopulaSpec::logistic(0.5).unwrap(),
                CopulaSpec::gaussian(0.5).unwrap(),
                CopulaSpec::inverted_logistic(0.5).unwrap(),
            ],
            replicates: 100,
            n: 10_000,
            ..StudyConfig::default()
        };
        let start = Instant::now();
        let results = run_study(&config).expect("study runs");
        println!("study: 4 models x 100 replicates at n = 10000 in {:.1}s", start.elapsed().as_secs_f64());
        results
    })
}

fn cell(i: usize) -> &'static CellResults<f64> {
    &study().cells[i]
}

fn rmse(values: &[f64], truth: f64) -> f64 {
    (values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

fn criterion_2() -> Check {
    let c = cell(LOGISTIC_075);
    let g: Vec<f64> = c.successes().map(|r| r.summary.eta).collect();
    let h: Vec<f64> = c.successes().filter_map(|r| r.baselines.as_ref()?.eta_hill).collect();
    let (rg, rh) = (rmse(&g, 1.0), rmse(&h, 1.0));
    ensure(
        g.len() == 100 && rg <= 0.07 && rg < rh,
        format!("RMSE eta_G {rg:.4} (<= 0.07), RMSE eta_H {rh:.4}, {} fits, {} failures", g.len(), c.failures()),
    )
}

fn criterion_3() -> Check {
    let c = cell(INVLOG_05);
    let g: Vec<f64> = c.successes().map(|r| r.summary.eta).collect();
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let bias = mean - 0.5f64.sqrt();
    ensure(
        g.len() == 100 && bias.abs() <= 0.03,
        format!("mean eta_G {mean:.4}, bias {bias:+.4} (|bias| <= 0.03), {} fits", g.len()),
    )
}

fn criterion_4() -> Check {
    let lg = cell(LOGISTIC_05).degree_counts();
    let ga = cell(GAUSSIAN_05).degree_counts();
    let nonlinear = ga[1] + ga[2];
    ensure(
        lg[0] >= 60 && nonlinear >= 45,
        format!("logistic degrees {lg:?} (linear >= 60), gaussian degrees {ga:?} (nonlinear {nonlinear} >= 45)"),
    )
}

fn criterion_5() -> Check {
    let c = cell(LOGISTIC_05);
    let d = &study().config.delta_grid;
    let step_ok = d.windows(2).all(|p| (p[1] - p[0] - 0.01).abs() < 1e-9);
    let (g, h) = c.tau_monotone_rates();
    let h = h.unwrap_or(f64::NAN);
    ensure(
        step_ok && c.successes().count() == 100 && g == 1.0 && h < 0.5,
        format!("tau1_G nondecreasing in {:.0}% of replicates, tau1_H in {:.0}%", 100.0 * g, 100.0 * h),
    )
}

/// Checks the identities from each recorded summary directly, on top of the
/// violations logged during the study.
fn criterion_6() -> Check {
    let mut fits = 0;
    let mut problems = Vec::new();
    for c in &study().cells {
        let half = c.truth.omega_grid.iter().position(|&w| w == 0.5).expect("grid holds 1/2");
        for r in c.successes() {
            fits += 1;
            let s = &r.summary;
            let label = c.model.label();
            if s.eta < s.alpha1.max(s.alpha2) {
                problems.push(format!("{label}: eta < max alpha"));
            }
            if (s.eta == 1.0) != (s.alpha1 == 1.0) || (s.alpha1 == 1.0) != (s.alpha2 == 1.0) {
                problems.push(format!("{label}: eta/alpha unit equivalence"));
            }
            if (s.lambda[half] - (1.0 / (2.0 * s.eta)).min(1.0)).abs() > 1e-12 {
                problems.push(format!("{label}: lambda(1/2) = {} with eta {}", s.lambda[half], s.eta));
            }
            for (tau, alpha) in [(&s.tau1, s.alpha1), (&s.tau2, s.alpha2)] {
                let covered = s.delta_grid.iter().any(|&d| d < 1.0 && d >= alpha);
                let sup = s.delta_grid.iter().zip(tau).filter(|(&d, _)| d < 1.0).filter_map(|(_, t)| *t).fold(0.0, f64::max);
                if covered && s.eta.max(sup) != 1.0 {
                    problems.push(format!("{label}: max(eta, sup tau) = {}", s.eta.max(sup)));
                }
            }
            problems.extend(r.violations.iter().map(|v| format!("{label}: {v}")));
        }
    }
    let detail = format!("{fits} fits, {} violations", problems.len());
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}: {}", problems.iter().take(5).cloned().collect::<Vec<_>>().join("; ")))
    }
}

fn trace(tilde: &[(f64, f64)], eta: f64) -> limitset::LimitSetEstimate {
    let w: Vec<f64> = tilde.iter().map(|&(a, b)| a / (a + b)).collect();
    scale_truncate(&w, tilde, eta, BoundarySource::Local).unwrap()
}

fn criterion_7() -> Check {
    let a = trace(&[(2.0, 0.5), (1.5, 1.5), (0.5, 2.0)], 0.75);
    let ok_a = a.scaling_factor == 0.5 && a.points() == vec![(1.0, 0.25), (0.75, 0.75), (0.25, 1.0)];

    let fixed = [(1.0, 0.25), (0.75, 0.75), (0.25, 1.0)];
    let ok_b = trace(&fixed, 0.75).points() == fixed.to_vec();

    // x* = 0.5/2.4, then each coordinate divided by its maximum 3x*
    let c = trace(&[(3.0, 0.3), (2.4, 2.4), (0.3, 3.0)], 0.5);
    let f = 0.5 / 2.4;
    let (hi, mid, lo) = (3.0 * f, 2.4 * f, 0.3 * f);
    let ok_c = c.scaling_factor == f
        && c.points() == vec![(1.0, lo / hi), (mid / hi, mid / hi), (lo / hi, 1.0)]
        && c.points().iter().zip([(1.0, 0.1), (0.8, 0.8), (0.1, 1.0)]).all(|(p, q)| (p.0 - q.0).abs() < 1e-15 && (p.1 - q.1).abs() < 1e-15);
    let eta_c = c.points().iter().map(|p| p.0.min(p.1)).fold(0.0, f64::max);
    ensure(
        ok_a && ok_b && ok_c,
        format!("trace 1 {ok_a}, fixed point {ok_b}, trace 3 {ok_c} (induced eta {eta_c})"),
    )
}

fn criterion_8() -> Check {
    let mut rng = rng_for(2024, 8);
    let excesses: Vec<f64> = (0..100_000).map(|_| Exp1.sample(&mut rng)).collect();
    let mle = fit_gpd_mle(&excesses, 10).map_err(|e| e.to_string())?;
    let ok_xi = mle.shape.abs() <= 0.02;

    let spec = CopulaSpec::logistic(0.5).unwrap();
    let fit_polar = to_polar(&sample(&spec, 10_000, 81).unwrap()).unwrap();
    let test_polar = to_polar(&sample(&spec, 10_000, 82).unwrap()).unwrap();
    let (w_min, w_max) = fit_polar.angle_range();
    let mut coverage = Vec::new();
    let mut ok_qr = true;
    for tau in [0.5, 0.9] {
        let basis = build_basis(3, 7, w_min, w_max).unwrap();
        let curve = fit_threshold_quantile(&fit_polar, &basis, tau).map_err(|e| e.to_string())?;
        let frac = |p: &limitset::PolarSample| {
            let inside: Vec<usize> = (0..p.len()).filter(|&i| p.w[i] >= w_min && p.w[i] <= w_max).collect();
            let below = inside.iter().filter(|&&i| p.r[i].ln() <= curve.log_threshold(p.w[i])).count();
            (below as f64 / inside.len() as f64, inside.len() as f64)
        };
        let (in_sample, n_fit) = frac(&fit_polar);
        let (held_out, n_test) = frac(&test_polar);
        let se_in = (tau * (1.0 - tau) / n_fit).sqrt();
        let se_out = (tau * (1.0 - tau) * (1.0 / n_test + 1.0 / n_fit)).sqrt();
        ok_qr &= (in_sample - tau).abs() <= 3.0 * se_in && (held_out - tau).abs() <= 3.0 * se_out;
        coverage.push(format!("{tau}: {in_sample:.4}/{held_out:.4}"));
    }

    let mut worst = 0.0f64;
    for degree in 1..=3 {
        let basis = build_basis(degree, 7, 0.013, 0.987).unwrap();
        for i in 0..=10_000 {
            let x = 0.013 + (0.987 - 0.013) * i as f64 / 10_000.0;
            worst = worst.max((basis.evaluate(x).iter().sum::<f64>() - 1.0).abs());
        }
    }
    let ok_pu = worst <= 1e-12;
    ensure(
        ok_xi && ok_qr && ok_pu,
        format!("xi {:.4}; QR coverage (in/held-out) {}; partition of unity error {worst:.1e}", mle.shape, coverage.join(", ")),
    )
}

fn criterion_9() -> Check {
    let mut rng = rng_for(99, 0);
    let total: usize = (0..10_000).map(|_| block_length(16.0, &mut rng)).sum();
    let mean = total as f64 / 10_000.0;
    let plan = BootstrapPlan::new(5000, 16.0, 10, 12).unwrap();
    let again = BootstrapPlan::new(5000, 16.0, 10, 12).unwrap();
    let other = BootstrapPlan::new(5000, 16.0, 10, 13).unwrap();
    let same = (0..10).all(|b| stationary_bootstrap_indices(&plan, b) == stationary_bootstrap_indices(&again, b));
    let differs = stationary_bootstrap_indices(&plan, 0) != stationary_bootstrap_indices(&other, 0)
        && stationary_bootstrap_indices(&plan, 0) != stationary_bootstrap_indices(&plan, 1);
    let idx = stationary_bootstrap_indices(&plan, 3);
    let valid = idx.len() == 5000 && idx.iter().all(|&i| i < 5000);
    let draws: Vec<f64> = (0..3).map(|_| rng_for(5, 1).random::<f64>()).collect();
    let rng_same = draws.windows(2).all(|p| p[0] == p[1]);
    ensure(
        (mean - 16.0).abs() <= 0.5 && same && differs && valid && rng_same,
        format!("mean block length {mean:.3} over 10^4 blocks; deterministic {same}; seed-sensitive {differs}"),
    )
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        // name discovery by tooling; nothing to list beyond the single target
        return;
    }
    let criteria: [(&str, fn() -> Check); 9] = [
        ("1 geometric oracle equivalence", criterion_1),
        ("2 eta estimator comparison", criterion_2),
        ("3 inverted logistic unbiasedness", criterion_3),
        ("4 spline-degree selection", criterion_4),
        ("5 tau monotonicity contrast", criterion_5),
        ("6 self-consistency suite", criterion_6),
        ("7 scaling/truncation traces", criterion_7),
        ("8 GPD and spline micro-oracles", criterion_8),
        ("9 bootstrap sanity", criterion_9),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
