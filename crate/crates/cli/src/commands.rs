use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use limitset::copulas::sample;
use limitset::io::{read_boundary, read_sample_file, write_boundary, write_sample};
use limitset::local::{estimate_local, LocalFit};
use limitset::margins::to_exponential_margins;
use limitset::measures::{baselines, geometric_measures, self_consistency_violations, summarize, BaselineSummary};
use limitset::resample::{bootstrap_measures, BootstrapPlan, BootstrapReport};
use limitset::smooth::{estimate, DegreeScore};
use limitset::study::{grid, run_study, CellSummary};
use limitset::{BivariateSample, CopulaSpec, DependenceSummary, LocalConfig, SmoothConfig, SplineSurface, StudyConfig};
use serde::Serialize;

use crate::{FamilyArg, FitArgs, Margins, MeasuresArgs, Method, SimulateArgs, StudyArgs, TuningArgs};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(limitset::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Core(e) if e.is_validation() || matches!(e, limitset::Error::Io(_)) => 3,
            Failure::Core(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<limitset::Error> for Failure {
    fn from(e: limitset::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(limitset::Error::Io(e.into()))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Core(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parses `start:end:step`.
fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, s] = parts.as_slice() else {
        return Err(usage(format!("grid `{text}` must be start:end:step")));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| usage(format!("bad number `{v}` in grid `{text}`")));
    grid(num(a)?, num(b)?, num(s)?).map_err(|e| usage(e.to_string()))
}

fn parse_model(text: &str) -> Result<CopulaSpec, Failure> {
    let (family, params) = text.split_once(':').ok_or_else(|| usage(format!("model `{text}` must be family:params")))?;
    let values = params
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| usage(format!("bad parameter `{v}` in model `{text}`"))))
        .collect::<Result<Vec<f64>, Failure>>()?;
    let family: limitset::copulas::Family = family.parse().map_err(|e: limitset::Error| usage(e.to_string()))?;
    use limitset::copulas::Family as F;
    let spec = match (family, values.as_slice()) {
        (F::Gaussian, [rho]) => CopulaSpec::gaussian(*rho),
        (F::Logistic, [g]) => CopulaSpec::logistic(*g),
        (F::InvertedLogistic, [g]) => CopulaSpec::inverted_logistic(*g),
        (F::AsymmetricLogistic, [g, t1, t2]) => CopulaSpec::asymmetric_logistic(*g, *t1, *t2),
        _ => return Err(usage(format!("wrong number of parameters in model `{text}`"))),
    };
    spec.map_err(|e| usage(e.to_string()))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

fn write_json<S: Serialize>(dir: &Path, name: &str, value: &S) -> Result<PathBuf, Failure> {
    let (path, w) = create(dir, name)?;
    serde_json::to_writer_pretty(w, value)?;
    Ok(path)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn load_sample(path: &Path, margins: Margins) -> Result<BivariateSample, Failure> {
    let raw = read_sample_file::<f64>(path)?;
    Ok(match margins {
        Margins::Rank => to_exponential_margins(&raw),
        Margins::Exponential => BivariateSample::new(raw.rows().to_vec())?,
    })
}

fn apply_tuning(config: &mut SmoothConfig, t: &TuningArgs) {
    if let Some(k) = t.k {
        config.local.k = k;
    }
    if let Some(m) = t.m {
        config.local.m = m;
    }
    if let Some(q_u) = t.q_u {
        config.local.q_u = q_u;
    }
    if let Some(q) = t.q {
        config.local.q = q;
    }
    if let Some(kappa) = t.kappa {
        config.kappa = kappa;
    }
    if let Some(d) = &t.degrees {
        config.degrees = d.clone();
    }
}

pub fn simulate(args: SimulateArgs, seed: Option<u64>) -> Outcome {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| usage(format!("--{name} is required for this family")));
    let spec = match args.family {
        FamilyArg::Gaussian => CopulaSpec::gaussian(need(args.rho, "rho")?),
        FamilyArg::Logistic => CopulaSpec::logistic(need(args.gamma, "gamma")?),
        FamilyArg::InvertedLogistic => CopulaSpec::inverted_logistic(need(args.gamma, "gamma")?),
        FamilyArg::AsymmetricLogistic => CopulaSpec::asymmetric_logistic(
            need(args.gamma, "gamma")?,
            need(args.theta1, "theta1")?,
            need(args.theta2, "theta2")?,
        ),
    }
    .map_err(|e| usage(e.to_string()))?;
    let seed = seed.unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0));
    let x = sample(&spec, args.n, seed)?;
    let path = match args.out {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            p
        }
        None => {
            fs::create_dir_all(&args.out_dir)?;
            args.out_dir.join("sample.csv")
        }
    };
    write_sample(BufWriter::new(File::create(&path)?), x.rows())?;
    println!("seed {seed}");
    println!("wrote {} rows of {} to {}", x.len(), spec.label(), path.display());
    Ok(())
}

#[derive(Serialize)]
struct LocalReport<'a> {
    method: &'static str,
    n: usize,
    eta_h: f64,
    config: &'a LocalConfig,
    fits: &'a [LocalFit<f64>],
}

#[derive(Serialize)]
struct SurfaceReport<'a> {
    degree: usize,
    surface: &'a SplineSurface,
}

#[derive(Serialize)]
struct SmoothReport<'a> {
    method: &'static str,
    n: usize,
    eta_h: f64,
    chosen_degree: usize,
    scores: &'a [DegreeScore<f64>],
    config: &'a SmoothConfig,
    surfaces: Vec<SurfaceReport<'a>>,
    local_fits: &'a [LocalFit<f64>],
    bootstrap: Option<BootstrapReport<f64>>,
}

pub fn fit(args: FitArgs, seed: Option<u64>) -> Outcome {
    let omega = parse_grid(&args.omega_grid)?;
    let delta = parse_grid(&args.delta_grid)?;
    let mut config = SmoothConfig::default();
    apply_tuning(&mut config, &args.tuning);
    if args.method == Method::Local && args.bootstrap > 0 {
        return Err(usage("--bootstrap requires --method smooth"));
    }
    let raw = read_sample_file::<f64>(&args.input)?;
    let x = match args.margins {
        Margins::Rank => to_exponential_margins(&raw),
        Margins::Exponential => BivariateSample::new(raw.rows().to_vec())?,
    };
    let dir = &args.out_dir;

    if args.method == Method::Local {
        config.local.validate()?;
        let local = estimate_local(&x, &config.local)?;
        let (bpath, w) = create(dir, "boundary.csv")?;
        write_boundary(w, &local.boundary)?;
        let report = LocalReport {
            method: "local",
            n: x.len(),
            eta_h: local.eta_h,
            config: &config.local,
            fits: &local.quantiles.fits,
        };
        let rpath = write_json(dir, "fit_report.json", &report)?;
        println!("local boundary with {} points: {}", local.boundary.len(), bpath.display());
        println!("report: {}", rpath.display());
        return Ok(());
    }

    let result = estimate(&x, &config)?;
    let (bpath, w) = create(dir, "boundary.csv")?;
    write_boundary(w, &result.boundary)?;
    if args.per_degree {
        let (_, w) = create(dir, "boundary_local.csv")?;
        write_boundary(w, &result.local)?;
        for c in &result.candidates {
            let (_, w) = create(dir, &format!("boundary_degree{}.csv", c.degree))?;
            write_boundary(w, &c.boundary)?;
        }
    }
    let bootstrap = if args.bootstrap > 0 {
        let plan = BootstrapPlan::new(raw.len(), args.block_mean, args.bootstrap, seed.unwrap_or(1))?;
        let report = bootstrap_measures(&raw, &config, &plan, &omega, &delta, args.beta_level)?;
        if report.failures > 0 {
            eprintln!("warning: {} of {} bootstrap replicates failed", report.failures, plan.replicates);
        }
        Some(report)
    } else {
        None
    };
    let report = SmoothReport {
        method: "smooth",
        n: x.len(),
        eta_h: result.eta_h,
        chosen_degree: result.chosen_degree,
        scores: &result.scores,
        config: &result.config,
        surfaces: result.candidates.iter().map(|c| SurfaceReport { degree: c.degree, surface: &c.surface }).collect(),
        local_fits: &result.local_quantiles.fits,
        bootstrap,
    };
    let rpath = write_json(dir, "fit_report.json", &report)?;
    println!("chosen degree {}; boundary: {}", result.chosen_degree, bpath.display());
    println!("report: {}", rpath.display());
    Ok(())
}

#[derive(Debug, Default, Clone, Copy)]
struct BaselineSet {
    hill_eta: bool,
    peng: bool,
    draisma: bool,
    hill_lambda: bool,
    hill_tau: bool,
}

impl BaselineSet {
    fn parse(text: &str) -> Result<Self, Failure> {
        let mut s = Self::default();
        for item in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match item {
                "none" => {}
                "all" => {
                    s = Self { hill_eta: true, peng: true, draisma: true, hill_lambda: true, hill_tau: true };
                }
                "hill-eta" => s.hill_eta = true,
                "peng" => s.peng = true,
                "draisma" => s.draisma = true,
                "hill-lambda" => s.hill_lambda = true,
                "hill-tau" => s.hill_tau = true,
                other => return Err(usage(format!("unknown baseline `{other}`"))),
            }
        }
        Ok(s)
    }

    fn any(&self) -> bool {
        self.hill_eta || self.peng || self.draisma || self.hill_lambda || self.hill_tau
    }

    fn restrict(&self, mut b: BaselineSummary<f64>) -> BaselineSummary<f64> {
        if !self.hill_eta {
            b.eta_hill = None;
        }
        if !self.peng {
            b.eta_peng = None;
        }
        if !self.draisma {
            b.eta_draisma = None;
        }
        if !self.hill_lambda {
            b.lambda_hill.iter_mut().for_each(|v| *v = None);
        }
        if !self.hill_tau {
            b.tau1_hill.iter_mut().for_each(|v| *v = None);
            b.tau2_hill.iter_mut().for_each(|v| *v = None);
        }
        b
    }
}

#[derive(Serialize)]
struct MeasuresReport {
    summary: DependenceSummary,
    baselines: Option<BaselineSummary<f64>>,
    violations: Vec<String>,
}

pub fn measures(args: MeasuresArgs) -> Outcome {
    let omega = parse_grid(&args.omega_grid)?;
    let delta = parse_grid(&args.delta_grid)?;
    let wanted = BaselineSet::parse(&args.baselines)?;
    if wanted.any() && args.sample.is_none() {
        return Err(usage("baselines need --sample"));
    }
    let boundary = read_boundary::<f64, _>(File::open(&args.boundary)?)?;
    let x = args.sample.as_deref().map(|p| load_sample(p, args.margins)).transpose()?;
    let summary = match &x {
        Some(x) => summarize(&boundary, x, &omega, &delta, args.beta_level)?,
        None => geometric_measures(&boundary, &omega, &delta)?,
    };
    let base = match &x {
        Some(x) if wanted.any() => Some(wanted.restrict(baselines(x, &omega, &delta, &Default::default()))),
        _ => None,
    };
    let violations = self_consistency_violations(&boundary, &summary);
    let dir = &args.out_dir;

    let (_, w) = create(dir, "lambda.csv")?;
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["omega", "lambda", "lambda_hill"])?;
    for (j, &om) in omega.iter().enumerate() {
        let h = base.as_ref().and_then(|b| b.lambda_hill[j]);
        w.write_record([om.to_string(), summary.lambda[j].to_string(), opt(h)])?;
    }
    w.flush()?;

    let (_, w) = create(dir, "tau.csv")?;
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["delta", "tau1", "tau2", "tau1_hill", "tau2_hill"])?;
    for (j, &d) in delta.iter().enumerate() {
        let h1 = base.as_ref().and_then(|b| b.tau1_hill[j]);
        let h2 = base.as_ref().and_then(|b| b.tau2_hill[j]);
        w.write_record([d.to_string(), opt(summary.tau1[j]), opt(summary.tau2[j]), opt(h1), opt(h2)])?;
    }
    w.flush()?;

    println!("eta {}  alpha1 {}  alpha2 {}", summary.eta, summary.alpha1, summary.alpha2);
    for v in &violations {
        eprintln!("warning: self-consistency: {v}");
    }
    let path = write_json(dir, "measures.json", &MeasuresReport { summary, baselines: base, violations })?;
    println!("report: {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct StudySummary<'a> {
    config: &'a StudyConfig,
    cells: Vec<CellSummary<f64>>,
}

fn study_config(args: &StudyArgs, seed: Option<u64>) -> Result<StudyConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            toml::from_str::<StudyConfig>(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => StudyConfig::default(),
    };
    if !args.models.is_empty() {
        config.models = args.models.iter().map(|m| parse_model(m)).collect::<Result<_, _>>()?;
    }
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    apply_tuning(&mut config.fit, &args.tuning);
    if let Some(kappa) = args.tuning.kappa {
        config.kappas = vec![kappa];
    }
    if let Some(k) = &args.kappas {
        config.kappas = k.clone();
    }
    if let Some(g) = &args.omega_grid {
        config.omega_grid = parse_grid(g)?;
    }
    if let Some(g) = &args.delta_grid {
        config.delta_grid = parse_grid(g)?;
    }
    if let Some(b) = args.beta_level {
        config.beta_level = b;
    }
    if args.no_baselines {
        config.include_baselines = false;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    if config.models.is_empty() {
        return Err(usage("no models given; use --model or a config file"));
    }
    Ok(config)
}

pub fn study(args: StudyArgs, seed: Option<u64>) -> Outcome {
    let config = study_config(&args, seed)?;
    if config.replicates == 0 {
        eprintln!("warning: zero replicates requested; tables will carry no estimates");
    }
    let results = run_study(&config)?;
    let dir = &args.out_dir;
    let (table_path, w) = create(dir, "study_table.csv")?;
    let mut w = csv::Writer::from_writer(w);
    for row in results.table() {
        w.serialize(row)?;
    }
    w.flush()?;
    let cells = results.cell_summaries();
    for c in &cells {
        if c.failures > 0 {
            eprintln!("warning: {} kappa={}: {} of {} replicates failed", c.model, c.kappa, c.failures, c.replicates);
        }
        println!(
            "{} kappa={}: degrees {:?}, tau1 monotone G {:.2}, violations {}",
            c.model, c.kappa, c.degree_counts, c.tau1_monotone_g, c.violations
        );
    }
    let summary_path = write_json(dir, "study_summary.json", &StudySummary { config: &config, cells })?;
    println!("table: {}", table_path.display());
    println!("summary: {}", summary_path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_and_models_parse() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(parse_grid("0:1").is_err());
        assert_eq!(parse_model("logistic:0.5").unwrap(), CopulaSpec::logistic(0.5).unwrap());
        assert_eq!(
            parse_model("asymmetric-logistic:0.5,0.25,0.75").unwrap(),
            CopulaSpec::asymmetric_logistic(0.5, 0.25, 0.75).unwrap()
        );
        assert!(matches!(parse_model("logistic:1.0"), Err(Failure::Usage(_))));
        assert!(parse_model("gaussian:0.1,0.2").is_err());
    }

    #[test]
    fn baseline_lists() {
        let s = BaselineSet::parse("hill-eta,peng").unwrap();
        assert!(s.hill_eta && s.peng && !s.draisma);
        assert!(!BaselineSet::parse("none").unwrap().any());
        assert!(BaselineSet::parse("bogus").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(usage("x").exit_code(), 2);
        assert_eq!(Failure::Core(limitset::Error::Parse { line: 3, message: "x".into() }).exit_code(), 3);
        assert_eq!(Failure::Core(limitset::Error::NonConvergence("x".into())).exit_code(), 4);
    }
}
