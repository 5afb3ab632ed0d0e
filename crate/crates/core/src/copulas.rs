//! The four study copulas on standard exponential margins: exact samplers,
//! gauge functions, true boundary sets and closed-form dependence measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::local::LimitSetEstimate;
use crate::margins::BivariateSample;
use crate::measures::DependenceSummary;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
    Logistic,
    InvertedLogistic,
    AsymmetricLogistic,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Gaussian => "gaussian",
            Family::Logistic => "logistic",
            Family::InvertedLogistic => "inverted-logistic",
            Family::AsymmetricLogistic => "asymmetric-logistic",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "logistic" => Ok(Family::Logistic),
            "inverted-logistic" | "invlogistic" => Ok(Family::InvertedLogistic),
            "asymmetric-logistic" | "alog" => Ok(Family::AsymmetricLogistic),
            other => Err(Error::InvalidInput(format!("unknown copula family `{other}`"))),
        }
    }
}

/// A copula with validated parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CopulaSpec<T> {
    Gaussian { rho: T },
    Logistic { gamma: T },
    InvertedLogistic { gamma: T },
    AsymmetricLogistic { gamma: T, theta1: T, theta2: T },
}

fn open_unit<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {v}")))
    }
}

impl<T: Scalar> CopulaSpec<T> {
    pub fn gaussian(rho: T) -> Result<Self> {
        Self::Gaussian { rho }.validated()
    }

    pub fn logistic(gamma: T) -> Result<Self> {
        Self::Logistic { gamma }.validated()
    }

    pub fn inverted_logistic(gamma: T) -> Result<Self> {
        Self::InvertedLogistic { gamma }.validated()
    }

    pub fn asymmetric_logistic(gamma: T, theta1: T, theta2: T) -> Result<Self> {
        Self::AsymmetricLogistic { gamma, theta1, theta2 }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            CopulaSpec::Gaussian { rho } => {
                if !(rho >= T::zero() && rho < T::one()) {
                    return Err(Error::InvalidInput(format!("rho must lie in [0, 1), got {rho}")));
                }
            }
            CopulaSpec::Logistic { gamma } | CopulaSpec::InvertedLogistic { gamma } => {
                open_unit("gamma", gamma)?
            }
            CopulaSpec::AsymmetricLogistic { gamma, theta1, theta2 } => {
                open_unit("gamma", gamma)?;
                open_unit("theta1", theta1)?;
                open_unit("theta2", theta2)?;
            }
        }
        Ok(self)
    }

    pub fn family(&self) -> Family {
        match self {
            CopulaSpec::Gaussian { .. } => Family::Gaussian,
            CopulaSpec::Logistic { .. } => Family::Logistic,
            CopulaSpec::InvertedLogistic { .. } => Family::InvertedLogistic,
            CopulaSpec::AsymmetricLogistic { .. } => Family::AsymmetricLogistic,
        }
    }

    /// The family's headline dependence parameter (ρ or γ).
    pub fn primary_parameter(&self) -> T {
        match *self {
            CopulaSpec::Gaussian { rho } => rho,
            CopulaSpec::Logistic { gamma }
            | CopulaSpec::InvertedLogistic { gamma }
            | CopulaSpec::AsymmetricLogistic { gamma, .. } => gamma,
        }
    }

    /// Short label such as `logistic(gamma=0.5)`.
    pub fn label(&self) -> String {
        match *self {
            CopulaSpec::Gaussian { rho } => format!("gaussian(rho={rho})"),
            CopulaSpec::Logistic { gamma } => format!("logistic(gamma={gamma})"),
            CopulaSpec::InvertedLogistic { gamma } => format!("inverted-logistic(gamma={gamma})"),
            CopulaSpec::AsymmetricLogistic { gamma, theta1, theta2 } => {
                format!("asymmetric-logistic(gamma={gamma},theta1={theta1},theta2={theta2})")
            }
        }
    }

    /// Gauge function `g(x1, x2)` of the copula on exponential margins.
    pub fn gauge(&self, x1: T, x2: T) -> T {
        match *self {
            CopulaSpec::Gaussian { rho } => {
                if rho == T::zero() {
                    x1 + x2
                } else {
                    let two = T::lit(2.0);
                    (x1 + x2 - two * rho * (x1 * x2).sqrt()) / (T::one() - rho * rho)
                }
            }
            CopulaSpec::InvertedLogistic { gamma } => {
                let inv = gamma.recip();
                (x1.powf(inv) + x2.powf(inv)).powf(gamma)
            }
            CopulaSpec::Logistic { gamma } => logistic_gauge(gamma, x1, x2),
            CopulaSpec::AsymmetricLogistic { gamma, .. } => (x1 + x2).min(logistic_gauge(gamma, x1, x2)),
        }
    }

    /// Coefficient χ of asymptotic dependence.
    pub fn chi(&self) -> T {
        match *self {
            CopulaSpec::Gaussian { .. } | CopulaSpec::InvertedLogistic { .. } => T::zero(),
            CopulaSpec::Logistic { gamma } => T::lit(2.0) - T::lit(2.0).powf(gamma),
            CopulaSpec::AsymmetricLogistic { gamma, theta1, theta2 } => {
                let inv = gamma.recip();
                let a = (T::one() - theta1).powf(inv) + (T::one() - theta2).powf(inv);
                T::lit(2.0) - theta1 - theta2 - a.powf(gamma)
            }
        }
    }

    pub fn true_eta(&self) -> T {
        match *self {
            CopulaSpec::Gaussian { rho } => (T::one() + rho) / T::lit(2.0),
            CopulaSpec::InvertedLogistic { gamma } => T::lit(2.0).powf(-gamma),
            CopulaSpec::Logistic { .. } | CopulaSpec::AsymmetricLogistic { .. } => T::one(),
        }
    }

    pub fn true_lambda(&self, omega: T) -> T {
        let hi = omega.max(T::one() - omega);
        let lo = omega.min(T::one() - omega);
        match *self {
            CopulaSpec::Gaussian { rho } => {
                let t = if hi > T::zero() { lo / hi } else { T::zero() };
                if t >= rho * rho {
                    (T::one() - T::lit(2.0) * rho * (omega * (T::one() - omega)).sqrt())
                        / (T::one() - rho * rho)
                } else {
                    hi
                }
            }
            CopulaSpec::InvertedLogistic { gamma } => {
                let inv = gamma.recip();
                (omega.powf(inv) + (T::one() - omega).powf(inv)).powf(gamma)
            }
            CopulaSpec::Logistic { .. } | CopulaSpec::AsymmetricLogistic { .. } => hi,
        }
    }

    /// `τ1(δ) = τ2(δ)`; the study copulas are all symmetric in this respect.
    pub fn true_tau(&self, delta: T) -> T {
        match *self {
            CopulaSpec::Gaussian { rho } => {
                if delta >= rho * rho {
                    T::one()
                } else {
                    (T::one() - rho * rho) / (T::one() + delta - T::lit(2.0) * rho * delta.sqrt())
                }
            }
            CopulaSpec::Logistic { gamma } => gamma / (T::one() + gamma * delta - delta),
            CopulaSpec::InvertedLogistic { .. } | CopulaSpec::AsymmetricLogistic { .. } => T::one(),
        }
    }

    pub fn true_alpha(&self) -> T {
        match *self {
            CopulaSpec::Gaussian { rho } => rho * rho,
            CopulaSpec::InvertedLogistic { .. } => T::zero(),
            CopulaSpec::Logistic { .. } | CopulaSpec::AsymmetricLogistic { .. } => T::one(),
        }
    }

    pub fn true_beta(&self) -> T {
        match *self {
            // complete independence has β = 0
            CopulaSpec::Gaussian { rho } if rho == T::zero() => T::zero(),
            CopulaSpec::Gaussian { .. } => T::lit(0.5),
            CopulaSpec::InvertedLogistic { gamma } => T::one() - gamma,
            CopulaSpec::Logistic { .. } | CopulaSpec::AsymmetricLogistic { .. } => T::zero(),
        }
    }
}

fn logistic_gauge<T: Scalar>(gamma: T, x1: T, x2: T) -> T {
    let inv = gamma.recip();
    inv * x1.max(x2) - (inv - T::one()) * x1.min(x2)
}

/// Closed-form dependence measures of a copula on the given grids.
pub fn true_measures<T: Scalar>(spec: &CopulaSpec<T>, omega_grid: &[T], delta_grid: &[T]) -> DependenceSummary<T> {
    let tau: Vec<Option<T>> = delta_grid.iter().map(|&d| Some(spec.true_tau(d))).collect();
    DependenceSummary {
        eta: spec.true_eta(),
        omega_grid: omega_grid.to_vec(),
        lambda: omega_grid.iter().map(|&w| spec.true_lambda(w)).collect(),
        delta_grid: delta_grid.to_vec(),
        tau1: tau.clone(),
        tau2: tau,
        alpha1: spec.true_alpha(),
        alpha2: spec.true_alpha(),
        beta1: Some(spec.true_beta()),
        beta2: Some(spec.true_beta()),
        chi: Some(spec.chi()),
    }
}

/// Points of the true boundary set `{g = 1}` on an even angular grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrueBoundary<T> {
    pub w: Vec<T>,
    pub r: Vec<T>,
    pub x1: Vec<T>,
    pub x2: Vec<T>,
}

impl<T: Scalar> TrueBoundary<T> {
    pub fn points(&self) -> Vec<(T, T)> {
        self.x1.iter().copied().zip(self.x2.iter().copied()).collect()
    }

    /// Normalises each coordinate so its maximum is exactly one (the
    /// discretised maxima fall short of one by the grid resolution) and
    /// returns the set as a [`LimitSetEstimate`].
    pub fn to_limit_set(&self) -> LimitSetEstimate<T> {
        let m1 = self.x1.iter().copied().fold(T::zero(), T::max);
        let m2 = self.x2.iter().copied().fold(T::zero(), T::max);
        LimitSetEstimate {
            w: self.w.clone(),
            x1: self.x1.iter().map(|&v| (v / m1).min(T::one())).collect(),
            x2: self.x2.iter().map(|&v| (v / m2).min(T::one())).collect(),
            scaling_factor: T::one(),
            source: crate::local::BoundarySource::Truth,
        }
    }
}

/// `{g = 1}` at `grid_size` evenly spaced angles, plus `w = 1/2` when the
/// even spacing would skip it.
pub fn true_boundary<T: Scalar>(spec: &CopulaSpec<T>, grid_size: usize) -> Result<TrueBoundary<T>> {
    if grid_size < 3 {
        return Err(Error::InvalidInput(format!("grid_size must be at least 3, got {grid_size}")));
    }
    let last = T::count(grid_size - 1);
    let mut angles: Vec<T> = (0..grid_size).map(|i| T::count(i) / last).collect();
    if grid_size.is_multiple_of(2) {
        // the diagonal carries the point that fixes η and, for
        // asymmetric logistic, α
        angles.insert(grid_size / 2, T::lit(0.5));
    }
    let mut out = TrueBoundary {
        w: Vec::with_capacity(angles.len()),
        r: Vec::with_capacity(angles.len()),
        x1: Vec::with_capacity(angles.len()),
        x2: Vec::with_capacity(angles.len()),
    };
    for w in angles {
        let r = spec.gauge(w, T::one() - w).recip();
        out.w.push(w);
        out.r.push(r);
        out.x1.push(r * w);
        out.x2.push(r * (T::one() - w));
    }
    Ok(out)
}

/// Deterministic generator for one simulation stream.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n` i.i.d. pairs on exact standard exponential margins.
pub fn sample<T: Scalar>(spec: &CopulaSpec<T>, n: usize, seed: u64) -> Result<BivariateSample<T>> {
    let mut rng = rng_for(seed, 0);
    sample_with(spec, n, &mut rng)
}

pub fn sample_with<T: Scalar, R: Rng + ?Sized>(spec: &CopulaSpec<T>, n: usize, rng: &mut R) -> Result<BivariateSample<T>> {
    spec.validated()?;
    if n == 0 {
        return Err(Error::TooFew { needed: 1, got: 0 });
    }
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let (a, b) = draw_pair(spec, rng);
        rows.push([T::lit(a), T::lit(b)]);
    }
    BivariateSample::new(rows)
}

/// Exponential quantile of a standard normal draw, `-log{1 - Φ(z)}`.
fn normal_to_exponential(z: f64) -> f64 {
    -(0.5 * erfc(z / std::f64::consts::SQRT_2)).ln()
}

/// `-log(1 - exp(-a))`: exponential-scale value of a unit-Fréchet draw with `1/Z = a`.
fn frechet_reciprocal_to_exponential(a: f64) -> f64 {
    -(-(-a).exp_m1()).ln()
}

/// Positive stable variate with Laplace transform `exp(-t^alpha)` (Kanter's representation).
fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    use std::f64::consts::PI;
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let e: f64 = Exp1.sample(rng);
    let a = (alpha * PI * u).sin() / (PI * u).sin().powf(1.0 / alpha);
    let b = ((1.0 - alpha) * PI * u).sin() / e;
    a * b.powf((1.0 - alpha) / alpha)
}

/// Reciprocals `1/A_i` of a logistic pair with unit-Fréchet margins.
fn logistic_frechet_reciprocals<R: Rng + ?Sized>(gamma: f64, rng: &mut R) -> (f64, f64) {
    let s = positive_stable(gamma, rng);
    let e1: f64 = Exp1.sample(rng);
    let e2: f64 = Exp1.sample(rng);
    ((e1 / s).powf(gamma), (e2 / s).powf(gamma))
}

fn draw_pair<T: Scalar, R: Rng + ?Sized>(spec: &CopulaSpec<T>, rng: &mut R) -> (f64, f64) {
    match *spec {
        CopulaSpec::Gaussian { rho } => {
            let rho = rho.to_f64_lossy();
            let z1: f64 = StandardNormal.sample(rng);
            let e: f64 = StandardNormal.sample(rng);
            let z2 = rho * z1 + (1.0 - rho * rho).sqrt() * e;
            (normal_to_exponential(z1), normal_to_exponential(z2))
        }
        CopulaSpec::Logistic { gamma } => {
            let (a1, a2) = logistic_frechet_reciprocals(gamma.to_f64_lossy(), rng);
            (frechet_reciprocal_to_exponential(a1), frechet_reciprocal_to_exponential(a2))
        }
        CopulaSpec::InvertedLogistic { gamma } => {
            // u -> 1 - u on the uniform scale turns -log(1 - U) into -log(U) = 1/A
            logistic_frechet_reciprocals(gamma.to_f64_lossy(), rng)
        }
        CopulaSpec::AsymmetricLogistic { gamma, theta1, theta2 } => {
            let (t1, t2) = (theta1.to_f64_lossy(), theta2.to_f64_lossy());
            let (a1, a2) = logistic_frechet_reciprocals(gamma.to_f64_lossy(), rng);
            let b1: f64 = Exp1.sample(rng);
            let b2: f64 = Exp1.sample(rng);
            // Z_i = max(θ_i B_i, (1 - θ_i) A_i) on unit-Fréchet scale
            let z1 = (b1 / t1).min(a1 / (1.0 - t1));
            let z2 = (b2 / t2).min(a2 / (1.0 - t2));
            (frechet_reciprocal_to_exponential(z1), frechet_reciprocal_to_exponential(z2))
        }
    }
}
