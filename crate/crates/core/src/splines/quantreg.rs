//! Linear quantile regression by a primal-dual interior-point method on the
//! bounded dual linear programme.

use crate::error::{Error, Result};
use crate::optim::cholesky_solve;
use crate::Scalar;

/// Check (pinball) loss `Σ ρ_τ(y_i − x_iᵀβ)`.
pub fn check_loss<T: Scalar>(design: &[T], y: &[T], beta: &[T], tau: T) -> T {
    let p = beta.len();
    y.iter()
        .enumerate()
        .map(|(i, &yi)| {
            let fit: T = (0..p).map(|k| design[i * p + k] * beta[k]).sum();
            let u = yi - fit;
            if u >= T::zero() {
                tau * u
            } else {
                (tau - T::one()) * u
            }
        })
        .sum()
}

fn max_step<T: Scalar>(v: &[T], dv: &[T]) -> T {
    v.iter()
        .zip(dv)
        .filter(|(_, &d)| d < T::zero())
        .map(|(&a, &d)| -a / d)
        .fold(T::infinity(), T::min)
}

struct Direction<T> {
    dx: Vec<T>,
    dz: Vec<T>,
    dw: Vec<T>,
    dl: Vec<T>,
}

/// Fits `β` minimising the check loss at level `tau`, with the `n x p`
/// row-major design. Solves
/// `max yᵀa  s.t. Xᵀa = (1−τ)Xᵀ1, 0 ≤ a ≤ 1` by Mehrotra predictor–corrector
/// steps; the coefficients are the negated equality multipliers.
///
/// The iterations always run in `f64`: the weighted normal equations become
/// too ill-conditioned for single precision near the optimum.
pub fn rq_fit<T: Scalar>(design: &[T], y: &[T], tau: T) -> Result<Vec<T>> {
    let wide = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<f64>>();
    let beta = rq_solve(&wide(design), &wide(y), tau.to_f64_lossy())?;
    Ok(beta.into_iter().map(T::lit).collect())
}

fn rq_solve<T: Scalar>(design: &[T], y: &[T], tau: T) -> Result<Vec<T>> {
    let n = y.len();
    if n == 0 || !design.len().is_multiple_of(n) {
        return Err(Error::InvalidInput("design and response sizes disagree".into()));
    }
    let p = design.len() / n;
    if n < p || p == 0 {
        return Err(Error::TooFew { needed: p.max(1), got: n });
    }
    if !(tau > T::zero() && tau < T::one()) {
        return Err(Error::InvalidInput(format!("quantile level {tau} must lie in (0, 1)")));
    }
    let row = |i: usize| &design[i * p..(i + 1) * p];
    let xt = |v: &[T]| -> Vec<T> {
        let mut out = vec![T::zero(); p];
        for i in 0..n {
            for (k, &xik) in row(i).iter().enumerate() {
                out[k] = out[k] + xik * v[i];
            }
        }
        out
    };
    let xv = |beta: &[T]| -> Vec<T> { (0..n).map(|i| row(i).iter().zip(beta).map(|(&a, &b)| a * b).sum()).collect() };

    let c: Vec<T> = y.iter().map(|&v| -v).collect();
    let b = xt(&vec![T::one() - tau; n]);

    let normal = |theta: &[T]| -> Vec<T> {
        let mut m = vec![T::zero(); p * p];
        for i in 0..n {
            let xi = row(i);
            for a in 0..p {
                let wa = theta[i] * xi[a];
                if wa == T::zero() {
                    continue;
                }
                for bb in a..p {
                    m[a * p + bb] = m[a * p + bb] + wa * xi[bb];
                }
            }
        }
        for a in 0..p {
            for bb in 0..a {
                m[a * p + bb] = m[bb * p + a];
            }
        }
        m
    };

    // least-squares start for the multipliers
    let ls = cholesky_solve(&normal(&vec![T::one(); n]), &xt(y))
        .ok_or_else(|| Error::Degenerate("quantile regression design is rank deficient".into()))?;
    let mut lambda: Vec<T> = ls.iter().map(|&v| -v).collect();
    let mut x = vec![T::one() - tau; n];
    let mut s = vec![tau; n];
    let r0: Vec<T> = c.iter().zip(xv(&lambda)).map(|(&ci, v)| ci - v).collect();
    let scale = r0.iter().map(|v| v.abs()).sum::<T>() / T::count(n);
    let shift = (scale * T::lit(0.1)).max(T::sqrt_eps());
    let mut z: Vec<T> = r0.iter().map(|&r| r.max(T::zero()) + shift).collect();
    let mut w: Vec<T> = r0.iter().map(|&r| (-r).max(T::zero()) + shift).collect();

    let solve = |x: &[T], s: &[T], z: &[T], w: &[T], rp: &[T], rd: &[T], rxz: &[T], rsw: &[T]| -> Option<Direction<T>> {
        let theta: Vec<T> = (0..n).map(|i| (z[i] / x[i] + w[i] / s[i]).recip()).collect();
        let q: Vec<T> = (0..n).map(|i| rd[i] - rxz[i] / x[i] + rsw[i] / s[i]).collect();
        let tq: Vec<T> = (0..n).map(|i| theta[i] * q[i]).collect();
        let rhs: Vec<T> = rp.iter().zip(xt(&tq)).map(|(&a, b)| a + b).collect();
        let dl = cholesky_solve(&normal(&theta), &rhs)?;
        let adl = xv(&dl);
        let dx: Vec<T> = (0..n).map(|i| theta[i] * (adl[i] - q[i])).collect();
        let dz: Vec<T> = (0..n).map(|i| (rxz[i] - z[i] * dx[i]) / x[i]).collect();
        let dw: Vec<T> = (0..n).map(|i| (rsw[i] + w[i] * dx[i]) / s[i]).collect();
        Some(Direction { dx, dz, dw, dl })
    };

    let tol = T::epsilon().sqrt() * T::lit(1e-3);
    let nn = T::count(2 * n);
    let fraction = T::lit(0.99995);
    for _iter in 0..200 {
        let ax = xt(&x);
        let rp: Vec<T> = b.iter().zip(&ax).map(|(&bi, &a)| bi - a).collect();
        let al = xv(&lambda);
        let rd: Vec<T> = (0..n).map(|i| c[i] - al[i] - z[i] + w[i]).collect();
        let gap: T = (0..n).map(|i| x[i] * z[i] + s[i] * w[i]).sum();
        let objective = c.iter().zip(&x).map(|(&ci, &xi)| ci * xi).sum::<T>().abs();
        let rp_norm = rp.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let rd_norm = rd.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if gap <= tol * (T::one() + objective) && rp_norm <= tol * (T::one() + scale) && rd_norm <= tol * (T::one() + scale) {
            return Ok(lambda.iter().map(|&v| -v).collect());
        }
        let mu = gap / nn;

        let rxz: Vec<T> = (0..n).map(|i| -x[i] * z[i]).collect();
        let rsw: Vec<T> = (0..n).map(|i| -s[i] * w[i]).collect();
        let aff = solve(&x, &s, &z, &w, &rp, &rd, &rxz, &rsw)
            .ok_or_else(|| Error::NonConvergence("singular interior-point system".into()))?;
        let ds_aff: Vec<T> = aff.dx.iter().map(|&d| -d).collect();
        let ap = T::one().min(max_step(&x, &aff.dx)).min(max_step(&s, &ds_aff));
        let ad = T::one().min(max_step(&z, &aff.dz)).min(max_step(&w, &aff.dw));
        let mu_aff: T = (0..n)
            .map(|i| (x[i] + ap * aff.dx[i]) * (z[i] + ad * aff.dz[i]) + (s[i] + ap * ds_aff[i]) * (w[i] + ad * aff.dw[i]))
            .sum::<T>()
            / nn;
        let sigma = (mu_aff / mu).powi(3).min(T::one());
        let rxz: Vec<T> = (0..n).map(|i| sigma * mu - x[i] * z[i] - aff.dx[i] * aff.dz[i]).collect();
        let rsw: Vec<T> = (0..n).map(|i| sigma * mu - s[i] * w[i] - ds_aff[i] * aff.dw[i]).collect();
        let dir = solve(&x, &s, &z, &w, &rp, &rd, &rxz, &rsw)
            .ok_or_else(|| Error::NonConvergence("singular interior-point system".into()))?;
        let ds: Vec<T> = dir.dx.iter().map(|&d| -d).collect();
        let ap = T::one().min(fraction * max_step(&x, &dir.dx).min(max_step(&s, &ds)));
        let ad = T::one().min(fraction * max_step(&z, &dir.dz).min(max_step(&w, &dir.dw)));
        for i in 0..n {
            x[i] = x[i] + ap * dir.dx[i];
            s[i] = s[i] + ap * ds[i];
            z[i] = z[i] + ad * dir.dz[i];
            w[i] = w[i] + ad * dir.dw[i];
        }
        for k in 0..p {
            lambda[k] = lambda[k] + ad * dir.dl[k];
        }
    }
    Err(Error::NonConvergence("quantile regression did not reach the duality-gap tolerance".into()))
}
