//! Numerical optimisation kernels: Nelder–Mead, damped Newton ascent,
//! golden-section search and a small dense Cholesky solver.

use crate::Scalar;

#[derive(Debug, Clone)]
pub struct Optimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimises `f` with the Nelder–Mead simplex method.
///
/// Non-finite objective values are treated as `+inf`, which lets callers
/// encode hard constraints by returning `inf` outside the feasible region.
pub fn nelder_mead<T, F>(f: F, start: &[T], step: T, tol: T, max_iter: usize) -> Optimum<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T,
{
    let eval = |x: &[T]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            T::infinity()
        }
    };
    let dim = start.len();
    let mut simplex: Vec<Vec<T>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for i in 0..dim {
        let mut p = start.to_vec();
        p[i] = p[i] + step;
        simplex.push(p);
    }
    let mut values: Vec<T> = simplex.iter().map(|p| eval(p)).collect();
    let half = T::lit(0.5);
    let two = T::lit(2.0);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[dim] - values[0]).abs();
        let size = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (*a - *b).abs()))
            .fold(T::zero(), T::max);
        if values[0].is_finite() && spread <= tol * (T::one() + values[0].abs()) && size <= tol.sqrt() {
            converged = true;
            break;
        }

        let centroid: Vec<T> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|p| p[j]).sum::<T>() / T::count(dim))
            .collect();
        let along = |coef: T| -> Vec<T> {
            centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(&c, &w)| c + coef * (c - w))
                .collect()
        };

        let reflected = along(T::one());
        let fr = eval(&reflected);
        if fr < values[0] {
            let expanded = along(two);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[dim] {
            let c = along(half);
            let v = eval(&c);
            (c, v)
        } else {
            let c = along(-half);
            let v = eval(&c);
            (c, v)
        };
        if fc < values[dim].min(fr) {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].clone();
        for i in 1..=dim {
            for j in 0..dim {
                simplex[i][j] = best[j] + half * (simplex[i][j] - best[j]);
            }
            values[i] = eval(&simplex[i]);
        }
    }
    let best = (0..=dim)
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    Optimum { x: simplex[best].clone(), value: values[best], iterations, converged }
}

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, `n x n`).
/// Returns `None` when `A` is not numerically positive definite.
pub fn cholesky_solve<T: Scalar>(a: &[T], b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

/// Value, gradient and Hessian (row-major) of an objective at a point.
pub struct SecondOrder<T> {
    pub value: T,
    pub gradient: Vec<T>,
    pub hessian: Vec<T>,
}

/// Maximises a smooth concave-near-the-optimum objective by Levenberg-damped
/// Newton steps with step halving. `objective` must return `-inf` (or NaN)
/// outside the feasible region.
pub fn newton_maximize<T, F, V>(
    objective: F,
    value_only: V,
    start: &[T],
    grad_tol: T,
    max_iter: usize,
) -> Optimum<T>
where
    T: Scalar,
    F: Fn(&[T]) -> SecondOrder<T>,
    V: Fn(&[T]) -> T,
{
    let dim = start.len();
    let mut x = start.to_vec();
    let mut current = objective(&x);
    let mut damping = T::zero();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        if !current.value.is_finite() {
            break;
        }
        let gmax = current.gradient.iter().fold(T::zero(), |m, g| m.max(g.abs()));
        if gmax <= grad_tol * (T::one() + current.value.abs()) {
            converged = true;
            break;
        }
        let diag_scale = (0..dim)
            .map(|i| (-current.hessian[i * dim + i]).abs())
            .fold(T::zero(), T::max)
            .max(T::one());
        let mut accepted = false;
        for _attempt in 0..60 {
            let mut neg_h: Vec<T> = current.hessian.iter().map(|&h| -h).collect();
            for i in 0..dim {
                neg_h[i * dim + i] = neg_h[i * dim + i] + damping * diag_scale;
            }
            let step = match cholesky_solve(&neg_h, &current.gradient) {
                Some(s) => s,
                None => {
                    damping = if damping == T::zero() { T::lit(1e-6) } else { damping * T::lit(10.0) };
                    continue;
                }
            };
            let mut scale = T::one();
            for _ in 0..30 {
                let cand: Vec<T> = x.iter().zip(&step).map(|(&a, &s)| a + scale * s).collect();
                let v = value_only(&cand);
                if v.is_finite() && v >= current.value {
                    let improvement = v - current.value;
                    x = cand;
                    current = objective(&x);
                    accepted = true;
                    if improvement <= T::epsilon() * (T::one() + v.abs()) {
                        // no further progress possible at this precision
                        converged = true;
                    }
                    break;
                }
                scale = scale * T::lit(0.5);
            }
            if accepted {
                damping = damping * T::lit(0.1);
                if damping < T::lit(1e-12) {
                    damping = T::zero();
                }
                break;
            }
            damping = if damping == T::zero() { T::lit(1e-4) } else { damping * T::lit(10.0) };
        }
        if !accepted || converged {
            let gmax = current.gradient.iter().fold(T::zero(), |m, g| m.max(g.abs()));
            converged = gmax <= grad_tol.sqrt() * (T::one() + current.value.abs());
            break;
        }
    }
    Optimum { x, value: current.value, iterations, converged }
}

/// Golden-section search for the maximiser of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<T: Scalar, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, tol: T) -> (T, T) {
    let ratio = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    if fa >= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}
