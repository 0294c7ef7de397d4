//! Derivative-free local search: a plain Nelder-Mead simplex and a
//! quadratic-penalty driver for equality-constrained maximization.
//!
//! The gate-synthesis problems in this crate are small (9 parameters)
//! and their feasible sets are nonconvex varieties, so the strategy is
//! many cheap local searches from random seeds rather than anything
//! clever. Each seed is independent and pure; callers run them in
//! parallel and reduce deterministically.

/// Options for one Nelder-Mead run.
#[derive(Debug, Clone, Copy)]
pub struct NmOptions {
    pub max_iter: usize,
    pub x_tol: f64,
    pub f_tol: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions {
            max_iter: 4000,
            x_tol: 1e-13,
            f_tol: 1e-16,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Minimize `f` with the Nelder-Mead simplex started at `x0` with
/// initial step `step` along each coordinate.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    step: f64,
    opts: NmOptions,
) -> NmResult {
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }

    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it;
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = (worst - best).abs();
        let diam = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread < opts.f_tol * (best.abs() + 1e-30) && diam < opts.x_tol {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let at = |base: &[f64], dir: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(base)
                .map(|(c, w)| c + dir * (c - w))
                .collect()
        };

        let reflected = at(&simplex[n].0, alpha);
        let f_r = f(&reflected);
        if f_r < simplex[0].1 {
            let expanded = at(&simplex[n].0, gamma);
            let f_e = f(&expanded);
            simplex[n] = if f_e < f_r {
                (expanded, f_e)
            } else {
                (reflected, f_r)
            };
            continue;
        }
        if f_r < simplex[n - 1].1 {
            simplex[n] = (reflected, f_r);
            continue;
        }
        let contracted = at(&simplex[n].0, -rho);
        let f_c = f(&contracted);
        if f_c < simplex[n].1 {
            simplex[n] = (contracted, f_c);
            continue;
        }
        // Shrink toward the best vertex.
        let best_x = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&best_x) {
                *xi = bi + sigma * (*xi - bi);
            }
            *fx = f(x);
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    NmResult {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        iterations,
    }
}

/// One local solve of `maximize objective subject to residual_sq = 0`
/// by a quadratic penalty with an increasing weight schedule; each stage
/// restarts Nelder-Mead from the previous stage's best point with a
/// shrinking simplex.
pub fn penalized_maximize<O, R>(
    objective: O,
    residual_sq: R,
    x0: &[f64],
    opts: NmOptions,
) -> PenaltyResult
where
    O: Fn(&[f64]) -> f64,
    R: Fn(&[f64]) -> f64,
{
    let schedule: &[(f64, f64)] = &[
        (1e2, 0.4),
        (1e4, 0.1),
        (1e6, 0.03),
        (1e8, 0.01),
        (1e10, 3e-3),
        (1e12, 1e-3),
        (1e14, 3e-4),
    ];
    let mut x = x0.to_vec();
    let mut iterations = 0;
    for &(mu, step) in schedule {
        let f = |p: &[f64]| -> f64 { -objective(p) + mu * residual_sq(p) };
        let r = nelder_mead(f, &x, step, opts);
        x = r.x;
        iterations += r.iterations;
    }
    let value = objective(&x);
    let residual = residual_sq(&x).max(0.0).sqrt();
    PenaltyResult {
        x,
        objective: value,
        residual_norm: residual,
        iterations,
    }
}

#[derive(Debug, Clone)]
pub struct PenaltyResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}
