//! Limited-memory quasi-Newton descent over the free node values.

use std::collections::VecDeque;

/// Symmetric tridiagonal matrix, factorized once for repeated solves.
#[derive(Debug, Clone)]
pub(crate) struct Tridiagonal {
    // Thomas algorithm factors
    c_prime: Vec<f64>,
    denom: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    /// `diag` has length n, `off` length n−1. Returns None if not positive definite.
    pub(crate) fn new(diag: &[f64], off: &[f64]) -> Option<Self> {
        let n = diag.len();
        let mut c_prime = vec![0.0; n];
        let mut denom = vec![0.0; n];
        for i in 0..n {
            let sub = if i > 0 { off[i - 1] * c_prime[i - 1] } else { 0.0 };
            denom[i] = diag[i] - sub;
            if denom[i].partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return None;
            }
            if i + 1 < n {
                c_prime[i] = off[i] / denom[i];
            }
        }
        Some(Self {
            c_prime,
            denom,
            off: off.to_vec(),
        })
    }

    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut d = vec![0.0; n];
        for i in 0..n {
            let prev = if i > 0 { self.off[i - 1] * d[i - 1] } else { 0.0 };
            d[i] = (rhs[i] - prev) / self.denom[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= self.c_prime[i] * d[i + 1];
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Settings {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub initial_step: f64,
    pub backtrack: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
    pub memory: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Converged,
    IterationLimit,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub z: Vec<f64>,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub outcome: Outcome,
    pub history: Vec<f64>,
}

pub(crate) fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which returns None outside its domain (treated as +∞).
///
/// The line search accepts Armijo steps, and when the value change is at the
/// round-off level it falls back to the approximate Wolfe test on the
/// directional derivative, so iterations keep progressing after function
/// values stop resolving the decrease.
pub(crate) fn minimize<F>(mut f: F, z0: Vec<f64>, precond: Option<&Tridiagonal>, s: &Settings) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let (mut value, mut grad) = f(&z0)?;
    let mut z = z0;
    let mut history = vec![value];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let apply_h0 = |q: &[f64]| -> Vec<f64> {
        match precond {
            Some(m) => m.solve(q),
            None => q.to_vec(),
        }
    };
    let mut iterations = 0;
    let finish = |z, gradient, iterations, outcome, history| {
        Some(Minimum {
            z,
            gradient,
            iterations,
            outcome,
            history,
        })
    };

    loop {
        if l1(&grad) <= s.gradient_tolerance {
            return finish(z, grad, iterations, Outcome::Converged, history);
        }
        if iterations >= s.max_iterations {
            return finish(z, grad, iterations, Outcome::IterationLimit, history);
        }
        if z.is_empty() {
            return finish(z, grad, iterations, Outcome::Converged, history);
        }

        let mut dir = two_loop(&grad, &pairs, &apply_h0);
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            pairs.clear();
            dir = apply_h0(&grad).iter().map(|v| -v).collect();
            slope = dot(&grad, &dir);
        }
        let first = pairs.is_empty();
        let mut alpha = if first {
            // unscaled preconditioned gradient step: keep the first move modest
            let dmax = dir.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            s.initial_step.min(1.0 / dmax.max(f64::MIN_POSITIVE))
        } else {
            s.initial_step
        };

        let eps_f = 1e3 * f64::EPSILON * value.abs().max(1e-300);
        let mut accepted = None;
        for _ in 0..s.max_backtracks {
            let trial: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            match f(&trial) {
                None => alpha *= s.backtrack,
                Some((fv, gv)) => {
                    let dphi = dot(&gv, &dir);
                    let armijo = fv <= value + s.sufficient_decrease * alpha * slope;
                    let approx_wolfe =
                        fv <= value + eps_f && dphi >= 0.9 * slope && dphi <= (2.0 * 0.1 - 1.0) * slope;
                    if armijo || approx_wolfe {
                        accepted = Some((trial, fv, gv));
                        break;
                    }
                    alpha = if dphi > 0.0 {
                        // minimum of φ lies inside (0, α): secant on φ'
                        let a = alpha * slope / (slope - dphi);
                        a.clamp(0.1 * alpha, 0.9 * alpha)
                    } else {
                        alpha * s.backtrack
                    };
                }
            }
        }
        let Some((znew, fnew, gnew)) = accepted else {
            if !first {
                // retry from a fresh gradient step before giving up
                pairs.clear();
                continue;
            }
            return finish(z, grad, iterations, Outcome::LineSearchFailed, history);
        };

        let step: Vec<f64> = znew.iter().zip(&z).map(|(a, b)| a - b).collect();
        let ydiff: Vec<f64> = gnew.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &ydiff);
        if sy > 1e-14 * dot(&ydiff, &ydiff).sqrt() * dot(&step, &step).sqrt() && sy > 0.0 {
            if pairs.len() == s.memory {
                pairs.pop_front();
            }
            pairs.push_back((step, ydiff, 1.0 / sy));
        }
        z = znew;
        value = fnew;
        grad = gnew;
        iterations += 1;
        history.push(value);
    }
}

fn two_loop(grad: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, h0: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (sv, yv, rho) in pairs.iter().rev() {
        let a = rho * dot(sv, &q);
        for (qi, yi) in q.iter_mut().zip(yv) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let mut r = h0(&q);
    if let Some((sv, yv, _)) = pairs.back() {
        let hy = h0(yv);
        let gamma = dot(sv, yv) / dot(yv, &hy);
        r.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((sv, yv, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(yv, &r);
        for (ri, si) in r.iter_mut().zip(sv) {
            *ri += si * (a - b);
        }
    }
    r.iter().map(|v| -v).collect()
}
