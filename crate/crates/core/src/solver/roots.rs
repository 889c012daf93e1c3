use thiserror::Error;

use crate::expr::{BoundExpr, Expression};

/// Bisection stops once the bracket is this narrow.
pub const ROOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("root search needs lo < hi, got [{0}, {1}]")]
    Interval(f64, f64),
    #[error("at least one bracket cell is required")]
    NoCells,
    #[error("expression must have at most one variable, found {0:?}")]
    Variables(Vec<String>),
}

/// Real roots of a one-variable expression on `[lo, hi]`.
///
/// The interval is split into `n_brackets` equal cells; every cell whose end
/// values change sign (or hit zero) is bisected. Roots of even multiplicity
/// that touch zero without a sign change are not found. Points where the
/// expression is undefined are skipped.
pub fn find_scalar_roots(e: &Expression, lo: f64, hi: f64, n_brackets: usize) -> Result<Vec<f64>, RootError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(RootError::Interval(lo, hi));
    }
    if n_brackets == 0 {
        return Err(RootError::NoCells);
    }
    let vars: Vec<&str> = e.free_vars().iter().map(String::as_str).collect();
    if vars.len() > 1 {
        return Err(RootError::Variables(e.free_vars().iter().cloned().collect()));
    }
    let bound = e.bind(&vars).expect("all free variables are bound");
    let f = |q: f64| -> Option<f64> {
        let args = if vars.is_empty() { vec![] } else { vec![q] };
        bound.eval(&args).ok()
    };

    let knots: Vec<f64> = (0..=n_brackets)
        .map(|i| if i == n_brackets { hi } else { lo + (hi - lo) * i as f64 / n_brackets as f64 })
        .collect();
    let values: Vec<Option<f64>> = knots.iter().map(|&q| f(q)).collect();
    let mut roots: Vec<f64> = Vec::new();
    for i in 0..n_brackets {
        let (a, b) = (knots[i], knots[i + 1]);
        let (Some(fa), Some(fb)) = (values[i], values[i + 1]) else { continue };
        if fa == 0.0 {
            roots.push(a);
        } else if fb == 0.0 {
            roots.push(b);
        } else if fa.signum() != fb.signum() {
            if let Some(r) = bisect(&bound, vars.is_empty(), a, b, fa) {
                roots.push(r);
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 10.0 * ROOT_TOLERANCE);
    Ok(roots)
}

fn bisect(bound: &BoundExpr, constant: bool, mut a: f64, mut b: f64, mut fa: f64) -> Option<f64> {
    let f = |q: f64| bound.eval(if constant { &[] } else { std::slice::from_ref(&q) }).ok();
    let mut fb = f(b)?;
    while b - a > ROOT_TOLERANCE {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    Some(if fa.abs() <= fb.abs() { a } else { b })
}
