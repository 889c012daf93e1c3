#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tsvar::gridfn::GridFunction;
use tsvar::optimality::quotient_problem;
use tsvar::timescale::{Grid, TimeScale};
use tsvar::varproblem::{BoundarySpec, CompositionFunctional, Integrand, IsoConstraint, Sense, VariationalProblem};

pub fn problem_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/problems").join(name)
}

fn build(scale: &str, res: usize, f: CompositionFunctional, bc: BoundarySpec) -> VariationalProblem {
    VariationalProblem::new(TimeScale::parse(scale).unwrap(), res, f, Sense::Minimize, bc).unwrap()
}

/// ∫ t·v Δt / ∫ v² ∇t with x(0)=0, x(1)=1.
pub fn ex1(scale: &str, res: usize) -> VariationalProblem {
    let f = quotient_problem(Integrand::delta("t*v").unwrap(), Integrand::nabla("v^2").unwrap()).unwrap();
    build(scale, res, f, BoundarySpec::fixed(0.0, 1.0))
}

/// ∫ v² Δt / ∫ (v + v²) ∇t with x(0)=0, x(2)=4.
pub fn ex2(scale: &str, res: usize) -> VariationalProblem {
    let f = quotient_problem(Integrand::delta("v^2").unwrap(), Integrand::nabla("v + v^2").unwrap()).unwrap();
    build(scale, res, f, BoundarySpec::fixed(0.0, 4.0))
}

/// Product of ∫ t·v Δt, ∫ v(1+t) Δt and ∫ v² ∇t with x(0)=0, x(1)=1.
pub fn ex3(scale: &str, res: usize) -> VariationalProblem {
    let f = CompositionFunctional::parse(
        "F1*F2*F3",
        vec![
            Integrand::delta("t*v").unwrap(),
            Integrand::delta("v*(1 + t)").unwrap(),
            Integrand::nabla("v^2").unwrap(),
        ],
    )
    .unwrap();
    build(scale, res, f, BoundarySpec::fixed(0.0, 1.0))
}

/// ∫ v² Δt / ∫ t·v ∇t subject to ∫ t·v ∇t = 1, x(0)=0, x(1)=1.
pub fn iso(scale: &str, res: usize) -> VariationalProblem {
    let f = quotient_problem(Integrand::delta("v^2").unwrap(), Integrand::nabla("t*v").unwrap()).unwrap();
    let c = IsoConstraint::parse("G1", vec![Integrand::nabla("t*v").unwrap()], 1.0).unwrap();
    build(scale, res, f, BoundarySpec::fixed(0.0, 1.0)).with_constraint(c)
}

pub fn sup_error(x: &GridFunction, f: impl Fn(f64) -> f64) -> f64 {
    x.grid()
        .nodes()
        .iter()
        .zip(x.values())
        .map(|(&t, v)| (v - f(t)).abs())
        .fold(0.0, f64::max)
}

/// A random closed time scale: up to five pieces, each an isolated point or an
/// interval, separated by positive gaps.
pub fn arb_timescale() -> impl Strategy<Value = TimeScale> {
    (-2.0..2.0_f64, prop::collection::vec((any::<bool>(), 0.05..1.5_f64, 0.05..1.0_f64), 1..6)).prop_map(|(start, pieces)| {
        let mut pairs = Vec::new();
        let mut lo = start;
        for (interval, len, gap) in pieces {
            let hi = if interval { lo + len } else { lo };
            pairs.push((lo, hi));
            lo = hi + gap;
        }
        if let [(p, q)] = pairs[..] {
            if p == q {
                // a single point is not a time scale we accept
                pairs.push((lo, lo));
            }
        }
        TimeScale::new(&pairs).unwrap()
    })
}

/// A grid on a random scale with a random function sampled on it.
pub fn arb_grid_function() -> impl Strategy<Value = GridFunction> {
    (arb_timescale(), 2usize..30, any::<u64>()).prop_map(|(ts, res, seed)| {
        let grid = Arc::new(Grid::new(ts, res).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        GridFunction::new(grid, values).unwrap()
    })
}

/// `base` plus a smooth random bump that vanishes at fixed ends.
pub fn perturbed(p: &VariationalProblem, base: impl Fn(f64) -> f64, seed: u64, amplitude: f64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (p.timescale().a(), p.timescale().b());
    let c: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    p.trajectory_from_fn(|t| {
        let s = (t - a) / (b - a);
        let bump = s * (1.0 - s) * (c[0] + c[1] * s + c[2] * s * s);
        base(t) + amplitude * bump
    })
    .unwrap()
}

/// Largest error of both interchange identities for `f`, relative to the
/// magnitude of the quantities compared.
pub fn interchange_error(f: &GridFunction) -> f64 {
    let n = f.len();
    let nabla = f.nabla_derivative();
    let from_delta = f.nabla_deriv_from_delta();
    let delta = f.delta_derivative();
    let from_nabla = f.delta_deriv_from_nabla();
    let mut worst = 0.0_f64;
    for i in 1..n {
        let (p, q) = (nabla.values()[i], from_delta.values()[i]);
        worst = worst.max((p - q).abs() / (1.0 + p.abs()));
    }
    for i in 0..n - 1 {
        let (p, q) = (delta.values()[i], from_nabla.values()[i]);
        worst = worst.max((p - q).abs() / (1.0 + p.abs()));
    }
    let nodes = f.grid().nodes();
    let scale = 1.0 + f.sup_norm() * (nodes[n - 1] - nodes[0]);
    for (lo, hi) in [(0, n - 1), (0, n / 2), (n / 3, n - 1)] {
        let (lo, hi) = (nodes[lo], nodes[hi]);
        let d1 = f.delta_integral(lo, hi).unwrap() - f.integral_interchange_delta_to_nabla(lo, hi).unwrap();
        let d2 = f.nabla_integral(lo, hi).unwrap() - f.integral_interchange_nabla_to_delta(lo, hi).unwrap();
        worst = worst.max(d1.abs() / scale).max(d2.abs() / scale);
    }
    worst
}

/// max over free nodes of |analytic − central difference|, relative to the
/// largest gradient entry.
pub fn gradient_fd_error(p: &VariationalProblem, x: &GridFunction, grad: &[f64], value: impl Fn(&GridFunction) -> f64) -> f64 {
    let h = 1e-6;
    let scale = grad.iter().fold(1e-3_f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0_f64;
    for i in p.free_nodes() {
        let shifted = |d: f64| {
            let mut v = x.values().to_vec();
            v[i] += d;
            value(&p.trajectory(v).unwrap())
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        worst = worst.max((grad[i] - fd).abs() / scale);
    }
    worst
}

/// Objective gradient check followed by the constraint functional, if any.
pub fn problem_fd_error(p: &VariationalProblem, x: &GridFunction) -> f64 {
    let g = p.objective_gradient(x).unwrap();
    let mut worst = gradient_fd_error(p, x, g.values(), |y| p.objective_value(y).unwrap());
    for c in p.constraints() {
        let (_, g) = c.functional().value_and_gradient(x).unwrap();
        worst = worst.max(gradient_fd_error(p, x, &g, |y| c.functional().value(y).unwrap()));
    }
    worst
}
