//! Direct transcription: optimize the discretized functional over the free
//! node values, then evaluate the necessary conditions at the result.

mod minimize;
mod roots;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gridfn::GridFunction;
use crate::optimality::{el_residuals, iso_conditions, transversality, ELTrace, IsoTrace, TransversalityReport};
use crate::varproblem::{ProblemError, VariationalProblem};
use minimize::{l1, minimize, Outcome, Settings, Tridiagonal};

pub use roots::{find_scalar_roots, RootError, ROOT_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver options: {0}")]
    Options(String),
    #[error("initial trajectory: {0}")]
    Initial(ProblemError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

impl SolveError {
    pub fn is_domain(&self) -> bool {
        match self {
            SolveError::Initial(e) | SolveError::Problem(e) => e.is_domain(),
            SolveError::Options(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    pub initial_step: f64,
    /// Step reduction factor in (0, 1).
    pub backtrack: f64,
    /// Armijo constant in (0, 1).
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            backtrack: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySchedule {
    pub initial_weight: f64,
    pub growth: f64,
    pub max_rounds: usize,
    /// |K(x) − d| accepted as feasible.
    pub constraint_tolerance: f64,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        Self {
            initial_weight: 10.0,
            growth: 10.0,
            max_rounds: 12,
            constraint_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Initializer {
    #[default]
    Linear,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Bound on the ℓ¹ norm of the gradient over free nodes.
    pub gradient_tolerance: f64,
    pub line_search: LineSearch,
    pub penalty: PenaltySchedule,
    pub initializer: Initializer,
    /// Stored correction pairs of the quasi-Newton update.
    pub memory: usize,
    /// Extra solves from randomly perturbed starts; the best result is kept.
    pub restarts: usize,
    pub restart_amplitude: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            gradient_tolerance: 1e-9,
            line_search: LineSearch::default(),
            penalty: PenaltySchedule::default(),
            initializer: Initializer::Linear,
            memory: 12,
            restarts: 0,
            restart_amplitude: 0.1,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::Options(m.to_string()));
        let ls = &self.line_search;
        let pen = &self.penalty;
        if !(self.gradient_tolerance > 0.0) {
            return bad("gradient_tolerance must be positive");
        }
        if !(pen.constraint_tolerance > 0.0) {
            return bad("constraint_tolerance must be positive");
        }
        if !(pen.growth > 1.0) {
            return bad("penalty growth must exceed 1");
        }
        if !(pen.initial_weight > 0.0) {
            return bad("initial penalty weight must be positive");
        }
        if !(ls.initial_step > 0.0) {
            return bad("initial_step must be positive");
        }
        if !(ls.backtrack > 0.0 && ls.backtrack < 1.0) {
            return bad("backtrack factor must lie in (0, 1)");
        }
        if !(ls.sufficient_decrease > 0.0 && ls.sufficient_decrease < 1.0) {
            return bad("sufficient_decrease must lie in (0, 1)");
        }
        if self.memory == 0 {
            return bad("memory must be at least 1");
        }
        if !(self.restart_amplitude >= 0.0) {
            return bad("restart_amplitude must be non-negative");
        }
        Ok(())
    }

    fn settings(&self, max_iterations: usize) -> Settings {
        Settings {
            max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            initial_step: self.line_search.initial_step,
            backtrack: self.line_search.backtrack,
            sufficient_decrease: self.line_search.sufficient_decrease,
            max_backtracks: self.line_search.max_backtracks,
            memory: self.memory,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    IterationLimit,
    LineSearchFailed,
    PenaltyDiverged,
    PenaltyExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: GridFunction,
    /// L(x), not negated for maximization and without penalty.
    pub objective: f64,
    /// ℓ¹ norm over free nodes of the gradient of the (penalized) objective.
    pub gradient_norm: f64,
    /// Tolerance the final inner solve stopped at: the requested one, raised
    /// to the round-off level of the penalty gradient when that is larger.
    pub gradient_tolerance: f64,
    pub constraint_violation: f64,
    /// Least-squares multiplier from the optimality conditions.
    pub lambda_estimate: Option<f64>,
    /// Multiplier implied by the final penalty term, −s·2μ(K − d).
    pub lambda_penalty: Option<f64>,
    pub iterations: usize,
    pub outer_rounds: usize,
    pub converged: bool,
    pub status: Status,
    /// Minimized value s·L (+ penalty) after every accepted step.
    pub history: Vec<f64>,
    pub el: ELTrace,
    pub iso: Option<IsoTrace>,
    pub transversality: TransversalityReport,
}

/// Dispatches to [`solve_direct`] or [`solve_isoperimetric`], with seeded restarts.
pub fn solve(p: &VariationalProblem, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let single = |o: &SolveOptions| {
        if p.constraints().is_empty() {
            solve_direct(p, o)
        } else {
            solve_isoperimetric(p, o)
        }
    };
    let mut best = single(opts)?;
    if opts.restarts == 0 {
        return Ok(best);
    }
    let base = initial_values(p, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let free = p.free_nodes();
    let scale = 1.0 + base.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for _ in 0..opts.restarts {
        let mut start = base.clone();
        for &i in &free {
            start[i] += opts.restart_amplitude * scale * rng.gen_range(-1.0..=1.0);
        }
        let o = SolveOptions {
            initializer: Initializer::Given(start),
            restarts: 0,
            ..opts.clone()
        };
        // perturbed starts may land outside the domain; those are skipped
        let Ok(candidate) = single(&o) else { continue };
        if better(p, &candidate, &best) {
            best = candidate;
        }
    }
    Ok(best)
}

fn better(p: &VariationalProblem, a: &SolveResult, b: &SolveResult) -> bool {
    match (a.converged, b.converged) {
        (true, false) => true,
        (false, true) => false,
        _ => p.sense().sign() * a.objective < p.sense().sign() * b.objective,
    }
}

fn initial_values(p: &VariationalProblem, opts: &SolveOptions) -> Result<Vec<f64>, SolveError> {
    let mut values = match &opts.initializer {
        Initializer::Linear => p.linear_initializer().into_values(),
        Initializer::Given(v) => p.trajectory(v.clone()).map_err(SolveError::Initial)?.into_values(),
    };
    p.apply_boundary(&mut values);
    Ok(values)
}

/// H¹ Gram matrix (stiffness plus lumped mass) restricted to the free nodes.
fn gram_preconditioner(p: &VariationalProblem, free: &[usize]) -> Option<Tridiagonal> {
    let grid = p.grid();
    let n = grid.len();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for j in 0..n - 1 {
        let h = grid.step(j);
        diag[j] += 1.0 / h + h / 2.0;
        diag[j + 1] += 1.0 / h + h / 2.0;
        off[j] = -1.0 / h;
    }
    let (lo, hi) = (*free.first()?, *free.last()?);
    Tridiagonal::new(&diag[lo..=hi], &off[lo..hi])
}

struct Evaluator<'a> {
    p: &'a VariationalProblem,
    free: Vec<usize>,
    base: Vec<f64>,
    /// weight μ of the quadratic penalty on the single constraint
    penalty: Option<f64>,
}

impl Evaluator<'_> {
    fn full(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.base.clone();
        for (&i, &v) in self.free.iter().zip(z) {
            x[i] = v;
        }
        x
    }

    fn eval(&self, z: &[f64]) -> Result<(f64, Vec<f64>), ProblemError> {
        let x = self.p.trajectory(self.full(z))?;
        let sign = self.p.sense().sign();
        let (value, grad) = self.p.objective().value_and_gradient(&x)?;
        let mut total = sign * value;
        let mut g: Vec<f64> = self.free.iter().map(|&i| sign * grad[i]).collect();
        if let Some(mu) = self.penalty {
            let c = &self.p.constraints()[0];
            let (k, kg) = c.functional().value_and_gradient(&x)?;
            let r = k - c.target();
            total += mu * r * r;
            for (gi, &i) in g.iter_mut().zip(&self.free) {
                *gi += 2.0 * mu * r * kg[i];
            }
        }
        Ok((total, g))
    }
}

struct Inner {
    values: Vec<f64>,
    gradient_norm: f64,
    tolerance: f64,
    iterations: usize,
    outcome: Outcome,
    history: Vec<f64>,
}

/// Round-off level of the penalty gradient 2μ(K − d)∇K: the residual K − d
/// is only known to a few ulps of K, so for large μ the requested gradient
/// tolerance may be unreachable.
fn penalty_noise(p: &VariationalProblem, x: &[f64], free: &[usize], mu: f64) -> Result<f64, ProblemError> {
    let c = &p.constraints()[0];
    let (k, kg) = c.functional().value_and_gradient(&p.trajectory(x.to_vec())?)?;
    let grad_l1: f64 = free.iter().map(|&i| kg[i].abs()).sum();
    Ok(2.0 * mu * grad_l1 * 64.0 * f64::EPSILON * k.abs().max(c.target().abs()).max(1.0))
}

fn run_inner(
    p: &VariationalProblem,
    start: Vec<f64>,
    penalty: Option<f64>,
    opts: &SolveOptions,
    budget: usize,
) -> Result<Inner, SolveError> {
    let free = p.free_nodes();
    let ev = Evaluator {
        p,
        free: free.clone(),
        base: start,
        penalty,
    };
    let z0: Vec<f64> = free.iter().map(|&i| ev.base[i]).collect();
    ev.eval(&z0).map_err(SolveError::Initial)?;
    let tolerance = match penalty {
        Some(mu) => opts.gradient_tolerance.max(penalty_noise(p, &ev.base, &free, mu)?),
        None => opts.gradient_tolerance,
    };
    let pre = gram_preconditioner(p, &free);
    let settings = Settings {
        gradient_tolerance: tolerance,
        ..opts.settings(budget)
    };
    let m = minimize(|z| ev.eval(z).ok(), z0, pre.as_ref(), &settings).expect("start point was evaluated successfully");
    Ok(Inner {
        values: ev.full(&m.z),
        gradient_norm: l1(&m.gradient),
        tolerance,
        iterations: m.iterations,
        outcome: m.outcome,
        history: m.history,
    })
}

fn status_of(outcome: Outcome) -> Status {
    match outcome {
        Outcome::Converged => Status::Converged,
        Outcome::IterationLimit => Status::IterationLimit,
        Outcome::LineSearchFailed => Status::LineSearchFailed,
    }
}

struct Run {
    x: GridFunction,
    gradient_norm: f64,
    gradient_tolerance: f64,
    iterations: usize,
    outer_rounds: usize,
    status: Status,
    history: Vec<f64>,
    lambda_penalty: Option<f64>,
}

/// Unconstrained optimization of L over the free nodes (constraints, if any, are ignored).
pub fn solve_direct(p: &VariationalProblem, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    opts.validate()?;
    let start = initial_values(p, opts)?;
    let inner = run_inner(p, start, None, opts, opts.max_iterations)?;
    finish(
        p,
        Run {
            x: p.trajectory(inner.values)?,
            gradient_norm: inner.gradient_norm,
            gradient_tolerance: inner.tolerance,
            iterations: inner.iterations,
            outer_rounds: 0,
            status: status_of(inner.outcome),
            history: inner.history,
            lambda_penalty: None,
        },
    )
}

/// Quadratic-penalty loop around the direct solver for a single constraint.
pub fn solve_isoperimetric(p: &VariationalProblem, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    opts.validate()?;
    if p.constraints().len() != 1 {
        return Err(SolveError::Options(format!(
            "expected exactly one isoperimetric constraint, found {}",
            p.constraints().len()
        )));
    }
    let c = &p.constraints()[0];
    let sched = opts.penalty;
    let mut values = initial_values(p, opts)?;
    let mut mu = sched.initial_weight;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut previous_violation = f64::INFINITY;
    let mut rounds = 0;
    let mut status = Status::PenaltyExhausted;
    let (mut gradient_norm, mut gradient_tolerance) = (f64::INFINITY, opts.gradient_tolerance);
    while rounds < sched.max_rounds {
        rounds += 1;
        let budget = opts.max_iterations.saturating_sub(iterations);
        let inner = run_inner(p, values, Some(mu), opts, budget)?;
        iterations += inner.iterations;
        history.extend(inner.history);
        values = inner.values;
        gradient_norm = inner.gradient_norm;
        gradient_tolerance = inner.tolerance;
        let violation = c.violation(&p.trajectory(values.clone())?)?.abs();
        if inner.outcome != Outcome::Converged {
            status = status_of(inner.outcome);
            break;
        }
        if violation <= sched.constraint_tolerance {
            status = Status::Converged;
            break;
        }
        if violation > previous_violation {
            status = Status::PenaltyDiverged;
            break;
        }
        previous_violation = violation;
        mu *= sched.growth;
    }
    let x = p.trajectory(values)?;
    let r = c.violation(&x)?;
    finish(
        p,
        Run {
            x,
            gradient_norm,
            gradient_tolerance,
            iterations,
            outer_rounds: rounds,
            status,
            history,
            lambda_penalty: Some(-p.sense().sign() * 2.0 * mu * r),
        },
    )
}

fn finish(p: &VariationalProblem, run: Run) -> Result<SolveResult, SolveError> {
    let x = run.x;
    let objective = p.objective_value(&x)?;
    let el = el_residuals(p, &x)?;
    let transversality = transversality(p, &x)?;
    let (iso, constraint_violation) = match p.constraints() {
        [c] => (Some(iso_conditions(p, &x)?), c.violation(&x)?.abs()),
        _ => (None, 0.0),
    };
    Ok(SolveResult {
        lambda_estimate: iso.as_ref().and_then(|t| t.lambda),
        converged: run.status == Status::Converged,
        x,
        objective,
        gradient_norm: run.gradient_norm,
        gradient_tolerance: run.gradient_tolerance,
        constraint_violation,
        lambda_penalty: run.lambda_penalty,
        iterations: run.iterations,
        outer_rounds: run.outer_rounds,
        status: run.status,
        history: run.history,
        el,
        iso,
        transversality,
    })
}
