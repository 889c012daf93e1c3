//! Composition functionals of delta and nabla integrals.
//!
//! A functional has the shape `H(F1, …, F_{k+n})` where the first `k` inner
//! values are delta integrals of `f(t, x^σ, x^Δ)` and the remaining `n` are
//! nabla integrals of `f(t, x^ρ, x^∇)`. Integrands are expressions in
//! `t, y, v`; the outer function is an expression in `F1…` (or `G1…` for
//! isoperimetric constraints).
//!
//! Everything is evaluated on the discretized time scale of the grid: delta
//! integrands at nodes `t_0 … t_{N−1}` with `y = x(t_{j+1})` and the forward
//! difference, nabla integrands at `t_1 … t_N` with `y = x(t_{j−1})` and the
//! backward difference. The gradient is the exact gradient of that discrete
//! functional with respect to the node values.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{BoundExpr, EvalError, Expression, ParseError};
use crate::gridfn::{forward_difference, GridFnError, GridFunction};
use crate::timescale::{Grid, TimeScale, TimeScaleError};

/// Denominators of outer expressions smaller than this are treated as a
/// domain error (and as an infinite barrier by the solver).
pub const QUOTIENT_GUARD: f64 = 1e-9;

pub const INTEGRAND_VARS: [&str; 3] = ["t", "y", "v"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("integrand {name} ({kind}) at t = {t}: {source}")]
    Integrand {
        name: String,
        kind: IntegralKind,
        t: f64,
        source: EvalError,
    },
    #[error("outer function: {0}")]
    Outer(EvalError),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    TimeScale(#[from] TimeScaleError),
    #[error(transparent)]
    GridFn(#[from] GridFnError),
    #[error("trajectory is defined on a different grid")]
    GridMismatch,
}

impl ProblemError {
    /// True for evaluation failures (as opposed to malformed input).
    pub fn is_domain(&self) -> bool {
        matches!(self, ProblemError::Integrand { .. } | ProblemError::Outer(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegralKind {
    Delta,
    Nabla,
}

impl std::fmt::Display for IntegralKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IntegralKind::Delta => "delta",
            IntegralKind::Nabla => "nabla",
        })
    }
}

/// `f(t, y, v)` integrated with respect to Δt or ∇t.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrand {
    kind: IntegralKind,
    expr: Expression,
    bound: BoundExpr,
}

impl Integrand {
    pub fn new(kind: IntegralKind, expr: Expression) -> Result<Self, ProblemError> {
        let bound = expr.bind(&INTEGRAND_VARS).map_err(|e| {
            ProblemError::Invalid(format!("integrand '{}': {e} (integrands use t, y, v)", expr.source()))
        })?;
        Ok(Self { kind, expr, bound })
    }

    pub fn delta(text: &str) -> Result<Self, ProblemError> {
        Self::new(IntegralKind::Delta, Expression::parse(text)?)
    }

    pub fn nabla(text: &str) -> Result<Self, ProblemError> {
        Self::new(IntegralKind::Nabla, Expression::parse(text)?)
    }

    pub fn kind(&self) -> IntegralKind {
        self.kind
    }

    pub fn expr(&self) -> &Expression {
        &self.expr
    }
}

/// f, f_y and f_v of one integrand at every node.
///
/// Delta samples at t_N and nabla samples at t_0 lie outside the quadrature
/// range; they only feed the ξ/χ traces.
#[derive(Debug, Clone)]
pub(crate) struct Samples {
    pub f: Vec<f64>,
    pub fy: Vec<f64>,
    pub fv: Vec<f64>,
}

/// `H(F1, …, F_{k+n})` over an ordered integrand list (delta ones first).
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionFunctional {
    prefix: String,
    outer: Expression,
    outer_bound: BoundExpr,
    integrands: Vec<Integrand>,
}

impl CompositionFunctional {
    /// Objective-style functional with outer variables `F1…`.
    pub fn new(outer: Expression, integrands: Vec<Integrand>) -> Result<Self, ProblemError> {
        Self::with_prefix("F", outer, integrands)
    }

    /// Parses the outer expression and builds the functional.
    pub fn parse(outer: &str, integrands: Vec<Integrand>) -> Result<Self, ProblemError> {
        Self::new(Expression::parse(outer)?, integrands)
    }

    pub fn with_prefix(prefix: &str, outer: Expression, integrands: Vec<Integrand>) -> Result<Self, ProblemError> {
        if integrands.is_empty() {
            return Err(ProblemError::Invalid("a functional needs at least one integrand".into()));
        }
        if let Some(w) = integrands.windows(2).find(|w| w[0].kind == IntegralKind::Nabla && w[1].kind == IntegralKind::Delta) {
            return Err(ProblemError::Invalid(format!(
                "delta integrands must precede nabla integrands ('{}' follows '{}')",
                w[1].expr.source(),
                w[0].expr.source()
            )));
        }
        let names: Vec<String> = (1..=integrands.len()).map(|i| format!("{prefix}{i}")).collect();
        let slots: Vec<&str> = names.iter().map(String::as_str).collect();
        let outer_bound = outer
            .bind(&slots)
            .map_err(|e| ProblemError::Invalid(e.to_string()))?
            .with_min_denominator(QUOTIENT_GUARD);
        Ok(Self {
            prefix: prefix.to_string(),
            outer,
            outer_bound,
            integrands,
        })
    }

    pub fn outer(&self) -> &Expression {
        &self.outer
    }

    pub fn integrands(&self) -> &[Integrand] {
        &self.integrands
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    /// Number of delta integrands `k`.
    pub fn delta_count(&self) -> usize {
        self.integrands.iter().filter(|i| i.kind == IntegralKind::Delta).count()
    }

    /// Number of nabla integrands `n`.
    pub fn nabla_count(&self) -> usize {
        self.integrands.len() - self.delta_count()
    }

    pub(crate) fn samples(&self, x: &GridFunction) -> Result<Vec<Samples>, ProblemError> {
        let grid = x.grid();
        let xs = x.values();
        let n = xs.len();
        let last = n - 1;
        let d = |j: usize| forward_difference(grid, xs, j);
        // At an endpoint inside an interval the sequence of difference
        // quotients (x^Δ at t_j, x^∇ at t_j) is extended linearly by one node.
        // At a scattered endpoint the value never reaches a residual, so the
        // neighbouring quotient is copied.
        let end_b = if last >= 2 && grid.rho_index(last) == last && grid.rho_index(last - 1) == last - 1 {
            d(last - 1) + (d(last - 1) - d(last - 2)) * grid.step(last - 1) / grid.step(last - 2)
        } else {
            d(last - 1)
        };
        let end_a = if last >= 2 && grid.sigma_index(0) == 0 && grid.sigma_index(1) == 1 {
            d(0) - (d(1) - d(0)) * grid.step(0) / grid.step(1)
        } else {
            d(0)
        };
        let mut out = Vec::with_capacity(self.integrands.len());
        for (idx, integrand) in self.integrands.iter().enumerate() {
            let mut s = Samples {
                f: Vec::with_capacity(n),
                fy: Vec::with_capacity(n),
                fv: Vec::with_capacity(n),
            };
            for (j, &t) in grid.nodes().iter().enumerate() {
                let (y, v) = match integrand.kind {
                    IntegralKind::Delta if j == last => (xs[last], end_b),
                    IntegralKind::Delta => (xs[j + 1], d(j)),
                    IntegralKind::Nabla if j == 0 => (xs[0], end_a),
                    IntegralKind::Nabla => (xs[j - 1], d(j - 1)),
                };
                let args = [t, y, v];
                let wrap = |source| ProblemError::Integrand {
                    name: format!("{}{}", self.prefix, idx + 1),
                    kind: integrand.kind,
                    t,
                    source,
                };
                let (dy, _) = integrand.bound.eval_dual(&args, Some(1)).map_err(wrap)?;
                let (dv, _) = integrand.bound.eval_dual(&args, Some(2)).map_err(wrap)?;
                s.f.push(dy.re);
                s.fy.push(dy.eps);
                s.fv.push(dv.eps);
            }
            out.push(s);
        }
        Ok(out)
    }

    fn quadrature(&self, grid: &Grid, samples: &[Samples]) -> Vec<f64> {
        let n = grid.len();
        self.integrands
            .iter()
            .zip(samples)
            .map(|(integrand, s)| match integrand.kind {
                IntegralKind::Delta => (0..n - 1).map(|j| s.f[j] * grid.step(j)).sum(),
                IntegralKind::Nabla => (1..n).map(|j| s.f[j] * grid.step(j - 1)).sum(),
            })
            .collect()
    }

    /// Inner integrals `F1 … F_{k+n}` in integrand order.
    pub fn inner_integrals(&self, x: &GridFunction) -> Result<Vec<f64>, ProblemError> {
        let samples = self.samples(x)?;
        Ok(self.quadrature(x.grid(), &samples))
    }

    pub fn outer_value(&self, inner: &[f64]) -> Result<f64, ProblemError> {
        self.outer_bound.eval(inner).map_err(ProblemError::Outer)
    }

    /// Outer value and partials H'_i at the given inner integrals.
    pub fn outer_partials(&self, inner: &[f64]) -> Result<(f64, Vec<f64>), ProblemError> {
        self.outer_bound.gradient(inner).map_err(ProblemError::Outer)
    }

    pub fn value(&self, x: &GridFunction) -> Result<f64, ProblemError> {
        let inner = self.inner_integrals(x)?;
        self.outer_value(&inner)
    }

    /// Value and gradient with respect to every node value.
    pub fn value_and_gradient(&self, x: &GridFunction) -> Result<(f64, Vec<f64>), ProblemError> {
        let grid = x.grid();
        let samples = self.samples(x)?;
        let inner = self.quadrature(grid, &samples);
        let (value, outer) = self.outer_partials(&inner)?;
        let n = grid.len();
        let mut grad = vec![0.0; n];
        for ((integrand, s), &w) in self.integrands.iter().zip(&samples).zip(&outer) {
            match integrand.kind {
                // f(t_j, x_{j+1}, (x_{j+1} − x_j)/h_j)·h_j
                IntegralKind::Delta => {
                    for j in 0..n - 1 {
                        grad[j + 1] += w * (s.fy[j] * grid.step(j) + s.fv[j]);
                        grad[j] -= w * s.fv[j];
                    }
                }
                // f(t_j, x_{j−1}, (x_j − x_{j−1})/h_{j−1})·h_{j−1}
                IntegralKind::Nabla => {
                    for j in 1..n {
                        grad[j - 1] += w * (s.fy[j] * grid.step(j - 1) - s.fv[j]);
                        grad[j] += w * s.fv[j];
                    }
                }
            }
        }
        Ok((value, grad))
    }

    /// ξ and χ at every node: `Σ H'_i (f_iv − ∫_a^t f_iy)` over the delta
    /// integrands (ξ, running Δ-integral) and the nabla ones (χ, running ∇-integral).
    pub fn xi_chi(&self, x: &GridFunction) -> Result<(Vec<f64>, Vec<f64>), ProblemError> {
        let grid = x.grid();
        let samples = self.samples(x)?;
        let inner = self.quadrature(grid, &samples);
        let (_, outer) = self.outer_partials(&inner)?;
        let n = grid.len();
        let mut xi = vec![0.0; n];
        let mut chi = vec![0.0; n];
        for ((integrand, s), &w) in self.integrands.iter().zip(&samples).zip(&outer) {
            match integrand.kind {
                IntegralKind::Delta => {
                    let mut running = 0.0;
                    for j in 0..n {
                        xi[j] += w * (s.fv[j] - running);
                        if j + 1 < n {
                            running += s.fy[j] * grid.step(j);
                        }
                    }
                }
                IntegralKind::Nabla => {
                    let mut running = 0.0;
                    for j in 0..n {
                        if j > 0 {
                            running += s.fy[j] * grid.step(j - 1);
                        }
                        chi[j] += w * (s.fv[j] - running);
                    }
                }
            }
        }
        Ok((xi, chi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum Endpoint {
    Fixed(f64),
    Free,
}

impl Endpoint {
    pub fn fixed_value(self) -> Option<f64> {
        match self {
            Endpoint::Fixed(v) => Some(v),
            Endpoint::Free => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundarySpec {
    pub at_a: Endpoint,
    pub at_b: Endpoint,
}

impl BoundarySpec {
    pub fn fixed(xa: f64, xb: f64) -> Self {
        Self {
            at_a: Endpoint::Fixed(xa),
            at_b: Endpoint::Fixed(xb),
        }
    }

    pub fn free() -> Self {
        Self {
            at_a: Endpoint::Free,
            at_b: Endpoint::Free,
        }
    }
}

/// `K(x) = P(G1, …) = d`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoConstraint {
    functional: CompositionFunctional,
    target: f64,
}

impl IsoConstraint {
    pub fn new(outer: Expression, integrands: Vec<Integrand>, target: f64) -> Result<Self, ProblemError> {
        if !target.is_finite() {
            return Err(ProblemError::Invalid("constraint target must be finite".into()));
        }
        Ok(Self {
            functional: CompositionFunctional::with_prefix("G", outer, integrands)?,
            target,
        })
    }

    pub fn parse(outer: &str, integrands: Vec<Integrand>, target: f64) -> Result<Self, ProblemError> {
        Self::new(Expression::parse(outer)?, integrands, target)
    }

    pub fn functional(&self) -> &CompositionFunctional {
        &self.functional
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    /// K(x).
    pub fn value(&self, x: &GridFunction) -> Result<f64, ProblemError> {
        self.functional.value(x)
    }

    /// K(x) − d.
    pub fn violation(&self, x: &GridFunction) -> Result<f64, ProblemError> {
        Ok(self.value(x)? - self.target)
    }

    /// Rescales to `αP` with target `αd`.
    pub fn scaled(&self, alpha: f64) -> Result<Self, ProblemError> {
        let outer = Expression::parse(&format!("({}) * ({alpha:?})", self.functional.outer.source()))?;
        Self::new(outer, self.functional.integrands.clone(), alpha * self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// +1 for minimization, −1 for maximization.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalProblem {
    grid: Arc<Grid>,
    objective: CompositionFunctional,
    sense: Sense,
    boundary: BoundarySpec,
    constraints: Vec<IsoConstraint>,
}

impl VariationalProblem {
    pub fn new(
        timescale: TimeScale,
        resolution: usize,
        objective: CompositionFunctional,
        sense: Sense,
        boundary: BoundarySpec,
    ) -> Result<Self, ProblemError> {
        for v in [boundary.at_a, boundary.at_b].iter().filter_map(|e| e.fixed_value()) {
            if !v.is_finite() {
                return Err(ProblemError::Invalid(format!("boundary value {v} is not finite")));
            }
        }
        let grid = Arc::new(timescale.build_grid(resolution)?);
        Ok(Self {
            grid,
            objective,
            sense,
            boundary,
            constraints: Vec::new(),
        })
    }

    pub fn with_constraint(mut self, c: IsoConstraint) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn timescale(&self) -> &TimeScale {
        self.grid.timescale()
    }

    pub fn objective(&self) -> &CompositionFunctional {
        &self.objective
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn boundary(&self) -> BoundarySpec {
        self.boundary
    }

    pub fn constraints(&self) -> &[IsoConstraint] {
        &self.constraints
    }

    pub fn check_grid(&self, x: &GridFunction) -> Result<(), ProblemError> {
        if Arc::ptr_eq(x.grid(), &self.grid) || **x.grid() == *self.grid {
            Ok(())
        } else {
            Err(ProblemError::GridMismatch)
        }
    }

    /// Builds a trajectory on this problem's grid.
    pub fn trajectory(&self, values: Vec<f64>) -> Result<GridFunction, ProblemError> {
        Ok(GridFunction::new(self.grid.clone(), values)?)
    }

    pub fn trajectory_from_fn(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction, ProblemError> {
        Ok(GridFunction::from_fn(self.grid.clone(), f)?)
    }

    /// Node indices whose values are optimization variables.
    pub fn free_nodes(&self) -> Vec<usize> {
        let n = self.grid.len();
        (0..n)
            .filter(|&i| {
                !(i == 0 && matches!(self.boundary.at_a, Endpoint::Fixed(_))
                    || i == n - 1 && matches!(self.boundary.at_b, Endpoint::Fixed(_)))
            })
            .collect()
    }

    /// Straight line between the fixed boundary values; flat at the fixed
    /// value when one end is free, zero when both are.
    pub fn linear_initializer(&self) -> GridFunction {
        let (a, b) = (self.timescale().a(), self.timescale().b());
        let line = match (self.boundary.at_a, self.boundary.at_b) {
            (Endpoint::Fixed(xa), Endpoint::Fixed(xb)) => {
                return GridFunction::from_parts(
                    self.grid.clone(),
                    self.grid.nodes().iter().map(|&t| xa + (xb - xa) * (t - a) / (b - a)).collect(),
                )
            }
            (Endpoint::Fixed(v), Endpoint::Free) | (Endpoint::Free, Endpoint::Fixed(v)) => v,
            (Endpoint::Free, Endpoint::Free) => 0.0,
        };
        GridFunction::constant(self.grid.clone(), line)
    }

    /// Overwrites fixed boundary nodes with their prescribed values.
    pub fn apply_boundary(&self, values: &mut [f64]) {
        if let Endpoint::Fixed(v) = self.boundary.at_a {
            values[0] = v;
        }
        if let Endpoint::Fixed(v) = self.boundary.at_b {
            values[values.len() - 1] = v;
        }
    }

    /// Largest deviation of `x` from its fixed boundary values.
    pub fn boundary_violation(&self, x: &GridFunction) -> f64 {
        let xs = x.values();
        let mut worst: f64 = 0.0;
        if let Endpoint::Fixed(v) = self.boundary.at_a {
            worst = worst.max((xs[0] - v).abs());
        }
        if let Endpoint::Fixed(v) = self.boundary.at_b {
            worst = worst.max((xs[xs.len() - 1] - v).abs());
        }
        worst
    }

    pub fn inner_integrals(&self, x: &GridFunction) -> Result<Vec<f64>, ProblemError> {
        self.check_grid(x)?;
        self.objective.inner_integrals(x)
    }

    pub fn objective_value(&self, x: &GridFunction) -> Result<f64, ProblemError> {
        self.check_grid(x)?;
        self.objective.value(x)
    }

    /// ∂L/∂x_j, zero at fixed boundary nodes.
    pub fn objective_gradient(&self, x: &GridFunction) -> Result<GridFunction, ProblemError> {
        self.check_grid(x)?;
        let (_, mut grad) = self.objective.value_and_gradient(x)?;
        self.zero_fixed(&mut grad);
        Ok(GridFunction::from_parts(self.grid.clone(), grad))
    }

    pub(crate) fn zero_fixed(&self, grad: &mut [f64]) {
        if matches!(self.boundary.at_a, Endpoint::Fixed(_)) {
            grad[0] = 0.0;
        }
        if matches!(self.boundary.at_b, Endpoint::Fixed(_)) {
            let n = grad.len();
            grad[n - 1] = 0.0;
        }
    }

    /// ‖x‖₁,∞ = ‖x^σ‖∞ + ‖x^Δ‖∞ + ‖x^ρ‖∞ + ‖x^∇‖∞ on the grid.
    pub fn weak_norm(&self, x: &GridFunction) -> f64 {
        let xs = x.values();
        let n = xs.len();
        let sup = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0_f64, |m, v| m.max(v.abs()));
        let diffs: Vec<f64> = (0..n - 1).map(|j| forward_difference(&self.grid, xs, j)).collect();
        sup(&mut xs[1..].iter().copied())
            + sup(&mut diffs.iter().copied())
            + sup(&mut xs[..n - 1].iter().copied())
            + sup(&mut diffs.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example2(ts: &str, res: usize) -> VariationalProblem {
        let f = CompositionFunctional::parse(
            "F1/F2",
            vec![Integrand::delta("v^2").unwrap(), Integrand::nabla("v + v^2").unwrap()],
        )
        .unwrap();
        VariationalProblem::new(TimeScale::parse(ts).unwrap(), res, f, Sense::Minimize, BoundarySpec::fixed(0.0, 4.0))
            .unwrap()
    }

    fn example1(ts: &str, res: usize) -> VariationalProblem {
        let f = CompositionFunctional::parse(
            "F1/F2",
            vec![Integrand::delta("t*v").unwrap(), Integrand::nabla("v^2").unwrap()],
        )
        .unwrap();
        VariationalProblem::new(TimeScale::parse(ts).unwrap(), res, f, Sense::Minimize, BoundarySpec::fixed(0.0, 1.0))
            .unwrap()
    }

    #[test]
    fn inner_integrals_of_affine_trajectory() {
        let p = example2("[0,2]", 100);
        let x = p.trajectory_from_fn(|t| 2.0 * t).unwrap();
        let f = p.inner_integrals(&x).unwrap();
        assert!((f[0] - 8.0).abs() < 1e-6 && (f[1] - 12.0).abs() < 1e-6, "{f:?}");
        assert!((p.objective_value(&x).unwrap() - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn inner_integrals_at_discrete_extremal() {
        let p = example1("{0},{0.5},{1}", 1);
        let s2 = std::f64::consts::SQRT_2;
        let x = p.trajectory(vec![0.0, 1.0 + s2 / 2.0, 1.0]).unwrap();
        let f = p.inner_integrals(&x).unwrap();
        let q = (1.0 - s2) / 8.0;
        assert!((f[1] - (64.0 * q * q + 1.0) / (64.0 * q * q)).abs() < 1e-12);
        assert!((p.objective_value(&x).unwrap() - q).abs() < 1e-12);
    }

    #[test]
    fn zero_trajectory_and_constant_outer() {
        let p = example2("[0,2]", 10);
        let zero = GridFunction::constant(p.grid().clone(), 0.0);
        assert_eq!(p.inner_integrals(&zero).unwrap(), vec![0.0, 0.0]);
        // F2 = 0 makes the quotient a domain error
        let err = p.objective_value(&zero).unwrap_err();
        assert!(err.is_domain(), "{err}");

        let f = CompositionFunctional::parse("F1*0 + 1", vec![Integrand::delta("v^2").unwrap()]).unwrap();
        let p = VariationalProblem::new(TimeScale::parse("[0,1]").unwrap(), 8, f, Sense::Minimize, BoundarySpec::free()).unwrap();
        let x = p.trajectory_from_fn(|t| t.sin()).unwrap();
        assert_eq!(p.objective_value(&x).unwrap(), 1.0);
        assert!(p.objective_gradient(&x).unwrap().values().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn validation() {
        let err = CompositionFunctional::parse("F3", vec![Integrand::delta("v").unwrap(), Integrand::nabla("v").unwrap()]).unwrap_err();
        assert!(err.to_string().contains("unknown variable F3"), "{err}");
        assert!(Integrand::delta("x*v").is_err());
        assert!(CompositionFunctional::parse("F1", vec![]).is_err());
        assert!(CompositionFunctional::parse("F1+F2", vec![Integrand::nabla("v").unwrap(), Integrand::delta("v").unwrap()]).is_err());
        assert!(IsoConstraint::parse("G1", vec![], 1.0).is_err());
        assert!(IsoConstraint::parse("F1", vec![Integrand::nabla("v").unwrap()], 1.0).is_err());
    }

    #[test]
    fn integrand_domain_errors_name_the_node() {
        let f = CompositionFunctional::parse("F1", vec![Integrand::nabla("log(y)").unwrap()]).unwrap();
        let p = VariationalProblem::new(TimeScale::parse("{0},{1},{2}").unwrap(), 1, f, Sense::Minimize, BoundarySpec::free()).unwrap();
        let x = p.trajectory(vec![1.0, -1.0, 1.0]).unwrap();
        let err = p.objective_value(&x).unwrap_err();
        assert!(matches!(err, ProblemError::Integrand { t, .. } if t == 2.0), "{err}");
    }

    #[test]
    fn constraint_values() {
        let c = IsoConstraint::parse("G1", vec![Integrand::nabla("t*v").unwrap()], 1.0).unwrap();
        let p = example1("{0},{0.5},{1}", 1).with_constraint(c.clone());
        let x = p.trajectory(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(c.value(&x).unwrap(), 1.0);
        let zero = GridFunction::constant(p.grid().clone(), 0.0);
        assert_eq!(c.violation(&zero).unwrap(), -1.0);

        let pr = example1("[0,1]", 2000);
        let x = pr.trajectory_from_fn(|t| 3.0 * t * t - 2.0 * t).unwrap();
        assert!(c.violation(&x).unwrap().abs() < 1e-2);
    }

    #[test]
    fn initializer_and_boundary() {
        let p = example2("[0,2]", 2);
        assert_eq!(p.linear_initializer().values(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p.free_nodes(), vec![1, 2, 3]);
        let x = p.trajectory(vec![0.5, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.boundary_violation(&x), 0.5);
        let mut v = x.into_values();
        p.apply_boundary(&mut v);
        assert_eq!(v[0], 0.0);
    }

    #[test]
    fn weak_norm_of_linear() {
        let p = example2("{0},{1},{2}", 1);
        let x = p.trajectory(vec![0.0, 2.0, 4.0]).unwrap();
        // sup|x^σ| + sup|x^Δ| + sup|x^ρ| + sup|x^∇| = 4 + 2 + 2 + 2
        assert_eq!(p.weak_norm(&x), 10.0);
    }

    #[test]
    fn grid_mismatch() {
        let p = example2("[0,2]", 4);
        let q = example2("[0,2]", 5);
        let x = q.linear_initializer();
        assert_eq!(p.objective_value(&x), Err(ProblemError::GridMismatch));
    }

    fn fd_check(p: &VariationalProblem, x: &GridFunction) -> f64 {
        let (_, g) = p.objective().value_and_gradient(x).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..x.len() {
            let h = 1e-6 * (1.0 + x.values()[i].abs());
            let mut up = x.values().to_vec();
            up[i] += h;
            let mut dn = x.values().to_vec();
            dn[i] -= h;
            let fd = (p.objective_value(&p.trajectory(up).unwrap()).unwrap()
                - p.objective_value(&p.trajectory(dn).unwrap()).unwrap())
                / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / (1.0 + g[i].abs()));
        }
        worst
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cases: [(VariationalProblem, fn(f64) -> f64); 3] = [
            (example1("[0,1]", 20), |t: f64| 3.0 * t - 2.0 * t * t + 0.1 * (7.0 * t).sin()),
            (example2("[0,1],[2,3]", 8), |t: f64| 1.0 + t * t),
            (example2("{0},{1},{2}", 1), |t: f64| t * t + 0.5),
        ];
        for (p, x) in cases {
            let x = p.trajectory_from_fn(x).unwrap();
            assert!(fd_check(&p, &x) < 1e-6);
        }
    }

    #[test]
    fn grid_residual_is_gradient_difference() {
        // ∂L/∂x_m = R_m − R_{m+1} with R_m = ξ_{m−1} + χ_m
        let p = example2("[0,1],[1.5,2]", 10);
        let x = p.trajectory_from_fn(|t| 1.0 + 2.0 * t + 0.3 * t * t).unwrap();
        let (_, g) = p.objective().value_and_gradient(&x).unwrap();
        let (xi, chi) = p.objective().xi_chi(&x).unwrap();
        let n = x.len();
        let r: Vec<f64> = (1..n).map(|m| xi[m - 1] + chi[m]).collect();
        for m in 1..n - 1 {
            assert!((g[m] - (r[m - 1] - r[m])).abs() < 1e-10, "node {m}");
        }
        assert!((g[0] + xi[0] + chi[1]).abs() < 1e-10);
    }
}
