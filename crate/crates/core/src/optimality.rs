//! Residuals of the first-order necessary conditions.
//!
//! The Euler–Lagrange traces use the exact jump operators of the time scale
//! (so at a dense node `ξ^ρ(t) = ξ(t)`), which makes the nabla and delta
//! forms coincide on regular scales and differ at the scattered junctions of
//! irregular ones. On a dense part the exact forms are only O(h)-consistent
//! with the discretized problem, so each trace also carries the grid form
//! `R_m = ξ(t_{m−1}) + χ(t_m)`, which is constant exactly when the gradient of
//! the discretized functional vanishes on interior nodes.

use serde::Serialize;

use crate::gridfn::GridFunction;
use crate::timescale::Grid;
use crate::varproblem::{
    CompositionFunctional, Endpoint, Integrand, IntegralKind, IsoConstraint, ProblemError, VariationalProblem,
};

/// Both `u(t)+w(σ(t))` and `u(ρ(t))+w(t)` must vary by less than this for a
/// trajectory to count as an extremal for the constraint.
pub const ABNORMAL_TOL: f64 = 1e-8;

/// Values of a residual on a subset of grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeTrace {
    pub index: Vec<usize>,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl NodeTrace {
    fn collect(grid: &Grid, index: Vec<usize>, f: impl Fn(usize) -> f64) -> Self {
        let t = index.iter().map(|&i| grid.nodes()[i]).collect();
        let values = index.iter().map(|&i| f(i)).collect();
        Self { index, t, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// max |r − mean(r)|; 0 for fewer than two nodes.
    pub fn deviation(&self) -> f64 {
        let m = self.mean();
        self.values.iter().fold(0.0, |acc, v| acc.max((v - m).abs()))
    }

    /// Deviation divided by the largest |r| (0 when r ≡ 0).
    pub fn relative_deviation(&self) -> f64 {
        let scale = self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if scale == 0.0 {
            0.0
        } else {
            self.deviation() / scale
        }
    }

    /// Value at grid node `i`, if the trace covers it.
    pub fn at(&self, i: usize) -> Option<f64> {
        self.index.binary_search(&i).ok().map(|k| self.values[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ELTrace {
    pub xi: GridFunction,
    pub chi: GridFunction,
    /// ξ(ρ(t)) + χ(t) on 𝕋_κ.
    pub residual_nabla: NodeTrace,
    /// ξ(t) + χ(σ(t)) on 𝕋^κ.
    pub residual_delta: NodeTrace,
    /// ξ(t_{m−1}) + χ(t_m) for m = 1..N.
    pub discrete_residual: NodeTrace,
    pub constancy_deviation_nabla: f64,
    pub constancy_deviation_delta: f64,
    pub discrete_deviation: f64,
}

impl ELTrace {
    pub fn relative_deviation_nabla(&self) -> f64 {
        self.residual_nabla.relative_deviation()
    }

    pub fn relative_deviation_delta(&self) -> f64 {
        self.residual_delta.relative_deviation()
    }

    /// Whether both forms are constant within `tol`.
    pub fn is_extremal(&self, tol: f64) -> bool {
        self.constancy_deviation_nabla <= tol && self.constancy_deviation_delta <= tol
    }
}

/// Default constancy tolerance: 1e−6 on purely discrete scales, `5/resolution`
/// when the scale has dense parts.
pub fn default_tolerance(grid: &Grid) -> f64 {
    if grid.timescale().is_discrete() {
        1e-6
    } else {
        5.0 / grid.dense_resolution() as f64
    }
}

/// ξ and χ of the objective at `x`.
pub fn compute_xi_chi(p: &VariationalProblem, x: &GridFunction) -> Result<(GridFunction, GridFunction), ProblemError> {
    p.check_grid(x)?;
    let (xi, chi) = p.objective().xi_chi(x)?;
    Ok((wrap(x, xi), wrap(x, chi)))
}

fn wrap(x: &GridFunction, values: Vec<f64>) -> GridFunction {
    GridFunction::from_parts(x.grid().clone(), values)
}

fn lower_nodes(grid: &Grid) -> Vec<usize> {
    (0..grid.len()).filter(|&i| grid.in_kappa_lower(i)).collect()
}

fn upper_nodes(grid: &Grid) -> Vec<usize> {
    (0..grid.len()).filter(|&i| grid.in_kappa_upper(i)).collect()
}

fn both_nodes(grid: &Grid) -> Vec<usize> {
    (0..grid.len()).filter(|&i| grid.in_kappa_upper(i) && grid.in_kappa_lower(i)).collect()
}

/// `a(ρ(t)) + b(t)` on 𝕋_κ.
fn nabla_form(grid: &Grid, a: &[f64], b: &[f64]) -> NodeTrace {
    NodeTrace::collect(grid, lower_nodes(grid), |i| a[grid.rho_index(i)] + b[i])
}

/// `a(t) + b(σ(t))` on 𝕋^κ.
fn delta_form(grid: &Grid, a: &[f64], b: &[f64]) -> NodeTrace {
    NodeTrace::collect(grid, upper_nodes(grid), |i| a[i] + b[grid.sigma_index(i)])
}

/// `a(t_{m−1}) + b(t_m)`, m = 1..N.
fn grid_form(grid: &Grid, a: &[f64], b: &[f64]) -> NodeTrace {
    NodeTrace::collect(grid, (1..grid.len()).collect(), |m| a[m - 1] + b[m])
}

pub fn el_residuals(p: &VariationalProblem, x: &GridFunction) -> Result<ELTrace, ProblemError> {
    let (xi, chi) = compute_xi_chi(p, x)?;
    let grid = x.grid();
    let residual_nabla = nabla_form(grid, xi.values(), chi.values());
    let residual_delta = delta_form(grid, xi.values(), chi.values());
    let discrete_residual = grid_form(grid, xi.values(), chi.values());
    Ok(ELTrace {
        constancy_deviation_nabla: residual_nabla.deviation(),
        constancy_deviation_delta: residual_delta.deviation(),
        discrete_deviation: discrete_residual.deviation(),
        xi,
        chi,
        residual_nabla,
        residual_delta,
        discrete_residual,
    })
}

/// max |residual_nabla − residual_delta| over 𝕋^κ_κ.
pub fn el_residuals_differ_on_irregular(trace: &ELTrace) -> f64 {
    let grid = trace.xi.grid();
    both_nodes(grid)
        .into_iter()
        .filter_map(|i| Some((trace.residual_nabla.at(i)? - trace.residual_delta.at(i)?).abs()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransversalityReport {
    /// None when x(a) is fixed or ρ(σ(a)) ≠ a.
    pub initial_residual: Option<f64>,
    /// None when x(b) is fixed or σ(ρ(b)) ≠ b.
    pub terminal_residual: Option<f64>,
    pub hypothesis_initial_ok: bool,
    pub hypothesis_terminal_ok: bool,
}

pub fn transversality(p: &VariationalProblem, x: &GridFunction) -> Result<TransversalityReport, ProblemError> {
    p.check_grid(x)?;
    let grid = x.grid();
    let last = grid.len() - 1;
    let hypothesis_initial_ok = grid.rho_index(grid.sigma_index(0)) == 0;
    let hypothesis_terminal_ok = grid.sigma_index(grid.rho_index(last)) == last;
    let boundary = p.boundary();
    let wants_initial = boundary.at_a == Endpoint::Free && hypothesis_initial_ok;
    let wants_terminal = boundary.at_b == Endpoint::Free && hypothesis_terminal_ok;
    let (mut initial_residual, mut terminal_residual) = (None, None);
    if wants_initial || wants_terminal {
        // The initial residual Σ_Δ H' f_v(a) + Σ_∇ H' (f_v(σ(a)) − ∫_a^σ(a) f_y) is
        // −∂L/∂x(a); the terminal one is +∂L/∂x(b).
        let (_, g) = p.objective().value_and_gradient(x)?;
        if wants_initial {
            initial_residual = Some(-g[0]);
        }
        if wants_terminal {
            terminal_residual = Some(g[last]);
        }
    }
    Ok(TransversalityReport {
        initial_residual,
        terminal_residual,
        hypothesis_initial_ok,
        hypothesis_terminal_ok,
    })
}

/// `∫ f1 Δt / ∫ f2 ∇t`.
pub fn quotient_problem(f1: Integrand, f2: Integrand) -> Result<CompositionFunctional, ProblemError> {
    if f1.kind() != IntegralKind::Delta || f2.kind() != IntegralKind::Nabla {
        return Err(ProblemError::Invalid(
            "a quotient needs a delta numerator and a nabla denominator".into(),
        ));
    }
    CompositionFunctional::parse("F1/F2", vec![f1, f2])
}

/// u and w of the constraint at `x`.
pub fn compute_u_w(c: &IsoConstraint, x: &GridFunction) -> Result<(GridFunction, GridFunction), ProblemError> {
    let (u, w) = c.functional().xi_chi(x)?;
    Ok((wrap(x, u), wrap(x, w)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsoTrace {
    pub u: GridFunction,
    pub w: GridFunction,
    /// None for abnormal extremizers, where no multiplier is determined.
    pub lambda: Option<f64>,
    /// Left sides of conditions 1–4 at the fitted λ (0 when abnormal).
    pub conditions: [NodeTrace; 4],
    pub condition_deviations: [f64; 4],
    /// ξ(t_{m−1}) + χ(t_m) − λ (u(t_{m−1}) + w(t_m)).
    pub discrete_condition: NodeTrace,
    pub discrete_deviation: f64,
    pub normal: bool,
    /// Deviations of u^ρ + w (on 𝕋_κ) and u + w^σ (on 𝕋^κ) from constancy.
    pub normality_deviations: [f64; 2],
}

/// Least-squares λ for `R − λS = const`: minimizes the variance of `R − λS`.
fn fit_lambda(r: &[f64], s: &[f64]) -> Option<f64> {
    let n = r.len() as f64;
    if r.is_empty() {
        return None;
    }
    let mr = r.iter().sum::<f64>() / n;
    let ms = s.iter().sum::<f64>() / n;
    let (mut cov, mut var) = (0.0, 0.0);
    for (a, b) in r.iter().zip(s) {
        cov += (a - mr) * (b - ms);
        var += (b - ms) * (b - ms);
    }
    (var > 0.0).then(|| cov / var)
}

pub fn iso_conditions(p: &VariationalProblem, x: &GridFunction) -> Result<IsoTrace, ProblemError> {
    let c = match p.constraints() {
        [c] => c,
        other => {
            return Err(ProblemError::Invalid(format!(
                "isoperimetric conditions need exactly one constraint, found {}",
                other.len()
            )))
        }
    };
    let (xi, chi) = compute_xi_chi(p, x)?;
    let (u, w) = compute_u_w(c, x)?;
    let grid = x.grid();
    let (xi, chi, uv, wv) = (xi.values(), chi.values(), u.values(), w.values());

    let s_nabla = nabla_form(grid, uv, wv);
    let s_delta = delta_form(grid, uv, wv);
    let normality_deviations = [s_nabla.deviation(), s_delta.deviation()];
    let normal = !(normality_deviations[0] < ABNORMAL_TOL && normality_deviations[1] < ABNORMAL_TOL);

    let r_grid = grid_form(grid, xi, chi);
    let s_grid = grid_form(grid, uv, wv);
    let lambda = if normal { fit_lambda(&r_grid.values, &s_grid.values) } else { None };
    let l = lambda.unwrap_or(0.0);

    let lower = lower_nodes(grid);
    let upper = upper_nodes(grid);
    let both = both_nodes(grid);
    let xr = |i: usize| xi[grid.rho_index(i)] + chi[i];
    let xs = |i: usize| xi[i] + chi[grid.sigma_index(i)];
    let ur = |i: usize| uv[grid.rho_index(i)] + wv[i];
    let us = |i: usize| uv[i] + wv[grid.sigma_index(i)];
    let conditions = [
        NodeTrace::collect(grid, lower, |i| xr(i) - l * ur(i)),
        NodeTrace::collect(grid, both.clone(), |i| xs(i) - l * ur(i)),
        NodeTrace::collect(grid, both, |i| xr(i) - l * us(i)),
        NodeTrace::collect(grid, upper, |i| xs(i) - l * us(i)),
    ];
    let condition_deviations = [
        conditions[0].deviation(),
        conditions[1].deviation(),
        conditions[2].deviation(),
        conditions[3].deviation(),
    ];
    let discrete_condition = NodeTrace::collect(grid, r_grid.index.clone(), |m| {
        xi[m - 1] + chi[m] - l * (uv[m - 1] + wv[m])
    });
    Ok(IsoTrace {
        discrete_deviation: discrete_condition.deviation(),
        discrete_condition,
        u,
        w,
        lambda,
        conditions,
        condition_deviations,
        normal,
        normality_deviations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timescale::TimeScale;
    use crate::varproblem::{BoundarySpec, Sense};

    fn problem(ts: &str, res: usize, f: CompositionFunctional, bc: BoundarySpec) -> VariationalProblem {
        VariationalProblem::new(TimeScale::parse(ts).unwrap(), res, f, Sense::Minimize, bc).unwrap()
    }

    fn example1(ts: &str, res: usize) -> VariationalProblem {
        let f = quotient_problem(Integrand::delta("t*v").unwrap(), Integrand::nabla("v^2").unwrap()).unwrap();
        problem(ts, res, f, BoundarySpec::fixed(0.0, 1.0))
    }

    fn example2(ts: &str, res: usize) -> VariationalProblem {
        let f = quotient_problem(Integrand::delta("v^2").unwrap(), Integrand::nabla("v + v^2").unwrap()).unwrap();
        problem(ts, res, f, BoundarySpec::fixed(0.0, 4.0))
    }

    fn iso(ts: &str, res: usize) -> VariationalProblem {
        let f = quotient_problem(Integrand::delta("v^2").unwrap(), Integrand::nabla("t*v").unwrap()).unwrap();
        let c = IsoConstraint::parse("G1", vec![Integrand::nabla("t*v").unwrap()], 1.0).unwrap();
        problem(ts, res, f, BoundarySpec::fixed(0.0, 1.0)).with_constraint(c)
    }

    #[test]
    fn xi_for_example1_is_t_over_f2() {
        let p = example1("[0,1]", 50);
        let x = p.trajectory_from_fn(|t| t + 0.3 * t * (1.0 - t)).unwrap();
        let f = p.inner_integrals(&x).unwrap();
        let (xi, _) = compute_xi_chi(&p, &x).unwrap();
        for (&t, &v) in p.grid().nodes().iter().zip(xi.values()) {
            assert!((v - t / f[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn xi_of_single_delta_is_derivative() {
        let f = CompositionFunctional::parse("F1", vec![Integrand::delta("v^2/2").unwrap()]).unwrap();
        let p = problem("[0,1],[2,2.5]", 10, f, BoundarySpec::free());
        let x = p.trajectory_from_fn(|t| t.sin()).unwrap();
        let (xi, chi) = compute_xi_chi(&p, &x).unwrap();
        let n = x.len() - 1;
        assert_eq!(xi.values()[..n], x.delta_derivative().values()[..n]);
        // the dense endpoint extends the quotient sequence linearly
        let d = x.delta_derivative();
        let expect = 2.0 * d.values()[n - 1] - d.values()[n - 2];
        assert!((xi.values()[n] - expect).abs() < 1e-12);
        assert!(chi.values().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn example2_affine_extremal_on_any_scale() {
        for (ts, res) in [("[0,2]", 100), ("{0},{1},{2}", 1), ("[0,0.5],{1},[1.5,2]", 7)] {
            let p = example2(ts, res);
            let x = p.trajectory_from_fn(|t| 2.0 * t).unwrap();
            let tr = el_residuals(&p, &x).unwrap();
            assert!(tr.constancy_deviation_nabla < 1e-9, "{ts}");
            assert!(tr.constancy_deviation_delta < 1e-9, "{ts}");
            assert!(tr.is_extremal(default_tolerance(p.grid())));
        }
    }

    #[test]
    fn example1_discrete_extremal_and_perturbation() {
        let p = example1("{0},{0.5},{1}", 1);
        let y = 1.0 + std::f64::consts::SQRT_2 / 2.0;
        let x = p.trajectory(vec![0.0, y, 1.0]).unwrap();
        let tr = el_residuals(&p, &x).unwrap();
        assert!(tr.constancy_deviation_nabla < 1e-12 && tr.constancy_deviation_delta < 1e-12);
        let x = p.trajectory(vec![0.0, y + 0.1, 1.0]).unwrap();
        let tr = el_residuals(&p, &x).unwrap();
        // |L'(y)|/2 ≈ 2.5e−3 absolute, about 5% of the residual's magnitude
        assert!(tr.relative_deviation_nabla() > 1e-2 && tr.relative_deviation_delta() > 1e-2);
        assert!(!tr.is_extremal(default_tolerance(p.grid())));
    }

    #[test]
    fn quotient_residual_matches_closed_form() {
        // (1/F2)·ρ(t) − 2(F1/F2²)·x^∇(t) for L = ∫ t x^Δ / ∫ (x^∇)²
        let p = example1("{0},{0.25},{0.5},[0.6,1]", 10);
        let x = p.trajectory_from_fn(|t| t * t + 0.2 * t).unwrap();
        let f = p.inner_integrals(&x).unwrap();
        let tr = el_residuals(&p, &x).unwrap();
        let grid = p.grid();
        let nab = x.nabla_derivative();
        for (k, &i) in tr.residual_nabla.index.iter().enumerate() {
            let t_rho = grid.nodes()[grid.rho_index(i)];
            let expect = t_rho / f[1] - 2.0 * f[0] / (f[1] * f[1]) * nab.values()[i];
            assert!((tr.residual_nabla.values[k] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn forms_coincide_on_regular_and_differ_on_irregular() {
        let f = CompositionFunctional::parse(
            "F1 + F2",
            vec![Integrand::delta("v^2").unwrap(), Integrand::nabla("y*v").unwrap()],
        )
        .unwrap();
        let p = problem("[0,1]", 40, f.clone(), BoundarySpec::free());
        let x = p.trajectory_from_fn(|t| t * t).unwrap();
        assert!(el_residuals_differ_on_irregular(&el_residuals(&p, &x).unwrap()) < 1e-9);

        let p = problem("[0,1],[2,3]", 20, f, BoundarySpec::free());
        let x = p.trajectory_from_fn(|t| t * t).unwrap();
        let tr = el_residuals(&p, &x).unwrap();
        assert!(el_residuals_differ_on_irregular(&tr) > 0.0);
        for t in [1.0, 2.0] {
            let i = p.grid().node_index(t).unwrap();
            let d = (tr.residual_nabla.at(i).unwrap() - tr.residual_delta.at(i).unwrap()).abs();
            assert!(d > 1e-3, "t = {t}: {d}");
        }
    }

    #[test]
    fn pure_nabla_forms() {
        let f = CompositionFunctional::parse("F1", vec![Integrand::nabla("v^2 + y").unwrap()]).unwrap();
        let p = problem("{0},[1,2]", 8, f, BoundarySpec::free());
        let x = p.trajectory_from_fn(|t| t.cos()).unwrap();
        let tr = el_residuals(&p, &x).unwrap();
        let grid = p.grid();
        for (k, &i) in tr.residual_delta.index.iter().enumerate() {
            assert_eq!(tr.residual_delta.values[k], tr.chi.values()[grid.sigma_index(i)]);
        }
        for (k, &i) in tr.residual_nabla.index.iter().enumerate() {
            assert_eq!(tr.residual_nabla.values[k], tr.chi.values()[i]);
        }
    }

    #[test]
    fn transversality_reports() {
        let f = CompositionFunctional::parse("F1", vec![Integrand::delta("v^2/2").unwrap()]).unwrap();
        let bc = BoundarySpec {
            at_a: Endpoint::Fixed(0.0),
            at_b: Endpoint::Free,
        };
        let p = problem("[0,1]", 20, f, bc);
        let zero = GridFunction::constant(p.grid().clone(), 0.0);
        let r = transversality(&p, &zero).unwrap();
        assert_eq!(r.initial_residual, None);
        assert_eq!(r.terminal_residual, Some(0.0));

        let p = example1("{0},{0.5},{1}", 1);
        let r = transversality(&p, &p.linear_initializer()).unwrap();
        assert!(r.hypothesis_initial_ok && r.hypothesis_terminal_ok);
        assert_eq!((r.initial_residual, r.terminal_residual), (None, None));

        // both hypotheses hold on every closed scale; check a mixed one
        let f = CompositionFunctional::parse("F1", vec![Integrand::delta("v^2").unwrap()]).unwrap();
        let p = problem("[0,1],{2}", 4, f, BoundarySpec::free());
        let r = transversality(&p, &p.linear_initializer()).unwrap();
        assert!(r.hypothesis_initial_ok && r.hypothesis_terminal_ok);
        assert!(r.terminal_residual.is_some());
    }

    #[test]
    fn transversality_formula_matches_integrals() {
        let f = CompositionFunctional::parse(
            "F1*F2",
            vec![Integrand::delta("v^2 + t*y").unwrap(), Integrand::nabla("y*v + 1").unwrap()],
        )
        .unwrap();
        let p = problem("{0},{0.5},[1,2]", 4, f, BoundarySpec::free());
        let x = p.trajectory_from_fn(|t| 1.0 + t * t).unwrap();
        let r = transversality(&p, &x).unwrap();
        let inner = p.inner_integrals(&x).unwrap();
        let (h1, h2) = (inner[1], inner[0]);
        let xs = x.values();
        let g = p.grid();
        let n = xs.len() - 1;
        // Σ_Δ H' f_v(a) + Σ_∇ H' (f_v(σ(a)) − f_y(σ(a)) μ(a))
        let d0 = (xs[1] - xs[0]) / g.step(0);
        let init = h1 * 2.0 * d0 + h2 * (xs[0] - d0 * g.step(0));
        assert!((r.initial_residual.unwrap() - init).abs() < 1e-12);
        let dn = (xs[n] - xs[n - 1]) / g.step(n - 1);
        let term = h1 * (2.0 * dn + g.nodes()[n - 1] * g.step(n - 1)) + h2 * xs[n - 1];
        assert!((r.terminal_residual.unwrap() - term).abs() < 1e-12);
    }

    #[test]
    fn u_w_of_nabla_constraint() {
        let p = iso("[0,1]", 20);
        let x = p.linear_initializer();
        let (u, w) = compute_u_w(&p.constraints()[0], &x).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
        for (&t, &v) in p.grid().nodes().iter().zip(w.values()) {
            assert!((v - t).abs() < 1e-15);
        }
        let c = IsoConstraint::parse("G1", vec![Integrand::nabla("v").unwrap()], 1.0).unwrap();
        let (_, w) = compute_u_w(&c, &x).unwrap();
        assert!(w.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn iso_discrete_multiplier() {
        let p = iso("{0},{0.5},{1}", 1);
        let x = p.trajectory(vec![0.0, 0.0, 1.0]).unwrap();
        let tr = iso_conditions(&p, &x).unwrap();
        assert!(tr.normal);
        assert!((tr.lambda.unwrap() - 6.0).abs() < 1e-12);
        assert!(tr.condition_deviations.iter().all(|&d| d < 1e-12), "{:?}", tr.condition_deviations);
        assert_eq!(tr.conditions[0].values, vec![-4.0, -4.0]);
    }

    #[test]
    fn iso_dense_multiplier() {
        let p = iso("[0,1]", 4000);
        let x = p.trajectory_from_fn(|t| 3.0 * t * t - 2.0 * t).unwrap();
        let tr = iso_conditions(&p, &x).unwrap();
        assert!((tr.lambda.unwrap() - 8.0).abs() < 1e-2, "{:?}", tr.lambda);
        assert!(tr.condition_deviations.iter().all(|&d| d < 1e-2), "{:?}", tr.condition_deviations);
        // the four conditions coincide on a regular scale
        let d = tr.condition_deviations;
        assert!(d.iter().all(|v| (v - d[0]).abs() < 1e-9));
    }

    #[test]
    fn iso_abnormal_constraint() {
        let f = quotient_problem(Integrand::delta("v^2").unwrap(), Integrand::nabla("t*v").unwrap()).unwrap();
        let c = IsoConstraint::parse("G1", vec![Integrand::nabla("v").unwrap()], 1.0).unwrap();
        let p = problem("[0,1]", 50, f, BoundarySpec::fixed(0.0, 1.0)).with_constraint(c);
        let x = p.trajectory_from_fn(|t| t * t).unwrap();
        let tr = iso_conditions(&p, &x).unwrap();
        assert!(!tr.normal);
        assert_eq!(tr.lambda, None);
    }

    #[test]
    fn iso_lambda_scales_inversely() {
        let p = iso("{0},{0.25},[0.5,1]", 16);
        let x = p.trajectory_from_fn(|t| t * t * t + 0.1 * t).unwrap();
        let base = iso_conditions(&p, &x).unwrap().lambda.unwrap();
        for alpha in [2.0, -0.5, 10.0] {
            let c = p.constraints()[0].scaled(alpha).unwrap();
            let q = VariationalProblem::new(
                p.timescale().clone(),
                16,
                p.objective().clone(),
                Sense::Minimize,
                p.boundary(),
            )
            .unwrap()
            .with_constraint(c);
            let x = q.trajectory(x.values().to_vec()).unwrap();
            let l = iso_conditions(&q, &x).unwrap().lambda.unwrap();
            assert!((l * alpha - base).abs() < 1e-9 * (1.0 + base.abs()), "{alpha}: {l}");
        }
    }

    #[test]
    fn quotient_requires_kinds() {
        assert!(quotient_problem(Integrand::nabla("v").unwrap(), Integrand::nabla("v").unwrap()).is_err());
    }
}
