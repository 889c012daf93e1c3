//! Euler-Lagrange residuals: constant along an extremal, and the two forms
//! separating on a scale where scattered and dense points meet.

use tsvar::optimality::{default_tolerance, el_residuals, el_residuals_differ_on_irregular, quotient_problem};
use tsvar::timescale::TimeScale;
use tsvar::varproblem::{BoundarySpec, CompositionFunctional, Integrand, Sense, VariationalProblem};

fn main() {
    // autonomous quotient: x = 2t is the extremal on any scale
    for scale in ["[0,2]", "{0},{1},{2}", "[0,0.5],{1},[1.5,2]"] {
        let f = quotient_problem(Integrand::delta("v^2").unwrap(), Integrand::nabla("v + v^2").unwrap()).unwrap();
        let p = VariationalProblem::new(TimeScale::parse(scale).unwrap(), 50, f, Sense::Minimize, BoundarySpec::fixed(0.0, 4.0))
            .unwrap();
        let x = p.trajectory_from_fn(|t| 2.0 * t).unwrap();
        let el = el_residuals(&p, &x).unwrap();
        println!(
            "{scale:<20} deviations {:.2e} / {:.2e}  extremal: {}",
            el.constancy_deviation_nabla,
            el.constancy_deviation_delta,
            el.is_extremal(default_tolerance(p.grid()))
        );
    }

    let ts = TimeScale::parse("{0},[1,2],{3}").unwrap();
    let f = CompositionFunctional::parse(
        "F1 + F2",
        vec![Integrand::delta("v^2").unwrap(), Integrand::nabla("y*v").unwrap()],
    )
    .unwrap();
    let p = VariationalProblem::new(ts, 20, f, Sense::Minimize, BoundarySpec::fixed(0.0, 9.0)).unwrap();
    let x = p.trajectory_from_fn(|t| t * t).unwrap();
    let el = el_residuals(&p, &x).unwrap();
    for t in [1.0, 1.5, 2.0] {
        let i = p.grid().node_index(t).unwrap();
        println!(
            "t = {t}: nabla form {:.6}, delta form {:.6}",
            el.residual_nabla.at(i).unwrap(),
            el.residual_delta.at(i).unwrap()
        );
    }
    println!("max difference: {:.6}", el_residuals_differ_on_irregular(&el));
}
