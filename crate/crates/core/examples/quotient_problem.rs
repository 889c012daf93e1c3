//! The quotient of a delta and a nabla integral, minimized on three points and
//! on the interval [0,1].

use tsvar::optimality::quotient_problem;
use tsvar::solver::{solve, SolveOptions};
use tsvar::timescale::TimeScale;
use tsvar::varproblem::{BoundarySpec, Integrand, Sense, VariationalProblem};

fn main() {
    for (scale, res) in [("{0},{0.5},{1}", 1), ("[0,1]", 400)] {
        let f = quotient_problem(Integrand::delta("t*v").unwrap(), Integrand::nabla("v^2").unwrap()).unwrap();
        let p = VariationalProblem::new(TimeScale::parse(scale).unwrap(), res, f, Sense::Minimize, BoundarySpec::fixed(0.0, 1.0))
            .unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        let mid = p.grid().node_index(0.5).unwrap();
        println!(
            "{scale:<14} L = {:.7}  x(1/2) = {:.7}  iterations {}  converged {}",
            r.objective, r.x.values()[mid], r.iterations, r.converged
        );
    }
    let s3 = 3f64.sqrt();
    println!("closed forms: L = {:.7} on three points, {:.7} on [0,1]", (1.0 - 2f64.sqrt()) / 8.0, (3.0 - 2.0 * s3) / 12.0);
    println!("              x(1/2) = {:.7} on [0,1]", -(3.0 + 2.0 * s3) / 4.0 + (4.0 + 2.0 * s3) / 2.0);
}
