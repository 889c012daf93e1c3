//! Quotient objective under an integral constraint, solved by the penalty
//! method; the multiplier is read off two ways.

use tsvar::optimality::{iso_conditions, quotient_problem};
use tsvar::solver::{solve, SolveOptions};
use tsvar::timescale::TimeScale;
use tsvar::varproblem::{BoundarySpec, Integrand, IsoConstraint, Sense, VariationalProblem};

fn main() {
    for (scale, res) in [("{0},{0.5},{1}", 1), ("[0,1]", 200)] {
        let f = quotient_problem(Integrand::delta("v^2").unwrap(), Integrand::nabla("t*v").unwrap()).unwrap();
        let c = IsoConstraint::parse("G1", vec![Integrand::nabla("t*v").unwrap()], 1.0).unwrap();
        let p = VariationalProblem::new(TimeScale::parse(scale).unwrap(), res, f, Sense::Minimize, BoundarySpec::fixed(0.0, 1.0))
            .unwrap()
            .with_constraint(c);
        let r = solve(&p, &SolveOptions::default()).unwrap();
        let sup = p
            .grid()
            .nodes()
            .iter()
            .zip(r.x.values())
            .map(|(t, x)| (x - if res == 1 { (t == &1.0) as u8 as f64 } else { 3.0 * t * t - 2.0 * t }).abs())
            .fold(0.0, f64::max);
        println!(
            "{scale:<14} rounds {:>2}  |K-d| {:.1e}  lambda {:.6} (fit) {:.6} (penalty)  sup error {sup:.2e}",
            r.outer_rounds,
            r.constraint_violation,
            r.lambda_estimate.unwrap_or(f64::NAN),
            r.lambda_penalty.unwrap_or(f64::NAN)
        );
        let iso = iso_conditions(&p, &r.x).unwrap();
        let devs: Vec<String> = iso.condition_deviations.iter().map(|d| format!("{d:.1e}")).collect();
        println!("               condition deviations [{}]  normal {}", devs.join(", "), iso.normal);
    }
}
