//! Delta/nabla derivatives and integrals of a sampled function, and the
//! interchange identities between them.

use std::sync::Arc;

use tsvar::gridfn::GridFunction;
use tsvar::timescale::TimeScale;

fn main() {
    let ts = TimeScale::parse("[0,1],{1.5},[2,3]").unwrap();
    let grid = Arc::new(ts.build_grid(40).unwrap());
    let f = GridFunction::from_fn(grid.clone(), |t| t * t).unwrap();

    let fd = f.delta_derivative();
    let fn_ = f.nabla_derivative();
    for t in [0.0, 1.0, 1.5, 2.0] {
        let i = grid.node_index(t).unwrap();
        println!("t = {t}: f^delta = {:.6}, f^nabla = {:.6}", fd.values()[i], fn_.values()[i]);
    }

    let (a, b) = (ts.a(), ts.b());
    let di = f.delta_integral(a, b).unwrap();
    let ni = f.nabla_integral(a, b).unwrap();
    println!("delta integral of t^2 over [{a},{b}] = {di:.6}");
    println!("nabla integral of t^2 over [{a},{b}] = {ni:.6}");

    let e1 = f.nabla_derivative().values().iter().zip(f.nabla_deriv_from_delta().values()).skip(1)
        .fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
    let e2 = (di - f.integral_interchange_delta_to_nabla(a, b).unwrap()).abs();
    println!("max |f^nabla - (f^delta)^rho| = {e1:e}");
    println!("|int f dt - int f^rho nabla t| = {e2:e}");
}
