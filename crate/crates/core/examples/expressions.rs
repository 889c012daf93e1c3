//! Parsing integrand expressions and differentiating them with dual numbers.

use tsvar::expr::Expression;

fn main() {
    let e = Expression::parse("t*v + exp(-y^2)/(1 + v^2)").unwrap();
    println!("source    {}", e.source());
    println!("canonical {}", e.canonical());
    println!("variables {:?}", e.free_vars());

    let f = e.bind(&["t", "y", "v"]).unwrap();
    let (value, grad) = f.gradient(&[0.5, 1.0, 2.0]).unwrap();
    println!("f(0.5, 1, 2) = {value:.10}");
    println!("grad (t, y, v) = {grad:.10?}");

    for bad in ["t*(v", "2 +* v", "sqrt(v"] {
        let err = Expression::parse(bad).unwrap_err();
        println!("{bad:<8} -> {err}");
    }
    let g = Expression::parse("log(v)").unwrap().bind(&["v"]).unwrap();
    println!("log(-1)  -> {}", g.eval(&[-1.0]).unwrap_err());
}
