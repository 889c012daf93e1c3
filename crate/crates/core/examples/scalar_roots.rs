//! Bracketing and bisection for the scalar equations that pin down the
//! constant in closed-form extremals.

use tsvar::expr::Expression;
use tsvar::solver::find_scalar_roots;

fn main() {
    for (text, lo, hi) in [
        ("64*Q^2 - 16*Q - 1", -1.0, 1.0),
        ("Q^3 - 18*Q^2 + 48*Q - 96", 0.0, 30.0),
        ("(Q-1)^2", 0.0, 2.1),
    ] {
        let e = Expression::parse(text).unwrap();
        let roots = find_scalar_roots(&e, lo, hi, 1000).unwrap();
        let f = e.bind(&["Q"]).unwrap();
        print!("{text:<28} on [{lo}, {hi}]:");
        if roots.is_empty() {
            print!(" none (no sign change)");
        }
        for r in roots {
            print!("  {r:.12} (residual {:.1e})", f.eval(&[r]).unwrap());
        }
        println!();
    }
}
