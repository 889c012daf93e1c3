//! Forward/backward jumps and point classification on a mixed time scale.

use tsvar::timescale::TimeScale;

fn main() {
    let ts = TimeScale::parse("[0,1],[2,3],{3.5},{4}").expect("valid scale");
    println!("T = {ts}   regular: {}", ts.is_regular());
    println!("{:>5} {:>6} {:>6} {:>6} {:>6}  class", "t", "sigma", "rho", "mu", "nu");
    for t in [0.0, 0.5, 1.0, 2.0, 3.0, 3.5, 4.0] {
        let c = ts.classify(t).unwrap();
        println!(
            "{t:>5} {:>6} {:>6} {:>6} {:>6}  left {:?}, right {:?}",
            ts.sigma(t).unwrap(),
            ts.rho(t).unwrap(),
            ts.mu(t).unwrap(),
            ts.nu(t).unwrap(),
            c.left,
            c.right
        );
    }
    // 1.5 lies in the gap
    println!("sigma(1.5): {}", ts.sigma(1.5).unwrap_err());
}
