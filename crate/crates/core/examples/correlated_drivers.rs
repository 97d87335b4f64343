// Builds correlated Brownian drivers from two independent ones and checks
// the terminal covariation against `ρT`.
//
// `cargo run --release --example correlated_drivers`

use htb::correlation::{estimate_covariation, make_correlated, sample_terminal_drivers};
use htb::PathGrid;

pub fn run_example() -> htb::Result<()> {
    let (dw, dz) = make_correlated(0.1, -0.2, 0.6)?;
    println!("single increment: db = (0.1, -0.2) -> dw = {dw:.4}, dz = {dz:.4}");

    let grid = PathGrid::new(1.0, 250, 25.0)?;
    println!("{:>6} {:>10} {:>8} {:>10} {:>8}", "rho", "cov", "z", "var_z", "z");
    for rho in [-0.9, 0.0, 0.6, 0.999] {
        let samples = sample_terminal_drivers(rho, &grid, 20_000, 11)?;
        let rep = estimate_covariation(&samples, rho, grid.horizon())?;
        println!("{rho:>6.3} {:>10.5} {:>+8.2} {:>10.5} {:>+8.2}", rep.cov, rep.cov_z(), rep.var_z, rep.var_z_z());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> htb::Result<()> {
    run_example()
}
