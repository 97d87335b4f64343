// Compares the three density constructions on the same physical paths.
// Only the one built from the orthogonalised market price of risk is a
// unit-mean martingale once the drivers are correlated.
//
// `cargo run --release --example measure_change`

use htb::girsanov::{density_records, solve_market_price_vector, unit_expectation_check, DensityVariant};
use htb::simulator::simulate_ensemble;
use htb::{HtbParams, Measure, PathGrid, RiskPremiumSpec};

pub fn run_example() -> htb::Result<()> {
    let (u1, u2) = solve_market_price_vector(1.0, 2.0, 0.5)?;
    println!("Gamma = 1, Theta = 2, rho = 0.5 -> u = ({u1:.6}, {u2:.6})");

    let premium = RiskPremiumSpec::Constant(0.1);
    for rho in [0.0, 0.5] {
        let params = HtbParams { rho, lambda_max: 25.0, ..HtbParams::default() };
        let grid = PathGrid::new(1.0, 250, params.lambda_max)?;
        let ens = simulate_ensemble(Measure::P, &params, &premium, &grid, 20_000, 3)?;
        println!("rho = {rho}");
        for variant in [DensityVariant::Corrected, DensityVariant::Uncorrelated, DensityVariant::IndependentFactor] {
            let u = unit_expectation_check(&density_records(&ens, variant)?)?;
            println!("  {:<20} E[M_T] = {:.5} ± {:.5}  z = {:+.2}", variant.name(), u.mean, u.std_error, u.z_score);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> htb::Result<()> {
    run_example()
}
