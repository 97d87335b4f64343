// Simulates the price and log-intensity under both measures and writes the
// paths as CSV.
//
// `cargo run --release --example simulate_paths -- [out.csv]`

use htb::simulator::{simulate_ensemble, write_paths_csv};
use htb::stats::MeanEstimate;
use htb::{HtbParams, Measure, PathGrid, RiskPremiumSpec};

pub fn run_example() -> htb::Result<()> {
    let params = HtbParams { rho: 0.5, lambda_max: 25.0, ..HtbParams::default() };
    let premium = RiskPremiumSpec::Constant(0.1);
    let grid = PathGrid::new(1.0, 250, params.lambda_max)?;

    for measure in [Measure::P, Measure::Q] {
        let ens = simulate_ensemble(measure, &params, &premium, &grid, 2_000, 7)?;
        let s: Vec<f64> = ens.paths.iter().map(|p| p.terminal().s).collect();
        let lam: Vec<f64> = ens.paths.iter().map(|p| p.terminal().lambda).collect();
        let jumps: Vec<f64> = ens.paths.iter().map(|p| p.jump_count() as f64).collect();
        let (s, lam, jumps) =
            (MeanEstimate::from_values(&s), MeanEstimate::from_values(&lam), MeanEstimate::from_values(&jumps));
        println!(
            "{measure}: E[S_T] = {:.3} ± {:.3}   E[lambda_T] = {:.3}   buy-ins per path = {:.3}",
            s.mean, s.std_error, lam.mean, jumps.mean
        );
        if measure == Measure::Q {
            println!("   forward s0 e^(rT) = {:.3}", params.s0 * params.r.exp());
        }
        if let Some(out) = std::env::args().nth(1) {
            let out = format!("{out}.{measure}");
            write_paths_csv(&ens, std::io::BufWriter::new(std::fs::File::create(&out)?))?;
            println!("   wrote {out}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> htb::Result<()> {
    run_example()
}
