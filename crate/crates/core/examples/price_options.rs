// Prices European options by simulating under the pricing measure and by
// reweighting physical paths, and compares the no-buy-in case with the
// closed form.
//
// `cargo run --release --example price_options`

use htb::girsanov::DensityVariant;
use htb::pricing::{
    black_scholes_reference, price_direct_q, price_direct_q_ladder, price_discrepancy, MeasureChangeStudy, OptionSpec,
};
use htb::{HtbParams, PathGrid, RiskPremiumSpec};

pub fn run_example() -> htb::Result<()> {
    let params = HtbParams { rho: 0.5, lambda_max: 25.0, ..HtbParams::default() };
    let premium = RiskPremiumSpec::Constant(0.1);
    let grid = PathGrid::new(1.0, 250, params.lambda_max)?;
    let n = 20_000;

    let ladder: Vec<OptionSpec> = [80.0, 90.0, 100.0, 110.0, 120.0].iter().map(|&k| OptionSpec::call(k, 1.0)).collect();
    for (opt, est) in ladder.iter().zip(price_direct_q_ladder(&ladder, &params, &premium, &grid, n, 1)?) {
        println!("call K = {:>5}: {:.4} ± {:.4}", opt.strike, est.value, est.std_error);
    }

    let atm = OptionSpec::call(100.0, 1.0);
    let direct = price_direct_q(&atm, &params, &premium, &grid, n, 1)?;
    let study = MeasureChangeStudy::run(&params, &premium, &grid, &atm, n, 2)?;
    for variant in [DensityVariant::Corrected, DensityVariant::Uncorrelated] {
        let rw = study.reweighted_price(variant);
        let d = price_discrepancy(&rw, &direct);
        println!(
            "reweighted ({:<12}) {:.4} ± {:.4}  vs direct: z = {:+.2}",
            variant.name(),
            rw.value,
            rw.std_error,
            d.z_score
        );
    }
    let phys = study.physical_price();
    println!("physical-measure average without reweighting: {:.4}", phys.value);

    let no_buy_ins = HtbParams { gamma: 0.0, ..params };
    let mc = price_direct_q(&atm, &no_buy_ins, &RiskPremiumSpec::Zero, &grid, n, 4)?;
    let bs = black_scholes_reference(&atm, params.s0, params.r, params.sigma)?;
    println!("gamma = 0: simulated {:.4} ± {:.4}, closed form {:.6}", mc.value, mc.std_error, bs.value);
    Ok(())
}

#[allow(dead_code)]
fn main() -> htb::Result<()> {
    run_example()
}
