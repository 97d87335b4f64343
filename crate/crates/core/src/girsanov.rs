//! Pathwise Radon-Nikodym log-densities for the move from the physical to
//! the pricing measure.
//!
//! Writing `W = B₁`, `Z = ρB₁ + √(1−ρ²)B₂`, the drift shifts `(Γ, Θ)` of
//! `(W, Z)` are carried by the independent drivers through
//!
//! ```text
//! [1  0       ] [u₁]   [Γ]
//! [ρ  √(1−ρ²) ] [u₂] = [Θ]
//! ```
//!
//! and the density is `exp(−∫u·dB − ½∫|u|² dt)`. Two other forms are kept
//! for comparison: both premia integrated against `dW` only, and the
//! density that treats `W` and `Z` as if they were independent. Neither is
//! a `P`-martingale once `ρ ≠ 0` or `ΓΘ ≠ 0`.

use std::fmt;
use std::io::Write;

use crate::error::{HtbError, Result};
use crate::model::{gamma_price_of_risk, theta_price_of_risk, HtbParams, RiskPremiumSpec, MAX_ABS_RHO};
use crate::simulator::{Ensemble, Measure, Path};
use crate::stats::{z_score, MeanEstimate};

/// Minimum number of records for [`unit_expectation_check`].
pub const MIN_DENSITY_RECORDS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DensityVariant {
    /// Shifts carried by the independent drivers `(B₁, B₂)`.
    Corrected,
    /// `−∫(Γ+Θ) dW − ½∫(Γ²+Θ²) dt`: both premia against `dW`.
    Uncorrelated,
    /// `−∫Γ dW − ∫Θ dZ − ½∫(Γ²+Θ²) dt`, ignoring the correlation.
    IndependentFactor,
}

impl DensityVariant {
    pub fn name(&self) -> &'static str {
        match self {
            DensityVariant::Corrected => "corrected",
            DensityVariant::Uncorrelated => "uncorrelated",
            DensityVariant::IndependentFactor => "independent_factor",
        }
    }
}

impl fmt::Display for DensityVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `log M_T` for one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRecord {
    pub log_m: f64,
    pub variant: DensityVariant,
    pub path_index: usize,
}

impl DensityRecord {
    pub fn density(&self) -> f64 {
        self.log_m.exp()
    }
}

/// Solves the lower-triangular system above: `u₁ = Γ`,
/// `u₂ = (Θ − ρΓ)/√(1−ρ²)`.
pub fn solve_market_price_vector(gamma_mpr: f64, theta_mpr: f64, rho: f64) -> Result<(f64, f64)> {
    if !(rho.is_finite() && rho.abs() <= MAX_ABS_RHO) {
        return Err(HtbError::input(format!("|rho| must be <= 1 - 1e-6, got {rho}")));
    }
    Ok(solve_unchecked(gamma_mpr, theta_mpr, rho))
}

#[inline]
fn solve_unchecked(gamma_mpr: f64, theta_mpr: f64, rho: f64) -> (f64, f64) {
    (gamma_mpr, (theta_mpr - rho * gamma_mpr) / (1.0 - rho * rho).sqrt())
}

/// Accumulates `log M_T` along a stored `P` path. Premia are evaluated at
/// the left end of each step.
pub fn log_density(
    path: &Path,
    params: &HtbParams,
    spec: &RiskPremiumSpec,
    variant: DensityVariant,
    path_index: usize,
) -> Result<DensityRecord> {
    if path.measure != Measure::P {
        return Err(HtbError::input("densities are defined on paths simulated under P"));
    }
    params.validate_for_measure_change(spec)?;
    let dt = path.grid.dt();
    let rho = params.rho;
    let rho_c = (1.0 - rho * rho).sqrt();
    let mut acc = 0.0;
    for (step, st) in path.states[..path.db1.len()].iter().enumerate() {
        let g = gamma_price_of_risk(st.lambda, params);
        let th = theta_price_of_risk(st.t, st.x, st.s, spec, params);
        let (db1, db2) = (path.db1[step], path.db2[step]);
        acc += match variant {
            DensityVariant::Corrected => {
                let (u1, u2) = solve_unchecked(g, th, rho);
                -(u1 * db1 + u2 * db2) - 0.5 * (u1 * u1 + u2 * u2) * dt
            }
            DensityVariant::Uncorrelated => -(g + th) * db1 - 0.5 * (g * g + th * th) * dt,
            DensityVariant::IndependentFactor => {
                let dz = rho * db1 + rho_c * db2;
                -(g * db1 + th * dz) - 0.5 * (g * g + th * th) * dt
            }
        };
        if !acc.is_finite() {
            return Err(HtbError::DensityOverflow { path: path_index, step });
        }
    }
    Ok(DensityRecord { log_m: acc, variant, path_index })
}

pub fn log_density_corrected(path: &Path, params: &HtbParams, spec: &RiskPremiumSpec) -> Result<f64> {
    log_density(path, params, spec, DensityVariant::Corrected, 0).map(|r| r.log_m)
}

pub fn log_density_uncorrelated(path: &Path, params: &HtbParams, spec: &RiskPremiumSpec) -> Result<f64> {
    log_density(path, params, spec, DensityVariant::Uncorrelated, 0).map(|r| r.log_m)
}

/// Densities for every path of a stored `P` ensemble.
pub fn density_records(ensemble: &Ensemble, variant: DensityVariant) -> Result<Vec<DensityRecord>> {
    ensemble
        .paths
        .iter()
        .enumerate()
        .map(|(i, p)| log_density(p, &ensemble.params, &ensemble.spec, variant, i))
        .collect()
}

/// Sample mean of `M_T` against its martingale value 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitExpectation {
    pub mean: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub n: usize,
}

pub fn unit_expectation_check(records: &[DensityRecord]) -> Result<UnitExpectation> {
    if records.is_empty() {
        return Err(HtbError::input("no density records"));
    }
    if records.len() < MIN_DENSITY_RECORDS {
        return Err(HtbError::input(format!(
            "unit-expectation check needs at least {MIN_DENSITY_RECORDS} records, got {}",
            records.len()
        )));
    }
    let variant = records[0].variant;
    if records.iter().any(|r| r.variant != variant) {
        return Err(HtbError::input("density records mix variants"));
    }
    let m: Vec<f64> = records.iter().map(DensityRecord::density).collect();
    let est = MeanEstimate::from_values(&m);
    Ok(UnitExpectation {
        mean: est.mean,
        std_error: est.std_error,
        z_score: z_score(est.mean - 1.0, est.std_error),
        n: est.n,
    })
}

/// `E_P[M_T · f(path)]` over a stored `P` ensemble.
pub fn reweighted_expectation<F>(ensemble_p: &Ensemble, records: &[DensityRecord], payoff: F) -> Result<MeanEstimate>
where
    F: Fn(&Path) -> f64,
{
    if ensemble_p.measure != Measure::P {
        return Err(HtbError::input("reweighting needs a P ensemble"));
    }
    if records.len() != ensemble_p.paths.len() {
        return Err(HtbError::input(format!("{} density records for {} paths", records.len(), ensemble_p.paths.len())));
    }
    let mut weighted = Vec::with_capacity(records.len());
    for (i, (rec, path)) in records.iter().zip(&ensemble_p.paths).enumerate() {
        if rec.path_index != i {
            return Err(HtbError::input(format!("record {i} belongs to path {}", rec.path_index)));
        }
        weighted.push(rec.density() * payoff(path));
    }
    Ok(MeanEstimate::from_values(&weighted))
}

pub const DENSITY_CSV_HEADER: &str = "path_index,variant,log_m";

pub fn write_density_csv<W: Write>(records: &[DensityRecord], mut out: W) -> Result<()> {
    writeln!(out, "{DENSITY_CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{},{},{:.16e}", r.path_index, r.variant, r.log_m)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MarketState;
    use crate::simulator::{simulate_ensemble, PathGrid};

    #[test]
    fn solver_known_values() {
        assert_eq!(solve_market_price_vector(0.7, -0.2, 0.0).unwrap(), (0.7, -0.2));
        let (_, u2) = solve_market_price_vector(0.4, 0.5 * 0.4, 0.5).unwrap();
        assert_eq!(u2, 0.0);
        let (u1, u2) = solve_market_price_vector(1.0, 2.0, 0.5).unwrap();
        assert_eq!(u1, 1.0);
        assert!((u2 - 3f64.sqrt()).abs() < 1e-12);
        assert!(solve_market_price_vector(1.0, 1.0, 1.0).is_err());
    }

    /// One-step path sitting at a fixed state with the given increments.
    fn one_step_path(params: &HtbParams, dt: f64, db1: f64, db2: f64) -> Path {
        let grid = PathGrid::new(dt, 1, params.lambda_max).unwrap();
        let s0 = params.initial_state();
        Path {
            grid,
            states: vec![s0, MarketState { t: dt, ..s0 }],
            db1: vec![db1],
            db2: vec![db2],
            jumps: vec![false],
            measure: Measure::P,
        }
    }

    // Γ = (0.05·2 − 0.01)/0.3 = 0.3, Θ = 1·0.1/1 = 0.1
    fn gamma_theta_params(rho: f64) -> (HtbParams, RiskPremiumSpec) {
        let p = HtbParams {
            sigma: 0.3,
            gamma: 0.05,
            r: 0.01,
            lambda0: 2.0,
            lambda_max: 5.0,
            alpha: 1.0,
            kappa: 1.0,
            rho,
            ..Default::default()
        };
        (p, RiskPremiumSpec::Constant(0.1))
    }

    #[test]
    fn corrected_single_step_drift_term() {
        let (p, z) = gamma_theta_params(0.5);
        let path = one_step_path(&p, 0.01, 0.0, 0.0);
        let lm = log_density_corrected(&path, &p, &z).unwrap();
        assert!((lm + 4.666_666_666_666_667e-4).abs() < 1e-15, "{lm}");
    }

    #[test]
    fn uncorrelated_single_step() {
        let (p, z) = gamma_theta_params(0.5);
        let path = one_step_path(&p, 0.01, 0.02, 0.7);
        let lm = log_density_uncorrelated(&path, &p, &z).unwrap();
        assert!((lm + 0.0085).abs() < 1e-15, "{lm}");
    }

    #[test]
    fn zero_premia_give_unit_density() {
        // constant λ with γλ = r and no buy-in premium
        let gamma = 0.5;
        let lambda0 = 0.02;
        let p = HtbParams {
            gamma,
            lambda0,
            lambda_max: 1.0,
            r: gamma * lambda0,
            kappa: 0.0,
            beta: 0.0,
            x0: 0.0,
            x_bar: 0.0,
            rho: 0.3,
            ..Default::default()
        };
        let grid = PathGrid::new(1.0, 100, p.lambda_max).unwrap();
        let ens = simulate_ensemble(Measure::P, &p, &RiskPremiumSpec::Zero, &grid, 20, 3).unwrap();
        for v in [DensityVariant::Corrected, DensityVariant::Uncorrelated, DensityVariant::IndependentFactor] {
            for r in density_records(&ens, v).unwrap() {
                assert_eq!(r.log_m, 0.0);
            }
        }
    }

    #[test]
    fn corrected_equals_independent_factor_at_zero_rho() {
        let p = HtbParams { rho: 0.0, ..Default::default() };
        let z = RiskPremiumSpec::AffineInX { a: 0.1, b: 0.3 };
        let grid = PathGrid::new(1.0, 500, p.lambda_max).unwrap();
        let ens = simulate_ensemble(Measure::P, &p, &z, &grid, 30, 12).unwrap();
        let a = density_records(&ens, DensityVariant::Corrected).unwrap();
        let b = density_records(&ens, DensityVariant::IndependentFactor).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.log_m, y.log_m);
        }
    }

    #[test]
    fn zero_premium_variants_coincide() {
        // Θ = 0: the uncorrelated form at any ρ and the corrected form at
        // ρ = 0 both reduce to −∫Γ dB₁ − ½∫Γ² dt
        let p = HtbParams { rho: 0.6, ..Default::default() };
        let grid = PathGrid::new(1.0, 500, p.lambda_max).unwrap();
        let ens = simulate_ensemble(Measure::P, &p, &RiskPremiumSpec::Zero, &grid, 10, 2).unwrap();
        let p0 = HtbParams { rho: 0.0, ..p };
        for path in &ens.paths {
            let a = log_density_uncorrelated(path, &p, &RiskPremiumSpec::Zero).unwrap();
            let b = log_density_corrected(path, &p0, &RiskPremiumSpec::Zero).unwrap();
            assert_eq!(a, b);
            // with ρ ≠ 0 the corrected form also shifts B₂ to keep Z driftless
            let c = log_density_corrected(path, &p, &RiskPremiumSpec::Zero).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn rejects_q_paths_and_bad_inputs() {
        let p = HtbParams::default();
        let grid = PathGrid::new(1.0, 500, p.lambda_max).unwrap();
        let q = simulate_ensemble(Measure::Q, &p, &RiskPremiumSpec::Zero, &grid, 1, 1).unwrap();
        assert!(log_density_corrected(&q.paths[0], &p, &RiskPremiumSpec::Zero).is_err());
        assert!(unit_expectation_check(&[]).is_err());
        let ens = simulate_ensemble(Measure::P, &p, &RiskPremiumSpec::Zero, &grid, 3, 1).unwrap();
        let recs = density_records(&ens, DensityVariant::Corrected).unwrap();
        assert!(reweighted_expectation(&ens, &recs[..2], |_| 1.0).is_err());
    }

    #[test]
    fn unit_expectation_trivial() {
        let recs: Vec<DensityRecord> =
            (0..200).map(|i| DensityRecord { log_m: 0.0, variant: DensityVariant::Corrected, path_index: i }).collect();
        let u = unit_expectation_check(&recs).unwrap();
        assert_eq!((u.mean, u.z_score), (1.0, 0.0));
        let mut mixed = recs.clone();
        mixed[5].variant = DensityVariant::Uncorrelated;
        assert!(unit_expectation_check(&mixed).is_err());
    }

    #[test]
    fn reweighting_with_unit_payoff_is_unit_check() {
        let p = HtbParams { rho: 0.5, ..Default::default() };
        let z = RiskPremiumSpec::Constant(0.1);
        let grid = PathGrid::new(1.0, 500, p.lambda_max).unwrap();
        let ens = simulate_ensemble(Measure::P, &p, &z, &grid, 500, 9).unwrap();
        let recs = density_records(&ens, DensityVariant::Corrected).unwrap();
        let u = unit_expectation_check(&recs).unwrap();
        let w = reweighted_expectation(&ens, &recs, |_| 1.0).unwrap();
        assert_eq!(u.mean, w.mean);
        assert_eq!(u.std_error, w.std_error);
    }

    #[test]
    fn density_csv_format() {
        let recs = [DensityRecord { log_m: -0.5, variant: DensityVariant::Uncorrelated, path_index: 3 }];
        let mut buf = Vec::new();
        write_density_csv(&recs, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "path_index,variant,log_m\n3,uncorrelated,-5.0000000000000000e-1\n"
        );
    }
}
