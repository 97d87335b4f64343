//! European option pricing and pricing-measure sanity checks.
//!
//! Two Monte Carlo routes give the same number when the density is right:
//! simulate the pricing dynamics directly, or simulate the physical
//! dynamics and weight each path by its Girsanov density. With `γ = 0` the
//! buy-in channel vanishes and the price reduces to Black-Scholes.

use std::fmt;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{HtbError, Result};
use crate::girsanov::{log_density, unit_expectation_check, DensityRecord, DensityVariant, UnitExpectation};
use crate::model::{HtbParams, RiskPremiumSpec};
use crate::simulator::{simulate_map, Ensemble, Measure, Path, PathGrid};
use crate::stats::{combined_std_error, z_score, MeanEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub strike: f64,
    pub maturity: f64,
}

impl OptionSpec {
    pub fn call(strike: f64, maturity: f64) -> Self {
        OptionSpec { kind: OptionKind::Call, strike, maturity }
    }

    pub fn put(strike: f64, maturity: f64) -> Self {
        OptionSpec { kind: OptionKind::Put, strike, maturity }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike.is_finite() && self.strike > 0.0) {
            return Err(HtbError::param("option.strike", format!("must be > 0, got {}", self.strike)));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(HtbError::param("option.maturity", format!("must be > 0, got {}", self.maturity)));
        }
        Ok(())
    }

    /// Monte Carlo pricing needs the maturity to sit on the grid's horizon.
    fn check_grid(&self, grid: &PathGrid) -> Result<()> {
        self.validate()?;
        if (self.maturity - grid.horizon()).abs() > 1e-12 * grid.horizon() {
            return Err(HtbError::param(
                "option.maturity",
                format!("must equal the grid horizon {}, got {}", grid.horizon(), self.maturity),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceMethod {
    DirectQ,
    ReweightedP,
    ClosedForm,
}

impl fmt::Display for PriceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriceMethod::DirectQ => "direct_q",
            PriceMethod::ReweightedP => "reweighted_p",
            PriceMethod::ClosedForm => "closed_form",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub method: PriceMethod,
}

impl PriceEstimate {
    fn from_mean(est: MeanEstimate, method: PriceMethod) -> Self {
        PriceEstimate { value: est.mean, std_error: est.std_error, n_paths: est.n, method }
    }

    /// Difference to `other` in combined standard errors.
    pub fn z_against(&self, other: &PriceEstimate) -> f64 {
        z_score(self.value - other.value, combined_std_error(self.std_error, other.std_error))
    }
}

/// `a − b` for two independent estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub difference: f64,
    pub std_error: f64,
    pub z_score: f64,
}

pub fn price_discrepancy(a: &PriceEstimate, b: &PriceEstimate) -> Discrepancy {
    let se = combined_std_error(a.std_error, b.std_error);
    Discrepancy { difference: a.value - b.value, std_error: se, z_score: a.z_against(b) }
}

pub fn payoff_european(spec: &OptionSpec, s_terminal: f64) -> f64 {
    match spec.kind {
        OptionKind::Call => (s_terminal - spec.strike).max(0.0),
        OptionKind::Put => (spec.strike - s_terminal).max(0.0),
    }
}

/// Discounted payoffs of several options on one `Q` ensemble (common
/// random numbers).
pub fn price_direct_q_ladder(
    options: &[OptionSpec],
    params: &HtbParams,
    spec: &RiskPremiumSpec,
    grid: &PathGrid,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<PriceEstimate>> {
    for o in options {
        o.check_grid(grid)?;
    }
    let disc = (-params.r * grid.horizon()).exp();
    let per_path = simulate_map(Measure::Q, params, spec, grid, n_paths, seed, |_, path| {
        let st = path.terminal().s;
        Ok(options.iter().map(|o| disc * payoff_european(o, st)).collect::<Vec<f64>>())
    })?;
    Ok((0..options.len())
        .map(|j| {
            let v: Vec<f64> = per_path.iter().map(|row| row[j]).collect();
            PriceEstimate::from_mean(MeanEstimate::from_values(&v), PriceMethod::DirectQ)
        })
        .collect())
}

/// `e^{−rT} E_Q[payoff]` from a directly simulated `Q` ensemble.
pub fn price_direct_q(
    option: &OptionSpec,
    params: &HtbParams,
    spec: &RiskPremiumSpec,
    grid: &PathGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PriceEstimate> {
    Ok(price_direct_q_ladder(std::slice::from_ref(option), params, spec, grid, n_paths, seed)?[0])
}

/// `e^{−rT} E_P[M_T · payoff]` with the chosen density variant.
pub fn price_reweighted_p_with(
    variant: DensityVariant,
    option: &OptionSpec,
    params: &HtbParams,
    spec: &RiskPremiumSpec,
    grid: &PathGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PriceEstimate> {
    let study = MeasureChangeStudy::run(params, spec, grid, option, n_paths, seed)?;
    Ok(study.reweighted_price(variant))
}

/// `e^{−rT} E_P[M_T · payoff]` with the corrected density.
pub fn price_reweighted_p(
    option: &OptionSpec,
    params: &HtbParams,
    spec: &RiskPremiumSpec,
    grid: &PathGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PriceEstimate> {
    price_reweighted_p_with(DensityVariant::Corrected, option, params, spec, grid, n_paths, seed)
}

/// Black-Scholes value; `std_error` is zero.
pub fn black_scholes_reference(option: &OptionSpec, s0: f64, r: f64, sigma: f64) -> Result<PriceEstimate> {
    option.validate()?;
    if !(s0 > 0.0 && sigma > 0.0 && s0.is_finite() && sigma.is_finite() && r.is_finite()) {
        return Err(HtbError::input("black-scholes needs s0 > 0, sigma > 0 and finite r"));
    }
    let (k, t) = (option.strike, option.maturity);
    let vol = sigma * t.sqrt();
    let d1 = ((s0 / k).ln() + (r + 0.5 * sigma * sigma) * t) / vol;
    let d2 = d1 - vol;
    let n = Normal::standard();
    let df = (-r * t).exp();
    let value = match option.kind {
        OptionKind::Call => s0 * n.cdf(d1) - k * df * n.cdf(d2),
        OptionKind::Put => k * df * n.cdf(-d2) - s0 * n.cdf(-d1),
    };
    Ok(PriceEstimate { value, std_error: 0.0, n_paths: 0, method: PriceMethod::ClosedForm })
}

/// Per-path quantities from one `P` ensemble: both densities and the
/// discounted payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub log_m_corrected: f64,
    pub log_m_uncorrelated: f64,
    pub discounted_payoff: f64,
}

/// One `P` pass feeding the unit-expectation checks and the reweighted
/// prices of both density variants.
#[derive(Debug, Clone)]
pub struct MeasureChangeStudy {
    pub samples: Vec<PathSample>,
    pub seed: u64,
}

impl MeasureChangeStudy {
    pub fn run(
        params: &HtbParams,
        spec: &RiskPremiumSpec,
        grid: &PathGrid,
        option: &OptionSpec,
        n_paths: usize,
        seed: u64,
    ) -> Result<Self> {
        option.check_grid(grid)?;
        params.validate_for_measure_change(spec)?;
        let disc = (-params.r * grid.horizon()).exp();
        let samples = simulate_map(Measure::P, params, spec, grid, n_paths, seed, |i, path| {
            Ok(PathSample {
                log_m_corrected: log_density(path, params, spec, DensityVariant::Corrected, i)?.log_m,
                log_m_uncorrelated: log_density(path, params, spec, DensityVariant::Uncorrelated, i)?.log_m,
                discounted_payoff: disc * payoff_european(option, path.terminal().s),
            })
        })?;
        Ok(MeasureChangeStudy { samples, seed })
    }

    fn log_m(&self, variant: DensityVariant) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(move |s| match variant {
            DensityVariant::Uncorrelated => s.log_m_uncorrelated,
            _ => s.log_m_corrected,
        })
    }

    /// Only the corrected and uncorrelated variants are tracked; any other
    /// variant falls back to the corrected one.
    pub fn records(&self, variant: DensityVariant) -> Vec<DensityRecord> {
        let variant = match variant {
            DensityVariant::Uncorrelated => DensityVariant::Uncorrelated,
            _ => DensityVariant::Corrected,
        };
        self.log_m(variant)
            .enumerate()
            .map(|(path_index, log_m)| DensityRecord { log_m, variant, path_index })
            .collect()
    }

    pub fn unit_expectation(&self, variant: DensityVariant) -> Result<UnitExpectation> {
        unit_expectation_check(&self.records(variant))
    }

    pub fn reweighted_price(&self, variant: DensityVariant) -> PriceEstimate {
        let v: Vec<f64> =
            self.log_m(variant).zip(&self.samples).map(|(lm, s)| lm.exp() * s.discounted_payoff).collect();
        PriceEstimate::from_mean(MeanEstimate::from_values(&v), PriceMethod::ReweightedP)
    }

    /// Undiscounted-by-density average, i.e. the plain `P` price.
    pub fn physical_price(&self) -> PriceEstimate {
        let v: Vec<f64> = self.samples.iter().map(|s| s.discounted_payoff).collect();
        PriceEstimate::from_mean(MeanEstimate::from_values(&v), PriceMethod::ReweightedP)
    }
}

/// Carry-adjusted deflated price `e^{−rT} S_T + Σ γ λ_k e^{−r t_k} S_k dt`,
/// which should average to `s0` under `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarryCheck {
    pub estimate: f64,
    pub std_error: f64,
    pub z_score: f64,
    /// Mean of the predictable part of the carry-adjusted value, i.e. the
    /// expected deviation from `s0` caused by discretization alone.
    pub discretization_bias: f64,
    pub discretization_bias_se: f64,
    pub n: usize,
}

/// `(V, A)` for one path: the carry-adjusted value and its predictable
/// drift `Σ D_k S_k (1 − γλ_k dt)(e^{−r dt}(1 + r dt) − 1)`.
fn carry_components(path: &Path, params: &HtbParams) -> (f64, f64) {
    let dt = path.grid.dt();
    let step_bias = (-params.r * dt).exp() * (1.0 + params.r * dt) - 1.0;
    let mut carry = 0.0;
    let mut drift = 0.0;
    for st in &path.states[..path.states.len() - 1] {
        let deflated = (-params.r * st.t).exp() * st.s;
        carry += params.gamma * st.lambda * deflated * dt;
        drift += deflated * (1.0 - params.gamma * st.lambda * dt) * step_bias;
    }
    let last = path.terminal();
    ((-params.r * last.t).exp() * last.s + carry, drift)
}

fn carry_from_components(parts: &[(f64, f64)], s0: f64) -> CarryCheck {
    let v: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let a: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let ve = MeanEstimate::from_values(&v);
    let ae = MeanEstimate::from_values(&a);
    CarryCheck {
        estimate: ve.mean,
        std_error: ve.std_error,
        z_score: ve.z_score(s0),
        discretization_bias: ae.mean,
        discretization_bias_se: ae.std_error,
        n: ve.n,
    }
}

pub fn carry_martingale_check(ensemble_q: &Ensemble, params: &HtbParams) -> Result<CarryCheck> {
    if ensemble_q.measure != Measure::Q || ensemble_q.paths.iter().any(|p| p.measure != Measure::Q) {
        return Err(HtbError::input("carry martingale check needs a Q ensemble"));
    }
    if ensemble_q.paths.is_empty() {
        return Err(HtbError::input("empty ensemble"));
    }
    let parts: Vec<(f64, f64)> = ensemble_q.paths.iter().map(|p| carry_components(p, params)).collect();
    Ok(carry_from_components(&parts, params.s0))
}

/// Streaming form of [`carry_martingale_check`] for large ensembles.
pub fn carry_check_q(
    params: &HtbParams,
    spec: &RiskPremiumSpec,
    grid: &PathGrid,
    n_paths: usize,
    seed: u64,
) -> Result<CarryCheck> {
    let parts =
        simulate_map(Measure::Q, params, spec, grid, n_paths, seed, |_, path| Ok(carry_components(path, params)))?;
    Ok(carry_from_components(&parts, params.s0))
}

/// Carry checks on `grid` and on the grid with half the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarryRefinement {
    pub coarse: CarryCheck,
    pub fine: CarryCheck,
}

impl CarryRefinement {
    /// The discretization bias shrinks when the step is halved.
    pub fn improves(&self) -> bool {
        self.fine.discretization_bias.abs() < self.coarse.discretization_bias.abs()
    }
}

pub fn carry_refinement(
    params: &HtbParams,
    spec: &RiskPremiumSpec,
    grid: &PathGrid,
    n_paths: usize,
    seed: u64,
) -> Result<CarryRefinement> {
    Ok(CarryRefinement {
        coarse: carry_check_q(params, spec, grid, n_paths, seed)?,
        fine: carry_check_q(params, spec, &grid.refined(), n_paths, seed)?,
    })
}
