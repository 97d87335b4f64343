//! Euler discretization of the coupled price / log-intensity system.
//!
//! Each step draws two independent `N(0, dt)` increments and one uniform,
//! correlates the increments, decides a buy-in by Bernoulli thinning
//! (`ξ = 1` iff `u < λ dt`) and updates
//!
//! ```text
//! S' = S (1 + σ dW + μ dt) (1 − γ)^ξ          μ = γλ under P, r under Q
//! x' = x + κ dZ + α (x̄ − x) dt [− α z dt under Q] + β (S'/S − 1)
//! λ' = min(λ₀ e^x', λ_max)
//! ```
//!
//! Risk premia and the intensity are frozen at the left end of each step.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::correlation::{correlate_unchecked, DriverIncrement};
use crate::error::{HtbError, Result};
use crate::model::{HtbParams, MarketState, RiskPremiumSpec};
use crate::rng::{draw_step, path_rng};

/// Upper bound on `λ_max · dt`.
pub const JUMP_FIDELITY_BOUND: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    /// Physical dynamics.
    P,
    /// Pricing dynamics.
    Q,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::P => "P",
            Measure::Q => "Q",
        })
    }
}

/// Uniform time grid on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGrid {
    horizon: f64,
    n_steps: usize,
}

impl PathGrid {
    /// Rejects grids whose step is too coarse for Bernoulli thinning at
    /// the intensity cap.
    pub fn new(horizon: f64, n_steps: usize, lambda_max: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(HtbError::param("grid.horizon", format!("must be > 0, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(HtbError::param("grid.n_steps", "must be >= 1"));
        }
        let grid = PathGrid { horizon, n_steps };
        grid.check_lambda_max(lambda_max)?;
        Ok(grid)
    }

    pub fn check_lambda_max(&self, lambda_max: f64) -> Result<()> {
        let p = lambda_max * self.dt();
        // slack for the rounding in horizon / n_steps
        if p > JUMP_FIDELITY_BOUND * (1.0 + 1e-12) {
            return Err(HtbError::param(
                "grid.n_steps",
                format!(
                    "lambda_max * dt = {p} exceeds the jump-fidelity bound {JUMP_FIDELITY_BOUND}; \
                     use at least {} steps",
                    (lambda_max * self.horizon / JUMP_FIDELITY_BOUND).ceil()
                ),
            ));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Same horizon, twice as many steps.
    pub fn refined(&self) -> PathGrid {
        PathGrid { horizon: self.horizon, n_steps: self.n_steps * 2 }
    }
}

/// One simulated trajectory with the randomness that produced it.
///
/// `states` has `n_steps + 1` entries; `db1[k]`, `db2[k]` and `jumps[k]`
/// belong to the step from `states[k]` to `states[k + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub grid: PathGrid,
    pub states: Vec<MarketState>,
    pub db1: Vec<f64>,
    pub db2: Vec<f64>,
    pub jumps: Vec<bool>,
    pub measure: Measure,
}

impl Path {
    pub fn terminal(&self) -> &MarketState {
        self.states.last().expect("path has at least the initial state")
    }

    /// Cumulative buy-in count `N_T`.
    pub fn jump_count(&self) -> usize {
        self.jumps.iter().filter(|&&j| j).count()
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub paths: Vec<Path>,
    pub master_seed: u64,
    pub params: HtbParams,
    pub spec: RiskPremiumSpec,
    pub grid: PathGrid,
    pub measure: Measure,
}

/// A step produced a non-finite or non-positive state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFiniteState;

impl fmt::Display for NonFiniteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("step produced a non-finite or non-positive state")
    }
}

impl std::error::Error for NonFiniteState {}

/// `ξ = 1` iff `u < λ dt`.
#[inline]
pub fn jump_indicator(lambda: f64, dt: f64, u: f64) -> bool {
    u < lambda * dt
}

#[inline]
fn advance(
    state: &MarketState,
    inc: &DriverIncrement,
    jump: bool,
    dt: f64,
    params: &HtbParams,
    price_drift: f64,
    extra_x_drift: f64,
) -> std::result::Result<MarketState, NonFiniteState> {
    let diffusive = 1.0 + params.sigma * inc.dw + price_drift * dt;
    let factor = if jump { diffusive * (1.0 - params.gamma) } else { diffusive };
    let s = state.s * factor;
    let realized_return = factor - 1.0;
    let x = state.x
        + params.kappa * inc.dz
        + params.alpha * (params.x_bar - state.x) * dt
        + extra_x_drift * dt
        + params.beta * realized_return;
    if !(s.is_finite() && s > 0.0 && x.is_finite()) {
        return Err(NonFiniteState);
    }
    Ok(MarketState { t: state.t + dt, s, x, lambda: (params.lambda0 * x.exp()).min(params.lambda_max) })
}

/// One step of the physical dynamics.
pub fn step_p(
    state: &MarketState,
    inc: &DriverIncrement,
    jump: bool,
    dt: f64,
    params: &HtbParams,
    _spec: &RiskPremiumSpec,
) -> std::result::Result<MarketState, NonFiniteState> {
    advance(state, inc, jump, dt, params, params.gamma * state.lambda, 0.0)
}

/// One step of the pricing dynamics: price drift `r`, and the buy-in risk
/// premium removed from the log-intensity drift.
pub fn step_q(
    state: &MarketState,
    inc: &DriverIncrement,
    jump: bool,
    dt: f64,
    params: &HtbParams,
    spec: &RiskPremiumSpec,
) -> std::result::Result<MarketState, NonFiniteState> {
    let z = spec.eval(state.t, state.x, state.s);
    advance(state, inc, jump, dt, params, params.r, -params.alpha * z)
}

/// One-step expectation of the relative price change, with `ξ` enumerated
/// over `{0, 1}` at probabilities `(1 − λdt, λdt)` and the Gaussian term
/// integrated out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneStepExpectation {
    /// `E[σ dW + μ dt − γ ξ]`, the compensated first-order increment.
    pub compensated_return: f64,
    /// `E[(1 + σ dW + μ dt)(1 − γ)^ξ − 1]`, the discretized step. Differs
    /// from the compensated increment by `−γ λdt · μdt`.
    pub scheme_return: f64,
}

pub fn one_step_expected_return(
    state: &MarketState,
    dt: f64,
    params: &HtbParams,
    measure: Measure,
) -> OneStepExpectation {
    let drift = match measure {
        Measure::P => params.gamma * state.lambda,
        Measure::Q => params.r,
    };
    let p_jump = state.lambda * dt;
    let outcomes = [(false, 1.0 - p_jump), (true, p_jump)];
    let mut compensated = 0.0;
    let mut scheme = 0.0;
    for (jump, prob) in outcomes {
        let xi = if jump { 1.0 } else { 0.0 };
        compensated += prob * (drift * dt - params.gamma * xi);
        let jump_factor = if jump { 1.0 - params.gamma } else { 1.0 };
        scheme += prob * ((1.0 + drift * dt) * jump_factor - 1.0);
    }
    OneStepExpectation { compensated_return: compensated, scheme_return: scheme }
}

fn check_inputs(params: &HtbParams, spec: &RiskPremiumSpec, grid: &PathGrid, n_paths: usize) -> Result<()> {
    params.validate()?;
    spec.validate()?;
    grid.check_lambda_max(params.lambda_max)?;
    if n_paths == 0 {
        return Err(HtbError::param("run.n_paths", "must be >= 1"));
    }
    Ok(())
}

/// Simulates path `path_index` of the ensemble keyed by `master_seed`.
/// Inputs are assumed validated.
pub fn simulate_path(
    measure: Measure,
    params: &HtbParams,
    spec: &RiskPremiumSpec,
    grid: &PathGrid,
    master_seed: u64,
    path_index: usize,
) -> Result<Path> {
    let n = grid.n_steps();
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let mut rng = path_rng(master_seed, path_index);
    let mut states = Vec::with_capacity(n + 1);
    let mut db1 = Vec::with_capacity(n);
    let mut db2 = Vec::with_capacity(n);
    let mut jumps = Vec::with_capacity(n);
    let mut state = params.initial_state();
    states.push(state);
    for step in 0..n {
        let d = draw_step(&mut rng, sqrt_dt);
        let (dw, dz) = correlate_unchecked(d.db1, d.db2, params.rho);
        let inc = DriverIncrement { db1: d.db1, db2: d.db2, dw, dz };
        let jump = jump_indicator(state.lambda, dt, d.u);
        let next = match measure {
            Measure::P => step_p(&state, &inc, jump, dt, params, spec),
            Measure::Q => step_q(&state, &inc, jump, dt, params, spec),
        };
        state = next.map_err(|_| HtbError::SimulationDiverged { path: path_index, step })?;
        states.push(state);
        db1.push(d.db1);
        db2.push(d.db2);
        jumps.push(jump);
    }
    Ok(Path { grid: *grid, states, db1, db2, jumps, measure })
}

/// Simulates `n_paths` paths in parallel and maps each through `f` as soon
/// as it is built, so only per-path summaries are retained. Results come
/// back in path order; the first failing path (by index) is reported.
pub fn simulate_map<T, F>(
    measure: Measure,
    params: &HtbParams,
    spec: &RiskPremiumSpec,
    grid: &PathGrid,
    n_paths: usize,
    master_seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &Path) -> Result<T> + Sync,
{
    check_inputs(params, spec, grid, n_paths)?;
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let path = simulate_path(measure, params, spec, grid, master_seed, i)?;
            f(i, &path)
        })
        .collect::<Vec<Result<T>>>()
        .into_iter()
        .collect()
}

/// Simulates and keeps every path.
pub fn simulate_ensemble(
    measure: Measure,
    params: &HtbParams,
    spec: &RiskPremiumSpec,
    grid: &PathGrid,
    n_paths: usize,
    master_seed: u64,
) -> Result<Ensemble> {
    let paths = simulate_map(measure, params, spec, grid, n_paths, master_seed, |_, p| Ok(p.clone()))?;
    Ok(Ensemble { paths, master_seed, params: *params, spec: *spec, grid: *grid, measure })
}

pub const PATH_CSV_HEADER: &str = "path,t,S,x,lambda,db1,db2,jump,measure";

/// Writes one row per state. The increment and jump columns hold the step
/// that ended at that state; they are zero on the initial row.
pub fn write_paths_csv<W: Write>(ensemble: &Ensemble, mut out: W) -> Result<()> {
    writeln!(out, "{PATH_CSV_HEADER}")?;
    for (i, path) in ensemble.paths.iter().enumerate() {
        for (k, st) in path.states.iter().enumerate() {
            let (b1, b2, j) =
                if k == 0 { (0.0, 0.0, false) } else { (path.db1[k - 1], path.db2[k - 1], path.jumps[k - 1]) };
            writeln!(
                out,
                "{i},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                st.t,
                st.s,
                st.x,
                st.lambda,
                b1,
                b2,
                u8::from(j),
                path.measure
            )?;
        }
    }
    Ok(())
}
