//! Model constants, instantaneous state and the market prices of risk.
//!
//! Under the physical measure the price and the log buy-in intensity follow
//!
//! ```text
//! dS/S = σ dW + γ λ dt − γ dN_λ
//! dx   = κ dZ + α (x̄ − x) dt + β dS/S,      λ = λ₀ e^x
//! ```
//!
//! with `d⟨W, Z⟩ = ρ dt`. Changing to a pricing measure removes the price
//! risk premium `Γ = (γλ − r)/σ` from `W` and the buy-in risk premium
//! `Θ = α z(t, x, S)/κ` from `Z`.

use serde::Deserialize;

use crate::error::{HtbError, Result};

/// Largest admissible `|ρ|`; the corrected density divides by `√(1−ρ²)`.
pub const MAX_ABS_RHO: f64 = 1.0 - 1e-6;

/// Model constants and initial conditions. Time is in years and every rate
/// is annualized.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HtbParams {
    /// Price diffusion volatility.
    pub sigma: f64,
    /// Log-intensity diffusion volatility.
    pub kappa: f64,
    /// Instantaneous correlation of the price and intensity drivers.
    pub rho: f64,
    /// Relative price drop caused by one buy-in.
    pub gamma: f64,
    /// Mean-reversion speed of the log-intensity.
    pub alpha: f64,
    /// Long-run log-intensity level.
    pub x_bar: f64,
    /// Coupling of realized returns into the log-intensity.
    pub beta: f64,
    /// Flat risk-free rate.
    pub r: f64,
    /// Reference intensity, `λ = λ₀ e^x`.
    pub lambda0: f64,
    pub s0: f64,
    pub x0: f64,
    /// Hard cap applied to `λ₀ e^x`.
    pub lambda_max: f64,
}

impl Default for HtbParams {
    fn default() -> Self {
        HtbParams {
            sigma: 0.3,
            kappa: 0.5,
            rho: 0.0,
            gamma: 0.05,
            alpha: 1.0,
            x_bar: 0.0,
            beta: 0.5,
            r: 0.01,
            lambda0: 2.0,
            s0: 100.0,
            x0: 0.0,
            lambda_max: 50.0,
        }
    }
}

fn finite(key: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(HtbError::param(format!("model.{key}"), format!("must be finite, got {v}")))
    }
}

impl HtbParams {
    /// Checks the constraints every simulation needs.
    ///
    /// Zero volatilities are accepted here so that degenerate deterministic
    /// runs stay expressible; [`HtbParams::validate_for_measure_change`]
    /// adds the strict positivity the risk premia divide by.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("sigma", self.sigma),
            ("kappa", self.kappa),
            ("rho", self.rho),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("x_bar", self.x_bar),
            ("beta", self.beta),
            ("r", self.r),
            ("lambda0", self.lambda0),
            ("s0", self.s0),
            ("x0", self.x0),
            ("lambda_max", self.lambda_max),
        ];
        for (key, v) in fields {
            finite(key, v)?;
        }
        if self.sigma < 0.0 {
            return Err(HtbError::param("model.sigma", "must be >= 0"));
        }
        if self.kappa < 0.0 {
            return Err(HtbError::param("model.kappa", "must be >= 0"));
        }
        if self.rho.abs() > MAX_ABS_RHO {
            return Err(HtbError::param("model.rho", format!("|rho| must be <= 1 - 1e-6, got {}", self.rho)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(HtbError::param("model.gamma", format!("must satisfy 0 <= gamma < 1, got {}", self.gamma)));
        }
        if self.alpha < 0.0 {
            return Err(HtbError::param("model.alpha", "must be >= 0"));
        }
        if self.lambda0 <= 0.0 {
            return Err(HtbError::param("model.lambda0", "must be > 0"));
        }
        if self.s0 <= 0.0 {
            return Err(HtbError::param("model.s0", "must be > 0"));
        }
        let lambda_init = self.lambda0 * self.x0.exp();
        if self.lambda_max < lambda_init {
            return Err(HtbError::param(
                "model.lambda_max",
                format!("must be >= lambda0 * exp(x0) = {lambda_init}, got {}", self.lambda_max),
            ));
        }
        Ok(())
    }

    /// Constraints for computing `Γ` and `Θ`: `σ > 0`, and `κ > 0` unless
    /// the buy-in premium vanishes identically.
    pub fn validate_for_measure_change(&self, spec: &RiskPremiumSpec) -> Result<()> {
        self.validate()?;
        spec.validate()?;
        if self.sigma <= 0.0 {
            return Err(HtbError::param(
                "model.sigma",
                "must be > 0 to change measure (price of risk divides by sigma)",
            ));
        }
        let premium_vanishes = spec.is_zero() || self.alpha == 0.0;
        if self.kappa <= 0.0 && !premium_vanishes {
            return Err(HtbError::param("model.kappa", "must be > 0 when the buy-in risk premium is non-zero"));
        }
        Ok(())
    }

    /// Initial state `(0, s0, x0, λ(x0))`.
    pub fn initial_state(&self) -> MarketState {
        MarketState { t: 0.0, s: self.s0, x: self.x0, lambda: (self.lambda0 * self.x0.exp()).min(self.lambda_max) }
    }
}

/// Instantaneous `(t, S, x, λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketState {
    pub t: f64,
    pub s: f64,
    pub x: f64,
    pub lambda: f64,
}

/// Market price of buy-in risk `z(t, x, S)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RiskPremiumSpec {
    #[default]
    Zero,
    Constant(f64),
    /// `a + b·x`.
    AffineInX {
        a: f64,
        b: f64,
    },
}

impl RiskPremiumSpec {
    pub fn eval(&self, _t: f64, x: f64, _s: f64) -> f64 {
        match *self {
            RiskPremiumSpec::Zero => 0.0,
            RiskPremiumSpec::Constant(c) => c,
            RiskPremiumSpec::AffineInX { a, b } => a + b * x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            RiskPremiumSpec::Zero => true,
            RiskPremiumSpec::Constant(c) => c == 0.0,
            RiskPremiumSpec::AffineInX { a, b } => a == 0.0 && b == 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RiskPremiumSpec::Zero => true,
            RiskPremiumSpec::Constant(c) => c.is_finite(),
            RiskPremiumSpec::AffineInX { a, b } => a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(HtbError::param("risk_premium", "coefficients must be finite"))
        }
    }
}

/// `min(λ₀ e^x, λ_max)`.
pub fn intensity_from_log(x: f64, params: &HtbParams) -> Result<f64> {
    if !x.is_finite() {
        return Err(HtbError::input(format!("log-intensity must be finite, got {x}")));
    }
    Ok((params.lambda0 * x.exp()).min(params.lambda_max))
}

/// Price of diffusion risk `Γ = (γλ − r)/σ`.
pub fn gamma_price_of_risk(lambda: f64, params: &HtbParams) -> f64 {
    (params.gamma * lambda - params.r) / params.sigma
}

/// Price of buy-in risk `Θ = α z(t, x, S)/κ`. Returns exactly zero when
/// `α z` vanishes, whatever `κ` is.
pub fn theta_price_of_risk(t: f64, x: f64, s: f64, spec: &RiskPremiumSpec, params: &HtbParams) -> f64 {
    let num = params.alpha * spec.eval(t, x, s);
    if num == 0.0 {
        0.0
    } else {
        num / params.kappa
    }
}

/// Short-seller's profit over one step, `−S (σ dW + λ γ dt)`: the price
/// move plus the expected buy-in loss, with the realized jump cancelled.
pub fn pnl_increment(s: f64, dw: f64, dt: f64, lambda: f64, params: &HtbParams) -> f64 {
    -s * (params.sigma * dw + lambda * params.gamma * dt)
}
