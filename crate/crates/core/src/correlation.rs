//! Correlated drivers built from two independent Brownian increments.
//!
//! `W = B₁` and `Z = ρ B₁ + √(1−ρ²) B₂`, so `d⟨Z⟩ = dt` and
//! `d⟨W, Z⟩ = ρ dt`. Here `ρ` is the instantaneous correlation; the
//! covariance of `(W_t, Z_t)` is `ρ t`.

use rayon::prelude::*;

use crate::error::{HtbError, Result};
use crate::model::MAX_ABS_RHO;
use crate::rng::{draw_step, path_rng};
use crate::simulator::PathGrid;
use crate::stats::{z_score, MeanEstimate};

/// Minimum sample size accepted by [`estimate_covariation`].
pub const MIN_COVARIATION_SAMPLES: usize = 100;

/// Independent increments and the correlated pair derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverIncrement {
    pub db1: f64,
    pub db2: f64,
    pub dw: f64,
    pub dz: f64,
}

impl DriverIncrement {
    pub fn new(db1: f64, db2: f64, rho: f64) -> Result<Self> {
        let (dw, dz) = make_correlated(db1, db2, rho)?;
        Ok(DriverIncrement { db1, db2, dw, dz })
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho.abs() <= MAX_ABS_RHO {
        Ok(())
    } else {
        Err(HtbError::input(format!("|rho| must be <= 1 - 1e-6, got {rho}")))
    }
}

/// `(dw, dz) = (db1, ρ·db1 + √(1−ρ²)·db2)`.
pub fn make_correlated(db1: f64, db2: f64, rho: f64) -> Result<(f64, f64)> {
    check_rho(rho)?;
    Ok(correlate_unchecked(db1, db2, rho))
}

#[inline]
pub(crate) fn correlate_unchecked(db1: f64, db2: f64, rho: f64) -> (f64, f64) {
    (db1, rho * db1 + (1.0 - rho * rho).sqrt() * db2)
}

/// Sample moments of terminal `(W_t, Z_t)` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovariationReport {
    pub n: usize,
    pub horizon: f64,
    pub rho: f64,
    pub cov: f64,
    pub cov_se: f64,
    pub var_w: f64,
    pub var_w_se: f64,
    pub var_z: f64,
    pub var_z_se: f64,
}

impl CovariationReport {
    /// Deviation of the covariance from `ρ t` in standard errors.
    pub fn cov_z(&self) -> f64 {
        z_score(self.cov - self.rho * self.horizon, self.cov_se)
    }

    pub fn var_w_z(&self) -> f64 {
        z_score(self.var_w - self.horizon, self.var_w_se)
    }

    pub fn var_z_z(&self) -> f64 {
        z_score(self.var_z - self.horizon, self.var_z_se)
    }
}

/// Sample covariance and variances of terminal driver values, with
/// standard errors taken from the spread of the centred products.
pub fn estimate_covariation(samples: &[(f64, f64)], rho: f64, horizon: f64) -> Result<CovariationReport> {
    if samples.is_empty() {
        return Err(HtbError::input("covariation ensemble is empty"));
    }
    if samples.len() < MIN_COVARIATION_SAMPLES {
        return Err(HtbError::input(format!(
            "covariation needs at least {MIN_COVARIATION_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len();
    let ws: Vec<f64> = samples.iter().map(|p| p.0).collect();
    let zs: Vec<f64> = samples.iter().map(|p| p.1).collect();
    let mw = MeanEstimate::from_values(&ws).mean;
    let mz = MeanEstimate::from_values(&zs).mean;
    let centred = |f: &dyn Fn(f64, f64) -> f64| -> MeanEstimate {
        let v: Vec<f64> = samples.iter().map(|&(w, z)| f(w - mw, z - mz)).collect();
        MeanEstimate::from_values(&v)
    };
    // n/(n−1) turns the centred-product means into unbiased moments
    let bessel = n as f64 / (n - 1) as f64;
    let cov = centred(&|w, z| w * z);
    let vw = centred(&|w, _| w * w);
    let vz = centred(&|_, z| z * z);
    Ok(CovariationReport {
        n,
        horizon,
        rho,
        cov: cov.mean * bessel,
        cov_se: cov.std_error * bessel,
        var_w: vw.mean * bessel,
        var_w_se: vw.std_error * bessel,
        var_z: vz.mean * bessel,
        var_z_se: vz.std_error * bessel,
    })
}

/// Terminal `(W_T, Z_T)` of `n_paths` driver paths on `grid`, summed from
/// per-step correlated increments. Uses the same per-path streams as the
/// simulator.
pub fn sample_terminal_drivers(rho: f64, grid: &PathGrid, n_paths: usize, master_seed: u64) -> Result<Vec<(f64, f64)>> {
    check_rho(rho)?;
    let sqrt_dt = grid.dt().sqrt();
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(master_seed, i);
            let (mut w, mut z) = (0.0, 0.0);
            for _ in 0..grid.n_steps() {
                let d = draw_step(&mut rng, sqrt_dt);
                let (dw, dz) = correlate_unchecked(d.db1, d.db2, rho);
                w += dw;
                z += dz;
            }
            (w, z)
        })
        .collect())
}
