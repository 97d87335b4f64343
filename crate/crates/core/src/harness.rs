//! Executes a [`RunConfig`] and writes its artifacts.
//!
//! | command              | output file                    | asserted checks                         |
//! |----------------------|--------------------------------|-----------------------------------------|
//! | `simulate`           | path CSV                       | none                                    |
//! | `price`              | price report (text records)    | none                                    |
//! | `verify-measure`     | report CSV + density CSV       | corrected unit expectation, consistency, carry |
//! | `verify-correlation` | report CSV                     | covariance and both variances           |
//!
//! A check passes iff `|z| ≤ 3`. The run passes iff every asserted check
//! passes; diagnostic checks are reported but do not affect the exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use crate::config::{Command, RunConfig};
use crate::correlation::{estimate_covariation, sample_terminal_drivers};
use crate::error::{HtbError, Result};
use crate::girsanov::{write_density_csv, DensityVariant};
use crate::model::RiskPremiumSpec;
use crate::pricing::{
    black_scholes_reference, carry_check_q, price_direct_q, price_discrepancy, MeasureChangeStudy, OptionSpec,
    PriceEstimate,
};
use crate::rng::derive_seed;
use crate::simulator::{simulate_ensemble, write_paths_csv, PathGrid};

/// `|z|` above which a check fails.
pub const Z_THRESHOLD: f64 = 3.0;

pub const MULTIPLE_TESTING_NOTE: &str =
    "each check has ~0.3% false-failure rate at |z| <= 3; several checks together fail more often by chance";

/// Seed labels for the independent ensembles of one run.
const LABEL_REWEIGHTED: u64 = 1;
const LABEL_CARRY: u64 = 2;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Pass = 0,
    CheckFailed = 1,
    ConfigError = 2,
    RuntimeError = 3,
}

impl ExitCode {
    pub fn for_error(err: &HtbError) -> Self {
        match err {
            HtbError::Config(_) | HtbError::InvalidParameter { .. } => ExitCode::ConfigError,
            _ => ExitCode::RuntimeError,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub check: String,
    pub estimate: f64,
    pub target: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub pass: bool,
    /// Whether the check contributes to the exit status.
    pub asserted: bool,
    pub seed: u64,
    pub n_paths: usize,
    pub parameters: String,
}

impl VerificationReport {
    #[allow(clippy::too_many_arguments)]
    fn new(
        check: &str,
        estimate: f64,
        target: f64,
        std_error: f64,
        z_score: f64,
        asserted: bool,
        seed: u64,
        n_paths: usize,
        parameters: &str,
    ) -> Self {
        VerificationReport {
            check: check.to_string(),
            estimate,
            target,
            std_error,
            z_score,
            pass: z_score.abs() <= Z_THRESHOLD,
            asserted,
            seed,
            n_paths,
            parameters: parameters.to_string(),
        }
    }
}

pub const REPORT_CSV_HEADER: &str = "check,estimate,target,std_error,z_score,pass,asserted,seed,n_paths,parameters";

pub fn write_report_csv<W: Write>(reports: &[VerificationReport], mut out: W) -> Result<()> {
    writeln!(out, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{},\"{}\"",
            r.check, r.estimate, r.target, r.std_error, r.z_score, r.pass, r.asserted, r.seed, r.n_paths, r.parameters
        )?;
    }
    Ok(())
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit: ExitCode,
    pub artifacts: Vec<PathBuf>,
    pub reports: Vec<VerificationReport>,
    /// Human-readable summary for the terminal.
    pub summary: String,
}

/// Space-separated echo of every model and grid input.
pub fn parameter_echo(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    let z = match cfg.riskspec {
        RiskPremiumSpec::Zero => "zero".to_string(),
        RiskPremiumSpec::Constant(c) => format!("constant({c})"),
        RiskPremiumSpec::AffineInX { a, b } => format!("affine({a};{b})"),
    };
    format!(
        "sigma={} kappa={} rho={} gamma={} alpha={} x_bar={} beta={} r={} lambda0={} s0={} x0={} lambda_max={} z={} horizon={} n_steps={}",
        p.sigma,
        p.kappa,
        p.rho,
        p.gamma,
        p.alpha,
        p.x_bar,
        p.beta,
        p.r,
        p.lambda0,
        p.s0,
        p.x0,
        p.lambda_max,
        z,
        cfg.grid.horizon(),
        cfg.grid.n_steps()
    )
}

fn create(path: &FsPath) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// `<stem>.densities.csv` next to `output`.
pub fn density_output_path(output: &FsPath) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "htb".into());
    output.with_file_name(format!("{stem}.densities.csv"))
}

/// Grid ending at the option's maturity with a step no larger than the
/// configured one.
fn pricing_grid(cfg: &RunConfig, option: &OptionSpec) -> Result<PathGrid> {
    if (option.maturity - cfg.grid.horizon()).abs() <= 1e-12 * cfg.grid.horizon() {
        return Ok(cfg.grid);
    }
    let steps = (cfg.grid.n_steps() as f64 * option.maturity / cfg.grid.horizon()).ceil() as usize;
    PathGrid::new(option.maturity, steps.max(1), cfg.params.lambda_max)
}

fn finish(reports: Vec<VerificationReport>, artifacts: Vec<PathBuf>, mut summary: String) -> RunOutcome {
    let all_pass = reports.iter().filter(|r| r.asserted).all(|r| r.pass);
    for r in &reports {
        summary.push_str(&format!(
            "{:<34} {} estimate={:.6} target={:.6} se={:.3e} z={:+.3}{}\n",
            r.check,
            if r.pass { "PASS" } else { "FAIL" },
            r.estimate,
            r.target,
            r.std_error,
            r.z_score,
            if r.asserted { "" } else { " (diagnostic)" }
        ));
    }
    if !reports.is_empty() {
        summary.push_str(&format!("note: {MULTIPLE_TESTING_NOTE}\n"));
    }
    RunOutcome { exit: if all_pass { ExitCode::Pass } else { ExitCode::CheckFailed }, artifacts, reports, summary }
}

fn run_simulate(cfg: &RunConfig) -> Result<RunOutcome> {
    let ens = simulate_ensemble(cfg.measure, &cfg.params, &cfg.riskspec, &cfg.grid, cfg.n_paths, cfg.master_seed)?;
    let mut out = create(&cfg.output_path)?;
    write_paths_csv(&ens, &mut out)?;
    out.flush()?;
    let summary = format!(
        "simulated {} paths under {} ({} steps) -> {}\n",
        cfg.n_paths,
        cfg.measure,
        cfg.grid.n_steps(),
        cfg.output_path.display()
    );
    Ok(RunOutcome { exit: ExitCode::Pass, artifacts: vec![cfg.output_path.clone()], reports: vec![], summary })
}

fn price_record(est: &PriceEstimate, label: &str, seed: u64, echo: &str) -> String {
    format!(
        "method={} variant={} value={:.16e} std_error={:.16e} n_paths={} seed={} {}\n",
        est.method, label, est.value, est.std_error, est.n_paths, seed, echo
    )
}

fn run_price(cfg: &RunConfig) -> Result<RunOutcome> {
    let option = cfg.option_or_default();
    let grid = pricing_grid(cfg, &option)?;
    let echo = parameter_echo(cfg);
    let seed = cfg.master_seed;
    let mut text = String::new();

    let direct = price_direct_q(&option, &cfg.params, &cfg.riskspec, &grid, cfg.n_paths, seed)?;
    text.push_str(&price_record(&direct, "-", seed, &echo));

    let rw_seed = derive_seed(seed, LABEL_REWEIGHTED);
    match cfg.params.validate_for_measure_change(&cfg.riskspec) {
        Ok(()) => {
            let study = MeasureChangeStudy::run(&cfg.params, &cfg.riskspec, &grid, &option, cfg.n_paths, rw_seed)?;
            for variant in [DensityVariant::Corrected, DensityVariant::Uncorrelated] {
                let est = study.reweighted_price(variant);
                text.push_str(&price_record(&est, variant.name(), rw_seed, &echo));
                let d = price_discrepancy(&est, &direct);
                text.push_str(&format!(
                    "check=reweighted_minus_direct variant={} difference={:.16e} std_error={:.16e} z_score={:.16e}\n",
                    variant, d.difference, d.std_error, d.z_score
                ));
            }
        }
        Err(e) => text.push_str(&format!("method=reweighted_p skipped=\"{e}\"\n")),
    }

    if cfg.params.gamma == 0.0 && cfg.params.sigma > 0.0 {
        let bs = black_scholes_reference(&option, cfg.params.s0, cfg.params.r, cfg.params.sigma)?;
        text.push_str(&price_record(&bs, "-", seed, &echo));
        let d = price_discrepancy(&direct, &bs);
        text.push_str(&format!(
            "check=direct_minus_closed_form difference={:.16e} std_error={:.16e} z_score={:.16e}\n",
            d.difference, d.std_error, d.z_score
        ));
    }

    let mut out = create(&cfg.output_path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(RunOutcome { exit: ExitCode::Pass, artifacts: vec![cfg.output_path.clone()], reports: vec![], summary: text })
}

fn run_verify_measure(cfg: &RunConfig) -> Result<RunOutcome> {
    let option = cfg.option_or_default();
    let grid = pricing_grid(cfg, &option)?;
    let echo = parameter_echo(cfg);
    let n = cfg.n_paths;
    let seed = cfg.master_seed;
    let rw_seed = derive_seed(seed, LABEL_REWEIGHTED);
    let carry_seed = derive_seed(seed, LABEL_CARRY);

    let study = MeasureChangeStudy::run(&cfg.params, &cfg.riskspec, &grid, &option, n, rw_seed)?;
    let direct = price_direct_q(&option, &cfg.params, &cfg.riskspec, &grid, n, seed)?;
    let carry = carry_check_q(&cfg.params, &cfg.riskspec, &cfg.grid, n, carry_seed)?;

    let mut reports = Vec::new();
    for (variant, asserted) in [(DensityVariant::Corrected, true), (DensityVariant::Uncorrelated, false)] {
        let u = study.unit_expectation(variant)?;
        reports.push(VerificationReport::new(
            &format!("unit_expectation_{variant}"),
            u.mean,
            1.0,
            u.std_error,
            u.z_score,
            asserted,
            rw_seed,
            n,
            &echo,
        ));
    }
    for (variant, asserted) in [(DensityVariant::Corrected, true), (DensityVariant::Uncorrelated, false)] {
        let d = price_discrepancy(&study.reweighted_price(variant), &direct);
        reports.push(VerificationReport::new(
            &format!("price_consistency_{variant}"),
            d.difference,
            0.0,
            d.std_error,
            d.z_score,
            asserted,
            seed,
            n,
            &echo,
        ));
    }
    reports.push(VerificationReport::new(
        "carry_martingale_q",
        carry.estimate,
        cfg.params.s0,
        carry.std_error,
        carry.z_score,
        true,
        carry_seed,
        n,
        &echo,
    ));

    let mut out = create(&cfg.output_path)?;
    write_report_csv(&reports, &mut out)?;
    out.flush()?;
    let dens_path = density_output_path(&cfg.output_path);
    let mut dens = create(&dens_path)?;
    let mut records = study.records(DensityVariant::Corrected);
    records.extend(study.records(DensityVariant::Uncorrelated));
    write_density_csv(&records, &mut dens)?;
    dens.flush()?;

    let summary = format!("verify-measure: {n} paths, seed {seed}\n");
    Ok(finish(reports, vec![cfg.output_path.clone(), dens_path], summary))
}

fn run_verify_correlation(cfg: &RunConfig) -> Result<RunOutcome> {
    let echo = parameter_echo(cfg);
    let seed = cfg.master_seed;
    let samples = sample_terminal_drivers(cfg.params.rho, &cfg.grid, cfg.n_paths, seed)?;
    let rep = estimate_covariation(&samples, cfg.params.rho, cfg.grid.horizon())?;
    let t = cfg.grid.horizon();
    let reports = vec![
        VerificationReport::new(
            "covariance_wz",
            rep.cov,
            rep.rho * t,
            rep.cov_se,
            rep.cov_z(),
            true,
            seed,
            rep.n,
            &echo,
        ),
        VerificationReport::new("variance_w", rep.var_w, t, rep.var_w_se, rep.var_w_z(), true, seed, rep.n, &echo),
        VerificationReport::new("variance_z", rep.var_z, t, rep.var_z_se, rep.var_z_z(), true, seed, rep.n, &echo),
    ];
    let mut out = create(&cfg.output_path)?;
    write_report_csv(&reports, &mut out)?;
    out.flush()?;
    let summary = format!("verify-correlation: {} samples, rho {}, seed {seed}\n", rep.n, rep.rho);
    Ok(finish(reports, vec![cfg.output_path.clone()], summary))
}

/// Dispatches the configured command. Engine and I/O errors are returned
/// as `Err`; map them with [`ExitCode::for_error`].
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    match cfg.command {
        Command::Simulate => run_simulate(cfg),
        Command::Price => run_price(cfg),
        Command::VerifyMeasure => run_verify_measure(cfg),
        Command::VerifyCorrelation => run_verify_correlation(cfg),
    }
}
