//! Experiment runner behind the `rbmhit` binary: config parsing, the five
//! run modes, and CSV/JSON report emission.
//!
//! Exit codes: 0 success, 1 statistical or bracket failure, 2 configuration
//! error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundaryPartition, DomainSpec};
use crate::oracles::{
    annulus_escape_probability, localization_bracket, narrow_target_probability,
    potential_product, strip_harmonic_measure, LocalizationReport,
};
use crate::sde::{
    estimate_hit_probability, run_path, run_path_until_sphere, HitEstimate, OutcomeClass,
    SimConfig, StageOutcome,
};
use crate::stats::binomial_estimate_seeded;

pub const CSV_HEADER: &str =
    "epsilon,p_hat,ci_low,ci_high,n_paths,dt,seed,oracle_value,product_thm31,timeout_fraction";

#[derive(Debug, Error)]
pub enum CliError {
    /// Anything wrong with the request itself: unreadable or malformed
    /// config, invariant violations, unusable parameters. Exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// The experiment ran but its statistical check failed. Exit code 1.
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::CheckFailed(_) => 1,
        }
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Estimate,
    Sweep,
    Fit,
    Oracle,
    Localize,
}

fn default_true() -> bool {
    true
}

fn default_format() -> OutputFormat {
    OutputFormat::Json
}

/// One experiment, as a single flat JSON document. The domain contributes a
/// `variant` key and the partition a `partition` key; everything else is
/// top-level scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub domain: DomainSpec,
    #[serde(flatten)]
    pub partition: BoundaryPartition,
    pub start: Vec<f64>,
    pub dt: f64,
    pub max_time: f64,
    #[serde(default = "default_true")]
    pub bridge_correction: bool,
    pub master_seed: u64,
    pub n_paths: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon_list: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default = "default_format")]
    pub output_format: OutputFormat,
    /// Radius of the localized absorbing sphere for `localize` mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
}

impl ExperimentConfig {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.dt,
            max_time: self.max_time,
            bridge_correction: self.bridge_correction,
            master_seed: self.master_seed,
            n_paths: self.n_paths,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.domain.validate().map_err(config_err)?;
        if !self.partition.compatible_with(&self.domain) {
            return Err(CliError::Config(
                "partition is not defined on this domain".into(),
            ));
        }
        if self.start.len() != self.domain.dimension() {
            return Err(CliError::Config(format!(
                "start has {} coordinates, domain needs {}",
                self.start.len(),
                self.domain.dimension()
            )));
        }
        self.sim_config().validate().map_err(config_err)?;
        if !self
            .epsilon_list
            .windows(2)
            .all(|w| w[0] > w[1] && w[1] > 0.0)
            || self.epsilon_list.first().is_some_and(|&e| e <= 0.0)
        {
            return Err(CliError::Config(
                "epsilon_list must be strictly decreasing positive reals".into(),
            ));
        }
        Ok(())
    }
}

/// One line of a sweep table; `oracle_value` is present exactly when the
/// domain has a closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_paths: u64,
    pub dt: f64,
    pub seed: u64,
    pub oracle_value: Option<f64>,
    pub product_thm31: f64,
    pub timeout_fraction: f64,
}

impl SweepRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            fmt17(self.epsilon),
            fmt17(self.p_hat),
            fmt17(self.ci_low),
            fmt17(self.ci_high),
            self.n_paths,
            fmt17(self.dt),
            self.seed,
            self.oracle_value.map(fmt17).unwrap_or_default(),
            fmt17(self.product_thm31),
            fmt17(self.timeout_fraction),
        )
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub config: ExperimentConfig,
    pub estimate: HitEstimate,
    pub oracle_value: Option<f64>,
    /// `|p_hat - oracle| / sigma`, when an oracle exists.
    pub sigma_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    pub product_min: f64,
    pub product_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Leading coefficient of `a / log(eps)`; the limiting constant.
    pub a: f64,
    /// Coefficient of the `1 / log(eps)^2` correction.
    pub b: f64,
    pub a_stderr: f64,
    pub condition: f64,
    pub nonmonotone_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizeReport {
    pub config: ExperimentConfig,
    pub bracket: LocalizationReport,
    /// Probability of reaching the stage sphere before absorption.
    pub stage_reach: f64,
    /// Target-hit probability restarted from sampled stage-sphere points.
    pub stage_hit: f64,
    /// `stage_reach * stage_hit`; should track `p_full`.
    pub factorized: f64,
}

/// Closed-form hitting probability for the configured setup, where one
/// exists.
pub fn oracle_value(
    domain: &DomainSpec,
    partition: &BoundaryPartition,
    start: &[f64],
) -> Option<f64> {
    match (*domain, *partition) {
        (DomainSpec::HalfPlane2D, BoundaryPartition::HalfPlaneNarrowTarget { epsilon }) => {
            narrow_target_probability(Complex64::new(start[0], start[1]), epsilon).ok()
        }
        (DomainSpec::HalfPlane2D, BoundaryPartition::HalfPlaneInterval { a, b }) => {
            // harmonic measure of [a, b] from z0: angle subtended over pi
            let z = Complex64::new(start[0], start[1]);
            let ta = (z - a).arg();
            let tb = (z - b).arg();
            Some((tb - ta) / std::f64::consts::PI)
        }
        (DomainSpec::Strip2D { length }, BoundaryPartition::StripEnds)
        | (DomainSpec::Rectangle2D { length, .. }, BoundaryPartition::RectangleEnds) => {
            strip_harmonic_measure(Complex64::new(start[0], 0.0), length).ok()
        }
        (
            DomainSpec::Annulus {
                dim,
                r_inner,
                r_outer,
            },
            BoundaryPartition::AnnulusShells,
        ) => {
            let rho = start.iter().map(|x| x * x).sum::<f64>().sqrt();
            annulus_escape_probability(dim, rho, r_inner, r_outer).ok()
        }
        _ => None,
    }
}

fn with_epsilon(partition: &BoundaryPartition, eps: f64) -> Option<BoundaryPartition> {
    Some(match *partition {
        BoundaryPartition::HalfPlaneNarrowTarget { .. } => {
            BoundaryPartition::HalfPlaneNarrowTarget { epsilon: eps }
        }
        BoundaryPartition::HalfPlaneInterval { a, .. } => {
            BoundaryPartition::HalfPlaneInterval { a, b: a + eps }
        }
        BoundaryPartition::HalfSpaceWall { absorb_radius, .. } => {
            BoundaryPartition::HalfSpaceWall {
                epsilon: eps,
                absorb_radius,
            }
        }
        BoundaryPartition::HalfBallWallTarget { .. } => {
            BoundaryPartition::HalfBallWallTarget { epsilon: eps }
        }
        _ => return None,
    })
}

/// Step size for one sweep row: the configured `dt`, shrunk to `0.1 eps^2`
/// when the target is small enough that a fixed step would miss it.
pub fn sweep_dt(dt_config: f64, eps: f64) -> f64 {
    dt_config.min(0.1 * eps * eps)
}

fn estimate_once(
    cfg: &ExperimentConfig,
    partition: &BoundaryPartition,
    dt: f64,
) -> Result<HitEstimate, CliError> {
    let sim = SimConfig {
        dt,
        ..cfg.sim_config()
    };
    estimate_hit_probability(&cfg.domain, partition, &cfg.start, &sim).map_err(config_err)
}

fn make_row(
    cfg: &ExperimentConfig,
    eps: f64,
    dt: f64,
    est: &HitEstimate,
    oracle: Option<f64>,
) -> Result<SweepRow, CliError> {
    let n = cfg.domain.dimension();
    let product = if eps > 0.0 {
        potential_product(est.estimate.p_hat, eps, n).map_err(config_err)?
    } else {
        0.0
    };
    Ok(SweepRow {
        epsilon: eps,
        p_hat: est.estimate.p_hat,
        ci_low: est.estimate.ci_low,
        ci_high: est.estimate.ci_high,
        n_paths: est.estimate.n_paths,
        dt,
        seed: est.estimate.master_seed,
        oracle_value: oracle,
        product_thm31: product,
        timeout_fraction: est.timeout_fraction,
    })
}

pub fn cmd_estimate(cfg: &ExperimentConfig) -> Result<EstimateReport, CliError> {
    cfg.validate()?;
    let est = estimate_once(cfg, &cfg.partition, cfg.dt)?;
    let oracle = oracle_value(&cfg.domain, &cfg.partition, &cfg.start);
    let sigma_distance = oracle.map(|o| {
        let s = est.estimate.sigma(0.95);
        if s > 0.0 {
            (est.estimate.p_hat - o).abs() / s
        } else {
            f64::INFINITY
        }
    });
    Ok(EstimateReport {
        config: cfg.clone(),
        estimate: est,
        oracle_value: oracle,
        sigma_distance,
    })
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepReport, CliError> {
    cfg.validate()?;
    if cfg.epsilon_list.is_empty() {
        return Err(CliError::Config("sweep needs a nonempty epsilon_list".into()));
    }
    let mut rows = Vec::with_capacity(cfg.epsilon_list.len());
    for &eps in &cfg.epsilon_list {
        let partition = with_epsilon(&cfg.partition, eps).ok_or_else(|| {
            CliError::Config("partition has no target-size parameter to sweep".into())
        })?;
        let dt = sweep_dt(cfg.dt, eps);
        let est = estimate_once(cfg, &partition, dt)?;
        let oracle = oracle_value(&cfg.domain, &partition, &cfg.start);
        rows.push(make_row(cfg, eps, dt, &est, oracle)?);
    }
    let product_min = rows.iter().map(|r| r.product_thm31).fold(f64::INFINITY, f64::min);
    let product_max = rows
        .iter()
        .map(|r| r.product_thm31)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SweepReport {
        config: cfg.clone(),
        rows,
        product_min,
        product_max,
    })
}

/// Least-squares fit of `(eps, p)` points to `p = a / log(eps) + b / log(eps)^2`.
pub fn fit_inverse_log(points: &[(f64, f64)]) -> Result<FitResult, CliError> {
    if points.len() < 3 {
        return Err(CliError::Config(format!(
            "fit needs at least 3 rows, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(e, _)| e <= 0.0 || e == 1.0) {
        return Err(CliError::Config(
            "fit abscissae must be positive and different from 1".into(),
        ));
    }
    // design columns t = 1/log(eps), t^2
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(eps, p) in points {
        let t = 1.0 / eps.ln();
        s11 += t * t;
        s12 += t * t * t;
        s22 += t * t * t * t;
        r1 += t * p;
        r2 += t * t * p;
    }
    let det = s11 * s22 - s12 * s12;
    let trace = s11 + s22;
    let disc = (trace * trace - 4.0 * det).max(0.0).sqrt();
    let (l1, l2) = ((trace + disc) / 2.0, (trace - disc) / 2.0);
    let condition = if l2 > 0.0 { l1 / l2 } else { f64::INFINITY };
    if !det.is_finite() || det.abs() < 1e-300 || condition > 1e14 {
        return Err(CliError::Config(format!(
            "ill-conditioned fit: condition number {condition:e}"
        )));
    }
    let a = (s22 * r1 - s12 * r2) / det;
    let b = (s11 * r2 - s12 * r1) / det;
    let m = points.len() as f64;
    let ss_res: f64 = points
        .iter()
        .map(|&(eps, p)| {
            let t = 1.0 / eps.ln();
            (p - a * t - b * t * t).powi(2)
        })
        .sum();
    let var = ss_res / (m - 2.0);
    let a_stderr = (var * s22 / det).max(0.0).sqrt();
    // p should shrink with the target; a rise beyond noise is suspicious
    let mut nonmonotone_warning = false;
    let mut sorted: Vec<&(f64, f64)> = points.iter().collect();
    sorted.sort_by(|x, y| y.0.total_cmp(&x.0));
    for w in sorted.windows(2) {
        if w[1].1 > w[0].1 + 1e-12 {
            nonmonotone_warning = true;
        }
    }
    Ok(FitResult {
        a,
        b,
        a_stderr,
        condition,
        nonmonotone_warning,
    })
}

/// Sweeps the target sizes and fits the inverse-log model. Rows with a closed
/// form contribute their oracle value (a noiseless fit); rows without fall
/// back to the Monte Carlo estimate.
pub fn cmd_fit(cfg: &ExperimentConfig) -> Result<FitReport, CliError> {
    if cfg.domain.dimension() != 2 {
        return Err(CliError::Config(
            "the inverse-log fit applies to planar domains only".into(),
        ));
    }
    let oracle_only = cfg
        .epsilon_list
        .iter()
        .all(|&eps| match with_epsilon(&cfg.partition, eps) {
            Some(p) => oracle_value(&cfg.domain, &p, &cfg.start).is_some(),
            None => false,
        });
    let (rows, points) = if oracle_only {
        cfg.validate()?;
        if cfg.epsilon_list.is_empty() {
            return Err(CliError::Config("fit needs a nonempty epsilon_list".into()));
        }
        let mut rows = Vec::new();
        let mut points = Vec::new();
        for &eps in &cfg.epsilon_list {
            let partition = with_epsilon(&cfg.partition, eps).expect("checked above");
            let o = oracle_value(&cfg.domain, &partition, &cfg.start).expect("checked above");
            let est = HitEstimate {
                estimate: binomial_estimate_seeded(0, 1, 0.95, cfg.master_seed)
                    .map_err(config_err)?,
                n_timeouts: 0,
                timeout_fraction: 0.0,
                timeout_warning: false,
            };
            let mut row = make_row(cfg, eps, sweep_dt(cfg.dt, eps), &est, Some(o))?;
            row.p_hat = o;
            row.ci_low = o;
            row.ci_high = o;
            row.n_paths = 0;
            row.product_thm31 = potential_product(o, eps, 2).map_err(config_err)?;
            points.push((eps, o));
            rows.push(row);
        }
        (rows, points)
    } else {
        let sweep = cmd_sweep(cfg)?;
        let points = sweep
            .rows
            .iter()
            .map(|r| (r.epsilon, r.oracle_value.unwrap_or(r.p_hat)))
            .collect();
        (sweep.rows, points)
    };
    let fit = fit_inverse_log(&points)?;
    Ok(FitReport {
        config: cfg.clone(),
        rows,
        fit,
    })
}

/// Oracle values only, no simulation: rows carry the closed form in both the
/// estimate and oracle columns.
pub fn cmd_oracle(cfg: &ExperimentConfig) -> Result<SweepReport, CliError> {
    cfg.validate()?;
    let eps_list: Vec<Option<f64>> = if cfg.epsilon_list.is_empty() {
        vec![cfg.partition.epsilon()]
    } else {
        cfg.epsilon_list.iter().map(|&e| Some(e)).collect()
    };
    let mut rows = Vec::new();
    for eps in eps_list {
        let partition = match eps {
            Some(e) if !cfg.epsilon_list.is_empty() => with_epsilon(&cfg.partition, e)
                .ok_or_else(|| {
                    CliError::Config("partition has no target-size parameter to sweep".into())
                })?,
            _ => cfg.partition,
        };
        let o = oracle_value(&cfg.domain, &partition, &cfg.start).ok_or_else(|| {
            CliError::Config("no closed form for this domain and partition".into())
        })?;
        let e = eps.unwrap_or(0.0);
        let product = if e > 0.0 {
            potential_product(o, e, cfg.domain.dimension()).map_err(config_err)?
        } else {
            0.0
        };
        rows.push(SweepRow {
            epsilon: e,
            p_hat: o,
            ci_low: o,
            ci_high: o,
            n_paths: 0,
            dt: sweep_dt(cfg.dt, e.max(f64::MIN_POSITIVE)),
            seed: cfg.master_seed,
            oracle_value: Some(o),
            product_thm31: product,
            timeout_fraction: 0.0,
        });
    }
    let product_min = rows.iter().map(|r| r.product_thm31).fold(f64::INFINITY, f64::min);
    let product_max = rows
        .iter()
        .map(|r| r.product_thm31)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SweepReport {
        config: cfg.clone(),
        rows,
        product_min,
        product_max,
    })
}

/// Full-domain versus truncated-domain estimates, the bracket
/// `p_local <= p_full <= 2 p_local`, and a two-stage factorization check with
/// restarts on the stage sphere.
pub fn cmd_localize(cfg: &ExperimentConfig) -> Result<LocalizeReport, CliError> {
    cfg.validate()?;
    let (dim, radius, epsilon) = match (cfg.domain, cfg.partition) {
        (
            DomainSpec::HalfBallND { dim, radius },
            BoundaryPartition::HalfBallWallTarget { epsilon },
        ) => (dim, radius, epsilon),
        _ => {
            return Err(CliError::Config(
                "localize supports the half-ball wall-target setup only".into(),
            ))
        }
    };
    let r_trunc = cfg.truncation_radius.unwrap_or(radius / 2.0);
    let start_r = cfg.start.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(r_trunc > start_r.max(epsilon) && r_trunc <= radius) {
        return Err(CliError::Config(format!(
            "truncation radius {r_trunc} must enclose the start ({start_r}) and target \
             ({epsilon}) within the domain ({radius})"
        )));
    }

    let p_full = estimate_once(cfg, &cfg.partition, cfg.dt)?;
    let local_domain = DomainSpec::HalfBallND {
        dim,
        radius: r_trunc,
    };
    let local_cfg = SimConfig {
        master_seed: cfg.master_seed.wrapping_add(1),
        ..cfg.sim_config()
    };
    let p_local = estimate_hit_probability(&local_domain, &cfg.partition, &cfg.start, &local_cfg)
        .map_err(config_err)?;
    let bracket = localization_bracket(&p_full.estimate, &p_local.estimate, 3.0);

    // two-stage factorization: reach the stage sphere, then hit from there
    let r_stage = (epsilon * 2.0).min(start_r / 2.0).max(epsilon * 1.5);
    let stage_cfg = SimConfig {
        master_seed: cfg.master_seed.wrapping_add(2),
        ..cfg.sim_config()
    };
    let mut reached = 0u64;
    let mut entries: Vec<Vec<f64>> = Vec::new();
    for i in 0..cfg.n_paths.min(20_000) {
        let mut rng = crate::rng::seed_path_rng(stage_cfg.master_seed, i);
        match run_path_until_sphere(
            &cfg.domain,
            &cfg.partition,
            &cfg.start,
            r_stage,
            &stage_cfg,
            &mut rng,
        )
        .map_err(config_err)?
        {
            StageOutcome::ReachedSphere(p) => {
                reached += 1;
                entries.push(p);
            }
            StageOutcome::HitTarget(p) => {
                reached += 1;
                entries.push(p);
            }
            _ => {}
        }
    }
    let n_stage1 = cfg.n_paths.min(20_000);
    let stage_reach = reached as f64 / n_stage1 as f64;
    let stage_hit = if entries.is_empty() {
        0.0
    } else {
        let restart_cfg = SimConfig {
            master_seed: cfg.master_seed.wrapping_add(3),
            ..cfg.sim_config()
        };
        let n2 = n_stage1;
        let mut hits = 0u64;
        for i in 0..n2 {
            let mut rng = crate::rng::seed_path_rng(restart_cfg.master_seed, i);
            let pick = &entries[rng.uniform_index(entries.len())];
            // nudge wall-adjacent restarts inside so the start is interior
            let mut start = pick.clone();
            if start[0] <= 0.0 {
                start[0] = 1e-9 * radius;
            }
            let out = run_path(&cfg.domain, &cfg.partition, &start, &restart_cfg, &mut rng)
                .map_err(config_err)?;
            if out.class == OutcomeClass::HitTarget {
                hits += 1;
            }
        }
        hits as f64 / n2 as f64
    };

    let report = LocalizeReport {
        config: cfg.clone(),
        bracket,
        stage_reach,
        stage_hit,
        factorized: stage_reach * stage_hit,
    };
    if !bracket.holds {
        return Err(CliError::CheckFailed(format!(
            "localization bracket violated: p_local = {}, p_full = {}",
            bracket.p_local, bracket.p_full
        )));
    }
    Ok(report)
}

#[derive(Debug, Parser)]
#[command(name = "rbmhit", about = "Small-target hitting probabilities for reflected Brownian motion")]
pub struct CliArgs {
    #[command(subcommand)]
    pub mode: ModeCmd,
}

#[derive(Debug, Subcommand)]
pub enum ModeCmd {
    /// Single hitting-probability estimate with oracle comparison.
    Estimate(CommonArgs),
    /// One estimate per target size in epsilon_list.
    Sweep(CommonArgs),
    /// Sweep plus inverse-log asymptotic fit.
    Fit(CommonArgs),
    /// Closed-form oracle values only, no simulation.
    Oracle(CommonArgs),
    /// Full versus truncated domain bracket check.
    Localize(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Path to the experiment config (flat JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides master_seed from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides output_format from the config.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(format) = args.format {
        cfg.output_format = format;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(args: &CommonArgs, text: String) -> Result<(), CliError> {
    match &args.out {
        Some(path) => std::fs::write(path, text.as_bytes())
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(|e| CliError::Config(format!("stdout: {e}")))
        }
    }
}

fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    for row in rows {
        out.push('\n');
        out.push_str(&row.to_csv_line());
    }
    out
}

fn report_json<T: Serialize>(report: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(report).map_err(|e| CliError::Config(e.to_string()))
}

/// Runs one parsed invocation and emits its report. The error carries the
/// process exit code.
pub fn run(cli: &CliArgs) -> Result<(), CliError> {
    let args = match &cli.mode {
        ModeCmd::Estimate(a)
        | ModeCmd::Sweep(a)
        | ModeCmd::Fit(a)
        | ModeCmd::Oracle(a)
        | ModeCmd::Localize(a) => a,
    };
    let cfg = load_config(args)?;
    let format = cfg.output_format;
    let text = match (&cli.mode, format) {
        (ModeCmd::Estimate(_), OutputFormat::Json) => report_json(&cmd_estimate(&cfg)?)?,
        (ModeCmd::Estimate(_), OutputFormat::Csv) => {
            let report = cmd_estimate(&cfg)?;
            let eps = cfg.partition.epsilon().unwrap_or(0.0);
            let row = make_row(&cfg, eps, cfg.dt, &report.estimate, report.oracle_value)?;
            rows_to_csv(&[row])
        }
        (ModeCmd::Sweep(_), OutputFormat::Json) => report_json(&cmd_sweep(&cfg)?)?,
        (ModeCmd::Sweep(_), OutputFormat::Csv) => rows_to_csv(&cmd_sweep(&cfg)?.rows),
        (ModeCmd::Fit(_), _) => report_json(&cmd_fit(&cfg)?)?,
        (ModeCmd::Oracle(_), OutputFormat::Json) => report_json(&cmd_oracle(&cfg)?)?,
        (ModeCmd::Oracle(_), OutputFormat::Csv) => rows_to_csv(&cmd_oracle(&cfg)?.rows),
        (ModeCmd::Localize(_), _) => report_json(&cmd_localize(&cfg)?)?,
    };
    emit(args, text)
}
