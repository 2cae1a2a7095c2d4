//! Monte-Carlo experiment driver.
//!
//! A sweep runs `T` independent trials per decoding ratio `η`. Each trial
//! draws a fresh deployment, disseminates, checks every store against the
//! ground truth and then queries `h = round(η·n)` random nodes. Trial `t`
//! is keyed only by `(master_seed, t)`, and the query at grid point `i` by
//! `(master_seed, i, t)`, so results do not depend on scheduling.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding::{payloads, verify_ledger, DegreeDistribution, DistributionKind};
use crate::decoder::decode_trial;
use crate::dsa1::{run_dsa1, DisseminationReport, FloodOptions, StorageParams};
use crate::dsa2::run_dsa2;
use crate::netgraph::{generate_connected_enough, NetworkGraph};
use crate::seed::{self, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dsa1,
    Dsa2,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Dsa1 => "dsa1",
            Algorithm::Dsa2 => "dsa2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistSpec {
    pub kind: DistributionKind,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_c0() -> f64 {
    0.1
}

fn default_delta() -> f64 {
    0.5
}

impl Default for DistSpec {
    fn default() -> Self {
        Self {
            kind: DistributionKind::Ideal,
            c0: default_c0(),
            delta: default_delta(),
        }
    }
}

impl DistSpec {
    /// Soliton over `k = n` source readings.
    pub fn build(&self, n: usize) -> Result<DegreeDistribution> {
        crate::coding::build_distribution(self.kind, n, self.c0, self.delta)
    }
}

/// Slots per node: a fixed `m`, or `max(2, round(ratio·n))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotSpec {
    Fixed(usize),
    Ratio(f64),
}

impl Default for SlotSpec {
    fn default() -> Self {
        SlotSpec::Ratio(0.1)
    }
}

impl SlotSpec {
    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            SlotSpec::Fixed(m) => m,
            SlotSpec::Ratio(r) => ((r * n as f64).round() as usize).max(2),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SlotSpec::Fixed(0) => Err(Error::Config("m must be at least 1".into())),
            SlotSpec::Ratio(r) if !(r > 0.0 && r.is_finite()) => {
                Err(Error::Config(format!("m-ratio must be positive, got {r}")))
            }
            _ => Ok(()),
        }
    }
}

/// `start, start+step, …, ≤ stop`, rounded to 1e-9 to avoid drift.
pub fn eta_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(start > 0.0) || stop < start {
        return Err(Error::Config(format!(
            "bad η grid start={start} stop={stop} step={step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn default_eta_grid() -> Vec<f64> {
    eta_grid(0.1, 1.0, 0.1).expect("static grid")
}

fn default_trials() -> usize {
    500
}

fn default_sample_frac() -> f64 {
    1.0
}

fn default_c_scale() -> f64 {
    1.0
}

fn default_attempts() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub n: usize,
    #[serde(rename = "L")]
    pub side: f64,
    #[serde(rename = "r")]
    pub radius: f64,
    #[serde(default)]
    pub dist: DistSpec,
    #[serde(default)]
    pub slots: SlotSpec,
    /// Global scale `C` of the DSA-II system parameter.
    #[serde(default = "default_c_scale")]
    pub c_scale: f64,
    #[serde(default = "default_eta_grid")]
    pub eta_grid: Vec<f64>,
    /// Trial cap per grid point.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Fraction of the `C(n, h)` query sets to sample, before the cap.
    #[serde(default = "default_sample_frac")]
    pub sample_frac: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub strict_discard: bool,
    /// Reuse one deployment for every trial instead of drawing a fresh one.
    #[serde(default)]
    pub reuse_graph: bool,
    #[serde(default = "default_attempts")]
    pub max_graph_attempts: usize,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, n: usize, side: f64, radius: f64) -> Self {
        Self {
            algorithm,
            n,
            side,
            radius,
            dist: DistSpec::default(),
            slots: SlotSpec::default(),
            c_scale: default_c_scale(),
            eta_grid: default_eta_grid(),
            trials: default_trials(),
            sample_frac: default_sample_frac(),
            master_seed: 0,
            strict_discard: false,
            reuse_graph: false,
            max_graph_attempts: default_attempts(),
        }
    }

    pub fn density(&self) -> f64 {
        self.n as f64 / (self.side * self.side)
    }

    pub fn validate(&self) -> Result<()> {
        crate::netgraph::NetworkConfig::new(self.n, self.side, self.radius, 0).validate()?;
        self.slots.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.sample_frac > 0.0 && self.sample_frac <= 1.0) {
            return Err(Error::Config(format!(
                "sample fraction must lie in (0, 1], got {}",
                self.sample_frac
            )));
        }
        if let Some(eta) = self.eta_grid.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::Config(format!("η must lie in (0, 1], got {eta}")));
        }
        if !(self.c_scale > 0.0 && self.c_scale.is_finite()) {
            return Err(Error::Config(format!("c-scale must be positive, got {}", self.c_scale)));
        }
        if self.max_graph_attempts == 0 {
            return Err(Error::Config("max_graph_attempts must be at least 1".into()));
        }
        self.dist.build(self.n.max(1)).map(|_| ())
    }

    /// `h = max(1, round(η·n))`.
    pub fn query_size(&self, eta: f64) -> usize {
        ((eta * self.n as f64).round() as usize).clamp(1, self.n)
    }

    /// `min(⌈sample_frac · C(n, h)⌉, trials)`.
    pub fn trials_for(&self, h: usize) -> usize {
        let want = (self.sample_frac * binomial(self.n, h)).ceil();
        if want >= self.trials as f64 {
            self.trials
        } else {
            (want as usize).max(1)
        }
    }
}

/// `C(n, k)` in floating point; saturates to infinity.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// One CSV/JSON row. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub n: usize,
    #[serde(rename = "L")]
    pub side: f64,
    pub lambda: f64,
    pub eta: f64,
    pub h: usize,
    pub trials: usize,
    pub successes: usize,
    pub p_s: f64,
    pub mean_tx: f64,
    pub mean_hops: f64,
    pub mean_slot_occupancy: f64,
    pub seed: u64,
}

impl ResultRow {
    /// Binomial standard error of `p_s`.
    pub fn std_error(&self) -> f64 {
        (self.p_s * (1.0 - self.p_s) / self.trials as f64).sqrt()
    }
}

/// Ledger bookkeeping across a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerTally {
    pub stores_checked: u64,
    pub slots_checked: u64,
    pub violations: u64,
}

impl LedgerTally {
    fn add(&mut self, other: &LedgerTally) {
        self.stores_checked += other.stores_checked;
        self.slots_checked += other.slots_checked;
        self.violations += other.violations;
    }

    fn of(report: &DisseminationReport, truth: &[crate::coding::Payload]) -> Self {
        Self {
            stores_checked: report.stores.len() as u64,
            slots_checked: report.stores.iter().map(|s| s.slots().len() as u64).sum(),
            violations: verify_ledger(&report.stores, truth) as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    #[serde(skip)]
    pub ledger: LedgerTally,
}

/// Outcome of one deployment + dissemination.
pub struct Deployment {
    pub graph: NetworkGraph,
    pub report: DisseminationReport,
    pub ledger: LedgerTally,
}

/// Draws a deployment, disseminates with `algorithm` and audits every store.
pub fn deploy(config: &ExperimentConfig, trial_seed: u64) -> Result<Deployment> {
    let graph_seed = if config.reuse_graph {
        seed::derive(config.master_seed, stream::GRAPH, 0)
    } else {
        seed::derive(trial_seed, stream::GRAPH, 0)
    };
    let graph = generate_connected_enough(
        config.n,
        config.side,
        config.radius,
        graph_seed,
        config.max_graph_attempts,
    )?;
    let truth = payloads(config.n, trial_seed);
    let storage = StorageParams {
        m: config.slots.resolve(config.n),
        dist: config.dist.build(config.n)?,
    };
    let options = FloodOptions {
        strict_discard: config.strict_discard,
        trace: false,
    };
    let mut rng = seed::rng(seed::derive(trial_seed, stream::DISSEMINATION, 0));
    let report = match config.algorithm {
        Algorithm::Dsa1 => run_dsa1(&graph, &truth, &storage, options, &mut rng)?,
        Algorithm::Dsa2 => run_dsa2(&graph, &truth, &storage, config.c_scale, options, &mut rng)?.0,
    };
    let ledger = LedgerTally::of(&report, &truth);
    if ledger.violations > 0 {
        return Err(Error::Integrity(format!(
            "{} store slots disagree with ground truth (trial seed {trial_seed})",
            ledger.violations
        )));
    }
    Ok(Deployment {
        graph,
        report,
        ledger,
    })
}

struct TrialOutcome {
    tx: f64,
    hops: f64,
    occupancy: f64,
    ledger: LedgerTally,
    /// Per grid point: `None` when this trial is beyond that point's budget.
    success: Vec<Option<bool>>,
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let plan: Vec<(f64, usize, usize)> = config
        .eta_grid
        .iter()
        .map(|&eta| {
            let h = config.query_size(eta);
            (eta, h, config.trials_for(h))
        })
        .collect();
    let max_trials = plan.iter().map(|p| p.2).max().unwrap_or(0);

    let outcomes: Vec<TrialOutcome> = (0..max_trials)
        .into_par_iter()
        .map(|t| -> Result<TrialOutcome> {
            let trial_seed = seed::derive(config.master_seed, stream::TRIAL, t as u64);
            let dep = deploy(config, trial_seed)?;
            let success = plan
                .iter()
                .enumerate()
                .map(|(i, &(_, h, budget))| {
                    if t >= budget {
                        return Ok(None);
                    }
                    let qseed = seed::derive(config.master_seed, stream::QUERY, ((i as u64) << 32) | t as u64);
                    decode_trial(&dep.report.stores, config.n, h, &mut seed::rng(qseed)).map(Some)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TrialOutcome {
                tx: dep.report.tx_count as f64,
                hops: dep.report.mean_depth(),
                occupancy: dep.report.mean_occupancy(),
                ledger: dep.ledger,
                success,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ledger = LedgerTally::default();
    for o in &outcomes {
        ledger.add(&o.ledger);
    }
    let lambda = config.density();
    let rows = plan
        .iter()
        .enumerate()
        .map(|(i, &(eta, h, budget))| {
            let used = &outcomes[..budget];
            let successes = used.iter().filter(|o| o.success[i] == Some(true)).count();
            let avg = |f: fn(&TrialOutcome) -> f64| used.iter().map(f).sum::<f64>() / budget as f64;
            ResultRow {
                algorithm: config.algorithm,
                n: config.n,
                side: config.side,
                lambda,
                eta,
                h,
                trials: budget,
                successes,
                p_s: successes as f64 / budget as f64,
                mean_tx: avg(|o| o.tx),
                mean_hops: avg(|o| o.hops),
                mean_slot_occupancy: avg(|o| o.occupancy),
                seed: config.master_seed,
            }
        })
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        rows,
        ledger,
    })
}

/// Ordinary least squares `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<Regression> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientSweep {
            needed: 2,
            got: xs.len(),
        });
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= f64::EPSILON * k {
        return Err(Error::InsufficientSweep { needed: 2, got: 1 });
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(Regression {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

pub fn loglog_regression(xs: &[f64], ys: &[f64]) -> Result<Regression> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_regression(&lx, &ly)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub algorithm: Algorithm,
    /// Density `λ` held fixed while `n` varies; `L = √(n/λ)`.
    pub density: f64,
    #[serde(rename = "r")]
    pub radius: f64,
    pub n_values: Vec<usize>,
    #[serde(default = "default_scaling_trials")]
    pub trials: usize,
    #[serde(default)]
    pub dist: DistSpec,
    #[serde(default)]
    pub slots: SlotSpec,
    #[serde(default = "default_c_scale")]
    pub c_scale: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub strict_discard: bool,
}

fn default_scaling_trials() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    #[serde(rename = "L")]
    pub side: f64,
    pub mean_degree: f64,
    pub lambda_hat: f64,
    pub mean_total_tx: f64,
    pub mean_per_origin_tx: f64,
    pub mean_depth: f64,
    pub mean_occupancy: f64,
}

impl ScalingPoint {
    pub fn n_over_mu(&self) -> f64 {
        self.n as f64 / self.mean_degree
    }

    /// `μ(μ − λ̂)`; may be non-positive on sparse graphs.
    pub fn mu_excess(&self) -> f64 {
        self.mean_degree * (self.mean_degree - self.lambda_hat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub algorithm: Algorithm,
    pub points: Vec<ScalingPoint>,
    /// log(total tx) on log(n).
    pub total_tx_vs_n: Regression,
    /// log(per-origin tx) on log(n).
    pub per_origin_tx_vs_n: Regression,
    /// Mean branch depth on n/μ.
    pub depth_vs_n_over_mu: Regression,
    /// log(per-origin tx) on log(μ(μ − λ̂)); absent when the term is not
    /// positive at every point.
    pub per_origin_tx_vs_mu_excess: Option<Regression>,
    pub ledger: LedgerTally,
    pub checks: Vec<ScalingCheck>,
}

impl ScalingReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Tolerances for the scaling checks.
pub mod tolerance {
    pub const TOTAL_TX_SLOPE: f64 = 2.0;
    pub const TOTAL_TX_SLOPE_TOL: f64 = 0.3;
    pub const TOTAL_TX_R2: f64 = 0.9;
    pub const DEPTH_R2: f64 = 0.8;
    pub const DSA2_PER_ORIGIN_SLOPE_TOL: f64 = 0.3;
}

pub fn scaling_point(cfg: &ScalingConfig, n: usize) -> Result<(ScalingPoint, LedgerTally)> {
    let side = (n as f64 / cfg.density).sqrt();
    let exp = ExperimentConfig {
        dist: cfg.dist,
        slots: cfg.slots,
        c_scale: cfg.c_scale,
        strict_discard: cfg.strict_discard,
        master_seed: seed::derive(cfg.master_seed, stream::TRIAL, n as u64),
        ..ExperimentConfig::new(cfg.algorithm, n, side, cfg.radius)
    };
    exp.validate()?;
    let deps: Vec<(f64, f64, f64, f64, f64, LedgerTally)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let dep = deploy(&exp, seed::derive(exp.master_seed, stream::TRIAL, t as u64))?;
            Ok((
                dep.graph.mean_degree(),
                dep.report.tx_count as f64,
                dep.report.mean_per_origin_tx(),
                dep.report.mean_depth(),
                dep.report.mean_occupancy(),
                dep.ledger,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = deps.len() as f64;
    let mut ledger = LedgerTally::default();
    for d in &deps {
        ledger.add(&d.5);
    }
    Ok((
        ScalingPoint {
            n,
            side,
            mean_degree: deps.iter().map(|d| d.0).sum::<f64>() / k,
            lambda_hat: n as f64 / (side * side),
            mean_total_tx: deps.iter().map(|d| d.1).sum::<f64>() / k,
            mean_per_origin_tx: deps.iter().map(|d| d.2).sum::<f64>() / k,
            mean_depth: deps.iter().map(|d| d.3).sum::<f64>() / k,
            mean_occupancy: deps.iter().map(|d| d.4).sum::<f64>() / k,
        },
        ledger,
    ))
}

pub fn verify_scaling(cfg: &ScalingConfig) -> Result<ScalingReport> {
    let mut ns = cfg.n_values.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 4 {
        return Err(Error::InsufficientSweep {
            needed: 4,
            got: ns.len(),
        });
    }
    if cfg.trials == 0 || !(cfg.density > 0.0) {
        return Err(Error::Config("scaling sweep needs trials ≥ 1 and λ > 0".into()));
    }
    let mut points = Vec::with_capacity(ns.len());
    let mut ledger = LedgerTally::default();
    for &n in &ns {
        let (p, l) = scaling_point(cfg, n)?;
        points.push(p);
        ledger.add(&l);
    }
    let n_f: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let total: Vec<f64> = points.iter().map(|p| p.mean_total_tx).collect();
    let per_origin: Vec<f64> = points.iter().map(|p| p.mean_per_origin_tx).collect();
    let n_over_mu: Vec<f64> = points.iter().map(ScalingPoint::n_over_mu).collect();
    let depth: Vec<f64> = points.iter().map(|p| p.mean_depth).collect();
    let excess: Vec<f64> = points.iter().map(ScalingPoint::mu_excess).collect();

    let total_tx_vs_n = loglog_regression(&n_f, &total)?;
    let per_origin_tx_vs_n = loglog_regression(&n_f, &per_origin)?;
    let depth_vs_n_over_mu = linear_regression(&n_over_mu, &depth)?;
    let per_origin_tx_vs_mu_excess = if excess.iter().all(|&e| e > 0.0) {
        loglog_regression(&excess, &per_origin).ok()
    } else {
        None
    };

    use tolerance::*;
    let checks = match cfg.algorithm {
        Algorithm::Dsa1 => vec![
            ScalingCheck {
                name: "total_tx_loglog_slope".into(),
                value: total_tx_vs_n.slope,
                pass: (total_tx_vs_n.slope - TOTAL_TX_SLOPE).abs() <= TOTAL_TX_SLOPE_TOL,
            },
            ScalingCheck {
                name: "total_tx_loglog_r2".into(),
                value: total_tx_vs_n.r2,
                pass: total_tx_vs_n.r2 >= TOTAL_TX_R2,
            },
            ScalingCheck {
                name: "depth_vs_n_over_mu_slope".into(),
                value: depth_vs_n_over_mu.slope,
                pass: depth_vs_n_over_mu.slope > 0.0,
            },
            ScalingCheck {
                name: "depth_vs_n_over_mu_r2".into(),
                value: depth_vs_n_over_mu.r2,
                pass: depth_vs_n_over_mu.r2 >= DEPTH_R2,
            },
        ],
        Algorithm::Dsa2 => vec![ScalingCheck {
            name: "per_origin_tx_loglog_slope".into(),
            value: per_origin_tx_vs_n.slope,
            pass: per_origin_tx_vs_n.slope.abs() <= DSA2_PER_ORIGIN_SLOPE_TOL,
        }],
    };
    Ok(ScalingReport {
        algorithm: cfg.algorithm,
        points,
        total_tx_vs_n,
        per_origin_tx_vs_n,
        depth_vs_n_over_mu,
        per_origin_tx_vs_mu_excess,
        ledger,
        checks,
    })
}

/// Mean foreign IDs stored per node for one `(algorithm, n, λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub lambda: f64,
    pub mean_distinct_ids: f64,
    pub fraction_of_n: f64,
}

pub fn buffer_row(algorithm: Algorithm, graph: &NetworkGraph, report: &DisseminationReport) -> BufferRow {
    let n = graph.n();
    let mean = report.mean_occupancy();
    BufferRow {
        algorithm,
        n,
        lambda: graph.node_density(),
        mean_distinct_ids: mean,
        fraction_of_n: if n == 0 { 0.0 } else { mean / n as f64 },
    }
}

/// Trial-weighted occupancy per `(algorithm, n, λ)` across sweep results.
pub fn buffer_stats(results: &[ExperimentResult]) -> Vec<BufferRow> {
    let mut out: Vec<BufferRow> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for row in results.iter().flat_map(|r| &r.rows) {
        let w = row.trials as f64;
        match out
            .iter()
            .position(|b| b.algorithm == row.algorithm && b.n == row.n && b.lambda == row.lambda)
        {
            Some(i) => {
                out[i].mean_distinct_ids += w * row.mean_slot_occupancy;
                weights[i] += w;
            }
            None => {
                out.push(BufferRow {
                    algorithm: row.algorithm,
                    n: row.n,
                    lambda: row.lambda,
                    mean_distinct_ids: w * row.mean_slot_occupancy,
                    fraction_of_n: 0.0,
                });
                weights.push(w);
            }
        }
    }
    for (b, w) in out.iter_mut().zip(weights) {
        if w > 0.0 {
            b.mean_distinct_ids /= w;
        }
        b.fraction_of_n = if b.n == 0 { 0.0 } else { b.mean_distinct_ids / b.n as f64 };
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

const CSV_HEADER: [&str; 13] = [
    "algorithm",
    "n",
    "L",
    "lambda",
    "eta",
    "h",
    "trials",
    "successes",
    "p_s",
    "mean_tx",
    "mean_hops",
    "mean_slot_occupancy",
    "seed",
];

pub fn to_csv(result: &ExperimentResult) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in &result.rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

pub fn from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn to_json(result: &ExperimentResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)?)
}

pub fn emit(result: &ExperimentResult, format: OutputFormat, path: &Path) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => to_csv(result)?,
        OutputFormat::Json => to_json(result)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
