//! Error metrics and the Monte-Carlo benchmark over latent dimensions `k`.
//!
//! Every trial `(k, t)` draws its graph, influence matrix and latents from
//! independent streams keyed by `(master_seed, k, t, purpose)` (see
//! [`crate::seed`]), so results do not depend on scheduling. Trials run on
//! rayon when the `parallel` feature is enabled; aggregation always happens
//! sequentially in `(k, trial)` order.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate_hb, exact_covariance_from_hb, pca_centrality, robust_from_hb, sample_covariance};
use crate::filters::{filter_matrix, FilterSpec};
use crate::graph::{generate_sbm_core_periphery, is_connected, rank_by_magnitude, spectral_decompose, CentralityEstimate, Method};
use crate::io::format_g17;
use crate::proxsolve::SolverRecipe;
use crate::seed::{Purpose, SeedSpec};
use crate::signals::{generate_influence, sample_latents, InfluencePattern, SignalDataset};

/// Graph resamples allowed per trial before the trial is recorded as failed.
pub const MAX_RESAMPLES: usize = 100;

/// `min(||c - v||, ||c + v||)`.
pub fn alignment_error(truth: &CentralityEstimate, est: &CentralityEstimate) -> Result<f64> {
    if truth.n() != est.n() {
        return Err(Error::dim("alignment_error", truth.n(), est.n()));
    }
    let minus = (&truth.scores - &est.scores).norm();
    let plus = (&truth.scores + &est.scores).norm();
    Ok(minus.min(plus))
}

/// Size of the overlap between `true_core` and the `k_top` highest-|score| nodes.
pub fn topk_overlap(est: &CentralityEstimate, true_core: &[usize], k_top: usize) -> usize {
    let top = &rank_by_magnitude(est.scores.as_slice())[..k_top.min(est.n())];
    true_core.iter().filter(|i| top.contains(i)).count()
}

/// `1 - |core ∩ top_k| / k_top`, ties in `|score|` resolved to the lower index.
pub fn topk_error(est: &CentralityEstimate, true_core: &[usize], k_top: usize) -> f64 {
    if k_top == 0 {
        return 0.0;
    }
    1.0 - topk_overlap(est, true_core, k_top) as f64 / k_top as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceMode {
    Exact,
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub core_size: usize,
    pub p: f64,
    pub k_grid: Vec<usize>,
    pub m: usize,
    pub trials: usize,
    pub pattern: InfluencePattern,
    pub filter: FilterSpec,
    #[serde(default)]
    pub solver: SolverRecipe,
    pub covariance_mode: CovarianceMode,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// Synthetic setup with `n = 100`, a 10-node core, `p = 0.05`, and the
    /// solver recipe defaults. The IIR filter has pole distance 0.1 relative
    /// to `lambda_1`: the unscaled `alpha = 0.1` is not a valid IIR filter on
    /// these graphs, whose `lambda_1` is around 14.
    pub fn synthetic(pattern: InfluencePattern, k_grid: Vec<usize>) -> Self {
        ExperimentConfig {
            n: 100,
            core_size: 10,
            p: 0.05,
            k_grid,
            m: 10_000,
            trials: 50,
            pattern,
            filter: FilterSpec::iir_spectral(0.1),
            solver: SolverRecipe::default(),
            covariance_mode: CovarianceMode::Exact,
            master_seed: 2020,
        }
    }

    pub fn fig1a() -> Self {
        Self::synthetic(InfluencePattern::DenseFraction, (1..=10).map(|i| 10 * i).collect())
    }

    pub fn fig1b() -> Self {
        Self::synthetic(InfluencePattern::PerRowRange, (2..=10).map(|i| 10 * i).collect())
    }

    pub fn fig1c() -> Self {
        Self::synthetic(InfluencePattern::PerRowCeil, (1..=10).map(|i| 10 * i).collect())
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fig1a" => Ok(Self::fig1a()),
            "fig1b" => Ok(Self::fig1b()),
            "fig1c" => Ok(Self::fig1c()),
            other => Err(Error::Parameter(format!("unknown preset `{other}` (expected fig1a, fig1b or fig1c)"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.trials == 0 || self.core_size == 0 {
            return Err(Error::Parameter("n, m, trials and core_size must be >= 1".into()));
        }
        if self.k_grid.is_empty() || self.k_grid.contains(&0) {
            return Err(Error::Parameter("k_grid must be nonempty with k >= 1".into()));
        }
        if self.m < *self.k_grid.iter().max().unwrap() {
            return Err(Error::Parameter(format!(
                "m = {} is smaller than the largest k; least squares is ill-posed",
                self.m
            )));
        }
        self.filter.validate()?;
        for &k in &self.k_grid {
            self.solver.for_k(k).validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon trials; falls back to sequential without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Per-method result of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub k: usize,
    pub trial: usize,
    /// Indexed like [`Method::ESTIMATORS`]; `Err` holds the failure message.
    pub errors: [std::result::Result<f64, String>; 3],
}

/// Samples the trial graph, resampling until connected.
pub fn sample_connected_graph(cfg: &ExperimentConfig, k: usize, trial: usize) -> Result<crate::graph::Graph> {
    let mut rng = SeedSpec::new(cfg.master_seed, k, trial, Purpose::Graph).rng();
    for _ in 0..MAX_RESAMPLES {
        let g = generate_sbm_core_periphery(cfg.n, cfg.core_size, cfg.p, &mut rng)?;
        if is_connected(&g) {
            return Ok(g);
        }
    }
    Err(Error::Domain(format!(
        "no connected graph after {MAX_RESAMPLES} resamples"
    )))
}

/// Runs a single `(k, trial)` cell of the benchmark.
pub fn run_trial(cfg: &ExperimentConfig, k: usize, trial: usize) -> TrialOutcome {
    let fail_all = |e: Error| {
        let msg = e.to_string();
        TrialOutcome {
            k,
            trial,
            errors: [Err(msg.clone()), Err(msg.clone()), Err(msg)],
        }
    };
    let core: Vec<usize> = (0..cfg.core_size).collect();
    let score = |est: Result<CentralityEstimate>| -> std::result::Result<f64, String> {
        est.map(|e| topk_error(&e, &core, cfg.core_size)).map_err(|e| e.to_string())
    };

    let prepared = (|| -> Result<_> {
        let g = sample_connected_graph(cfg, k, trial)?;
        let sd = spectral_decompose(&g)?;
        let h = filter_matrix(&cfg.filter, &sd)?;
        let mut rng = SeedSpec::new(cfg.master_seed, k, trial, Purpose::Influence).rng();
        let b = generate_influence(cfg.pattern, cfg.n, k, &mut rng)?;
        let mut rng = SeedSpec::new(cfg.master_seed, k, trial, Purpose::Latent).rng();
        let z = sample_latents(k, cfg.m, &mut rng)?;
        let hb = &h * b.entries();
        let y = &h * (b.entries() * &z);
        Ok((hb, SignalDataset::new(y, z)?))
    })();
    let (hb, ds) = match prepared {
        Ok(v) => v,
        Err(e) => return fail_all(e),
    };

    let pca = match cfg.covariance_mode {
        CovarianceMode::Exact => pca_centrality(&exact_covariance_from_hb(&hb)),
        CovarianceMode::Sample => pca_centrality(&sample_covariance(&ds)),
    };
    let robust = estimate_hb(&ds).and_then(|hb_hat| robust_from_hb(&hb_hat.matrix, &cfg.solver.for_k(k)));
    let (robust, quantized) = match robust {
        Ok(out) => (score(out.robust), score(out.quantized)),
        Err(e) => (Err(e.to_string()), Err(e.to_string())),
    };
    TrialOutcome {
        k,
        trial,
        errors: [score(pca), robust, quantized],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub k: usize,
    pub method: Method,
    /// `None` when every trial failed.
    pub mean_error: Option<f64>,
    pub std_error: Option<f64>,
    /// Trials that produced an error rate.
    pub trials: usize,
    pub failures: usize,
    /// Mean `|core ∩ top|` / core size, i.e. `1 - mean_error`.
    pub mean_overlap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ReportRow>,
    /// Distinct failure messages with their counts.
    pub failure_reasons: BTreeMap<String, usize>,
}

impl ErrorReport {
    pub fn get(&self, k: usize, method: Method) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.k == k && r.method == method)
    }

    pub fn mean(&self, k: usize, method: Method) -> Option<f64> {
        self.get(k, method).and_then(|r| r.mean_error)
    }

    /// Long-format CSV: `k,method,mean_error,std_error,trials,failures`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,method,mean_error,std_error,trials,failures")?;
        let fmt = |v: Option<f64>| v.map(format_g17).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.k,
                r.method,
                fmt(r.mean_error),
                fmt(r.std_error),
                r.trials,
                r.failures
            )?;
        }
        Ok(())
    }

    /// Writes `report.csv` and `report.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut csv = Vec::new();
        self.write_csv(&mut csv)?;
        std::fs::write(dir.join("report.csv"), csv)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub fn aggregate(cfg: &ExperimentConfig, outcomes: &[TrialOutcome]) -> ErrorReport {
    let mut rows = Vec::new();
    let mut failure_reasons = BTreeMap::new();
    for &k in &cfg.k_grid {
        for (mi, &method) in Method::ESTIMATORS.iter().enumerate() {
            let mut values = Vec::new();
            let mut failures = 0;
            for o in outcomes.iter().filter(|o| o.k == k) {
                match &o.errors[mi] {
                    Ok(e) => values.push(*e),
                    Err(msg) => {
                        failures += 1;
                        *failure_reasons.entry(format!("{method}: {msg}")).or_insert(0) += 1;
                    }
                }
            }
            let count = values.len();
            let mean = (count > 0).then(|| values.iter().sum::<f64>() / count as f64);
            let std_error = mean.map(|mu| {
                if count < 2 {
                    0.0
                } else {
                    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (count - 1) as f64;
                    (var / count as f64).sqrt()
                }
            });
            rows.push(ReportRow {
                k,
                method,
                mean_error: mean,
                std_error,
                trials: count,
                failures,
                mean_overlap: mean.map(|m| 1.0 - m),
            });
        }
    }
    ErrorReport { rows, failure_reasons }
}

pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    run_benchmark_with(cfg, Execution::default())
}

pub fn run_benchmark_with(cfg: &ExperimentConfig, exec: Execution) -> Result<ErrorReport> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = cfg
        .k_grid
        .iter()
        .flat_map(|&k| (0..cfg.trials).map(move |t| (k, t)))
        .collect();
    let outcomes = run_cells(cfg, &cells, exec);
    Ok(aggregate(cfg, &outcomes))
}

#[cfg(feature = "parallel")]
fn run_cells(cfg: &ExperimentConfig, cells: &[(usize, usize)], exec: Execution) -> Vec<TrialOutcome> {
    use rayon::prelude::*;
    match exec {
        Execution::Parallel => cells.par_iter().map(|&(k, t)| run_trial(cfg, k, t)).collect(),
        Execution::Sequential => cells.iter().map(|&(k, t)| run_trial(cfg, k, t)).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_cells(cfg: &ExperimentConfig, cells: &[(usize, usize)], _exec: Execution) -> Vec<TrialOutcome> {
    cells.iter().map(|&(k, t)| run_trial(cfg, k, t)).collect()
}

/// Relative spread of a matrix, handy for sanity checks in reports.
pub fn relative_difference(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
