//! Date-indexed CSV panels: entity observations (`returns.csv`, header
//! `date,<entity...>`) and latent drivers (`drivers.csv`, header
//! `date,<driver...>`).
//!
//! Files are inner-joined on the literal date string and the panel is sorted
//! by date in lexicographic order, which is chronological for ISO-8601 dates.
//! Dates with an empty cell in either file are dropped and counted. Every
//! transform applied afterwards is recorded with its fitted parameters, so
//! [`apply_transforms`] replays it exactly on the raw matrices.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate_hb, pca_centrality, robust_from_hb, sample_covariance};
use crate::graph::{CentralityEstimate, Method, SpectralDecomposition};
use crate::io::format_g17;
use crate::proxsolve::{DecompositionSummary, SolverConfig};
use crate::signals::SignalDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Subtract each entity's mean over the panel dates.
    pub center_returns: bool,
    /// Give each driver zero mean and unit variance (population, `1/m`).
    pub standardize_drivers: bool,
    /// Multiply drivers by `C^{-1/2}`, `C = Z Z^T / m`, after standardizing.
    pub whiten_drivers: bool,
    /// Replace each simple return `r` by `ln(1 + r)` before centering.
    pub log_returns: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            center_returns: true,
            standardize_drivers: true,
            whiten_drivers: false,
            log_returns: false,
        }
    }
}

impl IngestOptions {
    /// Every transform disabled.
    pub fn raw() -> Self {
        IngestOptions {
            center_returns: false,
            standardize_drivers: false,
            whiten_drivers: false,
            log_returns: false,
        }
    }
}

/// One preprocessing step with its fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Transform {
    /// `y <- ln(1 + y)` entrywise.
    LogReturns,
    /// `y_i <- y_i - means[i]`.
    CenterEntities { means: Vec<f64> },
    /// `z_j <- (z_j - means[j]) / stds[j]`.
    StandardizeDrivers { means: Vec<f64>, stds: Vec<f64> },
    /// `Z <- W Z`; `matrix` is `W` in row-major order.
    WhitenDrivers { k: usize, matrix: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    /// Dates present only in the returns file.
    pub returns_only: usize,
    /// Dates present only in the drivers file.
    pub drivers_only: usize,
    /// Shared dates dropped for an empty cell.
    pub incomplete: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    pub entity_labels: Vec<String>,
    pub driver_labels: Vec<String>,
    /// Strictly increasing.
    pub dates: Vec<String>,
    /// `n x m`.
    pub y: DMatrix<f64>,
    /// `k x m`, on the same date axis as `y`.
    pub z: DMatrix<f64>,
    pub preprocessing: Vec<Transform>,
    pub dropped: DropCounts,
}

impl AlignedPanel {
    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn k(&self) -> usize {
        self.z.nrows()
    }

    pub fn m(&self) -> usize {
        self.dates.len()
    }

    pub fn dataset(&self) -> Result<SignalDataset> {
        SignalDataset::new(self.y.clone(), self.z.clone())
    }
}

/// A parsed `date,<label...>` file; `None` marks an empty cell.
struct DatedTable {
    labels: Vec<String>,
    rows: BTreeMap<String, Vec<Option<f64>>>,
}

fn parse_error(path: &Path, row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message: message.into(),
    }
}

/// Rows and columns are 1-based, counting the header as row 1.
fn read_dated_table(path: &Path) -> Result<DatedTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(parse_error(path, 1, 1, "empty file, expected a `date,...` header")),
    };
    if header.get(0).map(str::trim) != Some("date") {
        return Err(parse_error(path, 1, 1, "first header cell must be `date`"));
    }
    if header.len() < 2 {
        return Err(parse_error(path, 1, 2, "header names no series"));
    }
    let mut labels = Vec::with_capacity(header.len() - 1);
    for (c, label) in header.iter().enumerate().skip(1) {
        let label = label.trim();
        if label.is_empty() {
            return Err(parse_error(path, 1, c + 1, "empty column label"));
        }
        if labels.iter().any(|l| l == label) {
            return Err(parse_error(path, 1, c + 1, format!("duplicate column label `{label}`")));
        }
        labels.push(label.to_string());
    }
    let mut rows = BTreeMap::new();
    for (r, record) in records.enumerate() {
        let row = r + 2;
        let record = record?;
        if record.len() != header.len() {
            return Err(parse_error(
                path,
                row,
                record.len().min(header.len()) + 1,
                format!("expected {} cells, found {}", header.len(), record.len()),
            ));
        }
        let date = record[0].trim();
        if date.is_empty() {
            return Err(parse_error(path, row, 1, "empty date"));
        }
        let mut values = Vec::with_capacity(labels.len());
        for (c, cell) in record.iter().enumerate().skip(1) {
            let cell = cell.trim();
            if cell.is_empty() {
                values.push(None);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(Some(v)),
                _ => return Err(parse_error(path, row, c + 1, format!("`{cell}` is not a finite number"))),
            }
        }
        if rows.insert(date.to_string(), values).is_some() {
            return Err(parse_error(path, row, 1, format!("duplicate date `{date}`")));
        }
    }
    Ok(DatedTable { labels, rows })
}

/// Reads, aligns and preprocesses a returns/drivers file pair.
pub fn load_panel(returns_path: &Path, drivers_path: &Path, options: &IngestOptions) -> Result<AlignedPanel> {
    let returns = read_dated_table(returns_path)?;
    let drivers = read_dated_table(drivers_path)?;

    let return_dates: BTreeSet<&String> = returns.rows.keys().collect();
    let driver_dates: BTreeSet<&String> = drivers.rows.keys().collect();
    let shared: Vec<&String> = return_dates.intersection(&driver_dates).copied().collect();
    let mut dropped = DropCounts {
        returns_only: return_dates.len() - shared.len(),
        drivers_only: driver_dates.len() - shared.len(),
        incomplete: 0,
    };

    let mut dates = Vec::new();
    let mut y_cols: Vec<f64> = Vec::new();
    let mut z_cols: Vec<f64> = Vec::new();
    for date in shared {
        let (yr, zr) = (&returns.rows[date], &drivers.rows[date]);
        if yr.iter().chain(zr).any(Option::is_none) {
            dropped.incomplete += 1;
            continue;
        }
        dates.push(date.clone());
        y_cols.extend(yr.iter().flatten());
        z_cols.extend(zr.iter().flatten());
    }
    if dates.is_empty() {
        return Err(Error::Alignment(format!(
            "no complete date shared by {} and {}",
            returns_path.display(),
            drivers_path.display()
        )));
    }
    let m = dates.len();
    let raw_y = DMatrix::from_column_slice(returns.labels.len(), m, &y_cols);
    let raw_z = DMatrix::from_column_slice(drivers.labels.len(), m, &z_cols);

    let preprocessing = fit_transforms(&raw_y, &raw_z, &drivers.labels, options)?;
    let (y, z) = apply_transforms(&raw_y, &raw_z, &preprocessing)?;
    Ok(AlignedPanel {
        entity_labels: returns.labels,
        driver_labels: drivers.labels,
        dates,
        y,
        z,
        preprocessing,
        dropped,
    })
}

fn row_mean(m: &DMatrix<f64>, i: usize) -> f64 {
    m.row(i).iter().sum::<f64>() / m.ncols() as f64
}

fn fit_transforms(
    raw_y: &DMatrix<f64>,
    raw_z: &DMatrix<f64>,
    driver_labels: &[String],
    options: &IngestOptions,
) -> Result<Vec<Transform>> {
    let mut steps = Vec::new();
    let mut y = raw_y.clone();
    if options.log_returns {
        if let Some(bad) = y.iter().find(|&&r| !(r > -1.0)) {
            return Err(Error::Domain(format!("log returns need r > -1, found {bad}")));
        }
        steps.push(Transform::LogReturns);
        y = apply_one(&y, &Transform::LogReturns, false)?;
    }
    if options.center_returns {
        let means = (0..y.nrows()).map(|i| row_mean(&y, i)).collect();
        steps.push(Transform::CenterEntities { means });
    }

    let mut z = raw_z.clone();
    if options.standardize_drivers {
        let m = z.ncols() as f64;
        let mut means = Vec::with_capacity(z.nrows());
        let mut stds = Vec::with_capacity(z.nrows());
        for (j, label) in driver_labels.iter().enumerate() {
            let mu = row_mean(&z, j);
            let var = z.row(j).iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m;
            let sd = var.sqrt();
            if !(sd > 1e-12 * mu.abs().max(1.0)) {
                return Err(Error::DegenerateDriver(label.clone()));
            }
            means.push(mu);
            stds.push(sd);
        }
        let step = Transform::StandardizeDrivers { means, stds };
        z = apply_one(&z, &step, true)?;
        steps.push(step);
    }
    if options.whiten_drivers {
        let k = z.nrows();
        let mut c = &z * z.transpose() / z.ncols() as f64;
        c = (&c + c.transpose()) * 0.5;
        let eig = SpectralDecomposition::of_symmetric(&c)?;
        let ev = eig.eigenvalues();
        if !(ev[k - 1] > 1e-12 * ev[0].max(f64::MIN_POSITIVE)) {
            return Err(Error::Degenerate("driver second-moment matrix is singular; cannot whiten".into()));
        }
        let v = eig.eigenvectors();
        let inv_sqrt = DVector::from_iterator(k, ev.iter().map(|l| 1.0 / l.sqrt()));
        let w = v * DMatrix::from_diagonal(&inv_sqrt) * v.transpose();
        let matrix = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| w[(i, j)]).collect();
        steps.push(Transform::WhitenDrivers { k, matrix });
    }
    Ok(steps)
}

fn apply_one(m: &DMatrix<f64>, step: &Transform, driver: bool) -> Result<DMatrix<f64>> {
    let mut out = m.clone();
    match (step, driver) {
        (Transform::LogReturns, false) => out.apply(|v| *v = v.ln_1p()),
        (Transform::CenterEntities { means }, false) => {
            if means.len() != out.nrows() {
                return Err(Error::dim("entity centering", out.nrows(), means.len()));
            }
            for (i, mu) in means.iter().enumerate() {
                out.row_mut(i).add_scalar_mut(-mu);
            }
        }
        (Transform::StandardizeDrivers { means, stds }, true) => {
            if means.len() != out.nrows() || stds.len() != out.nrows() {
                return Err(Error::dim("driver standardization", out.nrows(), means.len()));
            }
            for i in 0..out.nrows() {
                let (mu, sd) = (means[i], stds[i]);
                out.row_mut(i).apply(|v| *v = (*v - mu) / sd);
            }
        }
        (Transform::WhitenDrivers { k, matrix }, true) => {
            if *k != out.nrows() || matrix.len() != k * k {
                return Err(Error::dim("driver whitening", out.nrows(), k));
            }
            out = DMatrix::from_row_slice(*k, *k, matrix) * out;
        }
        _ => {}
    }
    Ok(out)
}

/// Replays `steps` on raw aligned matrices; entity steps touch `raw_y` only,
/// driver steps `raw_z` only.
pub fn apply_transforms(
    raw_y: &DMatrix<f64>,
    raw_z: &DMatrix<f64>,
    steps: &[Transform],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut y = raw_y.clone();
    let mut z = raw_z.clone();
    for step in steps {
        y = apply_one(&y, step, false)?;
        z = apply_one(&z, step, true)?;
    }
    Ok((y, z))
}

/// Writes `date,<label...>` rows with `%.17g` values; column `t` of `values`
/// becomes the row for `dates[t]`.
pub fn write_dated_csv(path: &Path, labels: &[String], dates: &[String], values: &DMatrix<f64>) -> Result<()> {
    if labels.len() != values.nrows() || dates.len() != values.ncols() {
        return Err(Error::dim(
            "dated csv",
            format!("{}x{}", labels.len(), dates.len()),
            format!("{}x{}", values.nrows(), values.ncols()),
        ));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "date,{}", labels.join(","))?;
    for (t, date) in dates.iter().enumerate() {
        write!(out, "{date}")?;
        for i in 0..values.nrows() {
            write!(out, ",{}", format_g17(values[(i, t)]))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `ds` as `returns.csv` and `drivers.csv` in `dir`, with entities
/// `node000...`, drivers `driver0...` and dates `t000000...`.
pub fn export_dataset(ds: &SignalDataset, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let width = |count: usize| count.saturating_sub(1).to_string().len();
    let (wn, wk) = (width(ds.n()).max(3), width(ds.k()));
    let entities: Vec<String> = (0..ds.n()).map(|i| format!("node{i:0wn$}")).collect();
    let drivers: Vec<String> = (0..ds.k()).map(|j| format!("driver{j:0wk$}")).collect();
    let wm = width(ds.m()).max(6);
    let dates: Vec<String> = (0..ds.m()).map(|t| format!("t{t:0wm$}")).collect();
    let returns_path = dir.join("returns.csv");
    let drivers_path = dir.join("drivers.csv");
    write_dated_csv(&returns_path, &entities, &dates, ds.y())?;
    write_dated_csv(&drivers_path, &drivers, &dates, ds.z())?;
    Ok((returns_path, drivers_path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRanking {
    pub method: Method,
    pub scores: Vec<f64>,
    /// Entity indices by decreasing `|score|`.
    pub ranking: Vec<usize>,
    /// `entity_labels[ranking[..]]`.
    pub ranked_labels: Vec<String>,
    pub warnings: Vec<String>,
}

impl MethodRanking {
    fn new(est: &CentralityEstimate, labels: &[String]) -> Self {
        let ranking = est.ranking();
        MethodRanking {
            method: est.method,
            scores: est.scores.iter().copied().collect(),
            ranked_labels: ranking.iter().map(|&i| labels[i].clone()).collect(),
            ranking,
            warnings: est.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceEntry {
    pub entity: String,
    pub index: usize,
    /// Thresholded sparse part; divided by `beta` it estimates `B`.
    pub s_thres: f64,
    /// Least-squares `H(A) B` entry.
    pub hb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverInfluence {
    pub driver: String,
    /// Ranked by `|s_thres|`, then `|hb|`, then index.
    pub entries: Vec<InfluenceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealReport {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub rankings: Vec<MethodRanking>,
    /// Methods that failed, with the error message.
    pub failures: BTreeMap<String, String>,
    pub influence: Vec<DriverInfluence>,
    pub decomposition: DecompositionSummary,
    pub solver: SolverConfig,
}

/// Influence list for one driver column, truncated to `top_n` entities.
fn rank_driver(panel: &AlignedPanel, s_thres: &DMatrix<f64>, hb: &DMatrix<f64>, j: usize, top_n: usize) -> DriverInfluence {
    let mut idx: Vec<usize> = (0..panel.n()).collect();
    idx.sort_by(|&a, &b| {
        s_thres[(b, j)]
            .abs()
            .total_cmp(&s_thres[(a, j)].abs())
            .then(hb[(b, j)].abs().total_cmp(&hb[(a, j)].abs()))
            .then(a.cmp(&b))
    });
    DriverInfluence {
        driver: panel.driver_labels[j].clone(),
        entries: idx
            .into_iter()
            .take(top_n)
            .map(|i| InfluenceEntry {
                entity: panel.entity_labels[i].clone(),
                index: i,
                s_thres: s_thres[(i, j)],
                hb: hb[(i, j)],
            })
            .collect(),
    }
}

/// PCA on the sample covariance, the robust estimate with and without
/// quantization, and one ranked influence list per driver.
pub fn run_real_pipeline(panel: &AlignedPanel, cfg: &SolverConfig, top_n: usize) -> Result<RealReport> {
    let ds = panel.dataset()?;
    let hb = estimate_hb(&ds)?.matrix;
    let out = robust_from_hb(&hb, cfg)?;
    let mut rankings = Vec::new();
    let mut failures = BTreeMap::new();
    let pca = pca_centrality(&sample_covariance(&ds));
    for (method, est) in [(Method::Pca, pca), (Method::Robust, out.robust), (Method::RobustQuantized, out.quantized)] {
        match est {
            Ok(e) => rankings.push(MethodRanking::new(&e, &panel.entity_labels)),
            Err(e) => {
                failures.insert(method.to_string(), e.to_string());
            }
        }
    }
    let influence = (0..panel.k()).map(|j| rank_driver(panel, &out.s_thres, &hb, j, top_n)).collect();
    Ok(RealReport {
        n: panel.n(),
        k: panel.k(),
        m: panel.m(),
        rankings,
        failures,
        influence,
        decomposition: out.decomposition.summary(),
        solver: *cfg,
    })
}

impl RealReport {
    /// Writes `rankings.json`, `rankings.csv`, `influence.json` and
    /// `influence.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join("rankings.json"), serde_json::to_string_pretty(self)? + "\n")?;
        let mut out = BufWriter::new(File::create(dir.join("rankings.csv"))?);
        writeln!(out, "method,rank,entity,index,score")?;
        for r in &self.rankings {
            for (rank, (&i, label)) in r.ranking.iter().zip(&r.ranked_labels).enumerate() {
                writeln!(out, "{},{},{},{},{}", r.method, rank + 1, label, i, format_g17(r.scores[i]))?;
            }
        }
        out.flush()?;
        std::fs::write(dir.join("influence.json"), serde_json::to_string_pretty(&self.influence)? + "\n")?;
        let mut out = BufWriter::new(File::create(dir.join("influence.csv"))?);
        writeln!(out, "driver,rank,entity,index,s_thres,hb")?;
        for d in &self.influence {
            for (rank, e) in d.entries.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    d.driver,
                    rank + 1,
                    e.entity,
                    e.index,
                    format_g17(e.s_thres),
                    format_g17(e.hb)
                )?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
