//! One function per subcommand. Each validates its inputs, computes every
//! result, and only then writes files into `output_dir`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use blind_centrality::eval::{run_benchmark, sample_connected_graph};
use blind_centrality::filters::filter_matrix;
use blind_centrality::graph::{eigen_centrality, spectral_decompose, CentralityRecord};
use blind_centrality::ingest::{load_panel, run_real_pipeline, DropCounts, Transform};
use blind_centrality::io::write_matrix_csv;
use blind_centrality::seed::{Purpose, SeedSpec};
use blind_centrality::signals::{generate_influence, sample_latents, SignalDataset};
use blind_centrality::{estimators, FilterSpec, Method};
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Serialize)]
struct TruthRecord {
    #[serde(flatten)]
    centrality: CentralityRecord,
    lambda_max: f64,
    /// Filter with its spectral scale resolved to an absolute `alpha`.
    filter: FilterSpec,
    core: Vec<usize>,
}

fn prepare_output(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating output directory {}", cfg.output_dir.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Writes `Y.csv`, `Z.csv`, `B.csv`, `graph.edges` and `truth.json`.
pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let exp = &cfg.experiment;
    let k = cfg.k;
    let g = sample_connected_graph(exp, k, 0)?;
    let sd = spectral_decompose(&g)?;
    let filter = exp.filter.resolve(&sd)?;
    let h = filter_matrix(&filter, &sd)?;
    let b = generate_influence(exp.pattern, exp.n, k, &mut SeedSpec::new(cfg.seed, k, 0, Purpose::Influence).rng())?;
    let z = sample_latents(k, exp.m, &mut SeedSpec::new(cfg.seed, k, 0, Purpose::Latent).rng())?;
    let ds = SignalDataset::new(&h * (b.entries() * &z), z)?;
    let truth = eigen_centrality(&sd, &g)?;

    prepare_output(cfg)?;
    let dir = &cfg.output_dir;
    ds.save(dir)?;
    write_matrix_csv(&dir.join("B.csv"), b.entries())?;
    g.save_edge_list(&dir.join("graph.edges"))?;
    write_json(
        &dir.join("truth.json"),
        &TruthRecord {
            centrality: truth.to_record(),
            lambda_max: sd.lambda_max(),
            filter,
            core: (0..exp.core_size).collect(),
        },
    )?;
    cfg.echo()?;
    println!("simulated n={} k={} m={} into {}", exp.n, k, exp.m, dir.display());
    Ok(())
}

/// Writes `centrality_<method>.json` per method, plus `L.csv`, `S.csv` and
/// `decomposition.json` when a robust method runs.
pub fn estimate(cfg: &RunConfig) -> Result<()> {
    let input = cfg.input_dir.as_ref().unwrap_or(&cfg.output_dir);
    let (y_path, z_path) = (input.join("Y.csv"), input.join("Z.csv"));
    for p in [&y_path, &z_path] {
        if !p.is_file() {
            bail!(
                "missing {}: `estimate` needs observations Y.csv and latent drivers Z.csv in the input directory",
                p.display()
            );
        }
    }
    let ds = SignalDataset::load_files(&y_path, &z_path)?;
    let methods = cfg.active_methods();
    let mut records = Vec::new();
    let mut decomposition = None;
    if methods.contains(&Method::Pca) {
        records.push(estimators::pca_centrality(&estimators::sample_covariance(&ds))?);
    }
    if methods.iter().any(|m| matches!(m, Method::Robust | Method::RobustQuantized)) {
        let hb = estimators::estimate_hb(&ds)?;
        let out = estimators::robust_from_hb(&hb.matrix, &cfg.solver_for(ds.k()))?;
        if methods.contains(&Method::Robust) {
            records.push(out.robust?);
        }
        if methods.contains(&Method::RobustQuantized) {
            records.push(out.quantized?);
        }
        decomposition = Some(out.decomposition);
    }

    prepare_output(cfg)?;
    for est in &records {
        write_json(&cfg.output_dir.join(format!("centrality_{}.json", est.method)), &est.to_record())?;
        let top: Vec<String> = est.ranking().iter().take(10).map(usize::to_string).collect();
        println!("{}: top nodes {}", est.method, top.join(" "));
    }
    if let Some(d) = decomposition {
        d.save(&cfg.output_dir)?;
    }
    cfg.echo()
}

/// Writes `report.csv` and `report.json`.
pub fn bench(cfg: &RunConfig) -> Result<()> {
    let mut report = run_benchmark(&cfg.experiment)?;
    let methods = cfg.active_methods();
    report.rows.retain(|r| methods.contains(&r.method));
    prepare_output(cfg)?;
    report.save(&cfg.output_dir)?;
    cfg.echo()?;
    for r in &report.rows {
        let mean = r.mean_error.map_or("n/a".to_string(), |e| format!("{e:.4}"));
        println!("k={:<4} {:<17} error {mean} ({} trials, {} failed)", r.k, r.method.to_string(), r.trials, r.failures);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct PanelSummary<'a> {
    entities: &'a [String],
    drivers: &'a [String],
    first_date: &'a str,
    last_date: &'a str,
    dates: usize,
    dropped: DropCounts,
    preprocessing: &'a [Transform],
}

/// Writes `rankings.{json,csv}`, `influence.{json,csv}` and `panel.json`.
pub fn real(cfg: &RunConfig) -> Result<()> {
    let (returns, drivers) = match (&cfg.returns, &cfg.drivers) {
        (Some(r), Some(d)) => (r, d),
        _ => bail!("`real` needs --returns and --drivers"),
    };
    let panel = load_panel(returns, drivers, &cfg.ingest)?;
    let report = run_real_pipeline(&panel, &cfg.solver_for(panel.k()), cfg.top_n)?;

    prepare_output(cfg)?;
    report.save(&cfg.output_dir)?;
    write_json(
        &cfg.output_dir.join("panel.json"),
        &PanelSummary {
            entities: &panel.entity_labels,
            drivers: &panel.driver_labels,
            first_date: &panel.dates[0],
            last_date: &panel.dates[panel.m() - 1],
            dates: panel.m(),
            dropped: panel.dropped,
            preprocessing: &panel.preprocessing,
        },
    )?;
    cfg.echo()?;
    for r in &report.rankings {
        let top: Vec<&str> = r.ranked_labels.iter().take(cfg.top_n).map(String::as_str).collect();
        println!("{}: {}", r.method, top.join(" "));
    }
    for (method, err) in &report.failures {
        eprintln!("warning: {method} failed: {err}");
    }
    Ok(())
}
