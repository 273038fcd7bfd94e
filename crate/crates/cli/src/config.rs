//! Effective run configuration: built-in defaults (or a preset), then the
//! `--config` JSON file merged key by key, then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use blind_centrality::ingest::IngestOptions;
use blind_centrality::{ExperimentConfig, Method, SolverConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Estimate,
    Bench,
    Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// Master seed; copied into `experiment.master_seed`.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub preset: Option<String>,
    pub experiment: ExperimentConfig,
    /// Latent dimension for `simulate`.
    pub k: usize,
    /// Directory holding `Y.csv` and `Z.csv` for `estimate`; defaults to `output_dir`.
    pub input_dir: Option<PathBuf>,
    pub methods: Vec<Method>,
    /// When false, `estimate` and `bench` drop the quantized estimate.
    pub quantize: bool,
    /// Explicit solver weights; otherwise `experiment.solver` is evaluated at the data's `k`.
    pub solver: Option<SolverConfig>,
    pub returns: Option<PathBuf>,
    pub drivers: Option<PathBuf>,
    pub top_n: usize,
    pub ingest: IngestOptions,
}

impl RunConfig {
    pub fn defaults(command: Command, preset: Option<&str>) -> Result<Self> {
        let experiment = match preset {
            Some(name) => ExperimentConfig::preset(name)?,
            None => ExperimentConfig::fig1a(),
        };
        Ok(RunConfig {
            command,
            seed: experiment.master_seed,
            output_dir: PathBuf::from("out"),
            preset: preset.map(str::to_string),
            k: *experiment.k_grid.last().expect("presets have a nonempty k grid"),
            experiment,
            input_dir: None,
            methods: Method::ESTIMATORS.to_vec(),
            quantize: true,
            solver: None,
            returns: None,
            drivers: None,
            top_n: 8,
            ingest: IngestOptions::default(),
        })
    }

    pub fn solver_for(&self, k: usize) -> SolverConfig {
        self.solver.unwrap_or_else(|| self.experiment.solver.for_k(k))
    }

    /// Requested estimators, without the quantized one when `quantize` is off.
    pub fn active_methods(&self) -> Vec<Method> {
        let mut methods: Vec<Method> = Vec::new();
        for &m in &self.methods {
            if !methods.contains(&m) && (self.quantize || m != Method::RobustQuantized) {
                methods.push(m);
            }
        }
        methods
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        if let Some(s) = &self.solver {
            s.validate()?;
        }
        if self.methods.is_empty() {
            bail!("no methods requested");
        }
        if self.methods.contains(&Method::GroundTruth) {
            bail!("`groundtruth` is not an estimator; choose from pca, robust, robust-quantized");
        }
        match self.command {
            Command::Simulate if self.k == 0 => bail!("k must be >= 1"),
            Command::Simulate if self.k > self.experiment.m => {
                bail!("k = {} exceeds m = {}; least squares would be ill-posed", self.k, self.experiment.m)
            }
            Command::Real if self.returns.is_none() || self.drivers.is_none() => {
                bail!("`real` needs both `returns` and `drivers` paths (flags --returns/--drivers or the config file)")
            }
            Command::Real if self.top_n == 0 => bail!("top_n must be >= 1"),
            _ => Ok(()),
        }
    }

    /// Writes `run_config.json` into `output_dir`.
    pub fn echo(&self) -> Result<()> {
        let path = self.output_dir.join("run_config.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}

/// Flag values that override the merged configuration.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub preset: Option<String>,
    pub methods: Option<Vec<Method>>,
    pub trials: Option<usize>,
    pub m: Option<usize>,
    pub quantize: Option<bool>,
    pub k: Option<usize>,
    pub input_dir: Option<PathBuf>,
    pub returns: Option<PathBuf>,
    pub drivers: Option<PathBuf>,
}

/// Objects merge recursively; anything else in `patch` replaces `base`. A
/// tagged object whose `kind` changes is replaced whole.
pub fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            let kind_changed = matches!((b.get("kind"), p.get("kind")), (Some(x), Some(y)) if x != y);
            if kind_changed {
                *b = p.clone();
                return;
            }
            for (key, value) in p {
                match b.get_mut(key) {
                    Some(slot) => merge(slot, value),
                    None => {
                        b.insert(key.clone(), value.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

fn read_config_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    if !value.is_object() {
        bail!("config {} must hold a JSON object", path.display());
    }
    Ok(value)
}

/// Resolves the effective configuration for `command`.
pub fn resolve(command: Command, config_path: Option<&Path>, flags: &Overrides) -> Result<RunConfig> {
    let file = config_path.map(read_config_file).transpose()?;
    let file_preset = file
        .as_ref()
        .and_then(|v| v.get("preset"))
        .and_then(Value::as_str)
        .map(str::to_string);
    let preset = flags.preset.clone().or(file_preset);

    let mut value = serde_json::to_value(RunConfig::defaults(command, preset.as_deref())?)?;
    if let Some(mut patch) = file {
        if let Some(obj) = patch.as_object_mut() {
            obj.remove("command");
            obj.remove("preset");
        }
        merge(&mut value, &patch);
    }
    let mut cfg: RunConfig = serde_json::from_value(value).context("invalid configuration")?;
    cfg.command = command;

    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    cfg.experiment.master_seed = cfg.seed;
    if let Some(dir) = &flags.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(methods) = &flags.methods {
        cfg.methods = methods.clone();
    }
    if let Some(trials) = flags.trials {
        cfg.experiment.trials = trials;
    }
    if let Some(m) = flags.m {
        cfg.experiment.m = m;
    }
    if let Some(q) = flags.quantize {
        cfg.quantize = q;
    }
    if let Some(k) = flags.k {
        cfg.k = k;
    }
    if let Some(dir) = &flags.input_dir {
        cfg.input_dir = Some(dir.clone());
    }
    if let Some(p) = &flags.returns {
        cfg.returns = Some(p.clone());
    }
    if let Some(p) = &flags.drivers {
        cfg.drivers = Some(p.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn merge_is_recursive_and_replaces_retagged_objects() {
        let mut base = json!({"a": 1, "f": {"kind": "iir", "alpha": 0.1}, "o": {"x": 1, "y": 2}});
        merge(&mut base, &json!({"o": {"y": 3}, "f": {"kind": "poly", "coefficients": [1.0]}}));
        assert_eq!(
            base,
            json!({"a": 1, "f": {"kind": "poly", "coefficients": [1.0]}, "o": {"x": 1, "y": 3}})
        );
    }

    #[test]
    fn flags_override_file_and_seed_propagates() {
        let dir = tempfile::TempDir::new().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 5, "experiment": {"trials": 3}, "preset": "fig1b"}"#).unwrap();
        let flags = Overrides {
            trials: Some(7),
            ..Overrides::default()
        };
        let cfg = resolve(Command::Bench, Some(&path), &flags).unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.experiment.master_seed, 5);
        assert_eq!(cfg.experiment.trials, 7);
        assert_eq!(cfg.experiment.k_grid[0], 20);
    }

    #[test]
    fn quantize_off_drops_quantized_method() {
        let mut cfg = RunConfig::defaults(Command::Estimate, None).unwrap();
        cfg.quantize = false;
        assert_eq!(cfg.active_methods(), vec![Method::Pca, Method::Robust]);
    }
}
