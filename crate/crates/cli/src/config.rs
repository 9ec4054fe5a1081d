//! Run configuration: JSON schema, validation, data loading, and the run
//! manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use spo_core::backtest::{BacktestOptions, PcaConfig, PhaseSpec, SpoWeightConfig, WindowParams};
use spo_core::data::{
    clean_universe, compute_returns, load_prices, load_ratios, load_sectors, BenchmarkSeries,
    CleanReport, RatioPanel, SectorMap,
};
use spo_core::linalg::Matrix;
use spo_core::metrics::MetricOptions;
use spo_core::portfolio::ModelKind;
use spo_core::ssd::SsdStrategy;

/// Failure category, mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config(String),
    /// Exit code 3.
    Data(String),
    /// Exit code 4.
    Solver(String),
    /// Exit code 1.
    Audit(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Audit(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Audit(m) => write!(f, "audit failure: {m}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

/// Input file locations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub prices: PathBuf,
    pub ratios: PathBuf,
    pub sectors: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<PathBuf>,
}

fn default_models() -> Vec<String> {
    ModelKind::ALL.iter().map(|m| m.to_string()).collect()
}

fn default_alpha() -> f64 {
    0.5
}

fn default_bound() -> f64 {
    0.3
}

fn default_lookback() -> usize {
    4
}

fn default_true() -> bool {
    true
}

fn default_strategy() -> SsdStrategy {
    SsdStrategy::Auto
}

/// The canonical run configuration; `run_manifest.json` echoes it verbatim.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataPaths,
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_bound")]
    pub bound: f64,
    #[serde(default = "default_lookback")]
    pub snapshot_lookback: usize,
    #[serde(default)]
    pub window: WindowParams,
    #[serde(default)]
    pub pca: PcaConfig,
    #[serde(default)]
    pub spo_weights: SpoWeightConfig,
    #[serde(default)]
    pub metrics: MetricOptions,
    #[serde(default)]
    pub phases: Vec<PhaseSpec>,
    #[serde(default = "default_strategy")]
    pub ssd_strategy: SsdStrategy,
    #[serde(default = "default_true")]
    pub zscore_ratios: bool,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Validate everything that can be checked before touching data.
    pub fn validate(&self) -> CliResult<()> {
        self.resolved_models()?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(CliError::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.bound > 0.0 && self.bound <= 1.0) {
            return Err(CliError::Config(format!("bound {} outside (0, 1]", self.bound)));
        }
        let (a1, a2) = self.metrics.levels;
        for a in [a1, a2] {
            if !(0.0 < a && a < 1.0) {
                return Err(CliError::Config(format!("confidence level {a} outside (0, 1)")));
            }
        }
        if self.snapshot_lookback == 0 {
            return Err(CliError::Config("snapshot_lookback must be at least 1".into()));
        }
        for (name, path) in [
            ("prices", Some(&self.data.prices)),
            ("ratios", Some(&self.data.ratios)),
            ("sectors", Some(&self.data.sectors)),
            ("benchmark", self.data.benchmark.as_ref()),
        ] {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(CliError::Config(format!("{name} file {} does not exist", path.display())));
                }
            }
        }
        Ok(())
    }

    pub fn resolved_models(&self) -> CliResult<Vec<ModelKind>> {
        let mut out = Vec::with_capacity(self.models.len());
        for name in &self.models {
            let kind: ModelKind =
                name.parse().map_err(|e: spo_core::Error| CliError::Config(e.to_string()))?;
            if !out.contains(&kind) {
                out.push(kind);
            }
        }
        if out.is_empty() {
            return Err(CliError::Config("model list is empty".into()));
        }
        Ok(out)
    }

    pub fn backtest_options(&self) -> CliResult<BacktestOptions> {
        Ok(BacktestOptions {
            models: self.resolved_models()?,
            window: self.window,
            bound: self.bound,
            alpha: self.alpha,
            snapshot_lookback: self.snapshot_lookback,
            pca: self.pca.clone(),
            spo_weights: self.spo_weights.clone(),
            metrics: self.metrics.clone(),
            ssd_strategy: self.ssd_strategy,
            zscore_ratios: self.zscore_ratios,
        })
    }
}

/// Loaded, cleaned and aligned inputs.
pub struct LoadedData {
    pub assets: Vec<String>,
    /// One date per return row.
    pub dates: Vec<NaiveDate>,
    pub returns: Matrix,
    pub ratios: RatioPanel,
    pub sectors: SectorMap,
    pub benchmark: Option<Vec<f64>>,
    pub clean_report: CleanReport,
}

pub fn load_and_prepare(cfg: &RunConfig) -> CliResult<LoadedData> {
    let prices = load_prices(&cfg.data.prices).map_err(data_err)?;
    let ratios = load_ratios(&cfg.data.ratios).map_err(data_err)?;
    let sectors = load_sectors(&cfg.data.sectors).map_err(data_err)?;
    let (prices, ratios, sectors, clean_report) =
        clean_universe(&prices, &ratios, &sectors).map_err(data_err)?;
    for (asset, reason) in &clean_report.removed {
        log::info!("removed {asset}: {reason}");
    }
    let returns = compute_returns(&prices).map_err(data_err)?;
    let dates = prices.dates[1..].to_vec();
    let benchmark = match &cfg.data.benchmark {
        Some(path) => {
            let series = BenchmarkSeries::load(path).map_err(data_err)?;
            Some(series.aligned_returns(&dates).map_err(data_err)?)
        }
        None => None,
    };
    Ok(LoadedData {
        assets: prices.assets.clone(),
        dates,
        returns,
        ratios,
        sectors,
        benchmark,
        clean_report,
    })
}

/// Echo of the run: configuration plus content hashes of every input file.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
    pub data_hashes: BTreeMap<String, String>,
}

pub fn write_manifest(dir: &Path, cfg: &RunConfig) -> CliResult<()> {
    let mut hashes = BTreeMap::new();
    let mut files: Vec<(&str, &PathBuf)> = vec![
        ("prices", &cfg.data.prices),
        ("ratios", &cfg.data.ratios),
        ("sectors", &cfg.data.sectors),
    ];
    if let Some(b) = &cfg.data.benchmark {
        files.push(("benchmark", b));
    }
    for (name, path) in files {
        let bytes = std::fs::read(path).map_err(data_err)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        hashes.insert(name.to_string(), format!("{:x}", hasher.finalize()));
    }
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        data_hashes: hashes,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Config(format!("manifest serialization: {e}")))?;
    std::fs::write(dir.join("run_manifest.json"), json + "\n").map_err(data_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["p.csv", "r.csv", "s.csv"] {
            std::fs::write(dir.path().join(f), "x\n").unwrap();
        }
        let json = format!(
            r#"{{"data": {{"prices": "{0}/p.csv", "ratios": "{0}/r.csv", "sectors": "{0}/s.csv"}}}}"#,
            dir.path().display()
        );
        let cfg: RunConfig = serde_json::from_str(&json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.alpha, 0.5);
        assert_eq!(cfg.bound, 0.3);
        assert_eq!(cfg.window.in_len, 52);
        assert_eq!(cfg.resolved_models().unwrap().len(), 7);
        assert_eq!(cfg.metrics.levels, (0.95, 0.97));
    }

    #[test]
    fn unknown_model_rejected_before_data_access() {
        let json = r#"{
            "data": {"prices": "/definitely/not/here", "ratios": "x", "sectors": "y"},
            "models": ["SSD", "Frontier"]
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        // Model validation fires before the path checks.
        match cfg.validate() {
            Err(CliError::Config(msg)) => assert!(msg.contains("Frontier"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let json = r#"{"data": {"prices": "a", "ratios": "b", "sectors": "c"}, "alpa": 0.3}"#;
        assert!(serde_json::from_str::<RunConfig>(json).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["p.csv", "r.csv", "s.csv"] {
            std::fs::write(dir.path().join(f), "x\n").unwrap();
        }
        let json = format!(
            r#"{{"data": {{"prices": "{0}/p.csv", "ratios": "{0}/r.csv", "sectors": "{0}/s.csv"}},
                "alpha": 0.25, "bound": 0.2, "models": ["SSD", "Min-Var"], "seed": 7}}"#,
            dir.path().display()
        );
        let cfg: RunConfig = serde_json::from_str(&json).unwrap();
        let echoed = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&echoed).unwrap();
        assert_eq!(back.alpha, cfg.alpha);
        assert_eq!(back.bound, cfg.bound);
        assert_eq!(back.models, cfg.models);
        assert_eq!(back.seed, cfg.seed);
    }
}
