//! Rolling-window and market-phase backtesting.
//!
//! Each window fits every configured model on its in-sample slice only, holds
//! the weights fixed over the out-of-sample slice, and concatenates the
//! realized returns per model. Windows run independently (and in parallel);
//! results reduce in window order so reports are deterministic regardless of
//! thread count. A model that fails on a window is logged and skipped, never
//! substituted.

use std::collections::BTreeMap;
use std::ops::Range;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{make_scenarios, ratio_snapshot, BenchmarkMode, RatioPanel, ScenarioSet, SectorMap};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::{MetricOptions, MetricsRow};
use crate::pca::{extract_a, extract_b, fssd_ratio_weights, pca, PcaSolution, RatioObservationMatrix, ScalingMode, WeightedRatio};
use crate::portfolio::{ModelKind, ModelPortfolio};
use crate::qp::QpOptions;
use crate::ratios::RatioId;
use crate::ssd::{
    solve_fssd, solve_nominal_ssd, solve_spo_step1, solve_spo_step2, verify_ssd_dominance,
    SsdOptions, SsdStrategy,
};
use crate::variance::{solve_mean_var, solve_min_var, CovarianceEstimate};

/// Rolling-window geometry in return periods.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WindowParams {
    pub in_len: usize,
    pub out_len: usize,
    pub step: usize,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams { in_len: 52, out_len: 13, step: 4 }
    }
}

/// One train/test pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub index: usize,
    pub train: Range<usize>,
    pub test: Range<usize>,
}

/// All windows the data supports.
#[derive(Debug, Clone)]
pub struct WindowPlan {
    pub params: WindowParams,
    pub windows: Vec<Window>,
}

/// Slide a `step`-spaced train/test split across `total` return periods.
pub fn plan_windows(total: usize, params: &WindowParams) -> Result<WindowPlan> {
    let need = params.in_len + params.out_len;
    if params.in_len == 0 || params.out_len == 0 || params.step == 0 {
        return Err(Error::InvalidInput("window lengths and step must be positive".into()));
    }
    if total < need {
        return Err(Error::DataTooShort { needed: need, got: total });
    }
    let count = (total - need) / params.step + 1;
    let windows = (0..count)
        .map(|w| {
            let start = w * params.step;
            Window {
                index: w,
                train: start..start + params.in_len,
                test: start + params.in_len..start + need,
            }
        })
        .collect();
    Ok(WindowPlan { params: *params, windows })
}

/// A labeled market phase given as an out-of-sample date range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// Map phase date ranges onto return-row indices; the train slice is the
/// `in_len` periods immediately preceding each phase.
pub fn plan_phases(dates: &[NaiveDate], phases: &[PhaseSpec], in_len: usize) -> Result<Vec<(String, Window)>> {
    let mut out = Vec::with_capacity(phases.len());
    for (i, phase) in phases.iter().enumerate() {
        let first = dates.iter().position(|d| *d >= phase.start);
        let last = dates.iter().rposition(|d| *d <= phase.end);
        let (Some(first), Some(last)) = (first, last) else {
            return Err(Error::PhaseOutOfRange(phase.name.clone()));
        };
        if first > last || first < in_len {
            return Err(Error::PhaseOutOfRange(phase.name.clone()));
        }
        out.push((
            phase.name.clone(),
            Window { index: i, train: first - in_len..first, test: first..last + 1 },
        ));
    }
    Ok(out)
}

/// Ascending sort followed by prefix sums; the plotted downside pattern.
pub fn downside_pattern(series: &[f64]) -> Vec<f64> {
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = 0.0;
    sorted
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// PCA extraction policy for the ratio-driven models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaConfig {
    pub mode: ScalingMode,
    pub variance_target: f64,
    pub component_cap: usize,
    /// Recompute extractions on every window's train span instead of once.
    pub refresh_per_window: bool,
    /// Optional explicit observation span; the default uses every ratio
    /// quarter strictly before the first out-of-sample date.
    pub span_start: Option<NaiveDate>,
    pub span_end: Option<NaiveDate>,
}

impl Default for PcaConfig {
    fn default() -> Self {
        PcaConfig {
            mode: ScalingMode::Correlation,
            variance_target: 0.80,
            component_cap: 4,
            refresh_per_window: false,
            span_start: None,
            span_end: None,
        }
    }
}

/// Step-1 objective weights; positions follow the selected ratio order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpoWeightConfig {
    pub default: [f64; 4],
    pub per_sector: BTreeMap<String, [f64; 4]>,
}

impl Default for SpoWeightConfig {
    fn default() -> Self {
        SpoWeightConfig { default: [0.25; 4], per_sector: BTreeMap::new() }
    }
}

impl SpoWeightConfig {
    fn for_sector(&self, sector: &str) -> [f64; 4] {
        self.per_sector.get(sector).copied().unwrap_or(self.default)
    }
}

/// Everything the backtester needs besides the data.
#[derive(Debug, Clone)]
pub struct BacktestOptions {
    pub models: Vec<ModelKind>,
    pub window: WindowParams,
    /// Per-asset weight cap.
    pub bound: f64,
    /// Ratio-vs-return blend for the F-SSD objective.
    pub alpha: f64,
    /// Quarters averaged into the ratio snapshot at each window start.
    pub snapshot_lookback: usize,
    pub pca: PcaConfig,
    pub spo_weights: SpoWeightConfig,
    pub metrics: MetricOptions,
    pub ssd_strategy: SsdStrategy,
    pub zscore_ratios: bool,
}

impl Default for BacktestOptions {
    fn default() -> Self {
        BacktestOptions {
            models: ModelKind::ALL.to_vec(),
            window: WindowParams::default(),
            bound: 0.3,
            alpha: 0.5,
            snapshot_lookback: 4,
            pca: PcaConfig::default(),
            spo_weights: SpoWeightConfig::default(),
            metrics: MetricOptions::default(),
            ssd_strategy: SsdStrategy::Auto,
            zscore_ratios: true,
        }
    }
}

impl BacktestOptions {
    fn ssd_options(&self) -> SsdOptions {
        SsdOptions {
            bound: self.bound,
            strategy: self.ssd_strategy,
            zscore_ratios: self.zscore_ratios,
            ..SsdOptions::default()
        }
    }
}

/// The data a backtest runs over.
#[derive(Debug, Clone, Copy)]
pub struct BacktestInput<'a> {
    pub assets: &'a [String],
    /// Date of each return row.
    pub dates: &'a [NaiveDate],
    /// `periods x N` simple returns.
    pub returns: &'a Matrix,
    pub sectors: &'a SectorMap,
    pub ratios: &'a RatioPanel,
    /// Benchmark index returns aligned with the return rows; the
    /// equal-weighted proxy applies when absent.
    pub benchmark: Option<&'a [f64]>,
}

impl<'a> BacktestInput<'a> {
    fn benchmark_mode(&self) -> BenchmarkMode<'a> {
        match self.benchmark {
            Some(series) => BenchmarkMode::Supplied(series),
            None => BenchmarkMode::EqualWeightProxy,
        }
    }
}

/// Ratio selections driving the SPO variants and the F-SSD objective.
#[derive(Debug, Clone, Default)]
pub struct ExtractionSet {
    pub rule_a: BTreeMap<String, Vec<RatioId>>,
    pub rule_b: BTreeMap<String, Vec<RatioId>>,
    pub fssd: Vec<WeightedRatio>,
    /// Sector solutions plus the all-assets solution under "ALL".
    pub solutions: BTreeMap<String, PcaSolution>,
}

/// Run PCA per sector and over all assets on quarters at or before
/// `span_end`, then apply both extraction rules.
pub fn compute_extractions(
    ratios: &RatioPanel,
    sectors: &SectorMap,
    assets: &[String],
    cfg: &PcaConfig,
    span_end: NaiveDate,
) -> Result<ExtractionSet> {
    let span = (cfg.span_start, Some(cfg.span_end.unwrap_or(span_end)));
    let mut set = ExtractionSet::default();
    for (sector, members) in sectors.members(assets)? {
        let obs = RatioObservationMatrix::from_panel(ratios, &members, span, sector.clone())?;
        let sol = pca(&obs, cfg.mode, cfg.variance_target, cfg.component_cap)?;
        set.rule_a.insert(sector.clone(), extract_a(&sol).ratio_ids());
        set.rule_b.insert(sector.clone(), extract_b(&sol).ratio_ids());
        set.solutions.insert(sector, sol);
    }
    let all: Vec<usize> = (0..assets.len()).collect();
    let obs = RatioObservationMatrix::from_panel(ratios, &all, span, "ALL")?;
    let sol = pca(&obs, cfg.mode, cfg.variance_target, cfg.component_cap)?;
    set.fssd = fssd_ratio_weights(&sol)?;
    set.solutions.insert("ALL".into(), sol);
    Ok(set)
}

/// The fixed step-1 ratio set of the plain SPO model: one popular ratio per
/// category (profitability, liquidity, solvency, valuation).
pub const SPO_FIXED_RATIOS: [RatioId; 4] = [RatioId::ROA, RatioId::CR, RatioId::DAR, RatioId::PER];

fn weighted_ratios(selected: &[RatioId], weights: &[f64; 4]) -> Vec<WeightedRatio> {
    selected
        .iter()
        .zip(weights.iter())
        .map(|(&ratio, &weight)| WeightedRatio { ratio, weight, sign: ratio.orientation().sign() })
        .collect()
}

/// Per-model outcome of one window fit.
struct WindowFit {
    portfolios: BTreeMap<ModelKind, ModelPortfolio>,
    failures: Vec<(ModelKind, String)>,
    dominance: Vec<(ModelKind, f64, bool)>,
}

fn fit_window(
    input: &BacktestInput<'_>,
    opts: &BacktestOptions,
    extractions: &ExtractionSet,
    window: &Window,
) -> Result<WindowFit> {
    let scen = make_scenarios(
        input.returns,
        window.train.clone(),
        input.benchmark_mode(),
        Some((input.sectors, input.assets)),
    )?;
    let as_of = input.dates[window.train.end - 1];
    let snapshot = ratio_snapshot(input.ratios, as_of, opts.snapshot_lookback)?;
    let ssd_opts = opts.ssd_options();

    let mut fit = WindowFit { portfolios: BTreeMap::new(), failures: Vec::new(), dominance: Vec::new() };
    let cov = if opts.models.iter().any(|m| matches!(m, ModelKind::MinVar | ModelKind::MeanVar)) {
        Some(CovarianceEstimate::from_scenarios(&scen)?)
    } else {
        None
    };

    for &model in &opts.models {
        let outcome: Result<ModelPortfolio> = match model {
            ModelKind::Ssd => solve_nominal_ssd(&scen, &ssd_opts),
            ModelKind::Fssd => solve_fssd(&scen, &snapshot, &extractions.fssd, opts.alpha, &ssd_opts),
            ModelKind::MinVar => solve_min_var(cov.as_ref().unwrap(), opts.bound, &QpOptions::default()),
            ModelKind::MeanVar => solve_mean_var(cov.as_ref().unwrap(), opts.bound, &QpOptions::default()),
            ModelKind::Spo | ModelKind::PcaSpoA | ModelKind::PcaSpoB => {
                solve_spo_variant(model, input, opts, extractions, &scen, &snapshot, &ssd_opts)
            }
        };
        match outcome {
            Ok(p) => {
                if matches!(model, ModelKind::Ssd | ModelKind::Fssd | ModelKind::Spo | ModelKind::PcaSpoA | ModelKind::PcaSpoB)
                {
                    let check = verify_ssd_dominance(&p.weights, &scen)?;
                    fit.dominance.push((model, check.worst_gap, check.dominates));
                }
                fit.portfolios.insert(model, p);
            }
            Err(e) => {
                log::warn!("window {}: {model} skipped: {e}", window.index);
                fit.failures.push((model, e.to_string()));
            }
        }
    }
    Ok(fit)
}

fn solve_spo_variant(
    model: ModelKind,
    input: &BacktestInput<'_>,
    opts: &BacktestOptions,
    extractions: &ExtractionSet,
    scen: &ScenarioSet,
    snapshot: &Matrix,
    ssd_opts: &SsdOptions,
) -> Result<ModelPortfolio> {
    let mut step1 = Vec::new();
    for (sector, members) in input.sectors.members(input.assets)? {
        let selected: Vec<RatioId> = match model {
            ModelKind::Spo => SPO_FIXED_RATIOS.to_vec(),
            ModelKind::PcaSpoA => extractions.rule_a[&sector].clone(),
            ModelKind::PcaSpoB => extractions.rule_b[&sector].clone(),
            _ => unreachable!("not a two-step model"),
        };
        let ratios = weighted_ratios(&selected, &opts.spo_weights.for_sector(&sector));
        let bench = scen.sector_benchmarks[&sector].clone();
        let sector_scen = scen.restrict(&members, bench)?;
        let mut sector_snapshot = Matrix::zeros(members.len(), snapshot.cols());
        for (local, &global) in members.iter().enumerate() {
            sector_snapshot.row_mut(local).copy_from_slice(snapshot.row(global));
        }
        step1.push(solve_spo_step1(&sector, &sector_scen, &members, &sector_snapshot, &ratios, ssd_opts)?);
    }
    solve_spo_step2(model, scen, &step1, ssd_opts)
}

/// Per-model backtest output.
#[derive(Debug, Clone)]
pub struct ModelOutcome {
    pub model: ModelKind,
    /// One entry per window; `None` when the model was skipped there.
    pub per_window: Vec<Option<ModelPortfolio>>,
    /// Concatenated out-of-sample returns in window order.
    pub series: Vec<f64>,
    pub metrics: Option<MetricsRow>,
    /// Running sum of the series.
    pub cumulative: Vec<f64>,
    /// Sorted-ascending running sum of the series.
    pub downside: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SkipRecord {
    pub window: usize,
    pub model: ModelKind,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct DominanceRecord {
    pub window: usize,
    pub model: ModelKind,
    pub worst_gap: f64,
    pub dominates: bool,
}

/// Complete output of one rolling (or phase) run.
#[derive(Debug, Clone)]
pub struct BacktestReport {
    pub windows: Vec<Window>,
    pub models: Vec<ModelOutcome>,
    pub skipped: Vec<SkipRecord>,
    pub dominance: Vec<DominanceRecord>,
}

fn assemble_report(
    input: &BacktestInput<'_>,
    opts: &BacktestOptions,
    windows: Vec<Window>,
    fits: Vec<WindowFit>,
) -> Result<BacktestReport> {
    let mut skipped = Vec::new();
    let mut dominance = Vec::new();
    for (w, fit) in fits.iter().enumerate() {
        for (model, reason) in &fit.failures {
            skipped.push(SkipRecord { window: w, model: *model, reason: reason.clone() });
        }
        for &(model, worst_gap, dominates) in &fit.dominance {
            dominance.push(DominanceRecord { window: w, model, worst_gap, dominates });
        }
    }

    let mut models = Vec::with_capacity(opts.models.len());
    for &model in &opts.models {
        let mut per_window = Vec::with_capacity(windows.len());
        let mut series = Vec::new();
        for (window, fit) in windows.iter().zip(&fits) {
            match fit.portfolios.get(&model) {
                Some(p) => {
                    for t in window.test.clone() {
                        let r: f64 = crate::linalg::dot(input.returns.row(t), &p.weights);
                        series.push(r);
                    }
                    per_window.push(Some(p.clone()));
                }
                None => per_window.push(None),
            }
        }
        let metrics =
            if series.is_empty() { None } else { Some(MetricsRow::compute(&series, &opts.metrics)?) };
        let mut acc = 0.0;
        let cumulative: Vec<f64> = series
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        let downside = downside_pattern(&series);
        models.push(ModelOutcome { model, per_window, series, metrics, cumulative, downside });
    }
    Ok(BacktestReport { windows, models, skipped, dominance })
}

/// Run the rolling-window scheme over the full data set.
pub fn run_rolling(input: &BacktestInput<'_>, opts: &BacktestOptions) -> Result<BacktestReport> {
    validate_options(opts)?;
    let plan = plan_windows(input.returns.rows(), &opts.window)?;
    let extractions = if opts.pca.refresh_per_window {
        None
    } else {
        // Static policy: observe ratios only up to the last date before the
        // first out-of-sample period.
        let first_test = plan.windows[0].test.start;
        Some(compute_extractions(
            input.ratios,
            input.sectors,
            input.assets,
            &opts.pca,
            input.dates[first_test - 1],
        )?)
    };

    let fits: Vec<Result<WindowFit>> = plan
        .windows
        .par_iter()
        .map(|window| {
            let local;
            let ex = match &extractions {
                Some(e) => e,
                None => {
                    local = compute_extractions(
                        input.ratios,
                        input.sectors,
                        input.assets,
                        &opts.pca,
                        input.dates[window.train.end - 1],
                    )?;
                    &local
                }
            };
            fit_window(input, opts, ex, window)
        })
        .collect();
    let fits: Vec<WindowFit> = fits.into_iter().collect::<Result<_>>()?;
    assemble_report(input, opts, plan.windows, fits)
}

/// Run one fit per labeled phase on its preceding year of data.
pub fn run_phases(
    input: &BacktestInput<'_>,
    opts: &BacktestOptions,
    phases: &[PhaseSpec],
) -> Result<Vec<(String, BacktestReport)>> {
    validate_options(opts)?;
    let planned = plan_phases(input.dates, phases, opts.window.in_len)?;
    let mut out = Vec::with_capacity(planned.len());
    for (name, window) in planned {
        let extractions = compute_extractions(
            input.ratios,
            input.sectors,
            input.assets,
            &opts.pca,
            input.dates[window.test.start - 1],
        )?;
        let fit = fit_window(input, opts, &extractions, &window)?;
        let report = assemble_report(input, opts, vec![window], vec![fit])?;
        out.push((name, report));
    }
    Ok(out)
}

fn validate_options(opts: &BacktestOptions) -> Result<()> {
    if opts.models.is_empty() {
        return Err(Error::InvalidInput("no models configured".into()));
    }
    if !(0.0..=1.0).contains(&opts.alpha) {
        return Err(Error::InvalidInput(format!("alpha {} outside [0, 1]", opts.alpha)));
    }
    if !(opts.bound > 0.0 && opts.bound <= 1.0) {
        return Err(Error::InvalidInput(format!("bound {} outside (0, 1]", opts.bound)));
    }
    if opts.snapshot_lookback == 0 {
        return Err(Error::InvalidInput("snapshot lookback must be at least 1".into()));
    }
    let (a1, a2) = opts.metrics.levels;
    for a in [a1, a2] {
        if !(0.0 < a && a < 1.0) {
            return Err(Error::InvalidInput(format!("confidence level {a} outside (0, 1)")));
        }
    }
    Ok(())
}
