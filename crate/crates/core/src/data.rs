//! Market data panels: prices, ratios, sectors, benchmarks, and the scenario
//! sets fed to the optimizers.
//!
//! Panels are immutable after loading and cleaning; every operation here is a
//! pure function over them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ratios::{RatioId, CANONICAL_RATIOS, RATIO_COUNT};

/// Weekly adjusted close prices, week-major.
#[derive(Debug, Clone)]
pub struct PricePanel {
    pub assets: Vec<String>,
    pub dates: Vec<NaiveDate>,
    cells: Vec<Option<f64>>,
}

impl PricePanel {
    pub fn new(assets: Vec<String>, dates: Vec<NaiveDate>, cells: Vec<Option<f64>>) -> Result<Self> {
        if cells.len() != assets.len() * dates.len() {
            return Err(Error::LengthMismatch { expected: assets.len() * dates.len(), got: cells.len() });
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("price dates must be strictly increasing".into()));
        }
        for (idx, c) in cells.iter().enumerate() {
            if let Some(p) = c {
                if !p.is_finite() || *p <= 0.0 {
                    let (w, a) = (idx / assets.len(), idx % assets.len());
                    return Err(Error::NonPositivePrice { asset: assets[a].clone(), row: w, value: *p });
                }
            }
        }
        Ok(PricePanel { assets, dates, cells })
    }

    pub fn price(&self, week: usize, asset: usize) -> Option<f64> {
        self.cells[week * self.assets.len() + asset]
    }

    pub fn num_weeks(&self) -> usize {
        self.dates.len()
    }

    pub fn num_assets(&self) -> usize {
        self.assets.len()
    }

    fn set(&mut self, week: usize, asset: usize, value: Option<f64>) {
        let n = self.assets.len();
        self.cells[week * n + asset] = value;
    }

    /// Quarters spanned by the panel, each with its member week indices.
    fn quarters(&self) -> Vec<Vec<usize>> {
        group_by_quarter(&self.dates)
    }
}

/// Quarterly observations of the 11 canonical ratios.
#[derive(Debug, Clone)]
pub struct RatioPanel {
    pub assets: Vec<String>,
    pub quarters: Vec<NaiveDate>,
    cells: Vec<Option<f64>>, // [(quarter * n_assets + asset) * 11 + ratio]
}

impl RatioPanel {
    pub fn new(assets: Vec<String>, quarters: Vec<NaiveDate>, cells: Vec<Option<f64>>) -> Result<Self> {
        let expected = assets.len() * quarters.len() * RATIO_COUNT;
        if cells.len() != expected {
            return Err(Error::LengthMismatch { expected, got: cells.len() });
        }
        if quarters.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("ratio quarters must be strictly increasing".into()));
        }
        Ok(RatioPanel { assets, quarters, cells })
    }

    pub fn value(&self, quarter: usize, asset: usize, ratio: RatioId) -> Option<f64> {
        self.cells[(quarter * self.assets.len() + asset) * RATIO_COUNT + ratio.index()]
    }

    fn set(&mut self, quarter: usize, asset: usize, ratio: usize, value: Option<f64>) {
        let n = self.assets.len();
        self.cells[(quarter * n + asset) * RATIO_COUNT + ratio] = value;
    }

    pub fn num_assets(&self) -> usize {
        self.assets.len()
    }

    /// Metadata for the 11 ratio columns in canonical order.
    pub fn meta(&self) -> [RatioId; RATIO_COUNT] {
        CANONICAL_RATIOS
    }
}

/// Asset-to-sector assignment.
#[derive(Debug, Clone)]
pub struct SectorMap {
    pub sectors: Vec<String>,
    map: BTreeMap<String, String>,
}

impl SectorMap {
    pub fn new(map: BTreeMap<String, String>) -> Self {
        let sectors: BTreeSet<String> = map.values().cloned().collect();
        SectorMap { sectors: sectors.into_iter().collect(), map }
    }

    pub fn sector_of(&self, asset: &str) -> Option<&str> {
        self.map.get(asset).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Member indices per sector for an asset list, erroring on unmapped
    /// assets or empty sectors.
    pub fn members(&self, assets: &[String]) -> Result<Vec<(String, Vec<usize>)>> {
        let mut by_sector: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, a) in assets.iter().enumerate() {
            let s = self
                .sector_of(a)
                .ok_or_else(|| Error::InvalidInput(format!("asset '{a}' has no sector")))?;
            by_sector.entry(s).or_default().push(i);
        }
        for s in &self.sectors {
            if !by_sector.contains_key(s.as_str()) {
                return Err(Error::EmptySector(s.clone()));
            }
        }
        Ok(by_sector.into_iter().map(|(s, v)| (s.to_string(), v)).collect())
    }

    fn retain_assets(&self, keep: &BTreeSet<String>) -> Result<SectorMap> {
        let map: BTreeMap<String, String> = self
            .map
            .iter()
            .filter(|(a, _)| keep.contains(*a))
            .map(|(a, s)| (a.clone(), s.clone()))
            .collect();
        let remaining: BTreeSet<&String> = map.values().collect();
        for s in &self.sectors {
            if !remaining.contains(s) {
                return Err(Error::EmptySector(s.clone()));
            }
        }
        Ok(SectorMap::new(map))
    }
}

/// Equiprobable (or weighted) return realizations over one window, plus the
/// benchmark realization vector and optional per-sector benchmarks.
#[derive(Debug, Clone)]
pub struct ScenarioSet {
    /// `T x N` return realizations.
    pub returns: Matrix,
    pub probabilities: Vec<f64>,
    pub benchmark: Vec<f64>,
    pub sector_benchmarks: BTreeMap<String, Vec<f64>>,
}

impl ScenarioSet {
    pub fn num_scenarios(&self) -> usize {
        self.returns.rows()
    }

    pub fn num_assets(&self) -> usize {
        self.returns.cols()
    }

    /// Portfolio return realizations `R_zt` for weights `z`.
    pub fn portfolio_returns(&self, weights: &[f64]) -> Vec<f64> {
        (0..self.num_scenarios())
            .map(|t| crate::linalg::dot(self.returns.row(t), weights))
            .collect()
    }

    /// Probability-weighted mean return per asset.
    pub fn mean_returns(&self) -> Vec<f64> {
        let t_count = self.num_scenarios();
        let n = self.num_assets();
        let mut mu = vec![0.0; n];
        for t in 0..t_count {
            let p = self.probabilities[t];
            for (j, m) in mu.iter_mut().enumerate() {
                *m += p * self.returns[(t, j)];
            }
        }
        mu
    }

    /// Restriction to a subset of assets with a replacement benchmark.
    pub fn restrict(&self, asset_indices: &[usize], benchmark: Vec<f64>) -> Result<ScenarioSet> {
        let t_count = self.num_scenarios();
        if benchmark.len() != t_count {
            return Err(Error::LengthMismatch { expected: t_count, got: benchmark.len() });
        }
        let mut returns = Matrix::zeros(t_count, asset_indices.len());
        for t in 0..t_count {
            for (k, &j) in asset_indices.iter().enumerate() {
                returns[(t, k)] = self.returns[(t, j)];
            }
        }
        Ok(ScenarioSet {
            returns,
            probabilities: self.probabilities.clone(),
            benchmark,
            sector_benchmarks: BTreeMap::new(),
        })
    }

    fn validate(&self) -> Result<()> {
        let t_count = self.num_scenarios();
        if self.probabilities.len() != t_count {
            return Err(Error::LengthMismatch { expected: t_count, got: self.probabilities.len() });
        }
        if self.benchmark.len() != t_count {
            return Err(Error::LengthMismatch { expected: t_count, got: self.benchmark.len() });
        }
        let sum: f64 = self.probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.probabilities.iter().any(|&p| p <= 0.0) {
            return Err(Error::InvalidInput("scenario probabilities must be positive and sum to 1".into()));
        }
        Ok(())
    }
}

/// Where the benchmark realizations come from.
#[derive(Debug, Clone)]
pub enum BenchmarkMode<'a> {
    /// Index return series aligned with the full return matrix rows.
    Supplied(&'a [f64]),
    /// Equal-weighted mean across the retained assets.
    EqualWeightProxy,
}

/// Weekly simple returns from a gap-free price panel.
///
/// Row `t` holds `(p_{t+1} - p_t) / p_t`; the result has one row fewer than
/// the panel has weeks.
pub fn compute_returns(prices: &PricePanel) -> Result<Matrix> {
    let n = prices.num_assets();
    let w = prices.num_weeks();
    if w < 2 {
        return Err(Error::DataTooShort { needed: 2, got: w });
    }
    let mut out = Matrix::zeros(w - 1, n);
    for a in 0..n {
        for t in 0..w {
            match prices.price(t, a) {
                None => return Err(Error::GapRemaining { asset: prices.assets[a].clone(), row: t }),
                Some(p) if p <= 0.0 => {
                    return Err(Error::NonPositivePrice { asset: prices.assets[a].clone(), row: t, value: p })
                }
                Some(p) => {
                    if t > 0 {
                        let prev = prices.price(t - 1, a).unwrap();
                        out[(t - 1, a)] = (p - prev) / prev;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Assets removed by [`clean_universe`] and the fills it applied.
#[derive(Debug, Clone, Default)]
pub struct CleanReport {
    pub removed: Vec<(String, String)>,
    pub filled_price_cells: usize,
    pub filled_ratio_cells: usize,
}

/// Remove assets with too many missing quarters, fill surviving gaps.
///
/// An asset is dropped when its prices are absent for more than 2 whole
/// quarters or any of its ratios is absent for more than 4 quarters.
/// Surviving price gaps fill by linear interpolation (flat at the edges);
/// ratio gaps forward-fill, with a backward fill at the series head.
pub fn clean_universe(
    prices: &PricePanel,
    ratios: &RatioPanel,
    sectors: &SectorMap,
) -> Result<(PricePanel, RatioPanel, SectorMap, CleanReport)> {
    let mut report = CleanReport::default();
    let mut keep: Vec<String> = Vec::new();

    let price_quarters = prices.quarters();
    let ratio_asset_index: BTreeMap<&str, usize> =
        ratios.assets.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();

    for (a, asset) in prices.assets.iter().enumerate() {
        let Some(&ra) = ratio_asset_index.get(asset.as_str()) else {
            report.removed.push((asset.clone(), "absent from ratio panel".into()));
            continue;
        };
        if sectors.sector_of(asset).is_none() {
            report.removed.push((asset.clone(), "absent from sector map".into()));
            continue;
        }
        let missing_price_quarters = price_quarters
            .iter()
            .filter(|weeks| weeks.iter().all(|&w| prices.price(w, a).is_none()))
            .count();
        if missing_price_quarters > 2 {
            report
                .removed
                .push((asset.clone(), format!("prices missing for {missing_price_quarters} quarters")));
            continue;
        }
        let worst_ratio_gap = CANONICAL_RATIOS
            .iter()
            .map(|&r| {
                (0..ratios.quarters.len())
                    .filter(|&q| ratios.value(q, ra, r).is_none())
                    .count()
            })
            .max()
            .unwrap_or(0);
        if worst_ratio_gap > 4 {
            report
                .removed
                .push((asset.clone(), format!("a ratio is missing for {worst_ratio_gap} quarters")));
            continue;
        }
        keep.push(asset.clone());
    }

    if keep.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let keep_set: BTreeSet<String> = keep.iter().cloned().collect();
    let sectors = sectors.retain_assets(&keep_set)?;

    // Rebuild the price panel over the kept assets and fill gaps.
    let w = prices.num_weeks();
    let mut price_cells: Vec<Option<f64>> = Vec::with_capacity(w * keep.len());
    for t in 0..w {
        for asset in &keep {
            let a = prices.assets.iter().position(|x| x == asset).unwrap();
            price_cells.push(prices.price(t, a));
        }
    }
    let mut clean_prices = PricePanel::new(keep.clone(), prices.dates.clone(), price_cells)?;
    for a in 0..keep.len() {
        report.filled_price_cells += fill_price_series(&mut clean_prices, a)?;
    }

    // Rebuild the ratio panel and fill gaps.
    let q_count = ratios.quarters.len();
    let mut ratio_cells: Vec<Option<f64>> = Vec::with_capacity(q_count * keep.len() * RATIO_COUNT);
    for q in 0..q_count {
        for asset in &keep {
            let ra = ratio_asset_index[asset.as_str()];
            for &r in CANONICAL_RATIOS.iter() {
                ratio_cells.push(ratios.value(q, ra, r));
            }
        }
    }
    let mut clean_ratios = RatioPanel::new(keep.clone(), ratios.quarters.clone(), ratio_cells)?;
    for a in 0..keep.len() {
        for r in 0..RATIO_COUNT {
            report.filled_ratio_cells += fill_ratio_series(&mut clean_ratios, a, r);
        }
    }

    Ok((clean_prices, clean_ratios, sectors, report))
}

fn fill_price_series(panel: &mut PricePanel, asset: usize) -> Result<usize> {
    let w = panel.num_weeks();
    let known: Vec<(usize, f64)> =
        (0..w).filter_map(|t| panel.price(t, asset).map(|p| (t, p))).collect();
    if known.is_empty() {
        return Err(Error::GapRemaining { asset: panel.assets[asset].clone(), row: 0 });
    }
    let mut filled = 0;
    for t in 0..w {
        if panel.price(t, asset).is_some() {
            continue;
        }
        let before = known.iter().rev().find(|(k, _)| *k < t);
        let after = known.iter().find(|(k, _)| *k > t);
        let v = match (before, after) {
            (Some(&(t0, p0)), Some(&(t1, p1))) => {
                let f = (t - t0) as f64 / (t1 - t0) as f64;
                p0 + f * (p1 - p0)
            }
            (Some(&(_, p0)), None) => p0,
            (None, Some(&(_, p1))) => p1,
            (None, None) => unreachable!(),
        };
        panel.set(t, asset, Some(v));
        filled += 1;
    }
    Ok(filled)
}

fn fill_ratio_series(panel: &mut RatioPanel, asset: usize, ratio: usize) -> usize {
    let q_count = panel.quarters.len();
    let ratio_id = CANONICAL_RATIOS[ratio];
    let mut filled = 0;
    let mut last: Option<f64> = None;
    for q in 0..q_count {
        match panel.value(q, asset, ratio_id) {
            Some(v) => last = Some(v),
            None => {
                if let Some(v) = last {
                    panel.set(q, asset, ratio, Some(v));
                    filled += 1;
                }
            }
        }
    }
    // Head gap: backward-fill from the first observation.
    if let Some(first_q) = (0..q_count).find(|&q| panel.value(q, asset, ratio_id).is_some()) {
        let v = panel.value(first_q, asset, ratio_id).unwrap();
        for q in 0..first_q {
            panel.set(q, asset, ratio, Some(v));
            filled += 1;
        }
    }
    filled
}

/// Slice a window of the return matrix into an equiprobable scenario set.
pub fn make_scenarios(
    returns: &Matrix,
    window: std::ops::Range<usize>,
    benchmark: BenchmarkMode<'_>,
    sectors: Option<(&SectorMap, &[String])>,
) -> Result<ScenarioSet> {
    let len = returns.rows();
    if window.start >= window.end || window.end > len {
        return Err(Error::WindowOutOfRange { start: window.start, end: window.end, len });
    }
    let t_count = window.end - window.start;
    let n = returns.cols();
    let mut slice = Matrix::zeros(t_count, n);
    for (t, src) in window.clone().enumerate() {
        slice.row_mut(t).copy_from_slice(returns.row(src));
    }
    let bench: Vec<f64> = match benchmark {
        BenchmarkMode::Supplied(series) => {
            if series.len() != len {
                return Err(Error::LengthMismatch { expected: len, got: series.len() });
            }
            series[window.clone()].to_vec()
        }
        BenchmarkMode::EqualWeightProxy => (0..t_count)
            .map(|t| slice.row(t).iter().sum::<f64>() / n as f64)
            .collect(),
    };
    let mut sector_benchmarks = BTreeMap::new();
    if let Some((map, assets)) = sectors {
        for (sector, members) in map.members(assets)? {
            let series: Vec<f64> = (0..t_count)
                .map(|t| members.iter().map(|&j| slice[(t, j)]).sum::<f64>() / members.len() as f64)
                .collect();
            sector_benchmarks.insert(sector, series);
        }
    }
    let set = ScenarioSet {
        returns: slice,
        probabilities: vec![1.0 / t_count as f64; t_count],
        benchmark: bench,
        sector_benchmarks,
    };
    set.validate()?;
    Ok(set)
}

/// Trailing mean of the most recent `lookback` available quarterly values at
/// or before `as_of`, per asset and ratio.
pub fn ratio_snapshot(ratios: &RatioPanel, as_of: NaiveDate, lookback: usize) -> Result<Matrix> {
    if lookback == 0 {
        return Err(Error::InvalidInput("lookback must be at least 1".into()));
    }
    let usable: Vec<usize> = (0..ratios.quarters.len())
        .filter(|&q| ratios.quarters[q] <= as_of)
        .collect();
    if usable.is_empty() {
        return Err(Error::NoRatioData(as_of));
    }
    let n = ratios.num_assets();
    let mut out = Matrix::zeros(n, RATIO_COUNT);
    for a in 0..n {
        for (r, &ratio) in CANONICAL_RATIOS.iter().enumerate() {
            let mut vals = Vec::with_capacity(lookback);
            for &q in usable.iter().rev() {
                if let Some(v) = ratios.value(q, a, ratio) {
                    vals.push(v);
                    if vals.len() == lookback {
                        break;
                    }
                }
            }
            if vals.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "asset '{}' has no {} observations at or before {as_of}",
                    ratios.assets[a], ratio
                )));
            }
            out[(a, r)] = vals.iter().sum::<f64>() / vals.len() as f64;
        }
    }
    Ok(out)
}

fn group_by_quarter(dates: &[NaiveDate]) -> Vec<Vec<usize>> {
    let mut groups: Vec<((i32, u32), Vec<usize>)> = Vec::new();
    for (i, d) in dates.iter().enumerate() {
        let key = (d.year(), (d.month() - 1) / 3);
        match groups.last_mut() {
            Some((k, v)) if *k == key => v.push(i),
            _ => groups.push((key, vec![i])),
        }
    }
    groups.into_iter().map(|(_, v)| v).collect()
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| Error::InvalidInput(format!("bad date '{s}': {e}")))
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::InvalidInput(format!("bad number '{s}': {e}")))
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new().has_headers(true).from_path(path)?)
}

/// Load `date,asset_id,close` rows; missing cells are simply absent rows.
pub fn load_prices(path: &Path) -> Result<PricePanel> {
    let mut rdr = open_reader(path)?;
    let mut cells: BTreeMap<(NaiveDate, String), f64> = BTreeMap::new();
    let mut dates: BTreeSet<NaiveDate> = BTreeSet::new();
    let mut assets: BTreeSet<String> = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(Error::InvalidInput(format!("price row needs 3 fields, got {}", rec.len())));
        }
        let date = parse_date(&rec[0])?;
        let asset = rec[1].trim().to_string();
        let close = parse_num(&rec[2])?;
        if cells.insert((date, asset.clone()), close).is_some() {
            return Err(Error::InvalidInput(format!("duplicate price row for {asset} at {date}")));
        }
        dates.insert(date);
        assets.insert(asset);
    }
    let dates: Vec<NaiveDate> = dates.into_iter().collect();
    let assets: Vec<String> = assets.into_iter().collect();
    let mut flat = Vec::with_capacity(dates.len() * assets.len());
    for d in &dates {
        for a in &assets {
            flat.push(cells.get(&(*d, a.clone())).copied());
        }
    }
    PricePanel::new(assets, dates, flat)
}

/// Load `quarter_end,asset_id,ratio_label,value` rows.
pub fn load_ratios(path: &Path) -> Result<RatioPanel> {
    let mut rdr = open_reader(path)?;
    let mut cells: BTreeMap<(NaiveDate, String, usize), f64> = BTreeMap::new();
    let mut quarters: BTreeSet<NaiveDate> = BTreeSet::new();
    let mut assets: BTreeSet<String> = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 4 {
            return Err(Error::InvalidInput(format!("ratio row needs 4 fields, got {}", rec.len())));
        }
        let quarter = parse_date(&rec[0])?;
        let asset = rec[1].trim().to_string();
        let label = rec[2].trim();
        let ratio = RatioId::from_label(label)
            .ok_or_else(|| Error::InvalidInput(format!("unknown ratio label '{label}'")))?;
        let value = parse_num(&rec[3])?;
        cells.insert((quarter, asset.clone(), ratio.index()), value);
        quarters.insert(quarter);
        assets.insert(asset);
    }
    let quarters: Vec<NaiveDate> = quarters.into_iter().collect();
    let assets: Vec<String> = assets.into_iter().collect();
    let mut flat = Vec::with_capacity(quarters.len() * assets.len() * RATIO_COUNT);
    for q in &quarters {
        for a in &assets {
            for r in 0..RATIO_COUNT {
                flat.push(cells.get(&(*q, a.clone(), r)).copied());
            }
        }
    }
    RatioPanel::new(assets, quarters, flat)
}

/// Load `asset_id,sector` rows.
pub fn load_sectors(path: &Path) -> Result<SectorMap> {
    let mut rdr = open_reader(path)?;
    let mut map = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::InvalidInput(format!("sector row needs 2 fields, got {}", rec.len())));
        }
        map.insert(rec[0].trim().to_string(), rec[1].trim().to_string());
    }
    if map.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    Ok(SectorMap::new(map))
}

/// Benchmark index series: levels or returns keyed by date.
#[derive(Debug, Clone)]
pub struct BenchmarkSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    is_level: bool,
}

impl BenchmarkSeries {
    /// Load `date,index_level` or `date,return` rows; the header names the mode.
    pub fn load(path: &Path) -> Result<BenchmarkSeries> {
        let mut rdr = open_reader(path)?;
        let headers = rdr.headers()?.clone();
        let second = headers.get(1).unwrap_or("").trim().to_ascii_lowercase();
        let is_level = match second.as_str() {
            "index_level" => true,
            "return" => false,
            other => {
                return Err(Error::InvalidInput(format!(
                    "benchmark header must be 'index_level' or 'return', got '{other}'"
                )))
            }
        };
        let mut rows: BTreeMap<NaiveDate, f64> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.insert(parse_date(&rec[0])?, parse_num(&rec[1])?);
        }
        let (dates, values): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        Ok(BenchmarkSeries { dates, values, is_level })
    }

    /// Return series aligned to the given return-row dates (the date of each
    /// row is the week the return realizes).
    pub fn aligned_returns(&self, return_dates: &[NaiveDate]) -> Result<Vec<f64>> {
        let index: BTreeMap<NaiveDate, usize> =
            self.dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        let mut out = Vec::with_capacity(return_dates.len());
        for d in return_dates {
            let &i = index
                .get(d)
                .ok_or_else(|| Error::InvalidInput(format!("benchmark has no entry for {d}")))?;
            if self.is_level {
                if i == 0 {
                    return Err(Error::InvalidInput(format!(
                        "benchmark level series needs an observation before {d}"
                    )));
                }
                let prev = self.values[i - 1];
                if prev <= 0.0 {
                    return Err(Error::InvalidInput(format!("non-positive benchmark level before {d}")));
                }
                out.push((self.values[i] - prev) / prev);
            } else {
                out.push(self.values[i]);
            }
        }
        Ok(out)
    }
}
