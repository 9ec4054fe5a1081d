//! Synthetic market data: a per-sector one-factor return model and
//! mean-reverting quarterly ratio walks, emitted in the ingestion CSV
//! formats. Fixed seed, byte-identical output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{PricePanel, RatioPanel, SectorMap};
use crate::error::{Error, Result};
use crate::ratios::{Category, RatioId, CANONICAL_RATIOS, RATIO_COUNT};

/// Generator parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_assets: usize,
    pub n_sectors: usize,
    pub weeks: usize,
    pub seed: u64,
    /// First price date.
    pub start: NaiveDate,
    /// Quarters of ratio history generated before the first price date.
    pub ratio_history_quarters: usize,
    /// Weekly sector drift drawn uniformly from this range.
    pub sector_drift: (f64, f64),
    /// Weekly volatility of the sector factors.
    pub factor_vol: f64,
    /// Weekly idiosyncratic volatility.
    pub idio_vol: f64,
    /// Factor exposure range.
    pub beta: (f64, f64),
    /// Quarterly mean-reversion speed of the ratio walks.
    pub mean_reversion: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_assets: 24,
            n_sectors: 6,
            weeks: 200,
            seed: 42,
            start: NaiveDate::from_ymd_opt(2014, 4, 4).unwrap(),
            ratio_history_quarters: 12,
            sector_drift: (-0.001, 0.004),
            factor_vol: 0.02,
            idio_vol: 0.025,
            beta: (0.6, 1.4),
            mean_reversion: 0.3,
        }
    }
}

/// Generated panels plus the benchmark return series.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub prices: PricePanel,
    pub ratios: RatioPanel,
    pub sectors: SectorMap,
    /// `(date, return)` rows aligned with price dates from the second week on.
    pub benchmark: Vec<(NaiveDate, f64)>,
    pub warnings: Vec<String>,
}

/// Typical level of each ratio; per-asset targets scatter around these.
fn ratio_base_level(ratio: RatioId) -> f64 {
    match ratio {
        RatioId::QR => 1.2,
        RatioId::CR => 1.8,
        RatioId::CCL => 0.5,
        RatioId::NPM => 0.10,
        RatioId::ROA => 0.08,
        RatioId::CPTI => 0.12,
        RatioId::ROE => 0.15,
        RatioId::DER => 0.8,
        RatioId::DAR => 0.45,
        RatioId::PER => 18.0,
        RatioId::PBR => 2.5,
    }
}

/// Generate a complete synthetic market.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    if spec.n_assets == 0 || spec.n_sectors == 0 || spec.weeks < 2 {
        return Err(Error::InvalidInput("need assets, sectors and at least 2 weeks".into()));
    }
    if spec.n_sectors > spec.n_assets {
        return Err(Error::InvalidInput("more sectors than assets".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).unwrap();

    let sector_names: Vec<String> = (0..spec.n_sectors).map(|s| format!("S{:02}", s + 1)).collect();
    let asset_names: Vec<String> = (0..spec.n_assets).map(|a| format!("A{a:03}")).collect();
    let sector_of: Vec<usize> = (0..spec.n_assets).map(|a| a % spec.n_sectors).collect();

    let mut warnings = Vec::new();
    let min_members = (1.0f64 / 0.3).ceil() as usize;
    for (s, name) in sector_names.iter().enumerate() {
        let size = sector_of.iter().filter(|&&x| x == s).count();
        if size < min_members {
            warnings.push(format!(
                "sector {name} has {size} assets; the 0.3 cap needs at least {min_members} for a full budget"
            ));
        }
    }

    // Per-sector drifts and per-asset exposures.
    let drifts: Vec<f64> =
        (0..spec.n_sectors).map(|_| rng.gen_range(spec.sector_drift.0..spec.sector_drift.1)).collect();
    let betas: Vec<f64> = (0..spec.n_assets).map(|_| rng.gen_range(spec.beta.0..spec.beta.1)).collect();

    // Log-return construction keeps every generated price positive.
    let dates: Vec<NaiveDate> =
        (0..spec.weeks).map(|w| spec.start + chrono::Duration::weeks(w as i64)).collect();
    let mut levels: Vec<f64> = (0..spec.n_assets).map(|_| rng.gen_range(20.0..200.0)).collect();
    let mut cells: Vec<Option<f64>> = Vec::with_capacity(spec.weeks * spec.n_assets);
    cells.extend(levels.iter().map(|&p| Some(p)));
    let mut benchmark = Vec::with_capacity(spec.weeks - 1);
    for w in 1..spec.weeks {
        let factors: Vec<f64> =
            (0..spec.n_sectors).map(|s| drifts[s] + spec.factor_vol * normal.sample(&mut rng)).collect();
        let mut mean_simple = 0.0;
        for a in 0..spec.n_assets {
            let g = betas[a] * factors[sector_of[a]] + spec.idio_vol * normal.sample(&mut rng);
            levels[a] *= g.exp();
            mean_simple += g.exp() - 1.0;
            cells.push(Some(levels[a]));
        }
        benchmark.push((dates[w], mean_simple / spec.n_assets as f64));
    }
    let prices = PricePanel::new(asset_names.clone(), dates.clone(), cells)?;

    // Quarterly ratio walks from before the price span to its end.
    let first_quarter =
        spec.start - chrono::Duration::weeks(13 * spec.ratio_history_quarters as i64);
    let mut quarter_dates = Vec::new();
    let mut q = first_quarter;
    let last = *dates.last().unwrap();
    while q <= last {
        quarter_dates.push(q);
        q += chrono::Duration::weeks(13);
    }

    let mut ratio_cells: Vec<Option<f64>> =
        vec![None; quarter_dates.len() * spec.n_assets * RATIO_COUNT];
    for a in 0..spec.n_assets {
        for (r, &ratio) in CANONICAL_RATIOS.iter().enumerate() {
            let base = ratio_base_level(ratio);
            let target = base * (0.3 * normal.sample(&mut rng)).exp();
            let positive_only = ratio.category() != Category::PR;
            let mut x = if positive_only {
                (target.ln() + 0.1 * normal.sample(&mut rng)).exp()
            } else {
                target + 0.02 * normal.sample(&mut rng)
            };
            for (qi, _) in quarter_dates.iter().enumerate() {
                ratio_cells[(qi * spec.n_assets + a) * RATIO_COUNT + r] = Some(x);
                if positive_only {
                    let ln_x = x.ln()
                        + spec.mean_reversion * (target.ln() - x.ln())
                        + 0.08 * normal.sample(&mut rng);
                    x = ln_x.exp();
                } else {
                    x = x + spec.mean_reversion * (target - x) + 0.02 * normal.sample(&mut rng);
                }
            }
        }
    }
    let ratios = RatioPanel::new(asset_names.clone(), quarter_dates, ratio_cells)?;

    let sector_map: BTreeMap<String, String> = asset_names
        .iter()
        .enumerate()
        .map(|(a, name)| (name.clone(), sector_names[sector_of[a]].clone()))
        .collect();

    Ok(SyntheticData {
        prices,
        ratios,
        sectors: SectorMap::new(sector_map),
        benchmark,
        warnings,
    })
}

impl SyntheticData {
    /// Write `prices.csv`, `ratios.csv`, `sectors.csv` and `benchmark.csv`
    /// into `dir` in the ingestion formats.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;

        let mut out = std::fs::File::create(dir.join("prices.csv"))?;
        writeln!(out, "date,asset_id,close")?;
        for (w, date) in self.prices.dates.iter().enumerate() {
            for (a, asset) in self.prices.assets.iter().enumerate() {
                if let Some(p) = self.prices.price(w, a) {
                    writeln!(out, "{date},{asset},{p}")?;
                }
            }
        }

        let mut out = std::fs::File::create(dir.join("ratios.csv"))?;
        writeln!(out, "quarter_end,asset_id,ratio_label,value")?;
        for (q, date) in self.ratios.quarters.iter().enumerate() {
            for (a, asset) in self.ratios.assets.iter().enumerate() {
                for &ratio in CANONICAL_RATIOS.iter() {
                    if let Some(v) = self.ratios.value(q, a, ratio) {
                        writeln!(out, "{date},{asset},{ratio},{v}")?;
                    }
                }
            }
        }

        let mut out = std::fs::File::create(dir.join("sectors.csv"))?;
        writeln!(out, "asset_id,sector")?;
        for asset in &self.prices.assets {
            writeln!(out, "{asset},{}", self.sectors.sector_of(asset).unwrap())?;
        }

        let mut out = std::fs::File::create(dir.join("benchmark.csv"))?;
        writeln!(out, "date,return")?;
        for (date, r) in &self.benchmark {
            writeln!(out, "{date},{r}")?;
        }
        Ok(())
    }
}
