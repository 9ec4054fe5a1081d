//! CSV emission for backtest bundles and PCA reports, plus the loadings
//! reader used to cross-check published tables.

use std::io::Write;
use std::path::Path;

use crate::backtest::BacktestReport;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::MetricOptions;
use crate::metrics::MetricsRow;
use crate::pca::{ExtractionRule, PcaSolution};
use crate::portfolio::ModelKind;
use crate::ratios::{RatioId, CANONICAL_RATIOS, RATIO_COUNT};

impl ModelKind {
    /// Filesystem-safe lowercase name.
    pub fn slug(self) -> &'static str {
        match self {
            ModelKind::Ssd => "ssd",
            ModelKind::Spo => "spo",
            ModelKind::MinVar => "min_var",
            ModelKind::MeanVar => "mean_var",
            ModelKind::PcaSpoA => "pca_spo_a",
            ModelKind::PcaSpoB => "pca_spo_b",
            ModelKind::Fssd => "f_ssd",
        }
    }
}

/// Write the full report bundle into `dir`:
/// `metrics.csv`, `weights.csv`, `returns_<model>.csv`,
/// `cumulative_<model>.csv`, `downside_<model>.csv`, `skipped.csv`,
/// `dominance.csv`.
pub fn write_report_bundle(
    dir: &Path,
    report: &BacktestReport,
    assets: &[String],
    metric_opts: &MetricOptions,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    // metrics.csv: rows = measures, columns = models.
    let mut out = std::fs::File::create(dir.join("metrics.csv"))?;
    let labels = MetricsRow::labels(metric_opts);
    let header: Vec<String> =
        std::iter::once("measure".to_string()).chain(report.models.iter().map(|m| m.model.to_string())).collect();
    writeln!(out, "{}", header.join(","))?;
    let rendered: Vec<Vec<String>> = report
        .models
        .iter()
        .map(|m| match &m.metrics {
            Some(row) => row.rendered(),
            None => vec!["-----".to_string(); labels.len()],
        })
        .collect();
    for (i, label) in labels.iter().enumerate() {
        let mut line = vec![label.clone()];
        for cols in &rendered {
            line.push(cols[i].clone());
        }
        writeln!(out, "{}", line.join(","))?;
    }

    // weights.csv: every fitted weight, including zeros.
    let mut out = std::fs::File::create(dir.join("weights.csv"))?;
    writeln!(out, "window_id,model,asset_id,weight")?;
    for model in &report.models {
        for (w, portfolio) in model.per_window.iter().enumerate() {
            if let Some(p) = portfolio {
                for (a, weight) in p.weights.iter().enumerate() {
                    writeln!(out, "{w},{},{},{weight}", model.model, assets[a])?;
                }
            }
        }
    }

    for model in &report.models {
        let slug = model.model.slug();
        let mut out = std::fs::File::create(dir.join(format!("returns_{slug}.csv")))?;
        writeln!(out, "t,return")?;
        for (t, r) in model.series.iter().enumerate() {
            writeln!(out, "{t},{r}")?;
        }
        let mut out = std::fs::File::create(dir.join(format!("cumulative_{slug}.csv")))?;
        writeln!(out, "t,cumulative_return")?;
        for (t, r) in model.cumulative.iter().enumerate() {
            writeln!(out, "{t},{r}")?;
        }
        let mut out = std::fs::File::create(dir.join(format!("downside_{slug}.csv")))?;
        writeln!(out, "rank,cumulative_return")?;
        for (t, r) in model.downside.iter().enumerate() {
            writeln!(out, "{t},{r}")?;
        }
    }

    let mut out = std::fs::File::create(dir.join("skipped.csv"))?;
    writeln!(out, "window_id,model,reason")?;
    for s in &report.skipped {
        writeln!(out, "{},{},{}", s.window, s.model, s.reason.replace(',', ";"))?;
    }

    let mut out = std::fs::File::create(dir.join("dominance.csv"))?;
    writeln!(out, "window_id,model,worst_gap,dominates")?;
    for d in &report.dominance {
        writeln!(out, "{},{},{},{}", d.window, d.model, d.worst_gap, d.dominates)?;
    }

    Ok(())
}

/// Write a loadings table: one row per ratio grouped by category, component
/// columns, a communality column, and a final cumulative-variance row.
pub fn write_loadings_csv(out: &mut impl Write, sol: &PcaSolution) -> Result<()> {
    let k = sol.retained;
    let header: Vec<String> = ["ratio".to_string(), "category".to_string()]
        .into_iter()
        .chain((1..=k).map(|c| format!("PC{c}")))
        .chain(std::iter::once("communality".to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (i, ratio) in CANONICAL_RATIOS.iter().enumerate() {
        let mut line = vec![ratio.to_string(), ratio.category().label().to_string()];
        for c in 0..k {
            line.push(format!("{:.6}", sol.loadings[(i, c)]));
        }
        line.push(format!("{:.6}", sol.communalities[i]));
        writeln!(out, "{}", line.join(","))?;
    }
    let mut line = vec!["CV".to_string(), String::new()];
    for c in 0..k {
        line.push(format!("{:.6}", sol.cumulative_variance[c]));
    }
    line.push(String::new());
    writeln!(out, "{}", line.join(","))?;
    Ok(())
}

/// Read a loadings table back into an `11 x k` matrix (the CV row and the
/// communality column are ignored; they are derived quantities).
pub fn read_loadings_csv(path: &Path) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let k = headers.len().checked_sub(3).filter(|&k| k > 0).ok_or_else(|| {
        Error::InvalidInput("loadings csv needs ratio, category, PC..., communality columns".into())
    })?;
    let mut loadings = Matrix::zeros(RATIO_COUNT, k);
    let mut seen = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let name = rec[0].trim();
        if name == "CV" {
            continue;
        }
        let ratio = RatioId::from_label(name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown ratio '{name}' in loadings csv")))?;
        for c in 0..k {
            let v: f64 = rec[2 + c]
                .trim()
                .parse()
                .map_err(|e| Error::InvalidInput(format!("bad loading '{}': {e}", &rec[2 + c])))?;
            loadings[(ratio.index(), c)] = v;
        }
        seen += 1;
    }
    if seen != RATIO_COUNT {
        return Err(Error::LengthMismatch { expected: RATIO_COUNT, got: seen });
    }
    Ok(loadings)
}

/// One extraction-report row: sector, selected ratios, cumulative variance.
#[derive(Debug, Clone)]
pub struct ExtractionRow {
    pub sector: String,
    pub ratios: Vec<RatioId>,
    pub cumulative_variance: f64,
}

/// Write an extraction table mirroring the per-sector selection layout.
pub fn write_extraction_csv(
    out: &mut impl Write,
    rule: ExtractionRule,
    rows: &[ExtractionRow],
) -> Result<()> {
    let cols = match rule {
        ExtractionRule::A => ["R1", "R2", "R3", "R4"],
        ExtractionRule::B => ["LR", "PR", "SR", "VR"],
    };
    writeln!(out, "sector,{},CV", cols.join(","))?;
    for row in rows {
        let mut line = vec![row.sector.clone()];
        for i in 0..4 {
            line.push(row.ratios.get(i).map(|r| r.to_string()).unwrap_or_default());
        }
        line.push(format!("{:.2}%", 100.0 * row.cumulative_variance));
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
