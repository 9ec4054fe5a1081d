//! Subcommand implementations.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use spo_core::backtest::{plan_windows, run_phases, run_rolling, BacktestInput};
use spo_core::data::{make_scenarios, BenchmarkMode};
use spo_core::pca::ExtractionRule;
use spo_core::portfolio::ModelKind;
use spo_core::report::{write_extraction_csv, write_loadings_csv, write_report_bundle, ExtractionRow};
use spo_core::ssd::verify_ssd_dominance;
use spo_core::synth::{generate, SyntheticSpec};

use crate::config::{load_and_prepare, write_manifest, CliError, CliResult, LoadedData, RunConfig};

fn classify(e: spo_core::Error) -> CliError {
    use spo_core::Error::*;
    match e {
        Infeasible(_) | Unbounded | IterationLimit(_) | InfeasibleBounds(_) => {
            CliError::Solver(e.to_string())
        }
        InvalidInput(_) => CliError::Config(e.to_string()),
        _ => CliError::Data(e.to_string()),
    }
}

fn backtest_input<'a>(data: &'a LoadedData) -> BacktestInput<'a> {
    BacktestInput {
        assets: &data.assets,
        dates: &data.dates,
        returns: &data.returns,
        sectors: &data.sectors,
        ratios: &data.ratios,
        benchmark: data.benchmark.as_deref(),
    }
}

pub fn cmd_synth(spec: &SyntheticSpec, out: &Path, write_config: bool) -> CliResult<()> {
    let data = generate(spec).map_err(classify)?;
    for w in &data.warnings {
        log::warn!("{w}");
    }
    data.write_csvs(out).map_err(|e| CliError::Data(e.to_string()))?;
    if write_config {
        let abs = std::fs::canonicalize(out).map_err(|e| CliError::Data(e.to_string()))?;
        let config = serde_json::json!({
            "data": {
                "prices": abs.join("prices.csv"),
                "ratios": abs.join("ratios.csv"),
                "sectors": abs.join("sectors.csv"),
                "benchmark": abs.join("benchmark.csv"),
            },
            "seed": spec.seed,
        });
        let text = serde_json::to_string_pretty(&config)
            .map_err(|e| CliError::Config(e.to_string()))?;
        std::fs::write(out.join("config.json"), text + "\n")
            .map_err(|e| CliError::Data(e.to_string()))?;
    }
    println!(
        "wrote {} assets x {} weeks ({} sectors, seed {}) to {}",
        spec.n_assets,
        spec.weeks,
        spec.n_sectors,
        spec.seed,
        out.display()
    );
    Ok(())
}

pub fn cmd_extract(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let data = load_and_prepare(cfg)?;
    let span_end = cfg
        .pca
        .span_end
        .or_else(|| data.ratios.quarters.last().copied())
        .ok_or_else(|| CliError::Data("ratio panel has no quarters".into()))?;
    let extractions = spo_core::backtest::compute_extractions(
        &data.ratios,
        &data.sectors,
        &data.assets,
        &cfg.pca,
        span_end,
    )
    .map_err(classify)?;

    std::fs::create_dir_all(out).map_err(|e| CliError::Data(e.to_string()))?;
    for (group, sol) in &extractions.solutions {
        let slug = group.to_lowercase().replace(|c: char| !c.is_ascii_alphanumeric(), "_");
        let mut file = std::fs::File::create(out.join(format!("loadings_{slug}.csv")))
            .map_err(|e| CliError::Data(e.to_string()))?;
        write_loadings_csv(&mut file, sol).map_err(|e| CliError::Data(e.to_string()))?;
    }
    for (rule, selected, name) in [
        (ExtractionRule::A, &extractions.rule_a, "extraction_a.csv"),
        (ExtractionRule::B, &extractions.rule_b, "extraction_b.csv"),
    ] {
        let rows: Vec<ExtractionRow> = selected
            .iter()
            .map(|(sector, ratios)| ExtractionRow {
                sector: sector.clone(),
                ratios: ratios.clone(),
                cumulative_variance: extractions.solutions[sector].covered_fraction(),
            })
            .collect();
        let mut file = std::fs::File::create(out.join(name))
            .map_err(|e| CliError::Data(e.to_string()))?;
        write_extraction_csv(&mut file, rule, &rows).map_err(|e| CliError::Data(e.to_string()))?;
    }

    let weights: Vec<String> = extractions
        .fssd
        .iter()
        .map(|w| format!("{}({}{:.4})", w.ratio, if w.sign > 0.0 { '+' } else { '-' }, w.weight))
        .collect();
    println!("extraction reports in {}; blended-objective ratios: {}", out.display(), weights.join(" "));
    Ok(())
}

pub fn cmd_backtest(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let data = load_and_prepare(cfg)?;
    let opts = cfg.backtest_options()?;
    let report = run_rolling(&backtest_input(&data), &opts).map_err(classify)?;

    let total_fits: usize =
        report.models.iter().map(|m| m.per_window.iter().filter(|p| p.is_some()).count()).sum();
    if total_fits == 0 {
        return Err(CliError::Solver("every model failed on every window".into()));
    }
    write_report_bundle(out, &report, &data.assets, &opts.metrics)
        .map_err(|e| CliError::Data(e.to_string()))?;
    write_manifest(out, cfg)?;
    println!(
        "{} windows x {} models, {} skipped fits, {} assets removed in cleaning; report bundle in {}",
        report.windows.len(),
        report.models.len(),
        report.skipped.len(),
        data.clean_report.removed.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_phases(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    if cfg.phases.is_empty() {
        println!("no phases configured; nothing to do");
        return Ok(());
    }
    let data = load_and_prepare(cfg)?;
    let opts = cfg.backtest_options()?;
    let phased = run_phases(&backtest_input(&data), &opts, &cfg.phases).map_err(classify)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Data(e.to_string()))?;
    for (name, report) in &phased {
        let slug: String = name
            .to_lowercase()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        write_report_bundle(&out.join(&slug), report, &data.assets, &opts.metrics)
            .map_err(|e| CliError::Data(e.to_string()))?;
    }
    write_manifest(out, cfg)?;
    println!("{} phase reports in {}", phased.len(), out.display());
    Ok(())
}

pub fn cmd_verify(cfg: &RunConfig, weights_path: &Path, out: Option<&Path>) -> CliResult<()> {
    let data = load_and_prepare(cfg)?;
    let plan =
        plan_windows(data.returns.rows(), &cfg.window).map_err(classify)?;

    // window -> model -> weight vector over the cleaned universe.
    let mut runs: BTreeMap<(usize, ModelKind), Vec<f64>> = BTreeMap::new();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(weights_path)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let asset_index: BTreeMap<&str, usize> =
        data.assets.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data(e.to_string()))?;
        if rec.len() < 4 {
            return Err(CliError::Data("weights csv needs window_id,model,asset_id,weight".into()));
        }
        let window: usize =
            rec[0].trim().parse().map_err(|e| CliError::Data(format!("bad window id: {e}")))?;
        let model: ModelKind =
            rec[1].trim().parse().map_err(|e: spo_core::Error| CliError::Data(e.to_string()))?;
        let &asset = asset_index
            .get(rec[2].trim())
            .ok_or_else(|| CliError::Data(format!("unknown asset '{}'", rec[2].trim())))?;
        let weight: f64 =
            rec[3].trim().parse().map_err(|e| CliError::Data(format!("bad weight: {e}")))?;
        if window >= plan.windows.len() {
            return Err(CliError::Data(format!(
                "window {window} outside the {}-window plan",
                plan.windows.len()
            )));
        }
        runs.entry((window, model)).or_insert_with(|| vec![0.0; data.assets.len()])[asset] = weight;
    }
    if runs.is_empty() {
        return Err(CliError::Data("weights file holds no rows".into()));
    }

    let mut lines = vec!["window_id,model,worst_gap,dominates".to_string()];
    let mut failures = 0usize;
    for ((window, model), weights) in &runs {
        let w = &plan.windows[*window];
        let scen = make_scenarios(
            &data.returns,
            w.train.clone(),
            match &data.benchmark {
                Some(series) => BenchmarkMode::Supplied(series),
                None => BenchmarkMode::EqualWeightProxy,
            },
            None,
        )
        .map_err(classify)?;
        let check = verify_ssd_dominance(weights, &scen).map_err(classify)?;
        // The variance baselines make no dominance claim; their rows are
        // informational and never fail the audit.
        let claims_dominance = !matches!(model, ModelKind::MinVar | ModelKind::MeanVar);
        if claims_dominance && !check.dominates {
            failures += 1;
        }
        lines.push(format!("{window},{model},{},{}", check.worst_gap, check.dominates));
    }
    let text = lines.join("\n") + "\n";
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Data(e.to_string()))?,
        None => {
            // A closed pipe (e.g. piping into head) is not an error.
            if let Err(e) = std::io::stdout().write_all(text.as_bytes()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(CliError::Data(e.to_string()));
                }
            }
        }
    }
    if failures > 0 {
        return Err(CliError::Audit(format!(
            "{failures} dominance-constrained portfolio(s) fail the audit"
        )));
    }
    Ok(())
}
