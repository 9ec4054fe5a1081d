//! Out-of-sample performance measures.
//!
//! Tail risk follows the sample-quantile recipe: sort ascending, take
//! `k = floor(M(1-alpha)) + 1`, read VaR at the k-th order statistic and
//! CVaR as the partial sum over the k-tail. Both are reported negated so a
//! loss shows up as a positive risk number. The CVaR divisor is `M(1-alpha)`
//! in `Paper` mode and the tail count `k` in `TailMean` mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Concatenated out-of-sample portfolio returns.
#[derive(Debug, Clone)]
pub struct ReturnSeries {
    pub values: Vec<f64>,
    /// Risk-free rate per period.
    pub risk_free: f64,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>, risk_free: f64) -> Self {
        ReturnSeries { values, risk_free }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// CVaR divisor convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DivisorMode {
    /// Divide the tail sum by `M(1-alpha)`.
    Paper,
    /// Divide the tail sum by the tail count `k`.
    TailMean,
}

/// A ratio measure that may be undefined (non-positive excess return) or
/// degenerate (zero risk denominator with positive excess).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RatioValue {
    Defined(f64),
    Undefined,
    Unbounded,
}

impl RatioValue {
    pub fn value(self) -> Option<f64> {
        match self {
            RatioValue::Defined(v) => Some(v),
            _ => None,
        }
    }
}

impl std::fmt::Display for RatioValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RatioValue::Defined(v) => write!(f, "{v:.5}"),
            RatioValue::Undefined => f.write_str("-----"),
            RatioValue::Unbounded => f.write_str("inf"),
        }
    }
}

/// Arithmetic mean of the series.
pub fn mean_return(s: &[f64]) -> f64 {
    assert!(!s.is_empty(), "mean_return needs at least one observation");
    s.iter().sum::<f64>() / s.len() as f64
}

/// Root mean square of the negative part: `sqrt(sum min(r,0)^2 / M)`.
pub fn downside_deviation(s: &[f64]) -> f64 {
    assert!(!s.is_empty(), "downside_deviation needs at least one observation");
    let ss: f64 = s.iter().map(|&r| r.min(0.0).powi(2)).sum();
    (ss / s.len() as f64).sqrt()
}

/// Tail count `k = floor(M(1-alpha)) + 1`, clamped into `[1, M]`.
fn tail_count(m: usize, alpha: f64) -> usize {
    let raw = (m as f64) * (1.0 - alpha);
    // The epsilon guards floor against 2.9999999 artifacts of 1-alpha.
    let k = (raw + 1e-9).floor() as usize + 1;
    k.clamp(1, m)
}

fn cvar_divisor(m: usize, alpha: f64, k: usize, mode: DivisorMode) -> f64 {
    match mode {
        DivisorMode::Paper => (m as f64) * (1.0 - alpha),
        DivisorMode::TailMean => k as f64,
    }
}

/// Value-at-risk and conditional value-at-risk at confidence `alpha`,
/// reported positive-for-loss.
pub fn var_cvar(s: &[f64], alpha: f64, mode: DivisorMode) -> (f64, f64) {
    assert!(!s.is_empty(), "var_cvar needs at least one observation");
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let m = s.len();
    let mut sorted = s.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = tail_count(m, alpha);
    let var = -sorted[k - 1];
    let tail_sum: f64 = sorted[..k].iter().sum();
    let cvar = -(tail_sum / cvar_divisor(m, alpha, k, mode));
    (var, cvar)
}

fn excess_mean(s: &[f64], rf: f64) -> f64 {
    mean_return(s) - rf
}

/// Excess mean over the sample standard deviation.
pub fn sharpe(s: &[f64], rf: f64) -> RatioValue {
    if s.len() < 2 {
        return RatioValue::Undefined;
    }
    let excess = excess_mean(s, rf);
    if excess <= 0.0 {
        return RatioValue::Undefined;
    }
    let mean = mean_return(s);
    let var: f64 = s.iter().map(|&r| (r - mean).powi(2)).sum::<f64>() / (s.len() - 1) as f64;
    let sd = var.sqrt();
    if sd == 0.0 {
        RatioValue::Unbounded
    } else {
        RatioValue::Defined(excess / sd)
    }
}

/// Excess mean over the downside deviation.
pub fn sortino(s: &[f64], rf: f64) -> RatioValue {
    let excess = excess_mean(s, rf);
    if excess <= 0.0 {
        return RatioValue::Undefined;
    }
    let dd = downside_deviation(s);
    if dd == 0.0 {
        RatioValue::Unbounded
    } else {
        RatioValue::Defined(excess / dd)
    }
}

/// Excess mean over CVaR.
pub fn starr(s: &[f64], rf: f64, alpha: f64, mode: DivisorMode) -> RatioValue {
    let excess = excess_mean(s, rf);
    if excess <= 0.0 {
        return RatioValue::Undefined;
    }
    let (_, cvar) = var_cvar(s, alpha, mode);
    if cvar == 0.0 {
        RatioValue::Unbounded
    } else {
        RatioValue::Defined(excess / cvar)
    }
}

/// Best-tail mean over the magnitude of the worst-tail mean.
pub fn rachev(s: &[f64], alpha: f64, mode: DivisorMode) -> Result<f64> {
    assert!(!s.is_empty(), "rachev needs at least one observation");
    let m = s.len();
    let mut sorted = s.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = tail_count(m, alpha);
    let divisor = cvar_divisor(m, alpha, k, mode);
    let worst: f64 = sorted[..k].iter().sum::<f64>() / divisor;
    let best: f64 = sorted[m - k..].iter().sum::<f64>() / divisor;
    if worst == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(best / worst.abs())
}

/// Metric computation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricOptions {
    pub risk_free: f64,
    pub divisor: DivisorMode,
    /// The two confidence levels reported side by side.
    pub levels: (f64, f64),
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions { risk_free: 0.0, divisor: DivisorMode::Paper, levels: (0.95, 0.97) }
    }
}

/// The full measure suite for one return series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRow {
    pub mean_return: f64,
    pub sharpe: RatioValue,
    pub sortino: RatioValue,
    pub dd: f64,
    pub var95: f64,
    pub var97: f64,
    pub cvar95: f64,
    pub cvar97: f64,
    pub rachev95: RatioValue,
    pub rachev97: RatioValue,
    pub starr95: RatioValue,
    pub starr97: RatioValue,
}

impl MetricsRow {
    pub fn compute(series: &[f64], opts: &MetricOptions) -> Result<MetricsRow> {
        if series.is_empty() {
            return Err(Error::DataTooShort { needed: 1, got: 0 });
        }
        let (a1, a2) = opts.levels;
        let (var95, cvar95) = var_cvar(series, a1, opts.divisor);
        let (var97, cvar97) = var_cvar(series, a2, opts.divisor);
        let rachev_value = |alpha: f64| match rachev(series, alpha, opts.divisor) {
            Ok(v) => RatioValue::Defined(v),
            Err(_) => RatioValue::Undefined,
        };
        Ok(MetricsRow {
            mean_return: mean_return(series),
            sharpe: sharpe(series, opts.risk_free),
            sortino: sortino(series, opts.risk_free),
            dd: downside_deviation(series),
            var95,
            var97,
            cvar95,
            cvar97,
            rachev95: rachev_value(a1),
            rachev97: rachev_value(a2),
            starr95: starr(series, opts.risk_free, a1, opts.divisor),
            starr97: starr(series, opts.risk_free, a2, opts.divisor),
        })
    }

    /// Measure labels in table order, with the configured levels spelled out.
    pub fn labels(opts: &MetricOptions) -> Vec<String> {
        let (a1, a2) = opts.levels;
        vec![
            "Mean Return".into(),
            "Sharpe Ratio".into(),
            "Sortino Ratio".into(),
            "DD".into(),
            format!("VaR_{a1}"),
            format!("VaR_{a2}"),
            format!("CVaR_{a1}"),
            format!("CVaR_{a2}"),
            format!("Rachev_{a1}"),
            format!("Rachev_{a2}"),
            format!("STARR_{a1}"),
            format!("STARR_{a2}"),
        ]
    }

    /// Rendered values in the same order as [`MetricsRow::labels`].
    pub fn rendered(&self) -> Vec<String> {
        fn num(v: f64) -> String {
            format!("{v:.5}")
        }
        vec![
            num(self.mean_return),
            self.sharpe.to_string(),
            self.sortino.to_string(),
            num(self.dd),
            num(self.var95),
            num(self.var97),
            num(self.cvar95),
            num(self.cvar97),
            self.rachev95.to_string(),
            self.rachev97.to_string(),
            self.starr95.to_string(),
            self.starr97.to_string(),
        ]
    }
}
