//! Principal component analysis over ratio observation matrices and the two
//! dominant-ratio extraction rules.
//!
//! Rule A walks the retained components and takes the ratio with the largest
//! absolute loading per component (at most two per category). Rule B takes
//! the highest-communality ratio from each of the four categories. Ties
//! resolve to the earlier ratio in canonical order.

use chrono::NaiveDate;

use crate::data::RatioPanel;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::ratios::{Category, RatioId, CANONICAL_RATIOS, RATIO_COUNT};

/// Column scaling applied before the covariance step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ScalingMode {
    /// Mean-center only.
    Covariance,
    /// Mean-center and divide by the sample standard deviation.
    Correlation,
}

/// Stacked (asset x quarter) observations of the 11 ratios for one group.
#[derive(Debug, Clone)]
pub struct RatioObservationMatrix {
    pub group: String,
    /// `m x 11`, canonical ratio column order, no missing entries.
    pub data: Matrix,
}

impl RatioObservationMatrix {
    /// Stack the panel rows of the given assets over quarters in
    /// `[span_start, span_end]` (inclusive; `None` means unbounded).
    pub fn from_panel(
        panel: &RatioPanel,
        asset_indices: &[usize],
        span: (Option<NaiveDate>, Option<NaiveDate>),
        group: impl Into<String>,
    ) -> Result<Self> {
        let quarters: Vec<usize> = (0..panel.quarters.len())
            .filter(|&q| {
                let d = panel.quarters[q];
                span.0.map_or(true, |s| d >= s) && span.1.map_or(true, |e| d <= e)
            })
            .collect();
        if quarters.is_empty() {
            return Err(Error::InvalidInput("no ratio quarters in the requested span".into()));
        }
        let m = asset_indices.len() * quarters.len();
        let mut data = Matrix::zeros(m, RATIO_COUNT);
        let mut row = 0;
        for &a in asset_indices {
            for &q in &quarters {
                for (c, &ratio) in CANONICAL_RATIOS.iter().enumerate() {
                    let v = panel.value(q, a, ratio).ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "missing {ratio} for '{}' in quarter {}",
                            panel.assets[a], panel.quarters[q]
                        ))
                    })?;
                    data[(row, c)] = v;
                }
                row += 1;
            }
        }
        Ok(RatioObservationMatrix { group: group.into(), data })
    }
}

/// Eigen solution of one group's ratio covariance/correlation matrix.
#[derive(Debug, Clone)]
pub struct PcaSolution {
    /// All eigenvalues, descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Number of retained components.
    pub retained: usize,
    /// `11 x retained` component loadings (sqrt(eigenvalue) * eigenvector).
    pub loadings: Matrix,
    /// Variance of each ratio explained by the retained solution.
    pub communalities: Vec<f64>,
    /// Cumulative variance fraction after each component (full length).
    pub cumulative_variance: Vec<f64>,
    pub scaling: ScalingMode,
    /// Sum of all eigenvalues (trace of the scaled covariance).
    pub total_variance: f64,
}

impl PcaSolution {
    /// Variance fraction covered by the retained components.
    pub fn covered_fraction(&self) -> f64 {
        if self.retained == 0 {
            0.0
        } else {
            self.cumulative_variance[self.retained - 1]
        }
    }

    /// Rebuild a solution from a published loadings matrix (`11 x k`).
    ///
    /// Component variances come back as column sums of squared loadings; the
    /// total variance defaults to 11, the trace of a correlation matrix.
    pub fn from_loadings(loadings: Matrix, total_variance: Option<f64>) -> Result<PcaSolution> {
        if loadings.rows() != RATIO_COUNT {
            return Err(Error::LengthMismatch { expected: RATIO_COUNT, got: loadings.rows() });
        }
        let k = loadings.cols();
        if k == 0 {
            return Err(Error::InvalidInput("loadings matrix has no components".into()));
        }
        let total = total_variance.unwrap_or(RATIO_COUNT as f64);
        let eigenvalues: Vec<f64> =
            (0..k).map(|c| (0..RATIO_COUNT).map(|i| loadings[(i, c)].powi(2)).sum()).collect();
        let communalities: Vec<f64> = (0..RATIO_COUNT)
            .map(|i| (0..k).map(|c| loadings[(i, c)].powi(2)).sum())
            .collect();
        let mut cumulative_variance = Vec::with_capacity(k);
        let mut acc = 0.0;
        for &v in &eigenvalues {
            acc += v;
            cumulative_variance.push(acc / total);
        }
        Ok(PcaSolution {
            eigenvalues,
            retained: k,
            loadings,
            communalities,
            cumulative_variance,
            scaling: ScalingMode::Correlation,
            total_variance: total,
        })
    }
}

/// Mean-center columns; in correlation mode also divide by the sample
/// standard deviation.
pub fn center_scale(x: &Matrix, mode: ScalingMode) -> Result<Matrix> {
    let m = x.rows();
    let k = x.cols();
    if m < 2 {
        return Err(Error::DataTooShort { needed: 2, got: m });
    }
    let mut out = x.clone();
    for j in 0..k {
        let mean: f64 = (0..m).map(|i| x[(i, j)]).sum::<f64>() / m as f64;
        for i in 0..m {
            out[(i, j)] -= mean;
        }
        if mode == ScalingMode::Correlation {
            let ss: f64 = (0..m).map(|i| out[(i, j)].powi(2)).sum();
            let sd = (ss / (m - 1) as f64).sqrt();
            if sd <= 0.0 {
                return Err(Error::DegenerateColumn(j));
            }
            for i in 0..m {
                out[(i, j)] /= sd;
            }
        }
    }
    Ok(out)
}

/// Run PCA on an observation matrix.
///
/// Components are retained up to the first one whose cumulative variance
/// reaches `variance_target`, capped at `component_cap`; when even the cap
/// misses the target the cap is kept and the achieved fraction recorded in
/// the solution.
pub fn pca(
    x: &RatioObservationMatrix,
    mode: ScalingMode,
    variance_target: f64,
    component_cap: usize,
) -> Result<PcaSolution> {
    let m = x.data.rows();
    let k = x.data.cols();
    if m <= k {
        return Err(Error::DataTooShort { needed: k + 1, got: m });
    }
    let scaled = center_scale(&x.data, mode)?;
    let mut cov = Matrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let mut s = 0.0;
            for r in 0..m {
                s += scaled[(r, i)] * scaled[(r, j)];
            }
            let v = s / (m - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let eig = symmetric_eigen(&cov)?;
    let eigenvalues: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateColumn(0));
    }

    // Deterministic eigenvector orientation: largest-magnitude entry positive.
    let mut vectors = eig.vectors;
    for c in 0..k {
        let mut best = 0usize;
        for i in 1..k {
            if vectors[(i, c)].abs() > vectors[(best, c)].abs() {
                best = i;
            }
        }
        if vectors[(best, c)] < 0.0 {
            for i in 0..k {
                vectors[(i, c)] = -vectors[(i, c)];
            }
        }
    }

    let mut cumulative_variance = Vec::with_capacity(k);
    let mut acc = 0.0;
    for &v in &eigenvalues {
        acc += v;
        cumulative_variance.push(acc / total);
    }
    let needed = cumulative_variance
        .iter()
        .position(|&cv| cv >= variance_target)
        .map(|p| p + 1)
        .unwrap_or(k);
    let retained = needed.min(component_cap.max(1)).min(k);
    if cumulative_variance[retained - 1] < variance_target {
        log::debug!(
            "group '{}': {} components reach only {:.2}% of variance (target {:.0}%)",
            x.group,
            retained,
            100.0 * cumulative_variance[retained - 1],
            100.0 * variance_target
        );
    }
    if eigenvalues[..retained].iter().any(|&v| v < 1e-12) {
        log::warn!("group '{}': retained component with near-zero variance (rank deficient)", x.group);
    }

    let mut loadings = Matrix::zeros(k, retained);
    for c in 0..retained {
        let scale = eigenvalues[c].sqrt();
        for i in 0..k {
            loadings[(i, c)] = scale * vectors[(i, c)];
        }
    }
    let communalities: Vec<f64> =
        (0..k).map(|i| (0..retained).map(|c| loadings[(i, c)].powi(2)).sum()).collect();

    Ok(PcaSolution {
        eigenvalues,
        retained,
        loadings,
        communalities,
        cumulative_variance,
        scaling: mode,
        total_variance: total,
    })
}

/// Extraction rule tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ExtractionRule {
    A,
    B,
}

/// Where a selected ratio came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionSource {
    /// Component index (0-based) for rule A.
    Component(usize),
    /// Category slot for rule B.
    Category(Category),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedRatio {
    pub ratio: RatioId,
    pub category: Category,
    pub source: SelectionSource,
}

/// Ratios selected by one extraction rule for one group.
#[derive(Debug, Clone)]
pub struct ExtractionResult {
    pub rule: ExtractionRule,
    pub selected: Vec<SelectedRatio>,
    pub cumulative_variance_covered: f64,
}

impl ExtractionResult {
    pub fn ratio_ids(&self) -> Vec<RatioId> {
        self.selected.iter().map(|s| s.ratio).collect()
    }
}

/// Rule A: per retained component, the not-yet-selected ratio with the
/// largest absolute loading whose category holds fewer than two selections.
pub fn extract_a(sol: &PcaSolution) -> ExtractionResult {
    let mut taken = [false; RATIO_COUNT];
    let mut per_category = std::collections::BTreeMap::new();
    let mut selected = Vec::new();
    let picks = sol.retained.min(4);
    for c in 0..picks {
        let mut best: Option<usize> = None;
        for i in 0..RATIO_COUNT {
            if taken[i] {
                continue;
            }
            let cat = CANONICAL_RATIOS[i].category();
            if *per_category.get(cat.label()).unwrap_or(&0) >= 2 {
                continue;
            }
            // Strict comparison keeps the earlier canonical ratio on ties.
            if best.map_or(true, |b| sol.loadings[(i, c)].abs() > sol.loadings[(b, c)].abs()) {
                best = Some(i);
            }
        }
        let i = best.expect("11 ratios over 4 categories cannot exhaust");
        taken[i] = true;
        let ratio = CANONICAL_RATIOS[i];
        *per_category.entry(ratio.category().label()).or_insert(0) += 1;
        selected.push(SelectedRatio {
            ratio,
            category: ratio.category(),
            source: SelectionSource::Component(c),
        });
    }
    ExtractionResult {
        rule: ExtractionRule::A,
        selected,
        cumulative_variance_covered: sol.covered_fraction(),
    }
}

/// Rule B: the maximum-communality ratio from each category.
pub fn extract_b(sol: &PcaSolution) -> ExtractionResult {
    let mut selected = Vec::new();
    for cat in Category::ALL {
        let mut best: Option<usize> = None;
        for i in 0..RATIO_COUNT {
            if CANONICAL_RATIOS[i].category() != cat {
                continue;
            }
            if best.map_or(true, |b| sol.communalities[i] > sol.communalities[b]) {
                best = Some(i);
            }
        }
        let i = best.expect("every category has members");
        selected.push(SelectedRatio {
            ratio: CANONICAL_RATIOS[i],
            category: cat,
            source: SelectionSource::Category(cat),
        });
    }
    ExtractionResult {
        rule: ExtractionRule::B,
        selected,
        cumulative_variance_covered: sol.covered_fraction(),
    }
}

/// A ratio term of the blended objective: orientation sign times a
/// variance-proportion weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedRatio {
    pub ratio: RatioId,
    pub weight: f64,
    pub sign: f64,
}

/// Rule-A extraction on the all-assets solution with component variance
/// proportions as weights and orientation signs.
pub fn fssd_ratio_weights(sol: &PcaSolution) -> Result<Vec<WeightedRatio>> {
    if sol.retained == 0 {
        return Err(Error::InvalidInput("no retained components".into()));
    }
    let extraction = extract_a(sol);
    Ok(extraction
        .selected
        .iter()
        .map(|s| {
            let c = match s.source {
                SelectionSource::Component(c) => c,
                SelectionSource::Category(_) => unreachable!("rule A selects by component"),
            };
            WeightedRatio {
                ratio: s.ratio,
                weight: sol.eigenvalues[c] / sol.total_variance,
                sign: s.ratio.orientation().sign(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratios::Orientation;

    #[test]
    fn center_scale_examples() {
        let x = Matrix::from_rows(&[vec![1.0], vec![3.0]]);
        let c = center_scale(&x, ScalingMode::Covariance).unwrap();
        assert_eq!(c[(0, 0)], -1.0);
        assert_eq!(c[(1, 0)], 1.0);

        // Already centered data is unchanged in covariance mode.
        let again = center_scale(&c, ScalingMode::Covariance).unwrap();
        assert_eq!(again[(0, 0)], -1.0);
        assert_eq!(again[(1, 0)], 1.0);

        // [0, 2, 4] standardizes to [-1, 0, 1] (sample sd = 2).
        let x = Matrix::from_rows(&[vec![0.0], vec![2.0], vec![4.0]]);
        let c = center_scale(&x, ScalingMode::Correlation).unwrap();
        assert_eq!(c[(0, 0)], -1.0);
        assert_eq!(c[(1, 0)], 0.0);
        assert_eq!(c[(2, 0)], 1.0);
    }

    #[test]
    fn center_scale_rejects_constant_column_in_correlation_mode() {
        let x = Matrix::from_rows(&[vec![2.0], vec![2.0]]);
        assert!(matches!(
            center_scale(&x, ScalingMode::Correlation),
            Err(Error::DegenerateColumn(0))
        ));
    }

    fn random_observation(seed: u64, m: usize) -> RatioObservationMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..RATIO_COUNT).map(|j| rng.gen_range(-1.0..1.0) * (j as f64 + 1.0)).collect())
            .collect();
        RatioObservationMatrix { group: "test".into(), data: Matrix::from_rows(&rows) }
    }

    #[test]
    fn trace_identity_and_orthogonality() {
        let x = random_observation(3, 40);
        let sol = pca(&x, ScalingMode::Correlation, 0.80, 4).unwrap();
        let sum: f64 = sol.eigenvalues.iter().sum();
        // Correlation matrix trace is exactly 11.
        assert!((sum - 11.0).abs() / 11.0 < 1e-9);
        assert_eq!(sol.cumulative_variance.len(), RATIO_COUNT);
        assert!((sol.cumulative_variance[RATIO_COUNT - 1] - 1.0).abs() < 1e-10);
        for w in sol.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn identity_spectrum_from_loadings() {
        // An identity block on the first 4 ratios: unit component variances,
        // cumulative variance 4/11 after 4 components.
        let mut loadings = Matrix::zeros(RATIO_COUNT, 4);
        for c in 0..4 {
            loadings[(c, c)] = 1.0;
        }
        let sol = PcaSolution::from_loadings(loadings, None).unwrap();
        for &v in &sol.eigenvalues {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert!((sol.covered_fraction() - 4.0 / 11.0).abs() < 1e-15);

        // The identity block on the three liquidity ratios trips the
        // two-per-category cap at PC3; the zero-loading tie then resolves
        // canonically.
        let ex = extract_a(&sol);
        assert_eq!(ex.ratio_ids(), vec![RatioId::QR, RatioId::CR, RatioId::NPM, RatioId::ROA]);
    }

    #[test]
    fn identity_block_across_categories_selects_in_order() {
        // Unit loadings on QR, CR, NPM, ROA: two categories, cap untouched,
        // so rule A returns exactly those four in component order.
        let mut loadings = Matrix::zeros(RATIO_COUNT, 4);
        for (c, i) in [0usize, 1, 3, 4].into_iter().enumerate() {
            loadings[(i, c)] = 1.0;
        }
        let sol = PcaSolution::from_loadings(loadings, None).unwrap();
        let ex = extract_a(&sol);
        assert_eq!(ex.ratio_ids(), vec![RatioId::QR, RatioId::CR, RatioId::NPM, RatioId::ROA]);
    }

    #[test]
    fn extract_a_respects_category_cap() {
        // All components load hardest on liquidity ratios; only two may be taken.
        let mut loadings = Matrix::zeros(RATIO_COUNT, 4);
        for c in 0..4 {
            loadings[(0, c)] = 0.9; // QR
            loadings[(1, c)] = 0.8; // CR
            loadings[(2, c)] = 0.7; // CCL
            loadings[(3, c)] = 0.1 + 0.01 * c as f64; // NPM
            loadings[(7, c)] = 0.05; // DER
        }
        let sol = PcaSolution::from_loadings(loadings, None).unwrap();
        let ex = extract_a(&sol);
        let lr_count = ex.selected.iter().filter(|s| s.category == Category::LR).count();
        assert_eq!(lr_count, 2);
        assert_eq!(ex.selected.len(), 4);
        let ids = ex.ratio_ids();
        assert_eq!(ids[0], RatioId::QR);
        assert_eq!(ids[1], RatioId::CR);
    }

    #[test]
    fn extract_b_tie_breaks_canonically() {
        let loadings = {
            let mut l = Matrix::zeros(RATIO_COUNT, 2);
            for i in 0..RATIO_COUNT {
                l[(i, 0)] = 0.5; // equal communalities everywhere
            }
            l
        };
        let sol = PcaSolution::from_loadings(loadings, None).unwrap();
        let ex = extract_b(&sol);
        // First member of each category in canonical order.
        assert_eq!(
            ex.ratio_ids(),
            vec![RatioId::QR, RatioId::NPM, RatioId::DER, RatioId::PER]
        );
    }

    #[test]
    fn communality_monotone_in_retained_components() {
        let x = random_observation(9, 50);
        let sol3 = pca(&x, ScalingMode::Correlation, 1.01, 3).unwrap();
        let sol4 = pca(&x, ScalingMode::Correlation, 1.01, 4).unwrap();
        assert_eq!(sol3.retained, 3);
        assert_eq!(sol4.retained, 4);
        for i in 0..RATIO_COUNT {
            assert!(sol4.communalities[i] >= sol3.communalities[i] - 1e-12);
        }
    }

    #[test]
    fn retained_count_rules() {
        let x = random_observation(4, 60);
        // Cap 4 holds even when the target is unreachable.
        let sol = pca(&x, ScalingMode::Correlation, 0.999, 4).unwrap();
        assert_eq!(sol.retained, 4);
        assert!(sol.covered_fraction() < 0.999);
        // A tiny target stops at a single component.
        let sol = pca(&x, ScalingMode::Correlation, 0.01, 4).unwrap();
        assert_eq!(sol.retained, 1);
    }

    #[test]
    fn fssd_weights_sign_and_sum() {
        let x = random_observation(5, 80);
        let sol = pca(&x, ScalingMode::Correlation, 0.80, 4).unwrap();
        let weights = fssd_ratio_weights(&sol).unwrap();
        assert_eq!(weights.len(), sol.retained.min(4));
        let total: f64 = weights.iter().map(|w| w.weight).sum();
        assert!(total <= 1.0 + 1e-12);
        for w in &weights {
            assert!(w.weight > 0.0);
            let expect = match w.ratio.orientation() {
                Orientation::LargerPreferable => 1.0,
                Orientation::SmallerPreferable => -1.0,
            };
            assert_eq!(w.sign, expect);
        }
    }
}
