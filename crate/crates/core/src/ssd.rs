//! Second-order stochastic dominance constrained portfolio models.
//!
//! The dominance constraint family `E(eta - R_z)^+ <= E(eta - Y)^+` at every
//! benchmark realization `eta = y_k` is encoded exactly as a linear block
//! with `T^2` shortfall auxiliaries. Solves route through one of two
//! equivalent paths: the full block handed to the simplex (small `T`), or
//! delayed cut generation on a master problem in the weights alone (large
//! `T`), which terminates finitely because each round adds a violated
//! aggregated-shortfall cut from a finite family. Either way the returned
//! portfolio satisfies every tail constraint to `cut_tol`.

use std::collections::HashSet;

use crate::data::ScenarioSet;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::lp::{solve_lp, LinearProgram, SimplexOptions};
use crate::pca::WeightedRatio;
use crate::portfolio::{ModelKind, ModelPortfolio, SUPPORT_EPS};

/// The exact LP encoding of the dominance constraints for one benchmark.
#[derive(Debug, Clone)]
pub struct SsdConstraintBlock {
    /// Tail targets `v_k = E(y_k - Y)^+`.
    pub tail_targets: Vec<f64>,
    pub benchmark: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl SsdConstraintBlock {
    pub fn num_scenarios(&self) -> usize {
        self.benchmark.len()
    }

    /// Auxiliary shortfall variables the block adds to an LP.
    pub fn num_aux_vars(&self) -> usize {
        let t = self.num_scenarios();
        t * t
    }

    /// Constraint rows the block adds to an LP.
    pub fn num_rows(&self) -> usize {
        let t = self.num_scenarios();
        t * t + t
    }

    /// Append shortfall variables `s_{t,k}` and the tail rows to `lp`, whose
    /// first `N` variables are the portfolio weights.
    ///
    /// Per (t, k): `s_{t,k} >= y_k - sum_j r_jt z_j`, and per k:
    /// `sum_t p_t s_{t,k} <= v_k`.
    pub fn append_to(&self, lp: &mut LinearProgram, returns: &Matrix) -> Result<()> {
        let t_count = self.num_scenarios();
        if returns.rows() != t_count {
            return Err(Error::LengthMismatch { expected: t_count, got: returns.rows() });
        }
        let n = returns.cols();
        if lp.num_vars() < n {
            return Err(Error::LengthMismatch { expected: n, got: lp.num_vars() });
        }
        let base = lp.num_vars();
        lp.objective.extend(std::iter::repeat(0.0).take(t_count * t_count));
        lp.bounds.extend(std::iter::repeat((0.0, f64::INFINITY)).take(t_count * t_count));
        for k in 0..t_count {
            let y_k = self.benchmark[k];
            for t in 0..t_count {
                let aux = base + k * t_count + t;
                let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(n + 1);
                for j in 0..n {
                    let r = returns[(t, j)];
                    if r != 0.0 {
                        coeffs.push((j, -r));
                    }
                }
                coeffs.push((aux, -1.0));
                lp.add_le(coeffs, -y_k);
            }
            let coeffs: Vec<(usize, f64)> =
                (0..t_count).map(|t| (base + k * t_count + t, self.probabilities[t])).collect();
            lp.add_le(coeffs, self.tail_targets[k]);
        }
        Ok(())
    }
}

/// Tail targets `v_k = sum_t p_t max(y_k - y_t, 0)` from the benchmark's own
/// realizations.
pub fn build_ssd_block(scen: &ScenarioSet, benchmark: &[f64]) -> Result<SsdConstraintBlock> {
    let t_count = scen.num_scenarios();
    if benchmark.len() != t_count {
        return Err(Error::LengthMismatch { expected: t_count, got: benchmark.len() });
    }
    let tail_targets = (0..t_count)
        .map(|k| {
            benchmark
                .iter()
                .zip(&scen.probabilities)
                .map(|(&y_t, &p)| p * (benchmark[k] - y_t).max(0.0))
                .sum()
        })
        .collect();
    Ok(SsdConstraintBlock {
        tail_targets,
        benchmark: benchmark.to_vec(),
        probabilities: scen.probabilities.clone(),
    })
}

/// Expected shortfall gap per tail level: `E(y_k - R_z)^+ - v_k`.
pub fn shortfall_gaps(weights: &[f64], scen: &ScenarioSet, block: &SsdConstraintBlock) -> Vec<f64> {
    let rz = scen.portfolio_returns(weights);
    block
        .benchmark
        .iter()
        .enumerate()
        .map(|(k, &y_k)| {
            let lpm: f64 = rz
                .iter()
                .zip(&scen.probabilities)
                .map(|(&r, &p)| p * (y_k - r).max(0.0))
                .sum();
            lpm - block.tail_targets[k]
        })
        .collect()
}

/// Result of a brute-force dominance audit.
#[derive(Debug, Clone, Copy)]
pub struct DominanceCheck {
    pub dominates: bool,
    pub worst_gap: f64,
}

/// Evaluate the dominance constraints at every benchmark realization.
pub fn verify_ssd_dominance(weights: &[f64], scen: &ScenarioSet) -> Result<DominanceCheck> {
    let block = build_ssd_block(scen, &scen.benchmark)?;
    let worst = shortfall_gaps(weights, scen, &block)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DominanceCheck { dominates: worst <= 1e-7, worst_gap: worst })
}

/// How the dominance block reaches the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SsdStrategy {
    /// Full `T^2` block below the scenario threshold, cuts above it.
    Auto,
    FullBlock,
    CutGeneration,
}

/// Options shared by every SSD-constrained solve.
#[derive(Debug, Clone)]
pub struct SsdOptions {
    /// Per-asset weight cap.
    pub bound: f64,
    pub strategy: SsdStrategy,
    /// Scenario count at or below which `Auto` uses the full block.
    pub full_block_threshold: usize,
    /// Violation tolerance for generated cuts (also the exactness guarantee
    /// of the returned portfolio).
    pub cut_tol: f64,
    pub max_cut_rounds: usize,
    /// Cross-sectionally standardize ratio coefficients before weighting.
    pub zscore_ratios: bool,
    pub simplex: SimplexOptions,
}

impl Default for SsdOptions {
    fn default() -> Self {
        SsdOptions {
            bound: 0.3,
            strategy: SsdStrategy::Auto,
            full_block_threshold: 16,
            cut_tol: 1e-9,
            max_cut_rounds: 500,
            zscore_ratios: true,
            simplex: SimplexOptions::default(),
        }
    }
}

/// Maximize `c'z` over the admissible set intersected with the dominance
/// block for `benchmark`. Returns weights and attained objective.
pub fn solve_ssd_linear(
    objective: &[f64],
    scen: &ScenarioSet,
    benchmark: &[f64],
    opts: &SsdOptions,
) -> Result<(Vec<f64>, f64)> {
    let n = scen.num_assets();
    if objective.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: objective.len() });
    }
    let t_count = scen.num_scenarios();
    if (n as f64) * opts.bound < 1.0 - 1e-12 {
        return Err(Error::Infeasible(Some(format!(
            "{n} assets cannot reach the unit budget under a {} cap",
            opts.bound
        ))));
    }
    let block = build_ssd_block(scen, benchmark)?;
    let full = match opts.strategy {
        SsdStrategy::FullBlock => true,
        SsdStrategy::CutGeneration => false,
        SsdStrategy::Auto => t_count <= opts.full_block_threshold,
    };
    if full {
        solve_full_block(objective, scen, &block, opts)
    } else {
        solve_by_cuts(objective, scen, &block, opts)
    }
}

fn base_master(objective: &[f64], n: usize, bound: f64) -> LinearProgram {
    let mut lp = LinearProgram::new(n);
    lp.objective = objective.to_vec();
    for b in lp.bounds.iter_mut() {
        *b = (0.0, bound);
    }
    lp.add_eq((0..n).map(|j| (j, 1.0)).collect(), 1.0);
    lp
}

fn solve_full_block(
    objective: &[f64],
    scen: &ScenarioSet,
    block: &SsdConstraintBlock,
    opts: &SsdOptions,
) -> Result<(Vec<f64>, f64)> {
    let n = scen.num_assets();
    let mut lp = base_master(objective, n, opts.bound);
    block.append_to(&mut lp, &scen.returns)?;
    let res = solve_lp(&lp, &opts.simplex)?.into_optimal()?;
    let weights = res.x[..n].to_vec();
    let objective: f64 = objective.iter().zip(&weights).map(|(c, w)| c * w).sum();
    Ok((weights, objective))
}

fn solve_by_cuts(
    objective: &[f64],
    scen: &ScenarioSet,
    block: &SsdConstraintBlock,
    opts: &SsdOptions,
) -> Result<(Vec<f64>, f64)> {
    let n = scen.num_assets();
    let t_count = scen.num_scenarios();
    let mut master = base_master(objective, n, opts.bound);
    let mut seen: HashSet<(usize, Vec<usize>)> = HashSet::new();
    let mut warm: Option<Vec<f64>> = None;

    for _round in 0..opts.max_cut_rounds {
        let simplex = SimplexOptions { warm_start: warm.take(), ..opts.simplex.clone() };
        let res = solve_lp(&master, &simplex)?.into_optimal()?;
        let weights = res.x[..n].to_vec();
        let rz = scen.portfolio_returns(&weights);

        let mut added = 0;
        for k in 0..t_count {
            let y_k = block.benchmark[k];
            let mut shortfall = 0.0;
            let mut active: Vec<usize> = Vec::new();
            for t in 0..t_count {
                let gap = y_k - rz[t];
                if gap > 0.0 {
                    shortfall += scen.probabilities[t] * gap;
                    active.push(t);
                }
            }
            if shortfall - block.tail_targets[k] <= opts.cut_tol {
                continue;
            }
            let key = (k, active.clone());
            if !seen.insert(key) {
                continue;
            }
            // Valid cut: sum_{t in S} p_t (y_k - R_zt) <= v_k, linear in z.
            let p_mass: f64 = active.iter().map(|&t| scen.probabilities[t]).sum();
            let mut coeffs = vec![0.0; n];
            for &t in &active {
                let p = scen.probabilities[t];
                for j in 0..n {
                    coeffs[j] -= p * scen.returns[(t, j)];
                }
            }
            master.add_le(
                coeffs.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| (j, v)).collect(),
                block.tail_targets[k] - p_mass * y_k,
            );
            added += 1;
        }
        if added == 0 {
            let objective: f64 = objective.iter().zip(&weights).map(|(c, w)| c * w).sum();
            return Ok((weights, objective));
        }
        warm = Some(weights);
    }
    Err(Error::IterationLimit(opts.max_cut_rounds))
}

/// Maximize expected return subject to dominance over the market benchmark.
pub fn solve_nominal_ssd(scen: &ScenarioSet, opts: &SsdOptions) -> Result<ModelPortfolio> {
    let mu = scen.mean_returns();
    let (weights, objective) = solve_ssd_linear(&mu, scen, &scen.benchmark.clone(), opts)?;
    Ok(ModelPortfolio::new(ModelKind::Ssd, weights, objective))
}

/// Cross-sectional z-score of one snapshot column; constant columns map to
/// zeros so they drop out of the objective.
fn zscore(column: &[f64]) -> Vec<f64> {
    let n = column.len();
    let mean: f64 = column.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return vec![0.0; n];
    }
    let var: f64 = column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd <= 1e-300 {
        return vec![0.0; n];
    }
    column.iter().map(|v| (v - mean) / sd).collect()
}

/// Signed, weighted ratio score per asset from an `N x 11` snapshot.
pub fn ratio_objective(snapshot: &Matrix, ratios: &[WeightedRatio], zscore_cols: bool) -> Vec<f64> {
    let n = snapshot.rows();
    let mut score = vec![0.0; n];
    for wr in ratios {
        let col = snapshot.column(wr.ratio.index());
        let col = if zscore_cols { zscore(&col) } else { col };
        for j in 0..n {
            score[j] += wr.sign * wr.weight * col[j];
        }
    }
    score
}

/// Blend of the ratio score and expected return under dominance constraints.
pub fn solve_fssd(
    scen: &ScenarioSet,
    snapshot: &Matrix,
    ratios: &[WeightedRatio],
    alpha: f64,
    opts: &SsdOptions,
) -> Result<ModelPortfolio> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside [0, 1]")));
    }
    let n = scen.num_assets();
    if snapshot.rows() != n {
        return Err(Error::LengthMismatch { expected: n, got: snapshot.rows() });
    }
    let weight_sum: f64 = ratios.iter().map(|r| r.weight).sum();
    if weight_sum > 1.0 + 1e-9 || ratios.iter().any(|r| r.weight < 0.0) {
        return Err(Error::InvalidInput(format!("ratio weights must be nonnegative with sum <= 1, got sum {weight_sum}")));
    }
    let mu = scen.mean_returns();
    let fr = ratio_objective(snapshot, ratios, opts.zscore_ratios);
    let c: Vec<f64> = (0..n).map(|j| alpha * fr[j] + (1.0 - alpha) * mu[j]).collect();
    let (weights, objective) = solve_ssd_linear(&c, scen, &scen.benchmark.clone(), opts)?;
    Ok(ModelPortfolio::new(ModelKind::Fssd, weights, objective))
}

/// One sector's step-1 result.
#[derive(Debug, Clone)]
pub struct SectorStep1 {
    pub sector: String,
    /// Global asset indices of the sector members.
    pub asset_indices: Vec<usize>,
    /// Optimal sector weights, aligned with `asset_indices`.
    pub weights: Vec<f64>,
    /// Cap actually applied (raised above the configured bound only for
    /// undersized sectors).
    pub applied_bound: f64,
}

impl SectorStep1 {
    /// Global indices of assets the sector solve actually funded.
    pub fn support(&self) -> Vec<usize> {
        self.asset_indices
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > SUPPORT_EPS)
            .map(|(&i, _)| i)
            .collect()
    }
}

/// Step 1: maximize the signed weighted ratio score for one sector subject
/// to dominance over the sector benchmark.
///
/// `scen` must already be restricted to the sector (its `benchmark` is the
/// sector benchmark); `snapshot` is `n_r x 11` over the same members.
/// Sectors too small for the cap get it raised to `1/n_r` with a warning.
pub fn solve_spo_step1(
    sector: &str,
    scen: &ScenarioSet,
    asset_indices: &[usize],
    snapshot: &Matrix,
    ratios: &[WeightedRatio],
    opts: &SsdOptions,
) -> Result<SectorStep1> {
    let n_r = scen.num_assets();
    if n_r == 0 {
        return Err(Error::SectorTooSmall { sector: sector.to_string(), size: 0, needed: 1 });
    }
    if asset_indices.len() != n_r || snapshot.rows() != n_r {
        return Err(Error::LengthMismatch { expected: n_r, got: snapshot.rows() });
    }
    if ratios.iter().any(|r| r.weight < 0.0) {
        return Err(Error::InvalidInput("step-1 objective weights must be nonnegative".into()));
    }
    let mut opts = opts.clone();
    let needed = (1.0 / opts.bound).ceil() as usize;
    if n_r < needed {
        let raised = (1.0 / n_r as f64).min(1.0);
        log::warn!(
            "sector '{sector}' has {n_r} assets, under the {} needed at cap {}; raising cap to {raised:.4}",
            needed,
            opts.bound
        );
        opts.bound = raised;
    }
    let c = ratio_objective(snapshot, ratios, opts.zscore_ratios);
    let (weights, _) = solve_ssd_linear(&c, scen, &scen.benchmark.clone(), &opts)?;
    Ok(SectorStep1 {
        sector: sector.to_string(),
        asset_indices: asset_indices.to_vec(),
        weights,
        applied_bound: opts.bound,
    })
}

/// Step 2: pool the step-1 supports and maximize mean return plus the step-1
/// weight bonus subject to dominance over the market benchmark.
pub fn solve_spo_step2(
    kind: ModelKind,
    scen: &ScenarioSet,
    step1: &[SectorStep1],
    opts: &SsdOptions,
) -> Result<ModelPortfolio> {
    let n = scen.num_assets();
    let mut zstar = vec![None::<f64>; n];
    for s in step1 {
        for (&global, &w) in s.asset_indices.iter().zip(&s.weights) {
            if w > SUPPORT_EPS {
                zstar[global] = Some(w);
            }
        }
    }
    let support: Vec<usize> = (0..n).filter(|&j| zstar[j].is_some()).collect();
    let needed = (1.0 / opts.bound).ceil() as usize;
    if support.len() < needed {
        return Err(Error::SupportTooSmall { size: support.len(), needed });
    }

    let restricted = scen.restrict(&support, scen.benchmark.clone())?;
    let mu = restricted.mean_returns();
    // Mean return plus the step-1 weight, exactly as specified; the bonus
    // rewards assets their own sector already favored.
    let c: Vec<f64> = support
        .iter()
        .enumerate()
        .map(|(local, &global)| mu[local] + zstar[global].unwrap())
        .collect();
    let (local_weights, objective) = solve_ssd_linear(&c, &restricted, &restricted.benchmark.clone(), opts)?;
    let mut weights = vec![0.0; n];
    for (local, &global) in support.iter().enumerate() {
        weights[global] = local_weights[local];
    }
    Ok(ModelPortfolio::new(kind, weights, objective))
}
