//! Markowitz baselines: minimum-variance and mean-variance portfolios over
//! the admissible set.

use crate::data::ScenarioSet;
use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigen, Matrix};
use crate::portfolio::{ModelKind, ModelPortfolio};
use crate::qp::{solve_qp, QpOptions, QuadraticProgram};

/// Sample moments of one in-sample window.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    /// `N x N` sample covariance, PSD after eigenvalue clamping.
    pub covariance: Matrix,
    pub mean_returns: Vec<f64>,
    /// Mean benchmark return, the floor used by the mean-variance model.
    pub benchmark_mean: f64,
}

impl CovarianceEstimate {
    /// Plain sample covariance (no shrinkage) of the scenario returns.
    ///
    /// Short windows over wide universes are rank deficient; negative
    /// eigenvalues from rounding are clamped at zero to keep the QP convex.
    pub fn from_scenarios(scen: &ScenarioSet) -> Result<CovarianceEstimate> {
        let t_count = scen.num_scenarios();
        let n = scen.num_assets();
        if t_count < 2 {
            return Err(Error::DataTooShort { needed: 2, got: t_count });
        }
        let means: Vec<f64> = (0..n)
            .map(|j| (0..t_count).map(|t| scen.returns[(t, j)]).sum::<f64>() / t_count as f64)
            .collect();
        let mut cov = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for t in 0..t_count {
                    s += (scen.returns[(t, i)] - means[i]) * (scen.returns[(t, j)] - means[j]);
                }
                let v = s / (t_count - 1) as f64;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        let eig = symmetric_eigen(&cov)?;
        if eig.values.iter().any(|&v| v < 0.0) {
            let mut vl = eig.vectors.clone();
            for c in 0..n {
                let v = eig.values[c].max(0.0);
                for r in 0..n {
                    vl[(r, c)] *= v;
                }
            }
            cov = vl.matmul(&eig.vectors.transpose());
            // Clamping can leave asymmetry at rounding level; symmetrize.
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                    cov[(i, j)] = v;
                    cov[(j, i)] = v;
                }
            }
        }
        let benchmark_mean = scen.benchmark.iter().sum::<f64>() / t_count as f64;
        Ok(CovarianceEstimate { covariance: cov, mean_returns: scen.mean_returns(), benchmark_mean })
    }

    fn qp(&self, bound: f64) -> QuadraticProgram {
        let n = self.covariance.rows();
        let mut qp = QuadraticProgram::new(self.covariance.clone());
        qp.bounds = vec![(0.0, bound); n];
        qp.add_eq((0..n).map(|j| (j, 1.0)).collect(), 1.0);
        qp
    }
}

/// Minimize portfolio variance over the admissible set.
pub fn solve_min_var(cov: &CovarianceEstimate, bound: f64, opts: &QpOptions) -> Result<ModelPortfolio> {
    let qp = cov.qp(bound);
    let res = solve_qp(&qp, opts)?.into_optimal()?;
    Ok(ModelPortfolio::new(ModelKind::MinVar, res.x, res.objective))
}

/// Minimum variance subject to a mean-return floor at the benchmark mean.
///
/// When the floor is slack at the unconstrained minimum the result is the
/// min-variance portfolio itself (same solve, bit for bit).
pub fn solve_mean_var(cov: &CovarianceEstimate, bound: f64, opts: &QpOptions) -> Result<ModelPortfolio> {
    let min_var = solve_min_var(cov, bound, opts)?;
    let attained = dot(&cov.mean_returns, &min_var.weights);
    if attained >= cov.benchmark_mean - 1e-12 {
        return Ok(ModelPortfolio { model: ModelKind::MeanVar, ..min_var });
    }
    // The floor will bind; check attainability before solving.
    let max_mean = greedy_max_mean(&cov.mean_returns, bound);
    if max_mean < cov.benchmark_mean - 1e-12 {
        return Err(Error::Infeasible(Some(format!(
            "benchmark mean {:.6} exceeds best attainable {:.6}",
            cov.benchmark_mean, max_mean
        ))));
    }
    let mut qp = cov.qp(bound);
    let n = cov.covariance.rows();
    // mu'z >= floor  <=>  -mu'z <= -floor
    qp.add_le((0..n).map(|j| (j, -cov.mean_returns[j])).collect(), -cov.benchmark_mean);
    let res = solve_qp(&qp, opts)?.into_optimal()?;
    Ok(ModelPortfolio::new(ModelKind::MeanVar, res.x, res.objective))
}

/// Best attainable mean under the cap: fill the highest means first.
fn greedy_max_mean(means: &[f64], bound: f64) -> f64 {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[b].partial_cmp(&means[a]).unwrap());
    let mut remaining = 1.0f64;
    let mut total = 0.0;
    for &j in &order {
        let take = remaining.min(bound);
        total += take * means[j];
        remaining -= take;
        if remaining <= 0.0 {
            break;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn scen_from_rows(rows: Vec<Vec<f64>>, bench: Vec<f64>) -> ScenarioSet {
        let t = rows.len();
        ScenarioSet {
            returns: Matrix::from_rows(&rows),
            probabilities: vec![1.0 / t as f64; t],
            benchmark: bench,
            sector_benchmarks: BTreeMap::new(),
        }
    }

    fn estimate_with_cov(cov: Matrix, means: Vec<f64>, bench_mean: f64) -> CovarianceEstimate {
        CovarianceEstimate { covariance: cov, mean_returns: means, benchmark_mean: bench_mean }
    }

    #[test]
    fn identity_covariance_equal_weights() {
        let est = estimate_with_cov(Matrix::identity(4), vec![0.01; 4], 0.0);
        let p = solve_min_var(&est, 0.3, &QpOptions::default()).unwrap();
        for w in &p.weights {
            assert!((w - 0.25).abs() < 1e-6);
        }
        p.validate(0.3).unwrap();
    }

    #[test]
    fn high_variance_asset_gets_residual() {
        let mut cov = Matrix::identity(4);
        cov[(3, 3)] = 100.0;
        let est = estimate_with_cov(cov, vec![0.01; 4], 0.0);
        let p = solve_min_var(&est, 0.3, &QpOptions::default()).unwrap();
        for j in 0..3 {
            assert!((p.weights[j] - 0.3).abs() < 1e-6);
        }
        assert!((p.weights[3] - 0.1).abs() < 1e-6);
    }

    #[test]
    fn mean_var_with_slack_floor_equals_min_var() {
        let est = estimate_with_cov(Matrix::identity(4), vec![0.02, 0.02, 0.02, 0.02], 0.01);
        let a = solve_min_var(&est, 0.3, &QpOptions::default()).unwrap();
        let b = solve_mean_var(&est, 0.3, &QpOptions::default()).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(b.model, ModelKind::MeanVar);
    }

    #[test]
    fn mean_var_unattainable_floor_is_infeasible() {
        let est = estimate_with_cov(Matrix::identity(4), vec![0.01, 0.005, 0.0, -0.01], 0.5);
        assert!(matches!(
            solve_mean_var(&est, 0.3, &QpOptions::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn mean_var_binding_floor_raises_variance() {
        // Asset 0 is the only one with a high mean; the floor forces weight
        // toward it, raising variance above the unconstrained minimum
        // (equal weights attain only 0.025 here).
        let est = estimate_with_cov(Matrix::identity(4), vec![0.10, 0.0, 0.0, 0.0], 0.035);
        let min_var = solve_min_var(&est, 0.4, &QpOptions::default()).unwrap();
        let mean_var = solve_mean_var(&est, 0.4, &QpOptions::default()).unwrap();
        let attained = dot(&est.mean_returns, &mean_var.weights);
        assert!(attained >= 0.035 - 1e-7);
        assert!(mean_var.objective >= min_var.objective - 1e-10);
        assert!(mean_var.objective > min_var.objective + 1e-6);
    }

    #[test]
    fn estimator_moments_and_psd() {
        let rows = vec![
            vec![0.01, -0.02, 0.03],
            vec![0.00, 0.01, -0.01],
            vec![0.02, 0.00, 0.02],
            vec![-0.01, 0.03, 0.00],
        ];
        let bench = vec![0.005, 0.0, 0.013, 0.007];
        let scen = scen_from_rows(rows, bench);
        let est = CovarianceEstimate::from_scenarios(&scen).unwrap();
        // Symmetric.
        for i in 0..3 {
            for j in 0..3 {
                assert!((est.covariance[(i, j)] - est.covariance[(j, i)]).abs() < 1e-12);
            }
        }
        // PSD.
        let eig = symmetric_eigen(&est.covariance).unwrap();
        assert!(eig.values.iter().all(|&v| v >= -1e-12));
        assert!((est.benchmark_mean - 0.00625).abs() < 1e-12);
    }

    #[test]
    fn scaling_covariance_preserves_argmin() {
        let mut cov = Matrix::identity(4);
        cov[(0, 0)] = 2.0;
        cov[(1, 1)] = 3.0;
        let est1 = estimate_with_cov(cov.clone(), vec![0.0; 4], -1.0);
        let mut cov10 = cov;
        for i in 0..4 {
            for j in 0..4 {
                cov10[(i, j)] *= 10.0;
            }
        }
        let est2 = estimate_with_cov(cov10, vec![0.0; 4], -1.0);
        let a = solve_min_var(&est1, 0.4, &QpOptions::default()).unwrap();
        let b = solve_min_var(&est2, 0.4, &QpOptions::default()).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-6);
        }
    }
}
