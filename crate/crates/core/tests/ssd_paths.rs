//! Cross-checks between the two SSD solve paths and structural properties of
//! the model family.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spo_core::data::ScenarioSet;
use spo_core::linalg::Matrix;
use spo_core::pca::WeightedRatio;
use spo_core::portfolio::ModelKind;
use spo_core::ratios::CANONICAL_RATIOS;
use spo_core::ssd::{
    solve_fssd, solve_nominal_ssd, solve_spo_step1, solve_spo_step2, solve_ssd_linear,
    verify_ssd_dominance, SsdOptions, SsdStrategy,
};

fn random_instance(rng: &mut ChaCha8Rng, n: usize, t: usize) -> ScenarioSet {
    let rows: Vec<Vec<f64>> =
        (0..t).map(|_| (0..n).map(|_| rng.gen_range(-0.03..0.035)).collect()).collect();
    // Equal-weight mean minus a margin keeps the benchmark dominatable.
    let bench: Vec<f64> =
        rows.iter().map(|r| r.iter().sum::<f64>() / n as f64 - rng.gen_range(0.001..0.004)).collect();
    ScenarioSet {
        returns: Matrix::from_rows(&rows),
        probabilities: vec![1.0 / t as f64; t],
        benchmark: bench,
        sector_benchmarks: BTreeMap::new(),
    }
}

fn random_snapshot(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    Matrix::from_rows(
        &(0..n)
            .map(|_| (0..11).map(|_| rng.gen_range(0.1..3.0)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    )
}

#[test]
fn full_block_and_cut_generation_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..25 {
        let n = rng.gen_range(4..=6);
        let t = rng.gen_range(6..=14);
        let scen = random_instance(&mut rng, n, t);
        let objective: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.02..0.03)).collect();
        let full = SsdOptions { strategy: SsdStrategy::FullBlock, ..Default::default() };
        let cuts = SsdOptions { strategy: SsdStrategy::CutGeneration, ..Default::default() };
        let a = solve_ssd_linear(&objective, &scen, &scen.benchmark.clone(), &full);
        let b = solve_ssd_linear(&objective, &scen, &scen.benchmark.clone(), &cuts);
        match (a, b) {
            (Ok((wa, oa)), Ok((wb, ob))) => {
                assert!((oa - ob).abs() < 1e-7, "case {case}: {oa} vs {ob}");
                assert!(verify_ssd_dominance(&wa, &scen).unwrap().dominates);
                assert!(verify_ssd_dominance(&wb, &scen).unwrap().dominates);
            }
            (Err(_), Err(_)) => {}
            (a, b) => panic!("case {case}: paths disagree on feasibility: {a:?} vs {b:?}"),
        }
    }
}

#[test]
fn fssd_objective_component_monotone_in_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = SsdOptions::default();
    for _case in 0..8 {
        let n = rng.gen_range(4..=6);
        let scen = random_instance(&mut rng, n, 10);
        let snapshot = random_snapshot(&mut rng, n);
        let ratios = vec![
            WeightedRatio { ratio: CANONICAL_RATIOS[1], weight: 0.05, sign: 1.0 },
            WeightedRatio { ratio: CANONICAL_RATIOS[7], weight: 0.03, sign: -1.0 },
            WeightedRatio { ratio: CANONICAL_RATIOS[10], weight: 0.02, sign: -1.0 },
        ];
        let fr = spo_core::ssd::ratio_objective(&snapshot, &ratios, true);
        let mut last_fr_component = f64::NEG_INFINITY;
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let Ok(p) = solve_fssd(&scen, &snapshot, &ratios, alpha, &opts) else {
                continue;
            };
            let fr_z: f64 = fr.iter().zip(&p.weights).map(|(f, w)| f * w).sum();
            assert!(
                fr_z >= last_fr_component - 1e-9,
                "ratio component decreased as alpha rose: {fr_z} < {last_fr_component}"
            );
            last_fr_component = fr_z;
        }
    }
}

#[test]
fn step2_support_containment_and_scale_robustness() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let opts = SsdOptions::default();
    for _case in 0..6 {
        let n = 6;
        let scen = random_instance(&mut rng, n, 10);
        let snapshot = random_snapshot(&mut rng, n);
        let members_a: Vec<usize> = vec![0, 1, 2];
        let members_b: Vec<usize> = vec![3, 4, 5];
        let ratios: Vec<WeightedRatio> = [1usize, 4, 8, 9]
            .iter()
            .map(|&i| WeightedRatio {
                ratio: CANONICAL_RATIOS[i],
                weight: 0.25,
                sign: CANONICAL_RATIOS[i].orientation().sign(),
            })
            .collect();

        let run = |snap: &Matrix| -> Option<Vec<f64>> {
            let mut step1 = Vec::new();
            for (name, members) in [("SA", &members_a), ("SB", &members_b)] {
                let bench: Vec<f64> = (0..scen.num_scenarios())
                    .map(|t| {
                        members.iter().map(|&j| scen.returns[(t, j)]).sum::<f64>()
                            / members.len() as f64
                            - 0.002
                    })
                    .collect();
                let sub = scen.restrict(members, bench).unwrap();
                let mut sub_snap = Matrix::zeros(members.len(), 11);
                for (local, &global) in members.iter().enumerate() {
                    sub_snap.row_mut(local).copy_from_slice(snap.row(global));
                }
                match solve_spo_step1(name, &sub, members, &sub_snap, &ratios, &opts) {
                    Ok(s) => step1.push(s),
                    Err(_) => return None,
                }
            }
            let union: Vec<usize> = step1.iter().flat_map(|s| s.support()).collect();
            match solve_spo_step2(ModelKind::Spo, &scen, &step1, &opts) {
                Ok(p) => {
                    // Support containment: nothing outside the pooled step-1 support.
                    for (j, &w) in p.weights.iter().enumerate() {
                        if w > spo_core::SUPPORT_EPS {
                            assert!(union.contains(&j), "asset {j} funded outside the pool");
                        }
                    }
                    Some(p.weights)
                }
                Err(_) => None,
            }
        };

        let base = run(&snapshot);
        // Scaling ratio columns by positive constants must not move the
        // portfolio (consequence of z-scoring).
        let mut scaled = snapshot.clone();
        for i in 0..scaled.rows() {
            for c in 0..11 {
                scaled[(i, c)] *= [3.0, 0.5, 11.0, 1.7, 2.2, 9.0, 0.1, 4.0, 6.5, 1.1, 0.7][c];
            }
        }
        let moved = run(&scaled);
        match (base, moved) {
            (Some(a), Some(b)) => {
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-6, "scaling changed weights: {x} vs {y}");
                }
            }
            (None, None) => {}
            other => panic!("scaling changed feasibility: {other:?}"),
        }
    }
}

#[test]
fn benchmark_replication_is_always_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    for _ in 0..10 {
        let n = rng.gen_range(4..=6);
        let t = rng.gen_range(6..=12);
        // Benchmark equals the equal-weight portfolio: replication feasible.
        let rows: Vec<Vec<f64>> =
            (0..t).map(|_| (0..n).map(|_| rng.gen_range(-0.05..0.05)).collect()).collect();
        let bench: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
        let scen = ScenarioSet {
            returns: Matrix::from_rows(&rows),
            probabilities: vec![1.0 / t as f64; t],
            benchmark: bench,
            sector_benchmarks: BTreeMap::new(),
        };
        let p = solve_nominal_ssd(&scen, &SsdOptions::default())
            .expect("replicable benchmark must be dominatable");
        assert!(verify_ssd_dominance(&p.weights, &scen).unwrap().dominates);
        // The optimum cannot fall below the benchmark's own mean.
        let bench_mean: f64 = scen.benchmark.iter().sum::<f64>() / t as f64;
        assert!(p.objective >= bench_mean - 1e-9);
    }
}
