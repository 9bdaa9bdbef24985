//! Monte Carlo checks of estimator means against exact finite-sample
//! expectations and limits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use mbvol::experiment::mean_variance;
use mbvol::{
    bias_constants, exact_block_variances, finite_sample_nu1, make_block_scheme, make_gamma_scheme, run_experiment,
    Analysis, EstimatorKind, ExperimentConfig, JumpSpec, Model, Observations, Record,
};

fn constant_vol(n: usize, omega2: f64, c1: f64, c2: f64, reps: usize, kinds: Vec<EstimatorKind>) -> ExperimentConfig {
    ExperimentConfig {
        model: Model::ConstantVol { mu: 0.0 },
        repetitions: reps,
        estimators: kinds,
        ..ExperimentConfig::sv("mc", vec![n], omega2, c1, c2)
    }
}

fn stats(records: &[Record], kind: EstimatorKind, n: usize) -> (f64, f64) {
    let v: Vec<f64> = records.iter().filter(|r| r.estimator == kind && r.n == n).filter_map(|r| r.estimate).collect();
    let (m, var) = mean_variance(&v);
    (m.unwrap(), (var.unwrap() / v.len() as f64).sqrt())
}

/// `E[MRV]` for `σ ≡ 1`, no drift, no noise: `(w − ν2/(2n))/ν1^{(n)}`.
fn exact_noiseless_mrv(n: usize, c1: f64, c2: f64) -> f64 {
    let s = make_block_scheme(n, c1, c2).unwrap();
    let (w, _) = exact_block_variances(s.k, s.l, n, 0.0).unwrap();
    let nu2 = bias_constants(s.c1_eff, s.c2_eff).unwrap().nu2;
    let nu1 = finite_sample_nu1(n, s.c1_eff, s.c2_eff).unwrap();
    (w - nu2 / (2.0 * n as f64)) / nu1
}

#[test]
fn noiseless_consistency_ladder() {
    let grid = [1024, 4096, 16384];
    let cfg = ExperimentConfig {
        n_grid: grid.to_vec(),
        ..constant_vol(1024, 0.0, 0.25, 2.0, 2000, vec![EstimatorKind::Mrv])
    };
    let records = run_experiment(&cfg, None).unwrap();
    let mut prev_exact = f64::INFINITY;
    let mut prev_mc: Option<(f64, f64)> = None;
    for n in grid {
        let (mean, se) = stats(&records, EstimatorKind::Mrv, n);
        let exact = exact_noiseless_mrv(n, 0.25, 2.0);
        assert!((mean - exact).abs() < 3.0 * se, "n={n}: MC {mean} vs exact {exact} (se {se})");
        assert!((exact - 1.0).abs() < prev_exact, "exact bias grows at n={n}");
        prev_exact = (exact - 1.0).abs();
        if let Some((dev, prev_se)) = prev_mc {
            let slack = 3.0 * (se * se + prev_se * prev_se).sqrt();
            assert!((mean - 1.0).abs() <= 1.1 * dev + slack, "n={n}: deviation {} after {dev}", (mean - 1.0).abs());
        }
        prev_mc = Some(((mean - 1.0).abs(), se));
    }
}

#[test]
fn noiseless_quarticity_estimators_target_one() {
    let kinds = vec![EstimatorKind::Mrq, EstimatorKind::Mtq];
    let records = run_experiment(&constant_vol(4096, 0.0, 1.0, 1.6, 1000, kinds.clone()), None).unwrap();
    for kind in kinds {
        let (mean, se) = stats(&records, kind, 4096);
        assert!((mean - 1.0).abs() < 3.0 * se + 0.01, "{kind}: {mean} (se {se})");
    }
}

#[test]
fn pure_noise_mrv_is_centred() {
    let n = 4096;
    let scheme = make_block_scheme(n, 0.25, 2.0).unwrap();
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let values: Vec<f64> = (0..1000)
        .map(|_| {
            let y: Vec<f64> = (0..=n).map(|_| noise.sample(&mut rng)).collect();
            let obs = Observations::from_values(y).unwrap();
            Analysis::new(&obs, scheme).unwrap().mrv().unwrap().value
        })
        .collect();
    let (m, v) = mean_variance(&values);
    let se = (v.unwrap() / values.len() as f64).sqrt();
    assert!(m.unwrap().abs() < 3.0 * se, "{} (se {se})", m.unwrap());
}

#[test]
fn gamma_scheme_drops_the_noise_term() {
    let n = 16384;
    let (c1, c2, gamma, omega2) = (0.25, 2.0, 0.25, 0.01);
    let cfg = ExperimentConfig {
        gamma: Some(gamma),
        ..constant_vol(n, omega2, c1, c2, 1000, vec![EstimatorKind::MbvRaw { r: 2.0, l: 0.0 }])
    };
    let records = run_experiment(&cfg, None).unwrap();
    let (mean, se) = stats(&records, EstimatorKind::MbvRaw { r: 2.0, l: 0.0 }, n);

    let s = make_gamma_scheme(n, c1, c2, gamma).unwrap();
    let (w, u) = exact_block_variances(s.k, s.l, n, omega2).unwrap();
    let exact = s.m as f64 * (w + u) / (n as f64).sqrt();
    assert!((mean - exact).abs() < 3.0 * se, "MC {mean} vs exact {exact} (se {se})");

    let limit = bias_constants(s.c1_eff, s.c2_eff).unwrap().nu1 / s.c1c2();
    assert!((exact / limit - 1.0).abs() < 0.03, "exact {exact} vs limit {limit}");
    // the record's own target is that limit
    let truth = records[0].truth;
    assert!((truth / limit - 1.0).abs() < 1e-12);
}

#[test]
fn balanced_raw_statistic_matches_its_limit() {
    let n = 16384;
    let cfg = constant_vol(n, 0.01, 0.25, 2.0, 1000, vec![EstimatorKind::MbvRaw { r: 2.0, l: 0.0 }]);
    let records = run_experiment(&cfg, None).unwrap();
    let (mean, se) = stats(&records, EstimatorKind::MbvRaw { r: 2.0, l: 0.0 }, n);
    let s = make_block_scheme(n, 0.25, 2.0).unwrap();
    let c = bias_constants(s.c1_eff, s.c2_eff).unwrap();
    let want = (finite_sample_nu1(n, s.c1_eff, s.c2_eff).unwrap() + c.nu2 * 0.01) / s.c1c2();
    assert!((mean - want).abs() < 3.0 * se + 0.002 * want, "{mean} vs {want} (se {se})");
}

#[test]
fn robust_estimator_targets_iv_without_jumps() {
    let n = 16384;
    let cfg = ExperimentConfig {
        repetitions: 1000,
        estimators: vec![EstimatorKind::MbvRobust],
        ..ExperimentConfig::sv("mc", vec![n], 0.01, 0.25, 2.0)
    };
    let records = run_experiment(&cfg, None).unwrap();
    let errors: Vec<f64> = records.iter().filter_map(Record::error).collect();
    let (m, v) = mean_variance(&errors);
    let se = (v.unwrap() / errors.len() as f64).sqrt();
    // bipower sums run over M − 1 block pairs, a relative bias of 1/M
    let m_blocks = make_block_scheme(n, 0.25, 2.0).unwrap().m as f64;
    assert!(m.unwrap().abs() < 3.0 * se + 2.0 / m_blocks, "{} (se {se})", m.unwrap());
}

fn paired_jump_runs(kinds: Vec<EstimatorKind>) -> (Vec<Record>, Vec<Record>) {
    let clean = constant_vol(16384, 0.0, 1.0, 1.6, 1000, kinds);
    let jumped = ExperimentConfig { jumps: Some(JumpSpec { count: 1, h: 0.25 }), ..clean.clone() };
    (run_experiment(&clean, None).unwrap(), run_experiment(&jumped, None).unwrap())
}

// Known failure: the jump lifts one block average by several standard
// deviations, worth roughly 0.06 in the mean at this n (about 5 SE).
#[test]
fn one_jump_barely_moves_the_tripower_quarticity() {
    let (a, b) = paired_jump_runs(vec![EstimatorKind::Mtq]);
    let (m0, se0) = stats(&a, EstimatorKind::Mtq, 16384);
    let (m1, _) = stats(&b, EstimatorKind::Mtq, 16384);
    assert!((m1 - m0).abs() < 3.0 * se0, "with jump {m1}, without {m0} (se {se0})");
}

#[test]
fn tripower_quarticity_is_less_jump_sensitive_than_quadratic() {
    let (a, b) = paired_jump_runs(vec![EstimatorKind::Mtq, EstimatorKind::Mrq]);
    let shift = |k| stats(&b, k, 16384).0 - stats(&a, k, 16384).0;
    let (t, q) = (shift(EstimatorKind::Mtq), shift(EstimatorKind::Mrq));
    assert!(t.abs() < q.abs() / 2.0, "tripower shift {t}, quadratic shift {q}");
}

#[test]
fn sv_paths_average_iv_near_two() {
    let cfg = ExperimentConfig { repetitions: 1000, ..ExperimentConfig::sv("iv", vec![1024], 0.0, 0.25, 2.0) };
    let records = run_experiment(&cfg, None).unwrap();
    let iv: Vec<f64> = records.iter().map(|r| r.truth).collect();
    let mean = mean_variance(&iv).0.unwrap();
    assert!((mean - 2.0).abs() < 0.3, "{mean}");
}
