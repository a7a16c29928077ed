//! Acceptance suite: each test is one numbered criterion, prints a PASS
//! line on success and pins its tolerance in code.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines. Criteria 8 and 9 (corpus replication and CLI
//! determinism) live in the CLI crate's acceptance target.

mod support;

use std::time::Instant;

use pgmtext::baselines::logreg_loss_and_grad;
use pgmtext::bayesnet::{
    class_conditional_mi, family_score, learn_tan, network_score, search_hill_climb, search_lagd,
    search_tabu, Dag, DiscreteData, Metric, ScoreConfig,
};
use pgmtext::eval::{average_metrics, per_class_prf, ConfusionMatrix};
use pgmtext::hmm::{baum_welch, forward_scaled, viterbi, HmmModel, ObservationSeq};
use pgmtext::textprep::SparseVector;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::{
    enumerate_forward, enumerate_viterbi, max_spanning_tree_weight, oracle_network_score,
    OracleMetric,
};

fn random_stochastic_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| rng.random_range(0.02..1.0)).collect();
    let s: f64 = row.iter().sum();
    for v in &mut row {
        *v /= s;
    }
    row
}

fn random_hmm(rng: &mut ChaCha8Rng, n: usize, m: usize) -> HmmModel {
    HmmModel::new(
        (0..n).map(|_| random_stochastic_row(rng, n)).collect(),
        (0..n).map(|_| random_stochastic_row(rng, m)).collect(),
        random_stochastic_row(rng, n),
    )
    .expect("random rows are stochastic")
}

/// Criterion 1: forward likelihood and Viterbi path match exhaustive path
/// enumeration within 1e-9 on the probability scale, 200 seeded models,
/// N <= 3, M <= 4, T <= 6, under 10 seconds.
#[test]
fn criterion_1_hmm_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC1);
    for _ in 0..200 {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=4);
        let t = rng.random_range(1..=6);
        let model = random_hmm(&mut rng, n, m);
        let obs = ObservationSeq::new((0..t).map(|_| rng.random_range(0..m)).collect());

        let fwd = forward_scaled(&model, &obs).expect("symbols in range");
        let brute_p = enumerate_forward(&model, &obs);
        assert!(
            (fwd.log_likelihood.exp() - brute_p).abs() < 1e-9,
            "forward mismatch: {} vs {brute_p}",
            fwd.log_likelihood.exp()
        );

        let (path, log_p) = viterbi(&model, &obs).expect("symbols in range");
        let (brute_path, brute_log_p) = enumerate_viterbi(&model, &obs);
        assert!((log_p.exp() - brute_log_p.exp()).abs() < 1e-9);
        assert_eq!(path, brute_path);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "criterion 1 runtime {elapsed:?}");
    println!("ACCEPTANCE 1 hmm-oracle-equivalence: PASS ({elapsed:?})");
}

fn random_binary_data(rng: &mut ChaCha8Rng, rows: usize, features: usize) -> DiscreteData {
    let data: Vec<Vec<u8>> = (0..rows)
        .map(|_| (0..=features).map(|_| rng.random_range(0..2u8)).collect())
        .collect();
    DiscreteData::from_rows(data, vec![2; features + 1])
}

/// Criterion 2: TAN's tree weight equals the brute-force maximum over all
/// spanning trees within 1e-9, 100 seeded datasets, <= 6 binary features,
/// under 30 seconds.
#[test]
fn criterion_2_chow_liu_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);
    for round in 0..100 {
        let n_features = 2 + round % 5; // 2..=6
        let data = random_binary_data(&mut rng, 12 + round % 40, n_features);

        let mut weights = vec![vec![0.0; n_features]; n_features];
        for a in 0..n_features {
            for b in (a + 1)..n_features {
                let w = class_conditional_mi(&data, a + 1, b + 1).expect("valid vars");
                weights[a][b] = w;
                weights[b][a] = w;
            }
        }
        let dag = learn_tan(&data, &ScoreConfig::default()).expect("learnable");
        let tan_weight: f64 = (1..=n_features)
            .map(|v| {
                dag.parents(v)
                    .iter()
                    .filter(|&&p| p >= 1)
                    .map(|&p| weights[p - 1][v - 1])
                    .sum::<f64>()
            })
            .sum();
        let brute = max_spanning_tree_weight(&weights, n_features);
        assert!(
            (tan_weight - brute).abs() < 1e-9,
            "round {round}: TAN weight {tan_weight} vs brute {brute}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 2 runtime {elapsed:?}");
    println!("ACCEPTANCE 2 chow-liu-oracle-equivalence: PASS ({elapsed:?})");
}

fn random_dag(rng: &mut ChaCha8Rng, n_vars: usize, max_parents: usize) -> Dag {
    let mut order: Vec<usize> = (0..n_vars).collect();
    for i in (1..n_vars).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut dag = Dag::empty(n_vars);
    for pos in 1..n_vars {
        let v = order[pos];
        let n_parents = rng.random_range(0..=max_parents.min(pos));
        let mut picked = Vec::new();
        while picked.len() < n_parents {
            let p = order[rng.random_range(0..pos)];
            if !picked.contains(&p) {
                picked.push(p);
            }
        }
        for p in picked {
            dag.add_edge(p, v);
        }
    }
    dag
}

/// Criterion 3: network scores equal an independent naive full-count
/// re-evaluation within 1e-9 for 100 random (dag, dataset) pairs and every
/// metric; single-edge edits change exactly one family term. Under 30 s.
#[test]
fn criterion_3_scoring_correctness_and_decomposability() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC3);
    let pairs: [(Metric, OracleMetric); 6] = [
        (Metric::Bayes, OracleMetric::Bayes),
        (Metric::Bdeu, OracleMetric::Bdeu),
        (Metric::K2, OracleMetric::K2),
        (Metric::Mdl, OracleMetric::Mdl),
        (Metric::Entropy, OracleMetric::Entropy),
        (Metric::Aic, OracleMetric::Aic),
    ];

    for round in 0..100 {
        let n_vars = rng.random_range(2..=5);
        let cards: Vec<usize> = (0..n_vars).map(|_| rng.random_range(2..=3)).collect();
        let n_rows = rng.random_range(4..=40);
        let rows: Vec<Vec<usize>> = (0..n_rows)
            .map(|_| cards.iter().map(|&c| rng.random_range(0..c)).collect())
            .collect();
        let rows_u8: Vec<Vec<u8>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| x as u8).collect())
            .collect();
        let data = DiscreteData::from_rows(rows_u8, cards.clone());
        let dag = random_dag(&mut rng, n_vars, 2);
        let parents_of: Vec<Vec<usize>> =
            (0..n_vars).map(|v| dag.parents(v).to_vec()).collect();

        for &(metric, oracle_metric) in &pairs {
            let cfg = ScoreConfig { metric, alpha: 0.5, ..ScoreConfig::default() };
            let ours = network_score(&data, &dag, &cfg).expect("scoreable");
            let oracle = oracle_network_score(&rows, &cards, &parents_of, oracle_metric, 0.5);
            assert!(
                (ours - oracle).abs() < 1e-9,
                "round {round} {metric}: {ours} vs oracle {oracle}"
            );
        }

        // Decomposability: a single-edge edit changes only the child term.
        let child = rng.random_range(1..n_vars);
        let candidate = (0..n_vars)
            .find(|&p| p != child && !dag.parents(child).contains(&p) && !dag.would_create_cycle(p, child));
        if let Some(parent) = candidate {
            let cfg = ScoreConfig { metric: Metric::K2, ..ScoreConfig::default() };
            let before: Vec<f64> = (0..n_vars)
                .map(|v| {
                    family_score(&data.collect_counts(v, dag.parents(v)).unwrap(), &cfg).unwrap()
                })
                .collect();
            let mut edited = dag.clone();
            edited.add_edge(parent, child);
            let after: Vec<f64> = (0..n_vars)
                .map(|v| {
                    family_score(&data.collect_counts(v, edited.parents(v)).unwrap(), &cfg)
                        .unwrap()
                })
                .collect();
            for v in 0..n_vars {
                if v == child {
                    continue;
                }
                assert_eq!(before[v], after[v], "family {v} moved on an edit of {child}");
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 3 runtime {elapsed:?}");
    println!("ACCEPTANCE 3 scoring-correctness: PASS ({elapsed:?})");
}

/// Criterion 4: hill-climb accepted scores strictly increase; tabu returns
/// best-seen >= initial; LAGD with look_ahead = 1 is score-identical to
/// hill climbing on 20 seeded datasets. Under 60 seconds.
#[test]
fn criterion_4_search_invariants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC4);
    for round in 0..20 {
        let n_features = 3 + round % 3;
        let data = random_binary_data(&mut rng, 20 + round, n_features);
        let cfg = ScoreConfig { metric: Metric::K2, ..ScoreConfig::default() };

        let hc = search_hill_climb(&data, &cfg, 1000).expect("searchable");
        for pair in hc.trace.windows(2) {
            assert!(pair[1] > pair[0], "hill-climb move did not improve: {:?}", hc.trace);
        }

        let tabu = search_tabu(&data, &cfg, 5, 100).expect("searchable");
        let tabu_score = network_score(&data, &tabu.dag, &cfg).expect("scoreable");
        assert!(tabu_score >= tabu.trace[0] - 1e-12, "tabu lost the initial structure");

        let lagd = search_lagd(&data, &cfg, 1, 5).expect("searchable");
        assert!(
            (lagd.final_score() - hc.final_score()).abs() < 1e-9,
            "round {round}: LAGD(1) {} vs HC {}",
            lagd.final_score(),
            hc.final_score()
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "criterion 4 runtime {elapsed:?}");
    println!("ACCEPTANCE 4 search-invariants: PASS ({elapsed:?})");
}

/// Criterion 5: Baum-Welch per-iteration log-likelihood never decreases by
/// more than 1e-9 on 50 seeded corpora. Under 60 seconds.
#[test]
fn criterion_5_baum_welch_monotonicity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC5);
    for _ in 0..50 {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(2..=4);
        let init = random_hmm(&mut rng, n, m);
        let corpus: Vec<ObservationSeq> = (0..rng.random_range(2..=5))
            .map(|_| {
                let t = rng.random_range(2..=10);
                ObservationSeq::new((0..t).map(|_| rng.random_range(0..m)).collect())
            })
            .collect();
        let (model, trace) = baum_welch(&init, &corpus, 30, 1e-12).expect("trainable");
        model.validate().expect("stochastic output");
        for pair in trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "EM decreased: {trace:?}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "criterion 5 runtime {elapsed:?}");
    println!("ACCEPTANCE 5 baum-welch-monotonicity: PASS ({elapsed:?})");
}

/// Criterion 6: logistic-regression analytic gradients match central
/// finite differences within 1e-5 relative error on 50 random instances.
#[test]
fn criterion_6_logreg_gradient_check() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC6);
    let mut max_rel = 0.0f64;
    for _ in 0..50 {
        let n_rows = rng.random_range(2..=20);
        let n_cols = rng.random_range(1..=10);
        let n_classes = rng.random_range(2..=4);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_rows {
            let mut entries = Vec::new();
            for col in 0..n_cols as u32 {
                if rng.random::<f64>() < 0.7 {
                    entries.push((col, rng.random_range(-1.5..1.5)));
                }
            }
            rows.push(SparseVector::new(entries));
            labels.push((i % n_classes) as u32);
        }
        let weights: Vec<Vec<f64>> = (0..n_classes)
            .map(|_| (0..n_cols).map(|_| rng.random_range(-0.8..0.8)).collect())
            .collect();
        let bias: Vec<f64> = (0..n_classes).map(|_| rng.random_range(-0.5..0.5)).collect();
        let lambda = rng.random_range(0.0..0.1);

        let (_, grad_w, grad_b) = logreg_loss_and_grad(&rows, &labels, &weights, &bias, lambda);
        let h = 1e-6;
        for c in 0..n_classes {
            for j in 0..n_cols {
                let mut wp = weights.clone();
                wp[c][j] += h;
                let (lp, _, _) = logreg_loss_and_grad(&rows, &labels, &wp, &bias, lambda);
                let mut wm = weights.clone();
                wm[c][j] -= h;
                let (lm, _, _) = logreg_loss_and_grad(&rows, &labels, &wm, &bias, lambda);
                let fd = (lp - lm) / (2.0 * h);
                let denom = fd.abs().max(grad_w[c][j].abs()).max(1e-8);
                max_rel = max_rel.max(((grad_w[c][j] - fd) / denom).abs());
            }
            let mut bp = bias.clone();
            bp[c] += h;
            let (lp, _, _) = logreg_loss_and_grad(&rows, &labels, &weights, &bp, lambda);
            let mut bm = bias.clone();
            bm[c] -= h;
            let (lm, _, _) = logreg_loss_and_grad(&rows, &labels, &weights, &bm, lambda);
            let fd = (lp - lm) / (2.0 * h);
            let denom = fd.abs().max(grad_b[c].abs()).max(1e-8);
            max_rel = max_rel.max(((grad_b[c] - fd) / denom).abs());
        }
    }
    assert!(max_rel < 1e-5, "max relative gradient error {max_rel}");
    let elapsed = start.elapsed();
    println!("ACCEPTANCE 6 gradient-check: PASS (max rel err {max_rel:.2e}, {elapsed:?})");
}

/// Criterion 7: micro P = micro R = micro F1 = accuracy on 100 random
/// confusion matrices; macro equals weighted on balanced matrices; both up
/// to 1e-12.
#[test]
fn criterion_7_metric_identities() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC7);
    for round in 0..100 {
        let c = rng.random_range(2..=5);
        let mut counts: Vec<Vec<u64>> =
            (0..c).map(|_| (0..c).map(|_| rng.random_range(0..30)).collect()).collect();
        if counts.iter().flatten().sum::<u64>() == 0 {
            counts[0][0] = 1;
        }
        let labels: Vec<String> = (0..c).map(|i| format!("c{i}")).collect();
        let cm = ConfusionMatrix::from_counts(counts, labels.clone());
        let avg = average_metrics(&cm).expect("non-empty");
        for v in [avg.micro.precision, avg.micro.recall, avg.micro.f1] {
            assert!(
                (v - avg.accuracy).abs() <= 1e-12,
                "round {round}: micro {v} vs accuracy {}",
                avg.accuracy
            );
        }

        // Balanced matrix: equal row sums by construction.
        let support = 20u64;
        let mut balanced: Vec<Vec<u64>> = Vec::new();
        for _ in 0..c {
            let mut row: Vec<u64> = (0..c).map(|_| rng.random_range(0..=support)).collect();
            let total: u64 = row.iter().sum();
            if total == 0 {
                row[0] = support;
            } else {
                // Rescale to the common support by moving mass to the
                // first cell.
                let scale_target = support;
                let mut acc = 0u64;
                for v in row.iter_mut() {
                    *v = *v * scale_target / total.max(1);
                    acc += *v;
                }
                row[0] += scale_target - acc;
            }
            balanced.push(row);
        }
        let cm2 = ConfusionMatrix::from_counts(balanced, labels);
        let avg2 = average_metrics(&cm2).expect("non-empty");
        for (m, w) in [
            (avg2.macro_avg.precision, avg2.weighted.precision),
            (avg2.macro_avg.recall, avg2.weighted.recall),
            (avg2.macro_avg.f1, avg2.weighted.f1),
        ] {
            assert!((m - w).abs() <= 1e-12, "round {round}: macro {m} vs weighted {w}");
        }
        // Macro F1 stays inside the per-class range.
        let per = per_class_prf(&cm).expect("non-empty");
        let min = per.per_class.iter().map(|p| p.f1).fold(f64::INFINITY, f64::min);
        let max = per.per_class.iter().map(|p| p.f1).fold(0.0, f64::max);
        assert!(avg.macro_avg.f1 >= min - 1e-12 && avg.macro_avg.f1 <= max + 1e-12);
    }
    let elapsed = start.elapsed();
    println!("ACCEPTANCE 7 metric-identities: PASS ({elapsed:?})");
}
