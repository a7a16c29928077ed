//! Tree-augmented naive Bayes via the Chow-Liu construction: a maximum
//! weight spanning tree over class-conditional mutual information, rooted
//! at the lowest-index feature and directed away from the root, on top of
//! the naive-Bayes base structure.

use super::search::base_structure;
use super::{BayesNetError, Dag, DiscreteData, Result};

/// Class-conditional mutual information `I(X_a; X_b | C)` from raw counts,
/// natural log, with the 0 ln 0 = 0 convention. Works for any
/// cardinalities; `var_a` and `var_b` are feature variables (>= 1).
pub fn class_conditional_mi(data: &DiscreteData, var_a: usize, var_b: usize) -> Result<f64> {
    debug_assert!(var_a >= 1 && var_b >= 1 && var_a != var_b);
    let r_a = data.card(var_a);
    let r_b = data.card(var_b);
    let n_classes = data.card(0);
    // Parent configuration j of [0, var_b] encodes (class, x_b) with the
    // class as the most significant digit.
    let table = data.collect_counts(var_a, &[0, var_b])?;
    let n = table.n_total as f64;
    if n == 0.0 {
        return Ok(0.0);
    }

    let mut mi = 0.0;
    for c in 0..n_classes {
        let mut n_c = 0u64;
        let mut n_ac = vec![0u64; r_a];
        let mut n_bc = vec![0u64; r_b];
        for xb in 0..r_b {
            let j = c * r_b + xb;
            n_bc[xb] = table.n_ij(j);
            n_c += table.n_ij(j);
            for xa in 0..r_a {
                n_ac[xa] += table.count(j, xa);
            }
        }
        if n_c == 0 {
            continue;
        }
        for xb in 0..r_b {
            for xa in 0..r_a {
                let n_abc = table.count(c * r_b + xb, xa);
                if n_abc == 0 {
                    continue;
                }
                let ratio = (n_abc as f64 * n_c as f64) / (n_ac[xa] as f64 * n_bc[xb] as f64);
                mi += (n_abc as f64 / n) * ratio.ln();
            }
        }
    }
    Ok(mi)
}

/// Per-class presence and co-presence tallies for binary features; lets the
/// pairwise CMI sweep run in O(nnz per row choose 2) instead of one count
/// pass per pair.
struct PairCounts {
    n_features: usize,
    class_counts: Vec<u64>,
    present: Vec<Vec<u64>>,
    joint: Vec<Vec<u32>>,
}

impl PairCounts {
    fn tri(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b);
        a * (2 * self.n_features - a - 1) / 2 + (b - a - 1)
    }

    fn build(data: &DiscreteData) -> Option<Self> {
        let labels = data.class_labels_vec()?;
        let n_features = data.n_vars() - 1;
        let n_classes = data.card(0);

        let mut class_counts = vec![0u64; n_classes];
        for &l in labels {
            class_counts[l as usize] += 1;
        }
        let mut present = vec![vec![0u64; n_features]; n_classes];
        let mut rows_present: Vec<Vec<u32>> = vec![Vec::new(); data.n_rows()];
        for f in 0..n_features {
            let postings = data.postings(f + 1)?;
            for &row in postings {
                present[labels[row as usize] as usize][f] += 1;
                rows_present[row as usize].push(f as u32);
            }
        }
        let tri_len = n_features * (n_features - 1) / 2;
        let mut joint = vec![vec![0u32; tri_len]; n_classes];
        let tmp = Self { n_features, class_counts, present, joint: Vec::new() };
        for (row, cols) in rows_present.iter().enumerate() {
            let c = labels[row] as usize;
            for (i, &a) in cols.iter().enumerate() {
                for &b in &cols[i + 1..] {
                    joint[c][tmp.tri(a as usize, b as usize)] += 1;
                }
            }
        }
        Some(Self { joint, ..tmp })
    }

    /// CMI between binary features `a < b` from the 2x2 per-class cells.
    fn cmi(&self, a: usize, b: usize, n_total: f64) -> f64 {
        let t = self.tri(a, b);
        let mut mi = 0.0;
        for c in 0..self.class_counts.len() {
            let n_c = self.class_counts[c];
            if n_c == 0 {
                continue;
            }
            let n11 = u64::from(self.joint[c][t]);
            let n1a = self.present[c][a];
            let n1b = self.present[c][b];
            let n10 = n1a - n11;
            let n01 = n1b - n11;
            let n00 = n_c - n1a - n01;
            let margins_a = [n_c - n1a, n1a];
            let margins_b = [n_c - n1b, n1b];
            let cells = [[n00, n01], [n10, n11]];
            for xa in 0..2 {
                for xb in 0..2 {
                    let cell = cells[xa][xb];
                    if cell == 0 {
                        continue;
                    }
                    let ratio =
                        (cell as f64 * n_c as f64) / (margins_a[xa] as f64 * margins_b[xb] as f64);
                    mi += (cell as f64 / n_total) * ratio.ln();
                }
            }
        }
        mi
    }
}

enum MiSource {
    Pairs(PairCounts),
    Generic,
}

impl MiSource {
    fn weight(&self, data: &DiscreteData, a: usize, b: usize) -> Result<f64> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        match self {
            MiSource::Pairs(pairs) => Ok(pairs.cmi(lo, hi, data.n_rows() as f64)),
            MiSource::Generic => class_conditional_mi(data, lo + 1, hi + 1),
        }
    }
}

/// Learns the TAN structure: class parent on every feature plus a
/// Chow-Liu tree over the features.
pub fn learn_tan(data: &DiscreteData, _cfg: &super::ScoreConfig) -> Result<Dag> {
    let n_vars = data.n_vars();
    let n_features = n_vars.saturating_sub(1);
    if n_features < 2 {
        return Err(BayesNetError::TooFewVariables);
    }

    let source = match PairCounts::build(data) {
        Some(pairs) => MiSource::Pairs(pairs),
        None => MiSource::Generic,
    };

    // Prim from feature 0; each attachment is already directed away from
    // the root. Ties keep the lowest candidate index.
    let mut in_tree = vec![false; n_features];
    in_tree[0] = true;
    let mut best_weight = vec![f64::NEG_INFINITY; n_features];
    let mut best_from = vec![0usize; n_features];
    for j in 1..n_features {
        best_weight[j] = source.weight(data, 0, j)?;
    }

    let mut dag = base_structure(n_vars);
    for _ in 1..n_features {
        let mut pick = None;
        for j in 1..n_features {
            if !in_tree[j] && pick.is_none_or(|p: usize| best_weight[j] > best_weight[p]) {
                pick = Some(j);
            }
        }
        let j = pick.expect("tree still has detached features");
        in_tree[j] = true;
        dag.add_edge(best_from[j] + 1, j + 1);
        for k in 1..n_features {
            if !in_tree[k] {
                let w = source.weight(data, j, k)?;
                if w > best_weight[k] {
                    best_weight[k] = w;
                    best_from[k] = j;
                }
            }
        }
    }
    Ok(dag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesnet::ScoreConfig;
    use crate::textprep::{FeatureMatrix, SparseVector, Vocabulary};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn sparse_data(rows: &[Vec<u8>], n_classes: usize) -> DiscreteData {
        let n_features = rows[0].len() - 1;
        let terms = (0..n_features).map(|i| format!("t{i}")).collect();
        let vocab = Vocabulary::from_parts(terms, vec![1; n_features], rows.len());
        let sparse_rows: Vec<SparseVector> = rows
            .iter()
            .map(|row| {
                SparseVector::new(
                    row[1..]
                        .iter()
                        .enumerate()
                        .filter(|&(_, &x)| x > 0)
                        .map(|(c, _)| (c as u32, 1.0))
                        .collect(),
                )
            })
            .collect();
        let labels: Vec<u32> = rows.iter().map(|r| u32::from(r[0])).collect();
        let class_labels = (0..n_classes).map(|c| format!("c{c}")).collect();
        DiscreteData::from_feature_matrix(&FeatureMatrix::new(
            sparse_rows,
            labels,
            class_labels,
            Arc::new(vocab),
        ))
    }

    fn random_binary_rows(rng: &mut ChaCha8Rng, n_rows: usize, n_features: usize) -> Vec<Vec<u8>> {
        (0..n_rows)
            .map(|_| (0..=n_features).map(|_| rng.random_range(0..2u8)).collect())
            .collect()
    }

    #[test]
    fn two_features_form_single_tree_edge() {
        let rows = vec![
            vec![0u8, 1, 1],
            vec![0, 0, 0],
            vec![1, 1, 0],
            vec![1, 0, 1],
        ];
        let data = DiscreteData::from_rows(rows, vec![2, 2, 2]);
        let dag = learn_tan(&data, &ScoreConfig::default()).unwrap();
        assert_eq!(dag.parents(1), &[0]);
        assert_eq!(dag.parents(2), &[0, 1]);
    }

    #[test]
    fn too_few_features_rejected() {
        let data = DiscreteData::from_rows(vec![vec![0, 1]], vec![2, 2]);
        assert!(matches!(
            learn_tan(&data, &ScoreConfig::default()),
            Err(BayesNetError::TooFewVariables)
        ));
    }

    #[test]
    fn fast_pair_path_matches_generic_cmi() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let rows = random_binary_rows(&mut rng, 30, 4);
            let dense = DiscreteData::from_rows(rows.clone(), vec![2; 5]);
            let sparse = sparse_data(&rows, 2);
            let pairs = PairCounts::build(&sparse).unwrap();
            for a in 0..4usize {
                for b in (a + 1)..4 {
                    let generic = class_conditional_mi(&dense, a + 1, b + 1).unwrap();
                    let fast = pairs.cmi(a, b, rows.len() as f64);
                    assert_relative_eq!(generic, fast, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn tan_tree_shape_and_class_arcs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows = random_binary_rows(&mut rng, 50, 5);
        let data = DiscreteData::from_rows(rows, vec![2; 6]);
        let dag = learn_tan(&data, &ScoreConfig::default()).unwrap();
        assert!(dag.is_acyclic());
        let mut tree_edges = 0;
        for v in 1..6 {
            let parents = dag.parents(v);
            assert!(parents.contains(&0), "class must parent every feature");
            assert!(parents.len() <= 2);
            tree_edges += parents.len() - 1;
        }
        // A tree over 5 features has exactly 4 edges.
        assert_eq!(tree_edges, 4);
    }

    /// Decodes a Prüfer sequence into the edge list of a labeled tree.
    fn prufer_to_tree(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
        let mut degree = vec![1usize; n];
        for &s in seq {
            degree[s] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        let mut seq = seq.to_vec();
        while let Some(&s) = seq.first() {
            let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
            edges.push((leaf.min(s), leaf.max(s)));
            degree[leaf] -= 1;
            degree[s] -= 1;
            seq.remove(0);
        }
        let remaining: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        edges.push((remaining[0], remaining[1]));
        edges
    }

    fn max_spanning_tree_weight(weights: &[Vec<f64>], n: usize) -> f64 {
        if n == 2 {
            return weights[0][1];
        }
        let mut best = f64::NEG_INFINITY;
        let seq_len = n - 2;
        let total = n.pow(seq_len as u32);
        for code in 0..total {
            let mut seq = Vec::with_capacity(seq_len);
            let mut c = code;
            for _ in 0..seq_len {
                seq.push(c % n);
                c /= n;
            }
            let w: f64 = prufer_to_tree(&seq, n)
                .iter()
                .map(|&(a, b)| weights[a][b])
                .sum();
            best = best.max(w);
        }
        best
    }

    #[test]
    fn tree_weight_matches_brute_force_maximum() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for round in 0..10 {
            let n_features = 3 + round % 4;
            let rows = random_binary_rows(&mut rng, 40, n_features);
            let data = DiscreteData::from_rows(rows, vec![2; n_features + 1]);

            let mut weights = vec![vec![0.0; n_features]; n_features];
            for a in 0..n_features {
                for b in (a + 1)..n_features {
                    let w = class_conditional_mi(&data, a + 1, b + 1).unwrap();
                    weights[a][b] = w;
                    weights[b][a] = w;
                }
            }
            let dag = learn_tan(&data, &ScoreConfig::default()).unwrap();
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
            assert_relative_eq!(tan_weight, brute, epsilon = 1e-9);
        }
    }

    #[test]
    fn conditionally_independent_features_have_vanishing_cmi() {
        // Features generated independently given the class; CMI shrinks as
        // N grows, so any tree is near weight-optimal.
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let n_rows = 4000;
        let rows: Vec<Vec<u8>> = (0..n_rows)
            .map(|_| {
                let class = rng.random_range(0..2u8);
                let p = if class == 0 { 0.3 } else { 0.7 };
                let mut row = vec![class];
                for _ in 0..3 {
                    row.push(u8::from(rng.random::<f64>() < p));
                }
                row
            })
            .collect();
        let data = DiscreteData::from_rows(rows, vec![2; 4]);
        for a in 1..=3usize {
            for b in (a + 1)..=3 {
                let mi = class_conditional_mi(&data, a, b).unwrap();
                assert!(mi.abs() < 5e-3, "CMI should vanish, got {mi}");
            }
        }
    }
}
