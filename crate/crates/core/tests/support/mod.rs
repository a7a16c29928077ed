//! Independent oracles for the acceptance suite: brute-force HMM path
//! enumeration, Prüfer-sequence spanning-tree enumeration, and a naive
//! full-count network scorer that never touches the library's count tables
//! or log-gamma code.

use std::collections::HashMap;

use pgmtext::hmm::{HmmModel, ObservationSeq};

/// P(O | λ) by summing over all N^T state paths.
pub fn enumerate_forward(model: &HmmModel, obs: &ObservationSeq) -> f64 {
    let n = model.n_states();
    let t_len = obs.len();
    let mut total = 0.0f64;
    let mut path = vec![0usize; t_len];
    loop {
        let mut p = model.pi[path[0]] * model.b[path[0]][obs.symbols[0]];
        for t in 1..t_len {
            p *= model.a[path[t - 1]][path[t]] * model.b[path[t]][obs.symbols[t]];
        }
        total += p;
        let mut pos = 0;
        loop {
            if pos == t_len {
                return total;
            }
            path[pos] += 1;
            if path[pos] < n {
                break;
            }
            path[pos] = 0;
            pos += 1;
        }
    }
}

/// Most probable path by exhaustive enumeration; among ties the
/// lexicographically earliest path wins, matching the implementation's
/// lowest-state-index backpointer rule.
pub fn enumerate_viterbi(model: &HmmModel, obs: &ObservationSeq) -> (Vec<usize>, f64) {
    let n = model.n_states();
    let t_len = obs.len();
    let mut best_p = f64::NEG_INFINITY;
    let mut best_path = vec![0usize; t_len];
    let mut path = vec![0usize; t_len];
    loop {
        let mut p = (model.pi[path[0]] * model.b[path[0]][obs.symbols[0]]).ln();
        for t in 1..t_len {
            p += (model.a[path[t - 1]][path[t]] * model.b[path[t]][obs.symbols[t]]).ln();
        }
        if p > best_p {
            best_p = p;
            best_path = path.clone();
        }
        let mut pos = t_len;
        loop {
            if pos == 0 {
                return (best_path, best_p);
            }
            pos -= 1;
            path[pos] += 1;
            if path[pos] < n {
                break;
            }
            path[pos] = 0;
            if pos == 0 {
                return (best_path, best_p);
            }
        }
    }
}

/// Decodes a Prüfer sequence over `n` labels into tree edges.
pub fn prufer_to_tree(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut rest = seq.to_vec();
    while let Some(&s) = rest.first() {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
        rest.remove(0);
    }
    let remaining: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((remaining[0], remaining[1]));
    edges
}

/// Maximum spanning-tree weight over the complete graph on `n` nodes by
/// enumerating all n^(n-2) labeled trees.
pub fn max_spanning_tree_weight(weights: &[Vec<f64>], n: usize) -> f64 {
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMetric {
    Bayes,
    Bdeu,
    K2,
    Mdl,
    Entropy,
    Aic,
}

/// Naive full-count family tally: parent-value tuples go straight into a
/// hash map, no mixed-radix encoding, no shared code with the library.
fn oracle_family_counts(
    rows: &[Vec<usize>],
    var: usize,
    parents: &[usize],
) -> HashMap<Vec<usize>, Vec<u64>> {
    let mut out: HashMap<Vec<usize>, Vec<u64>> = HashMap::new();
    for row in rows {
        let key: Vec<usize> = parents.iter().map(|&p| row[p]).collect();
        let entry = out.entry(key).or_default();
        if entry.len() <= row[var] {
            entry.resize(row[var] + 1, 0);
        }
        entry[row[var]] += 1;
    }
    out
}

/// Σ_{m=0}^{n-1} ln(a + m); equals lnΓ(a + n) − lnΓ(a) without using a
/// gamma implementation.
fn ln_rising(a: f64, n: u64) -> f64 {
    (0..n).map(|m| (a + m as f64).ln()).sum()
}

fn ln_factorial(n: u64) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// Independent family score straight from the metric definitions.
pub fn oracle_family_score(
    rows: &[Vec<usize>],
    cards: &[usize],
    var: usize,
    parents: &[usize],
    metric: OracleMetric,
    alpha: f64,
) -> f64 {
    let r = cards[var];
    let q: usize = parents.iter().map(|&p| cards[p]).product();
    let by_config = oracle_family_counts(rows, var, parents);
    let n_total = rows.len() as u64;

    let observed_entropy = || -> f64 {
        let mut h = 0.0;
        for counts in by_config.values() {
            let n_ij: u64 = counts.iter().sum();
            for &n_ijk in counts {
                if n_ijk > 0 {
                    h -= n_ijk as f64 * (n_ijk as f64 / n_ij as f64).ln();
                }
            }
        }
        h
    };

    match metric {
        OracleMetric::K2 => {
            // Empty configurations contribute ln((r-1)!/(r-1)!) = 0.
            let mut total = 0.0;
            for counts in by_config.values() {
                let n_ij: u64 = counts.iter().sum();
                total += ln_factorial(r as u64 - 1) - ln_factorial(n_ij + r as u64 - 1);
                for &n_ijk in counts {
                    total += ln_factorial(n_ijk);
                }
            }
            total
        }
        OracleMetric::Bayes => {
            let mut total = 0.0;
            for counts in by_config.values() {
                let n_ij: u64 = counts.iter().sum();
                total -= ln_rising(r as f64 * alpha, n_ij);
                for k in 0..r {
                    let n_ijk = counts.get(k).copied().unwrap_or(0);
                    total += ln_rising(alpha, n_ijk);
                }
            }
            total
        }
        OracleMetric::Bdeu => {
            let prior_cell = alpha / (r as f64 * q as f64);
            let prior_row = alpha / q as f64;
            let mut total = 0.0;
            for counts in by_config.values() {
                let n_ij: u64 = counts.iter().sum();
                total -= ln_rising(prior_row, n_ij);
                for k in 0..r {
                    let n_ijk = counts.get(k).copied().unwrap_or(0);
                    total += ln_rising(prior_cell, n_ijk);
                }
            }
            total
        }
        OracleMetric::Entropy => -observed_entropy(),
        OracleMetric::Mdl => {
            let k = (r as f64 - 1.0) * q as f64;
            -observed_entropy() - 0.5 * k * (n_total as f64).ln()
        }
        OracleMetric::Aic => {
            let k = (r as f64 - 1.0) * q as f64;
            -observed_entropy() - k
        }
    }
}

/// Independent network score: sum of oracle family scores.
pub fn oracle_network_score(
    rows: &[Vec<usize>],
    cards: &[usize],
    parents_of: &[Vec<usize>],
    metric: OracleMetric,
    alpha: f64,
) -> f64 {
    (0..cards.len())
        .map(|var| oracle_family_score(rows, cards, var, &parents_of[var], metric, alpha))
        .sum()
}
