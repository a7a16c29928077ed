//! CPT estimation and maximum-posterior classification.

use std::io::{BufRead, Write};

use super::{BayesNetError, Dag, DiscreteData, Result};
use crate::textprep::SparseVector;
use crate::util::{fmt_g12, parse_g12};

/// Conditional probability table for one variable: `q` parent
/// configurations times `r` states, each row a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub var: usize,
    pub r: usize,
    pub q: usize,
    table: Vec<f64>,
}

impl Cpt {
    pub fn prob(&self, j: usize, k: usize) -> f64 {
        self.table[j * self.r + k]
    }
}

/// A trained classifier: structure, CPTs, cardinalities and class names.
/// Variable 0 is the class variable.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNetClassifier {
    dag: Dag,
    cpts: Vec<Cpt>,
    cards: Vec<usize>,
    class_labels: Vec<String>,
}

/// Smoothed maximum-likelihood CPTs:
/// `P(X_i = k | j) = (N_ijk + s) / (N_ij + r_i * s)`.
/// Unobserved parent configurations come out uniform by construction.
pub fn estimate_cpts(
    data: &DiscreteData,
    dag: &Dag,
    smoothing: f64,
    class_labels: Vec<String>,
) -> Result<BayesNetClassifier> {
    assert!(smoothing > 0.0, "smoothing must be positive");
    assert_eq!(class_labels.len(), data.card(0), "class label count mismatch");
    dag.topological_order()?;

    let mut cpts = Vec::with_capacity(dag.n_vars());
    for var in 0..dag.n_vars() {
        let counts = data.collect_counts(var, dag.parents(var))?;
        let r = counts.r;
        let mut table = vec![0.0f64; counts.q * r];
        for j in 0..counts.q {
            let denom = counts.n_ij(j) as f64 + r as f64 * smoothing;
            for k in 0..r {
                table[j * r + k] = (counts.count(j, k) as f64 + smoothing) / denom;
            }
        }
        cpts.push(Cpt { var, r, q: counts.q, table });
    }
    Ok(BayesNetClassifier { dag: dag.clone(), cpts, cards: data.cards().to_vec(), class_labels })
}

impl BayesNetClassifier {
    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    fn config_index(&self, var: usize, assignment: &[usize]) -> usize {
        let mut j = 0usize;
        for &p in self.dag.parents(var) {
            j = j * self.cards[p] + assignment[p];
        }
        j
    }

    /// Joint log-probability of a full assignment (class value included).
    fn joint_log_prob(&self, assignment: &[usize]) -> f64 {
        let mut total = 0.0;
        for (var, cpt) in self.cpts.iter().enumerate() {
            let j = self.config_index(var, assignment);
            total += cpt.prob(j, assignment[var]).ln();
        }
        total
    }

    /// Maximum-posterior class for a feature assignment (values for
    /// variables `1..n`). Returns the class index and normalized per-class
    /// log-posteriors; ties resolve to the lowest class index.
    pub fn predict(&self, features: &[usize]) -> Result<(usize, Vec<f64>)> {
        let n_vars = self.cards.len();
        assert_eq!(features.len(), n_vars - 1, "one value per feature variable");
        for (i, &x) in features.iter().enumerate() {
            let var = i + 1;
            if x >= self.cards[var] {
                return Err(BayesNetError::ValueOutOfRange { var, value: x, card: self.cards[var] });
            }
        }
        let mut assignment = vec![0usize; n_vars];
        assignment[1..].copy_from_slice(features);

        let mut scores = Vec::with_capacity(self.n_classes());
        for c in 0..self.n_classes() {
            assignment[0] = c;
            scores.push(self.joint_log_prob(&assignment));
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z = max + scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln();
        for s in &mut scores {
            *s -= z;
        }
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        Ok((best, scores))
    }

    /// Binary-presence view of a sparse row (any stored entry counts as 1),
    /// for classifiers trained on discretized feature matrices.
    pub fn predict_sparse(&self, row: &SparseVector) -> Result<(usize, Vec<f64>)> {
        let n_features = self.cards.len() - 1;
        let mut features = vec![0usize; n_features];
        for &(col, _) in row.entries() {
            if col as usize >= n_features {
                return Err(BayesNetError::ValueOutOfRange {
                    var: col as usize + 1,
                    value: 1,
                    card: 0,
                });
            }
            features[col as usize] = 1;
        }
        self.predict(&features)
    }

    /// Header (variable count, cardinalities, class labels), then one
    /// `parents i: …` line per variable and the CPT rows at 12 significant
    /// digits. Re-reading and re-writing reproduces the bytes exactly.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bayesnet v1")?;
        writeln!(w, "vars {}", self.cards.len())?;
        let cards: Vec<String> = self.cards.iter().map(usize::to_string).collect();
        writeln!(w, "cards {}", cards.join(" "))?;
        writeln!(w, "classes\t{}", self.class_labels.join("\t"))?;
        for var in 0..self.cards.len() {
            let parents: Vec<String> =
                self.dag.parents(var).iter().map(usize::to_string).collect();
            writeln!(w, "parents {var}:{}{}", if parents.is_empty() { "" } else { " " }, parents.join(" "))?;
        }
        for cpt in &self.cpts {
            for j in 0..cpt.q {
                let row: Vec<String> =
                    (0..cpt.r).map(|k| fmt_g12(cpt.prob(j, k))).collect();
                writeln!(w, "cpt {} {}: {}", cpt.var, j, row.join(" "))?;
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next = || -> Result<(u64, String)> {
            match lines.next() {
                Some((i, line)) => Ok((i as u64 + 1, line?)),
                None => Err(BayesNetError::ParseError(0, "truncated model".into())),
            }
        };
        let (n, header) = next()?;
        if header != "bayesnet v1" {
            return Err(BayesNetError::ParseError(n, "bad header".into()));
        }
        let (n, vars_line) = next()?;
        let n_vars: usize = vars_line
            .strip_prefix("vars ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| BayesNetError::ParseError(n, "bad vars".into()))?;
        let (n, cards_line) = next()?;
        let cards: Vec<usize> = cards_line
            .strip_prefix("cards ")
            .ok_or_else(|| BayesNetError::ParseError(n, "bad cards".into()))?
            .split(' ')
            .map(|t| t.parse().map_err(|_| BayesNetError::ParseError(n, "bad card".into())))
            .collect::<Result<_>>()?;
        if cards.len() != n_vars {
            return Err(BayesNetError::ParseError(n, "cardinality count mismatch".into()));
        }
        let (n, classes_line) = next()?;
        let class_labels: Vec<String> = classes_line
            .strip_prefix("classes\t")
            .ok_or_else(|| BayesNetError::ParseError(n, "missing classes".into()))?
            .split('\t')
            .map(str::to_string)
            .collect();

        let mut dag = Dag::empty(n_vars);
        for var in 0..n_vars {
            let (n, line) = next()?;
            let body = line
                .strip_prefix(&format!("parents {var}:"))
                .ok_or_else(|| BayesNetError::ParseError(n, "missing parents line".into()))?;
            for tok in body.split_whitespace() {
                let p: usize = tok
                    .parse()
                    .map_err(|_| BayesNetError::ParseError(n, "bad parent".into()))?;
                dag.add_edge(p, var);
            }
        }

        let mut cpts = Vec::with_capacity(n_vars);
        for var in 0..n_vars {
            let r = cards[var];
            let q: usize = dag.parents(var).iter().map(|&p| cards[p]).product();
            let mut table = vec![0.0f64; q * r];
            for j in 0..q {
                let (n, line) = next()?;
                let body = line
                    .strip_prefix(&format!("cpt {var} {j}: "))
                    .ok_or_else(|| BayesNetError::ParseError(n, "missing cpt row".into()))?;
                let row: Vec<f64> = body
                    .split(' ')
                    .map(|t| {
                        parse_g12(t).ok_or_else(|| BayesNetError::ParseError(n, "bad prob".into()))
                    })
                    .collect::<Result<_>>()?;
                if row.len() != r {
                    return Err(BayesNetError::ParseError(n, "cpt row width".into()));
                }
                table[j * r..(j + 1) * r].copy_from_slice(&row);
            }
            cpts.push(Cpt { var, r, q, table });
        }
        Ok(Self { dag, cpts, cards, class_labels })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec cannot fail");
        buf
    }
}
