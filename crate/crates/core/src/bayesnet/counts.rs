//! Discretized data views and sufficient-statistic tables.
//!
//! Counting works over two backings: a dense row matrix (general
//! cardinalities, used by tests and small data) and a sparse binary one
//! built straight from a feature matrix, where each feature variable keeps
//! a postings list of the rows it occurs in. The sparse tally walks only
//! the union of the involved postings lists and books the remaining rows
//! in bulk against the all-absent configuration.

use super::{BayesNetError, Result};
use crate::textprep::FeatureMatrix;

/// Cap on `q_i * r_i` count cells per variable.
pub const DEFAULT_CELL_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone)]
enum Backing {
    Dense {
        rows: Vec<Vec<u8>>,
    },
    SparseBinary {
        labels: Vec<u32>,
        /// Per feature variable (index `var - 1`): sorted row ids where
        /// the feature is present.
        postings: Vec<Vec<u32>>,
    },
}

/// Discrete dataset over variables `0..n_vars`; variable 0 is the class
/// when the data backs a classifier.
#[derive(Debug, Clone)]
pub struct DiscreteData {
    cards: Vec<usize>,
    n_rows: usize,
    backing: Backing,
}

impl DiscreteData {
    /// Dense construction from explicit rows; `rows[r][v]` is the value of
    /// variable `v` in row `r`.
    pub fn from_rows(rows: Vec<Vec<u8>>, cards: Vec<usize>) -> Self {
        let n_rows = rows.len();
        for row in &rows {
            assert_eq!(row.len(), cards.len(), "row width mismatch");
            for (v, &x) in row.iter().enumerate() {
                assert!((x as usize) < cards[v], "value out of range for var {v}");
            }
        }
        Self { cards, n_rows, backing: Backing::Dense { rows } }
    }

    /// Binary discretization of a sparse feature matrix: any stored entry
    /// counts as present. Variable 0 is the class; feature column `c`
    /// becomes variable `c + 1` with two states.
    pub fn from_feature_matrix(matrix: &FeatureMatrix) -> Self {
        let n_features = matrix.n_columns();
        let mut cards = Vec::with_capacity(n_features + 1);
        cards.push(matrix.n_classes());
        cards.extend(std::iter::repeat_n(2usize, n_features));

        let mut postings: Vec<Vec<u32>> = vec![Vec::new(); n_features];
        for (row_id, row) in matrix.rows().iter().enumerate() {
            for &(col, _) in row.entries() {
                postings[col as usize].push(row_id as u32);
            }
        }
        Self {
            cards,
            n_rows: matrix.n_rows(),
            backing: Backing::SparseBinary { labels: matrix.labels().to_vec(), postings },
        }
    }

    pub fn n_vars(&self) -> usize {
        self.cards.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn card(&self, var: usize) -> usize {
        self.cards[var]
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn value(&self, row: usize, var: usize) -> usize {
        match &self.backing {
            Backing::Dense { rows } => rows[row][var] as usize,
            Backing::SparseBinary { labels, postings } => {
                if var == 0 {
                    labels[row] as usize
                } else {
                    usize::from(postings[var - 1].binary_search(&(row as u32)).is_ok())
                }
            }
        }
    }

    pub(crate) fn class_labels_vec(&self) -> Option<&[u32]> {
        match &self.backing {
            Backing::SparseBinary { labels, .. } => Some(labels),
            Backing::Dense { .. } => None,
        }
    }

    pub(crate) fn postings(&self, feature_var: usize) -> Option<&[u32]> {
        match &self.backing {
            Backing::SparseBinary { postings, .. } => Some(&postings[feature_var - 1]),
            Backing::Dense { .. } => None,
        }
    }

    /// Tallies `N_ijk` for `var` under the given parent set.
    ///
    /// The parent configuration index is the mixed-radix encoding of the
    /// parent values with the first parent (in sorted order) as the most
    /// significant digit.
    pub fn collect_counts(&self, var: usize, parents: &[usize]) -> Result<CountTable> {
        self.collect_counts_with_limit(var, parents, DEFAULT_CELL_LIMIT)
    }

    pub fn collect_counts_with_limit(
        &self,
        var: usize,
        parents: &[usize],
        cell_limit: usize,
    ) -> Result<CountTable> {
        debug_assert!(parents.windows(2).all(|w| w[0] < w[1]), "parents must be sorted");
        debug_assert!(!parents.contains(&var), "self-parent");
        let r = self.cards[var];
        let mut q: u128 = 1;
        for &p in parents {
            q *= self.cards[p] as u128;
        }
        let cells = q * r as u128;
        if cells > cell_limit as u128 {
            return Err(BayesNetError::CardinalityOverflow { var, cells, limit: cell_limit });
        }
        let q = q as usize;

        let mut counts = vec![0u64; q * r];
        match &self.backing {
            Backing::Dense { rows } => {
                for row in rows {
                    let mut j = 0usize;
                    for &p in parents {
                        j = j * self.cards[p] + row[p] as usize;
                    }
                    counts[j * r + row[var] as usize] += 1;
                }
            }
            Backing::SparseBinary { labels, postings } => {
                self.tally_sparse(var, parents, r, &mut counts, labels, postings);
            }
        }

        let n_ij: Vec<u64> = counts.chunks(r).map(|c| c.iter().sum()).collect();
        Ok(CountTable { var, r, q, counts, n_ij, n_total: self.n_rows as u64 })
    }

    fn tally_sparse(
        &self,
        var: usize,
        parents: &[usize],
        r: usize,
        counts: &mut [u64],
        labels: &[u32],
        postings: &[Vec<u32>],
    ) {
        let n_classes = self.cards[0];
        let class_is_parent = parents.first() == Some(&0);

        // Feature variables whose presence decides this family's counts.
        let mut involved: Vec<usize> = parents.iter().copied().filter(|&p| p > 0).collect();
        if var > 0 {
            involved.push(var);
        }
        involved.sort_unstable();
        let lists: Vec<&[u32]> = involved.iter().map(|&v| postings[v - 1].as_slice()).collect();

        let mut total_per_class = vec![0u64; n_classes];
        for &l in labels {
            total_per_class[l as usize] += 1;
        }
        let mut union_per_class = vec![0u64; n_classes];
        let mut union_size = 0u64;

        // Walk the union of the postings lists in row order.
        let mut cursors = vec![0usize; lists.len()];
        loop {
            let mut next_row = u32::MAX;
            for (list, &cur) in lists.iter().zip(&cursors) {
                if cur < list.len() {
                    next_row = next_row.min(list[cur]);
                }
            }
            if next_row == u32::MAX {
                break;
            }
            let mut present = vec![false; involved.len()];
            for ((list, cur), flag) in lists.iter().zip(&mut cursors).zip(&mut present) {
                if *cur < list.len() && list[*cur] == next_row {
                    *flag = true;
                    *cur += 1;
                }
            }
            let row = next_row as usize;
            let class = labels[row] as usize;
            union_size += 1;
            union_per_class[class] += 1;

            let value_of = |v: usize| -> usize {
                if v == 0 {
                    class
                } else {
                    let idx = involved.binary_search(&v).expect("involved feature");
                    usize::from(present[idx])
                }
            };
            let mut j = 0usize;
            for &p in parents {
                j = j * self.cards[p] + value_of(p);
            }
            counts[j * r + value_of(var)] += 1;
        }

        // Book rows outside the union: every involved feature is absent.
        if var == 0 {
            // Parents are features, all absent -> configuration 0.
            for c in 0..n_classes {
                counts[c] += total_per_class[c] - union_per_class[c];
            }
        } else if class_is_parent {
            for c in 0..n_classes {
                let mut j = 0usize;
                for &p in parents {
                    j = j * self.cards[p] + if p == 0 { c } else { 0 };
                }
                counts[j * r] += total_per_class[c] - union_per_class[c];
            }
        } else {
            counts[0] += self.n_rows as u64 - union_size;
        }
    }
}

/// `N_ijk` tallies for one family: `q` parent configurations times `r`
/// states, plus the per-configuration marginals `N_ij`.
#[derive(Debug, Clone)]
pub struct CountTable {
    pub var: usize,
    pub r: usize,
    pub q: usize,
    counts: Vec<u64>,
    n_ij: Vec<u64>,
    pub n_total: u64,
}

impl CountTable {
    pub fn count(&self, j: usize, k: usize) -> u64 {
        self.counts[j * self.r + k]
    }

    pub fn n_ij(&self, j: usize) -> u64 {
        self.n_ij[j]
    }

    /// Effective parameter count `K_i = (r - 1) * q`.
    pub fn parameter_count(&self) -> f64 {
        (self.r as f64 - 1.0) * self.q as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::{SparseVector, Vocabulary};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn sparse_from_dense(rows: &[Vec<u8>], n_classes: usize) -> DiscreteData {
        // Columns 1.. of the dense rows become sparse features.
        let n_features = rows[0].len() - 1;
        let terms = (0..n_features).map(|i| format!("t{i}")).collect();
        let vocab = Vocabulary::from_parts(terms, vec![1; n_features], rows.len());
        let sparse_rows: Vec<SparseVector> = rows
            .iter()
            .map(|row| {
                let entries: Vec<(u32, f64)> = row[1..]
                    .iter()
                    .enumerate()
                    .filter(|&(_, &x)| x > 0)
                    .map(|(c, _)| (c as u32, 1.0))
                    .collect();
                SparseVector::new(entries)
            })
            .collect();
        let labels: Vec<u32> = rows.iter().map(|r| u32::from(r[0])).collect();
        let class_labels = (0..n_classes).map(|c| format!("c{c}")).collect();
        let matrix = FeatureMatrix::new(sparse_rows, labels, class_labels, Arc::new(vocab));
        DiscreteData::from_feature_matrix(&matrix)
    }

    #[test]
    fn parentless_tally() {
        let rows = vec![vec![1u8], vec![0], vec![1], vec![1]];
        let data = DiscreteData::from_rows(rows, vec![2]);
        let table = data.collect_counts(0, &[]).unwrap();
        assert_eq!(table.q, 1);
        assert_eq!(table.count(0, 0), 1);
        assert_eq!(table.count(0, 1), 3);
        assert_eq!(table.n_ij(0), 4);
    }

    #[test]
    fn empty_parent_set_means_one_configuration() {
        let data = DiscreteData::from_rows(vec![vec![0u8, 1], vec![1, 0]], vec![2, 2]);
        let table = data.collect_counts(1, &[]).unwrap();
        assert_eq!(table.q, 1);
    }

    #[test]
    fn two_binary_parents_give_four_configurations() {
        let data = DiscreteData::from_rows(
            vec![vec![0u8, 0, 0], vec![1, 1, 1]],
            vec![2, 2, 2],
        );
        let table = data.collect_counts(0, &[1, 2]).unwrap();
        assert_eq!(table.q, 4);
        assert_eq!(table.count(0, 0), 1);
        assert_eq!(table.count(3, 1), 1);
    }

    #[test]
    fn mixed_radix_puts_first_parent_most_significant() {
        // Var 2 with parents [0, 1]; card(0) = 3, card(1) = 2.
        // Row with X0=2, X1=1 must land in configuration 2*2 + 1 = 5.
        let data = DiscreteData::from_rows(vec![vec![2u8, 1, 0]], vec![3, 2, 2]);
        let table = data.collect_counts(2, &[0, 1]).unwrap();
        assert_eq!(table.q, 6);
        assert_eq!(table.count(5, 0), 1);
    }

    #[test]
    fn cell_limit_enforced() {
        let data = DiscreteData::from_rows(vec![vec![0u8, 0, 0]], vec![2, 2, 2]);
        match data.collect_counts_with_limit(0, &[1, 2], 4) {
            Err(BayesNetError::CardinalityOverflow { cells, .. }) => assert_eq!(cells, 8),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn sparse_and_dense_backings_agree(
            rows in proptest::collection::vec(
                proptest::collection::vec(0u8..2, 5),
                1..25,
            ),
            var in 0usize..5,
            parent_mask in 0u8..32,
        ) {
            // Column 0 is the class (binary here), columns 1..5 features.
            let cards = vec![2usize; 5];
            let parents: Vec<usize> = (0..5)
                .filter(|&p| p != var && parent_mask & (1 << p) != 0)
                .collect();
            let dense = DiscreteData::from_rows(rows.clone(), cards);
            let sparse = sparse_from_dense(&rows, 2);
            let a = dense.collect_counts(var, &parents).unwrap();
            let b = sparse.collect_counts(var, &parents).unwrap();
            prop_assert_eq!(a.q, b.q);
            for j in 0..a.q {
                prop_assert_eq!(a.n_ij(j), b.n_ij(j));
                for k in 0..a.r {
                    prop_assert_eq!(a.count(j, k), b.count(j, k));
                }
            }
        }

        #[test]
        fn counts_sum_to_n(
            rows in proptest::collection::vec(
                proptest::collection::vec(0u8..3, 3),
                1..20,
            ),
        ) {
            let cards = vec![3usize; 3];
            let data = DiscreteData::from_rows(rows.clone(), cards);
            let table = data.collect_counts(1, &[0, 2]).unwrap();
            let total: u64 = (0..table.q).map(|j| table.n_ij(j)).sum();
            prop_assert_eq!(total, rows.len() as u64);
        }
    }
}
