//! Score-based Bayesian-network classifier learning.
//!
//! Variable 0 is always the class variable. Classifier structures start
//! from the naive-Bayes shape (class parent on every feature); searches
//! add, delete or reverse feature-feature arcs only and never touch the
//! class arcs.

mod classifier;
mod counts;
mod score;
mod search;
mod tan;

pub use classifier::{estimate_cpts, BayesNetClassifier, Cpt};
pub use counts::{CountTable, DiscreteData, DEFAULT_CELL_LIMIT};
pub use score::{family_score, ln_gamma, network_score};
pub use search::{
    base_structure, hill_climb_from, search_hill_climb, search_k2, search_lagd,
    search_repeated_hill_climb, search_tabu, SearchResult,
};
pub use tan::{class_conditional_mi, learn_tan};

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BayesNetError {
    #[error("variable {var} has {cells} count cells, over the {limit} limit")]
    CardinalityOverflow { var: usize, cells: u128, limit: usize },
    #[error("alpha must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("TAN needs at least two feature variables")]
    TooFewVariables,
    #[error("variable {var} has value {value} but only {card} states")]
    ValueOutOfRange { var: usize, value: usize, card: usize },
    #[error("graph contains a cycle")]
    CyclicGraph,
    #[error("model parse error at line {0}: {1}")]
    ParseError(u64, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BayesNetError>;

/// Scoring metric from the usual structure-learning families: three
/// Bayesian-Dirichlet variants and three penalized-entropy variants. All
/// are oriented so that higher is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Bayesian-Dirichlet with per-cell prior `alpha`.
    Bayes,
    /// Bayesian-Dirichlet equivalent-uniform: prior mass `alpha` split as
    /// `alpha / (r_i * q_i)` per cell.
    Bdeu,
    /// Bayesian-Dirichlet with unit per-cell prior (Cooper-Herskovits).
    K2,
    /// `-H - (K/2) ln N`.
    Mdl,
    /// `-H`.
    Entropy,
    /// `-H - K`.
    Aic,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Bayes,
        Metric::Bdeu,
        Metric::K2,
        Metric::Mdl,
        Metric::Entropy,
        Metric::Aic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Bayes => "bayes",
            Metric::Bdeu => "bdeu",
            Metric::K2 => "k2",
            Metric::Mdl => "mdl",
            Metric::Entropy => "entropy",
            Metric::Aic => "aic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bayes" => Some(Metric::Bayes),
            "bdeu" => Some(Metric::Bdeu),
            "k2" => Some(Metric::K2),
            "mdl" => Some(Metric::Mdl),
            "entropy" => Some(Metric::Entropy),
            "aic" => Some(Metric::Aic),
            _ => None,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scoring and search limits.
#[derive(Debug, Clone, Copy)]
pub struct ScoreConfig {
    pub metric: Metric,
    /// Equivalent sample size for the Bayesian metrics.
    pub alpha: f64,
    /// Upper bound on a feature variable's parent count, the class parent
    /// included. The naive-Bayes class arcs are exempt: with
    /// `max_parents = 0` searches simply cannot add anything.
    pub max_parents: usize,
    /// `ln P(B_s)`; uniform structure prior, so 0.
    pub structure_prior: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { metric: Metric::K2, alpha: 0.5, max_parents: 2, structure_prior: 0.0 }
    }
}

impl ScoreConfig {
    pub fn with_metric(metric: Metric) -> Self {
        Self { metric, ..Self::default() }
    }
}

/// Directed acyclic graph stored as per-variable sorted parent lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
}

impl Dag {
    /// Edgeless graph over `n` variables.
    pub fn empty(n: usize) -> Self {
        Self { parents: vec![Vec::new(); n] }
    }

    pub fn n_vars(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, var: usize) -> &[usize] {
        &self.parents[var]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].binary_search(&from).is_ok()
    }

    /// Inserts `from -> to`, keeping the parent list sorted. Panics on
    /// self-loops or duplicates; callers check cycles beforehand.
    pub fn add_edge(&mut self, from: usize, to: usize) {
        assert_ne!(from, to, "self-parent");
        let list = &mut self.parents[to];
        match list.binary_search(&from) {
            Ok(_) => panic!("duplicate edge {from} -> {to}"),
            Err(pos) => list.insert(pos, from),
        }
    }

    pub fn remove_edge(&mut self, from: usize, to: usize) {
        let list = &mut self.parents[to];
        let pos = list.binary_search(&from).expect("edge must exist");
        list.remove(pos);
    }

    /// All feature-feature edges `(from, to)` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (to, parents) in self.parents.iter().enumerate() {
            for &from in parents {
                out.push((from, to));
            }
        }
        out.sort_unstable();
        out
    }

    /// True when `to` can reach `from` along directed edges, i.e. adding
    /// `from -> to` would close a cycle.
    pub fn would_create_cycle(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        // Children adjacency on the fly; graphs in search are small.
        let n = self.n_vars();
        let mut children = vec![Vec::new(); n];
        for (child, parents) in self.parents.iter().enumerate() {
            for &p in parents {
                children[p].push(child);
            }
        }
        let mut stack = vec![to];
        let mut seen = vec![false; n];
        while let Some(v) = stack.pop() {
            if v == from {
                return true;
            }
            if seen[v] {
                continue;
            }
            seen[v] = true;
            stack.extend(children[v].iter().copied());
        }
        false
    }

    /// Kahn's algorithm; errors on cycles.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.n_vars();
        let mut in_degree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (child, parents) in self.parents.iter().enumerate() {
            for &p in parents {
                children[p].push(child);
            }
        }
        let mut queue: Vec<usize> = (0..n).filter(|&v| in_degree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop() {
            order.push(v);
            for &c in &children[v] {
                in_degree[c] -= 1;
                if in_degree[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(BayesNetError::CyclicGraph)
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }
}
