//! Structure search over classifier DAGs.
//!
//! Every search starts from the naive-Bayes base structure (class parent on
//! each feature) and only ever edits feature-feature arcs; the class arcs
//! are frozen. Candidate moves are ranked by score delta with a fixed tie
//! order (add < delete < reverse, then lexicographic endpoints), so every
//! search is deterministic.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::score::family_score_for;
use super::{Dag, DiscreteData, Result, ScoreConfig};

/// Upper bound on accepted look-ahead steps; the first-move acceptance rule
/// does not by itself guarantee termination.
const LAGD_MAX_STEPS: usize = 1000;
/// Per-restart step budget for the repeated hill climber.
const RHC_MAX_STEPS: usize = 10_000;
/// Deltas below this are float residue from recomputing identical family
/// sums along different paths, not improvements.
const MIN_SCORE_DELTA: f64 = 1e-9;

/// A learned structure plus the network score after the initial structure
/// and after each accepted move.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub dag: Dag,
    pub trace: Vec<f64>,
}

impl SearchResult {
    pub fn final_score(&self) -> f64 {
        *self.trace.last().expect("trace holds at least the initial score")
    }
}

/// Naive-Bayes shape: the class (variable 0) parents every feature.
pub fn base_structure(n_vars: usize) -> Dag {
    let mut dag = Dag::empty(n_vars);
    for v in 1..n_vars {
        dag.add_edge(0, v);
    }
    dag
}

/// Feature-feature arc edit. The derived ordering (variant order, then
/// endpoints) is the documented tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Move {
    Add(usize, usize),
    Delete(usize, usize),
    Reverse(usize, usize),
}

impl Move {
    fn inverse(self) -> Move {
        match self {
            Move::Add(u, v) => Move::Delete(u, v),
            Move::Delete(u, v) => Move::Add(u, v),
            Move::Reverse(u, v) => Move::Reverse(v, u),
        }
    }
}

fn apply_move(dag: &mut Dag, mv: Move) {
    match mv {
        Move::Add(u, v) => dag.add_edge(u, v),
        Move::Delete(u, v) => dag.remove_edge(u, v),
        Move::Reverse(u, v) => {
            dag.remove_edge(u, v);
            dag.add_edge(v, u);
        }
    }
}

fn undo_move(dag: &mut Dag, mv: Move) {
    apply_move(dag, mv.inverse());
}

/// Family-score memo; structure search revisits the same (var, parents)
/// pairs constantly.
struct Scorer<'a> {
    data: &'a DiscreteData,
    cfg: &'a ScoreConfig,
    cache: HashMap<(usize, Vec<usize>), f64>,
}

impl<'a> Scorer<'a> {
    fn new(data: &'a DiscreteData, cfg: &'a ScoreConfig) -> Self {
        Self { data, cfg, cache: HashMap::new() }
    }

    fn family(&mut self, var: usize, parents: &[usize]) -> Result<f64> {
        let key = (var, parents.to_vec());
        if let Some(&s) = self.cache.get(&key) {
            return Ok(s);
        }
        let s = family_score_for(self.data, var, parents, self.cfg)?;
        self.cache.insert(key, s);
        Ok(s)
    }

    fn family_with(&mut self, var: usize, parents: &[usize], extra: usize) -> Result<f64> {
        let mut with: Vec<usize> = parents.to_vec();
        let pos = with.binary_search(&extra).unwrap_err();
        with.insert(pos, extra);
        self.family(var, &with)
    }

    fn family_without(&mut self, var: usize, parents: &[usize], gone: usize) -> Result<f64> {
        let without: Vec<usize> = parents.iter().copied().filter(|&p| p != gone).collect();
        self.family(var, &without)
    }

    fn network(&mut self, dag: &Dag) -> Result<f64> {
        let mut total = self.cfg.structure_prior;
        for var in 0..dag.n_vars() {
            total += self.family(var, dag.parents(var))?;
        }
        Ok(total)
    }

    fn delta(&mut self, dag: &Dag, mv: Move) -> Result<f64> {
        match mv {
            Move::Add(u, v) => {
                Ok(self.family_with(v, dag.parents(v), u)? - self.family(v, dag.parents(v))?)
            }
            Move::Delete(u, v) => {
                Ok(self.family_without(v, dag.parents(v), u)? - self.family(v, dag.parents(v))?)
            }
            Move::Reverse(u, v) => {
                let child_delta =
                    self.family_without(v, dag.parents(v), u)? - self.family(v, dag.parents(v))?;
                let parent_delta =
                    self.family_with(u, dag.parents(u), v)? - self.family(u, dag.parents(u))?;
                Ok(child_delta + parent_delta)
            }
        }
    }
}

/// Legal feature-feature moves in canonical order.
fn legal_moves(dag: &Dag, cfg: &ScoreConfig) -> Vec<Move> {
    let n = dag.n_vars();
    let mut moves = Vec::new();
    for u in 1..n {
        for v in 1..n {
            if u == v || dag.has_edge(u, v) {
                continue;
            }
            if dag.parents(v).len() < cfg.max_parents && !dag.would_create_cycle(u, v) {
                moves.push(Move::Add(u, v));
            }
        }
    }
    let feature_edges: Vec<(usize, usize)> =
        dag.edges().into_iter().filter(|&(u, _)| u >= 1).collect();
    for &(u, v) in &feature_edges {
        moves.push(Move::Delete(u, v));
    }
    for &(u, v) in &feature_edges {
        if dag.parents(u).len() >= cfg.max_parents {
            continue;
        }
        let mut scratch = dag.clone();
        scratch.remove_edge(u, v);
        if !scratch.would_create_cycle(v, u) {
            moves.push(Move::Reverse(u, v));
        }
    }
    moves
}

/// Best move by (delta desc, move asc); `positive_only` demands a strict
/// improvement.
fn best_move(
    scorer: &mut Scorer,
    dag: &Dag,
    cfg: &ScoreConfig,
    positive_only: bool,
    forbidden: Option<&HashMap<Move, usize>>,
    step: usize,
) -> Result<Option<(Move, f64)>> {
    let mut best: Option<(Move, f64)> = None;
    for mv in legal_moves(dag, cfg) {
        if let Some(tabu) = forbidden {
            if tabu.get(&mv).is_some_and(|&expiry| expiry > step) {
                continue;
            }
        }
        let delta = scorer.delta(dag, mv)?;
        if positive_only && delta <= MIN_SCORE_DELTA {
            continue;
        }
        // Canonical enumeration order makes "strictly greater" implement
        // the documented tie-break.
        if best.is_none_or(|(_, d)| delta > d) {
            best = Some((mv, delta));
        }
    }
    Ok(best)
}

/// Greedy ascent from an explicit starting structure.
pub fn hill_climb_from(
    data: &DiscreteData,
    start: Dag,
    cfg: &ScoreConfig,
    max_steps: usize,
) -> Result<SearchResult> {
    let mut scorer = Scorer::new(data, cfg);
    let mut dag = start;
    let mut score = scorer.network(&dag)?;
    let mut trace = vec![score];
    for step in 0..max_steps {
        match best_move(&mut scorer, &dag, cfg, true, None, step)? {
            Some((mv, delta)) => {
                apply_move(&mut dag, mv);
                score += delta;
                trace.push(score);
            }
            None => break,
        }
    }
    Ok(SearchResult { dag, trace })
}

/// Hill climbing with add/delete/reverse moves from the base structure.
pub fn search_hill_climb(
    data: &DiscreteData,
    cfg: &ScoreConfig,
    max_steps: usize,
) -> Result<SearchResult> {
    hill_climb_from(data, base_structure(data.n_vars()), cfg, max_steps)
}

/// Order-restricted greedy parent addition.
///
/// For each feature in `order`, repeatedly adds the single best-scoring
/// parent among its predecessors while the family score strictly improves
/// and the parent budget allows; ties pick the lowest variable index.
pub fn search_k2(data: &DiscreteData, order: &[usize], cfg: &ScoreConfig) -> Result<SearchResult> {
    let n = data.n_vars();
    assert_eq!(order.len(), n.saturating_sub(1), "order must cover the feature variables");
    {
        let mut seen = vec![false; n];
        for &v in order {
            assert!(v >= 1 && v < n && !seen[v], "order must be a permutation of 1..n");
            seen[v] = true;
        }
    }
    let mut scorer = Scorer::new(data, cfg);
    let mut dag = base_structure(n);
    let mut score = scorer.network(&dag)?;
    let mut trace = vec![score];

    for (pos, &var) in order.iter().enumerate() {
        loop {
            if dag.parents(var).len() >= cfg.max_parents {
                break;
            }
            let current = scorer.family(var, dag.parents(var))?;
            let mut best: Option<(usize, f64)> = None;
            let mut predecessors: Vec<usize> = order[..pos].to_vec();
            predecessors.sort_unstable();
            for p in predecessors {
                if dag.has_edge(p, var) {
                    continue;
                }
                let delta = scorer.family_with(var, dag.parents(var), p)? - current;
                if delta > MIN_SCORE_DELTA && best.is_none_or(|(_, d)| delta > d) {
                    best = Some((p, delta));
                }
            }
            match best {
                Some((p, delta)) => {
                    dag.add_edge(p, var);
                    score += delta;
                    trace.push(score);
                }
                None => break,
            }
        }
    }
    Ok(SearchResult { dag, trace })
}

/// Random acyclic classifier structure: base arcs plus feature-feature
/// edges drawn along a shuffled feature order.
fn random_start(rng: &mut ChaCha8Rng, n_vars: usize, cfg: &ScoreConfig) -> Dag {
    let mut dag = base_structure(n_vars);
    if n_vars < 3 {
        return dag;
    }
    let mut perm: Vec<usize> = (1..n_vars).collect();
    perm.shuffle(rng);
    for pos in 1..perm.len() {
        let v = perm[pos];
        while dag.parents(v).len() < cfg.max_parents && rng.random::<f64>() < 0.5 {
            let candidates: Vec<usize> = perm[..pos]
                .iter()
                .copied()
                .filter(|&u| !dag.has_edge(u, v))
                .collect();
            if candidates.is_empty() {
                break;
            }
            let u = candidates[rng.random_range(0..candidates.len())];
            dag.add_edge(u, v);
        }
    }
    dag
}

/// Hill climbing restarted from random structures; the first restart uses
/// the base structure, so `restarts = 1` reduces to plain hill climbing.
/// Returns the best local optimum (ties keep the earliest restart).
pub fn search_repeated_hill_climb(
    data: &DiscreteData,
    cfg: &ScoreConfig,
    restarts: usize,
    seed: u64,
) -> Result<SearchResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<SearchResult> = None;
    for restart in 0..restarts.max(1) {
        let start = if restart == 0 {
            base_structure(data.n_vars())
        } else {
            random_start(&mut rng, data.n_vars(), cfg)
        };
        let result = hill_climb_from(data, start, cfg, RHC_MAX_STEPS)?;
        if best.as_ref().is_none_or(|b| result.final_score() > b.final_score()) {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Top `good_ops` moves by (delta desc, move asc).
fn ranked_moves(
    scorer: &mut Scorer,
    dag: &Dag,
    cfg: &ScoreConfig,
    good_ops: usize,
) -> Result<Vec<(Move, f64)>> {
    let mut scored: Vec<(Move, f64)> = legal_moves(dag, cfg)
        .into_iter()
        .map(|mv| scorer.delta(dag, mv).map(|d| (mv, d)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(good_ops);
    Ok(scored)
}

/// Best total delta achievable by a sequence of up to `depth` moves chosen
/// from the `good_ops` top-ranked moves at each level. Returns the first
/// move of the best sequence.
fn best_sequence(
    scorer: &mut Scorer,
    dag: &mut Dag,
    cfg: &ScoreConfig,
    depth: usize,
    good_ops: usize,
) -> Result<Option<(Move, f64)>> {
    let candidates = ranked_moves(scorer, dag, cfg, good_ops)?;
    if candidates.is_empty() {
        return Ok(None);
    }
    if depth == 1 {
        return Ok(Some(candidates[0]));
    }
    let mut best: Option<(Move, f64)> = None;
    for (mv, delta) in candidates {
        apply_move(dag, mv);
        let tail = best_sequence(scorer, dag, cfg, depth - 1, good_ops)?;
        undo_move(dag, mv);
        let total = delta + tail.map_or(0.0, |(_, t)| t);
        if best.is_none_or(|(_, t)| total > t) {
            best = Some((mv, total));
        }
    }
    Ok(best)
}

/// Look-ahead hill climbing: each step searches for the best sequence of
/// `look_ahead` moves over the `good_ops` best-ranked moves per level, and
/// accepts that sequence's first move while the sequence total stays
/// strictly positive. `look_ahead = 1` is exactly plain hill climbing.
pub fn search_lagd(
    data: &DiscreteData,
    cfg: &ScoreConfig,
    look_ahead: usize,
    good_ops: usize,
) -> Result<SearchResult> {
    let look_ahead = look_ahead.max(1);
    let good_ops = good_ops.max(1);
    let mut scorer = Scorer::new(data, cfg);
    let mut dag = base_structure(data.n_vars());
    let mut score = scorer.network(&dag)?;
    let mut trace = vec![score];

    for _ in 0..LAGD_MAX_STEPS {
        let Some((first, total)) = best_sequence(&mut scorer, &mut dag, cfg, look_ahead, good_ops)?
        else {
            break;
        };
        if total <= MIN_SCORE_DELTA {
            break;
        }
        let first_delta = scorer.delta(&dag, first)?;
        apply_move(&mut dag, first);
        score += first_delta;
        trace.push(score);
    }
    Ok(SearchResult { dag, trace })
}

/// Tabu search: takes the best non-tabu move each step even when it is
/// worsening, forbids the inverse of each taken move for `tabu_length`
/// steps, and returns the best structure ever visited.
pub fn search_tabu(
    data: &DiscreteData,
    cfg: &ScoreConfig,
    tabu_length: usize,
    max_steps: usize,
) -> Result<SearchResult> {
    let mut scorer = Scorer::new(data, cfg);
    let mut dag = base_structure(data.n_vars());
    let mut score = scorer.network(&dag)?;
    let mut trace = vec![score];
    let mut best_dag = dag.clone();
    let mut best_score = score;
    let mut tabu: HashMap<Move, usize> = HashMap::new();

    for step in 0..max_steps {
        let Some((mv, delta)) = best_move(&mut scorer, &dag, cfg, false, Some(&tabu), step)?
        else {
            break;
        };
        apply_move(&mut dag, mv);
        score += delta;
        trace.push(score);
        tabu.insert(mv.inverse(), step + tabu_length.max(1));
        if score > best_score {
            best_score = score;
            best_dag = dag.clone();
        }
    }
    Ok(SearchResult { dag: best_dag, trace })
}
