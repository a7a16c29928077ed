//! Per-class HMM document classification: a shared symbol vocabulary, one
//! Baum-Welch-trained model per class, and scaled-forward scoring.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::algo::forward_scaled;
use super::train::baum_welch;
use super::{HmmError, HmmModel, ObservationSeq, Result};
use crate::util::{fmt_g12, parse_g12};

/// Token-to-symbol mapping shared by every class model. The top `cap`
/// terms by total frequency get their own symbol; everything else maps to
/// the reserved unknown symbol (the last index).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVocab {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl SymbolVocab {
    pub fn n_symbols(&self) -> usize {
        self.terms.len() + 1
    }

    pub fn unknown_symbol(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn symbol(&self, term: &str) -> usize {
        self.index.get(term).copied().unwrap_or_else(|| self.unknown_symbol())
    }

    /// Encodes a token stream; an empty document becomes a single unknown
    /// symbol so every document stays classifiable (T >= 1).
    pub fn encode(&self, tokens: &[String]) -> ObservationSeq {
        if tokens.is_empty() {
            return ObservationSeq::new(vec![self.unknown_symbol()]);
        }
        ObservationSeq::new(tokens.iter().map(|t| self.symbol(t)).collect())
    }
}

/// Builds the shared vocabulary from tokenized documents: top `cap` terms
/// by total frequency, ties broken lexicographically.
pub fn build_symbol_vocab(docs: &[Vec<String>], cap: usize) -> SymbolVocab {
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        for token in doc {
            *freq.entry(token.as_str()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(cap);
    let terms: Vec<String> = ranked.into_iter().map(|(t, _)| t.to_string()).collect();
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    SymbolVocab { terms, index }
}

/// Training knobs for the per-class classifier.
#[derive(Debug, Clone, Copy)]
pub struct HmmTrainConfig {
    pub n_states: usize,
    pub symbol_cap: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for HmmTrainConfig {
    fn default() -> Self {
        Self { n_states: 3, symbol_cap: 1000, max_iters: 100, tol: 1e-6, seed: 0 }
    }
}

/// One trained model per class plus empirical class priors.
#[derive(Debug, Clone)]
pub struct ClassHmmBank {
    models: Vec<HmmModel>,
    class_priors: Vec<f64>,
    vocab: SymbolVocab,
    class_labels: Vec<String>,
    /// Per-class Baum-Welch log-likelihood traces (training log).
    pub training_traces: Vec<Vec<f64>>,
}

impl ClassHmmBank {
    pub fn models(&self) -> &[HmmModel] {
        &self.models
    }

    pub fn class_priors(&self) -> &[f64] {
        &self.class_priors
    }

    pub fn vocab(&self) -> &SymbolVocab {
        &self.vocab
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "hmm-bank v1")?;
        writeln!(w, "classes\t{}", self.class_labels.join("\t"))?;
        let priors: Vec<String> = self.class_priors.iter().map(|&p| fmt_g12(p)).collect();
        writeln!(w, "priors {}", priors.join(" "))?;
        writeln!(w, "symbols {}", self.vocab.terms.len())?;
        for term in &self.vocab.terms {
            writeln!(w, "{term}")?;
        }
        for (label, model) in self.class_labels.iter().zip(&self.models) {
            writeln!(w, "model\t{label}")?;
            model.write(&mut w)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut line_no = 0u64;
        let mut next = |lines: &mut std::io::Lines<R>| -> Result<String> {
            line_no += 1;
            lines
                .next()
                .ok_or_else(|| HmmError::ParseError(line_no, "truncated bank".into()))?
                .map_err(HmmError::from)
        };
        let header = next(&mut lines)?;
        if header != "hmm-bank v1" {
            return Err(HmmError::ParseError(1, "bad header".into()));
        }
        let classes = next(&mut lines)?;
        let class_labels: Vec<String> = classes
            .strip_prefix("classes\t")
            .ok_or_else(|| HmmError::ParseError(2, "missing classes".into()))?
            .split('\t')
            .map(str::to_string)
            .collect();
        let priors_line = next(&mut lines)?;
        let class_priors: Vec<f64> = priors_line
            .strip_prefix("priors ")
            .ok_or_else(|| HmmError::ParseError(3, "missing priors".into()))?
            .split(' ')
            .map(|tok| parse_g12(tok).ok_or_else(|| HmmError::ParseError(3, "bad prior".into())))
            .collect::<Result<_>>()?;
        let n_terms: usize = next(&mut lines)?
            .strip_prefix("symbols ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| HmmError::ParseError(4, "bad symbol count".into()))?;
        let mut terms = Vec::with_capacity(n_terms);
        for _ in 0..n_terms {
            terms.push(next(&mut lines)?);
        }
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t): (usize, &String)| (t.clone(), i))
            .collect();
        let vocab = SymbolVocab { terms, index };

        let mut models = Vec::with_capacity(class_labels.len());
        for label in &class_labels {
            let mut ln = 0u64;
            let marker: String = match lines.next() {
                Some(Ok(l)) => l,
                _ => return Err(HmmError::ParseError(0, "missing model block".into())),
            };
            if marker != format!("model\t{label}") {
                return Err(HmmError::ParseError(0, format!("expected model block for `{label}`")));
            }
            models.push(HmmModel::read_from_lines(&mut lines, &mut ln)?);
        }
        Ok(Self { models, class_priors, vocab, class_labels, training_traces: Vec::new() })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec cannot fail");
        buf
    }
}

/// Seeded random row with a small floor so no probability starts at zero.
fn random_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 1e-3).collect();
    let sum: f64 = row.iter().sum();
    for v in &mut row {
        *v /= sum;
    }
    row
}

fn init_model(seed: u64, n_states: usize, n_symbols: usize) -> HmmModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = random_row(&mut rng, n_states);
    let a = (0..n_states).map(|_| random_row(&mut rng, n_states)).collect();
    let b = (0..n_states).map(|_| random_row(&mut rng, n_symbols)).collect();
    HmmModel { a, b, pi }
}

/// Trains one HMM per class on that class's token sequences.
///
/// Class models initialize from per-class seeds derived from `cfg.seed` and
/// train independently (in parallel); priors are empirical class
/// frequencies. Deterministic for a fixed seed.
pub fn train_class_hmms(
    docs: &[Vec<String>],
    labels: &[usize],
    class_labels: &[String],
    cfg: &HmmTrainConfig,
) -> Result<ClassHmmBank> {
    assert_eq!(docs.len(), labels.len());
    if docs.is_empty() {
        return Err(HmmError::EmptyCorpus);
    }
    let vocab = build_symbol_vocab(docs, cfg.symbol_cap);
    let n_symbols = vocab.n_symbols();

    let mut per_class: Vec<Vec<ObservationSeq>> = vec![Vec::new(); class_labels.len()];
    for (doc, &label) in docs.iter().zip(labels) {
        per_class[label].push(vocab.encode(doc));
    }
    for (c, seqs) in per_class.iter().enumerate() {
        if seqs.is_empty() {
            return Err(HmmError::EmptyClass(class_labels[c].clone()));
        }
    }

    let results: Vec<Result<(HmmModel, Vec<f64>)>> = per_class
        .par_iter()
        .enumerate()
        .map(|(c, seqs)| {
            let seed = cfg.seed.wrapping_add((c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let init = init_model(seed, cfg.n_states.max(1), n_symbols);
            baum_welch(&init, seqs, cfg.max_iters, cfg.tol)
        })
        .collect();

    let mut models = Vec::with_capacity(class_labels.len());
    let mut training_traces = Vec::with_capacity(class_labels.len());
    for r in results {
        let (model, trace) = r?;
        models.push(model);
        training_traces.push(trace);
    }

    let total = docs.len() as f64;
    let class_priors: Vec<f64> = per_class.iter().map(|s| s.len() as f64 / total).collect();

    Ok(ClassHmmBank {
        models,
        class_priors,
        vocab,
        class_labels: class_labels.to_vec(),
        training_traces,
    })
}

/// Scores `ln prior(c) + ln P(O | λ_c)` for every class and returns the
/// argmax (ties resolve to the lowest class index) with the raw scores.
pub fn classify_sequence(bank: &ClassHmmBank, obs: &ObservationSeq) -> Result<(usize, Vec<f64>)> {
    let mut scores = Vec::with_capacity(bank.models.len());
    for (model, &prior) in bank.models.iter().zip(&bank.class_priors) {
        let fwd = forward_scaled(model, obs)?;
        scores.push(prior.ln() + fwd.log_likelihood);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Ok((best, scores))
}
