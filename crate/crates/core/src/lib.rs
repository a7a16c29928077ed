//! Probabilistic graphical models for text sentiment classification.
//!
//! The crate covers the full benchmarking pipeline:
//!
//! - [`corpus`] — labeled dataset ingestion (CSV/ARFF), stratified splits,
//!   minority-class upsampling.
//! - [`textprep`] — text normalization, vocabulary construction and sparse
//!   TF-IDF / binary-presence feature matrices.
//! - [`bayesnet`] — score-based Bayesian-network structure learning (K2,
//!   hill climbing and variants, tabu search, Chow-Liu/TAN), CPT estimation
//!   and maximum-posterior classification.
//! - [`hmm`] — discrete hidden Markov models: scaled forward, Viterbi,
//!   Baum-Welch, and a per-class HMM document classifier.
//! - [`baselines`] — multinomial naive Bayes, logistic regression and a
//!   linear SVM trained on TF-IDF features.
//! - [`eval`] — confusion matrices, precision/recall/F1 with micro, macro
//!   and weighted averaging, and report formatting.
//!
//! All randomized procedures are seeded and deterministic; parallel code
//! paths assemble results in input order so output does not depend on the
//! worker count.

pub mod baselines;
pub mod bayesnet;
pub mod corpus;
pub mod eval;
pub mod hmm;
pub mod textprep;
pub(crate) mod util;

pub use util::{fingerprint_hex, fmt_g12, parse_g12};
