//! Multinomial naive Bayes with additive smoothing.
//!
//! Feature weights act as fractional counts, so TF-IDF rows plug in
//! directly even though the generative story assumes integers.

use std::io::{BufRead, Write};

use super::{log_sum_exp, BaselineError, Result};
use crate::textprep::{FeatureMatrix, SparseVector};
use crate::util::{fmt_g12, parse_g12};

/// ln P(class) plus a class × vocabulary table of ln P(term | class).
#[derive(Debug, Clone)]
pub struct NaiveBayesModel {
    class_log_priors: Vec<f64>,
    feature_log_likelihoods: Vec<Vec<f64>>,
    class_labels: Vec<String>,
}

impl NaiveBayesModel {
    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn class_log_priors(&self) -> &[f64] {
        &self.class_log_priors
    }

    pub fn feature_log_likelihoods(&self) -> &[Vec<f64>] {
        &self.feature_log_likelihoods
    }

    /// Maximum-posterior class: `argmax_c ln P(c) + Σ_t x_t ln P(t|c)`.
    /// Returns the class index and normalized log-posteriors.
    pub fn predict(&self, row: &SparseVector) -> Result<(usize, Vec<f64>)> {
        let vocab_len = self.feature_log_likelihoods[0].len() as u32;
        let mut scores = self.class_log_priors.clone();
        for &(col, weight) in row.entries() {
            if col >= vocab_len {
                return Err(BaselineError::ColumnOutOfRange(col));
            }
            for (c, score) in scores.iter_mut().enumerate() {
                *score += weight * self.feature_log_likelihoods[c][col as usize];
            }
        }
        let z = log_sum_exp(&scores);
        for s in &mut scores {
            *s -= z;
        }
        let best = argmax_tie_lowest(&scores);
        Ok((best, scores))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "nb v1")?;
        writeln!(w, "classes\t{}", self.class_labels.join("\t"))?;
        let priors: Vec<String> = self.class_log_priors.iter().map(|&p| fmt_g12(p)).collect();
        writeln!(w, "priors {}", priors.join(" "))?;
        for (c, row) in self.feature_log_likelihoods.iter().enumerate() {
            let vals: Vec<String> = row.iter().map(|&v| fmt_g12(v)).collect();
            writeln!(w, "loglik {c} {}", vals.join(" "))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next_line = || -> Result<(u64, String)> {
            match lines.next() {
                Some((i, line)) => Ok((i as u64 + 1, line?)),
                None => Err(BaselineError::ParseError(0, "truncated model".into())),
            }
        };
        let (n, header) = next_line()?;
        if header != "nb v1" {
            return Err(BaselineError::ParseError(n, "bad header".into()));
        }
        let (n, classes) = next_line()?;
        let class_labels: Vec<String> = classes
            .strip_prefix("classes\t")
            .ok_or_else(|| BaselineError::ParseError(n, "missing classes".into()))?
            .split('\t')
            .map(str::to_string)
            .collect();
        let (n, priors) = next_line()?;
        let class_log_priors = parse_values(
            priors
                .strip_prefix("priors ")
                .ok_or_else(|| BaselineError::ParseError(n, "missing priors".into()))?,
            n,
        )?;
        let mut feature_log_likelihoods = Vec::with_capacity(class_labels.len());
        for c in 0..class_labels.len() {
            let (n, line) = next_line()?;
            let body = line
                .strip_prefix(&format!("loglik {c} "))
                .ok_or_else(|| BaselineError::ParseError(n, "missing loglik row".into()))?;
            feature_log_likelihoods.push(parse_values(body, n)?);
        }
        Ok(Self { class_log_priors, feature_log_likelihoods, class_labels })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec cannot fail");
        buf
    }
}

fn parse_values(s: &str, line: u64) -> Result<Vec<f64>> {
    s.split(' ')
        .map(|tok| {
            parse_g12(tok).ok_or_else(|| BaselineError::ParseError(line, format!("bad value `{tok}`")))
        })
        .collect()
}

pub(crate) fn argmax_tie_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Fits the multinomial model: `ln P(t|c) = ln((W_tc + s) / (Σ_t' W_t'c + s·V))`
/// with `W` the per-class sum of feature weights, priors from class counts.
pub fn train_multinomial_nb(matrix: &FeatureMatrix, smoothing: f64) -> Result<NaiveBayesModel> {
    let n_classes = matrix.n_classes();
    let vocab_len = matrix.n_columns();
    let mut weight_sums = vec![vec![0.0f64; vocab_len]; n_classes];
    let mut class_counts = vec![0u64; n_classes];

    for (row_idx, (row, &label)) in matrix.rows().iter().zip(matrix.labels()).enumerate() {
        class_counts[label as usize] += 1;
        for &(col, weight) in row.entries() {
            if weight < 0.0 {
                return Err(BaselineError::NegativeFeature { row: row_idx, column: col });
            }
            weight_sums[label as usize][col as usize] += weight;
        }
    }

    let total = matrix.n_rows() as f64;
    let class_log_priors: Vec<f64> = class_counts
        .iter()
        .map(|&c| (c as f64 / total).ln())
        .collect();

    let v = vocab_len as f64;
    let feature_log_likelihoods: Vec<Vec<f64>> = weight_sums
        .iter()
        .map(|ws| {
            let denom = ws.iter().sum::<f64>() + smoothing * v;
            ws.iter().map(|&w| ((w + smoothing) / denom).ln()).collect()
        })
        .collect();

    Ok(NaiveBayesModel {
        class_log_priors,
        feature_log_likelihoods,
        class_labels: matrix.class_labels().to_vec(),
    })
}
