//! Logistic regression and linear SVM trained by seeded (sub)gradient
//! descent over sparse rows.
//!
//! The L2 penalty is applied through a weight-scale factor so each update
//! touches only the nonzero coordinates of the current row.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::nb::argmax_tie_lowest;
use super::{log_sum_exp, BaselineError, Result, TrainConfig};
use crate::textprep::{FeatureMatrix, SparseVector};
use crate::util::{fmt_g12, parse_g12};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    Logistic,
    Svm,
}

impl LinearKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinearKind::Logistic => "logistic",
            LinearKind::Svm => "svm",
        }
    }
}

/// Linear classifier: one weight vector per class for logistic/one-vs-rest
/// SVM, a single vector for the binary SVM (decision by margin sign).
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub kind: LinearKind,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    class_labels: Vec<String>,
    /// Objective/loss after each epoch (training log).
    pub epoch_objectives: Vec<f64>,
}

impl LinearModel {
    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn n_features(&self) -> usize {
        self.weights[0].len()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "linear v1")?;
        writeln!(w, "kind {}", self.kind.as_str())?;
        writeln!(w, "classes\t{}", self.class_labels.join("\t"))?;
        let bias: Vec<String> = self.bias.iter().map(|&b| fmt_g12(b)).collect();
        writeln!(w, "bias {}", bias.join(" "))?;
        for (i, row) in self.weights.iter().enumerate() {
            let vals: Vec<String> = row.iter().map(|&v| fmt_g12(v)).collect();
            writeln!(w, "weights {i} {}", vals.join(" "))?;
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
        if header != "linear v1" {
            return Err(BaselineError::ParseError(n, "bad header".into()));
        }
        let (n, kind_line) = next_line()?;
        let kind = match kind_line.strip_prefix("kind ") {
            Some("logistic") => LinearKind::Logistic,
            Some("svm") => LinearKind::Svm,
            _ => return Err(BaselineError::ParseError(n, "bad kind".into())),
        };
        let (n, classes) = next_line()?;
        let class_labels: Vec<String> = classes
            .strip_prefix("classes\t")
            .ok_or_else(|| BaselineError::ParseError(n, "missing classes".into()))?
            .split('\t')
            .map(str::to_string)
            .collect();
        let (n, bias_line) = next_line()?;
        let bias = parse_values(
            bias_line
                .strip_prefix("bias ")
                .ok_or_else(|| BaselineError::ParseError(n, "missing bias".into()))?,
            n,
        )?;
        let mut weights = Vec::with_capacity(bias.len());
        for i in 0..bias.len() {
            let (n, line) = next_line()?;
            let body = line
                .strip_prefix(&format!("weights {i} "))
                .ok_or_else(|| BaselineError::ParseError(n, "missing weights row".into()))?;
            weights.push(parse_values(body, n)?);
        }
        Ok(Self { kind, weights, bias, class_labels, epoch_objectives: Vec::new() })
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

/// Weight vector stored as `scale * values` so the L2 shrink step is O(1).
struct ScaledVec {
    values: Vec<f64>,
    scale: f64,
}

impl ScaledVec {
    fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len], scale: 1.0 }
    }

    fn dot(&self, row: &SparseVector) -> f64 {
        let s: f64 = row
            .entries()
            .iter()
            .map(|&(col, x)| self.values[col as usize] * x)
            .sum();
        self.scale * s
    }

    fn shrink(&mut self, factor: f64) {
        self.scale *= factor;
        if self.scale < 1e-9 {
            for v in &mut self.values {
                *v *= self.scale;
            }
            self.scale = 1.0;
        }
    }

    fn add_sparse(&mut self, row: &SparseVector, coef: f64) {
        let c = coef / self.scale;
        for &(col, x) in row.entries() {
            self.values[col as usize] += c * x;
        }
    }

    fn materialize(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v * self.scale).collect()
    }
}

fn check_columns(matrix: &FeatureMatrix) -> Result<()> {
    let width = matrix.n_columns() as u32;
    for row in matrix.rows() {
        if let Some(max) = row.max_column() {
            if max >= width {
                return Err(BaselineError::ColumnOutOfRange(max));
            }
        }
    }
    Ok(())
}

fn epoch_rate(cfg: &TrainConfig, epoch: usize) -> f64 {
    cfg.learning_rate / (1.0 + cfg.decay * epoch as f64)
}

/// Full-batch softmax loss and gradient of the L2-regularized negative
/// log-likelihood; the reference point for the SGD trainer and the
/// finite-difference check.
pub fn logreg_loss_and_grad(
    rows: &[SparseVector],
    labels: &[u32],
    weights: &[Vec<f64>],
    bias: &[f64],
    l2_lambda: f64,
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let n_classes = weights.len();
    let n_features = weights[0].len();
    let n = rows.len() as f64;

    let mut loss = 0.0;
    let mut grad_w = vec![vec![0.0; n_features]; n_classes];
    let mut grad_b = vec![0.0; n_classes];

    for (row, &label) in rows.iter().zip(labels) {
        let scores: Vec<f64> = (0..n_classes)
            .map(|c| {
                bias[c]
                    + row
                        .entries()
                        .iter()
                        .map(|&(col, x)| weights[c][col as usize] * x)
                        .sum::<f64>()
            })
            .collect();
        let z = log_sum_exp(&scores);
        loss -= scores[label as usize] - z;
        for c in 0..n_classes {
            let p = (scores[c] - z).exp();
            let g = p - if c == label as usize { 1.0 } else { 0.0 };
            for &(col, x) in row.entries() {
                grad_w[c][col as usize] += g * x / n;
            }
            grad_b[c] += g / n;
        }
    }
    loss /= n;

    for c in 0..n_classes {
        for j in 0..n_features {
            loss += 0.5 * l2_lambda * weights[c][j] * weights[c][j];
            grad_w[c][j] += l2_lambda * weights[c][j];
        }
    }
    (loss, grad_w, grad_b)
}

/// Trains multinomial (softmax) logistic regression with per-sample SGD.
/// Binary problems use the same two-vector parameterization; the induced
/// decision function is the usual sigmoid of the margin difference.
pub fn train_logreg(matrix: &FeatureMatrix, cfg: &TrainConfig) -> Result<LinearModel> {
    if matrix.n_classes() < 2 {
        return Err(BaselineError::SingleClass);
    }
    check_columns(matrix)?;
    let n_classes = matrix.n_classes();
    let n_features = matrix.n_columns();

    let mut weights: Vec<ScaledVec> = (0..n_classes).map(|_| ScaledVec::zeros(n_features)).collect();
    let mut bias = vec![0.0f64; n_classes];
    let mut order: Vec<usize> = (0..matrix.n_rows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut epoch_objectives = Vec::with_capacity(cfg.epochs);
    let mut scores = vec![0.0f64; n_classes];

    for epoch in 0..cfg.epochs {
        let eta = epoch_rate(cfg, epoch);
        // Oversized eta*lambda would flip the weight sign; clamp to the
        // projection onto zero instead.
        let shrink = (1.0 - eta * cfg.l2_lambda).max(0.0);
        order.shuffle(&mut rng);
        for &i in &order {
            let row = &matrix.rows()[i];
            let label = matrix.labels()[i] as usize;
            for (c, score) in scores.iter_mut().enumerate() {
                *score = weights[c].dot(row) + bias[c];
            }
            let z = log_sum_exp(&scores);
            for c in 0..n_classes {
                let p = (scores[c] - z).exp();
                let g = p - if c == label { 1.0 } else { 0.0 };
                weights[c].shrink(shrink);
                if g != 0.0 {
                    weights[c].add_sparse(row, -eta * g);
                }
                bias[c] -= eta * g;
            }
        }
        let dense: Vec<Vec<f64>> = weights.iter().map(ScaledVec::materialize).collect();
        let (loss, _, _) =
            logreg_loss_and_grad(matrix.rows(), matrix.labels(), &dense, &bias, cfg.l2_lambda);
        epoch_objectives.push(loss);
    }

    Ok(LinearModel {
        kind: LinearKind::Logistic,
        weights: weights.iter().map(ScaledVec::materialize).collect(),
        bias,
        class_labels: matrix.class_labels().to_vec(),
        epoch_objectives,
    })
}

/// Regularized hinge objective `λ/2‖w‖² + mean hinge` for one binary
/// weight vector over ±1 targets.
pub fn svm_objective(
    rows: &[SparseVector],
    targets: &[f64],
    weights: &[f64],
    bias: f64,
    l2_lambda: f64,
) -> f64 {
    let hinge: f64 = rows
        .iter()
        .zip(targets)
        .map(|(row, &y)| {
            let margin: f64 = bias
                + row
                    .entries()
                    .iter()
                    .map(|&(col, x)| weights[col as usize] * x)
                    .sum::<f64>();
            (1.0 - y * margin).max(0.0)
        })
        .sum::<f64>()
        / rows.len() as f64;
    let norm2: f64 = weights.iter().map(|&w| w * w).sum();
    0.5 * l2_lambda * norm2 + hinge
}

fn train_binary_svm(
    matrix: &FeatureMatrix,
    targets: &[f64],
    cfg: &TrainConfig,
) -> (Vec<f64>, f64, Vec<f64>) {
    let n_features = matrix.n_columns();
    let mut w = ScaledVec::zeros(n_features);
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..matrix.n_rows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Running average of epoch-end snapshots; its objective trace is what
    // the training log reports.
    let mut avg_w = vec![0.0f64; n_features];
    let mut avg_b = 0.0f64;
    let mut epoch_objectives = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let eta = epoch_rate(cfg, epoch);
        let shrink = (1.0 - eta * cfg.l2_lambda).max(0.0);
        order.shuffle(&mut rng);
        for &i in &order {
            let row = &matrix.rows()[i];
            let y = targets[i];
            let margin = y * (w.dot(row) + b);
            w.shrink(shrink);
            if margin < 1.0 {
                w.add_sparse(row, eta * y);
                b += eta * y;
            }
        }
        let snapshot = w.materialize();
        let k = epoch as f64;
        for (a, s) in avg_w.iter_mut().zip(&snapshot) {
            *a = (*a * k + s) / (k + 1.0);
        }
        avg_b = (avg_b * k + b) / (k + 1.0);
        epoch_objectives.push(svm_objective(matrix.rows(), targets, &avg_w, avg_b, cfg.l2_lambda));
    }
    (avg_w, avg_b, epoch_objectives)
}

/// Trains a linear SVM by subgradient descent on the hinge loss. Two-class
/// problems produce a single weight vector (class 1 is the positive side);
/// more classes train one-vs-rest, one binary model per class.
pub fn train_linear_svm(matrix: &FeatureMatrix, cfg: &TrainConfig) -> Result<LinearModel> {
    if matrix.n_classes() < 2 {
        return Err(BaselineError::SingleClass);
    }
    check_columns(matrix)?;
    let n_classes = matrix.n_classes();

    if n_classes == 2 {
        let targets: Vec<f64> = matrix
            .labels()
            .iter()
            .map(|&l| if l == 1 { 1.0 } else { -1.0 })
            .collect();
        let (w, b, epoch_objectives) = train_binary_svm(matrix, &targets, cfg);
        return Ok(LinearModel {
            kind: LinearKind::Svm,
            weights: vec![w],
            bias: vec![b],
            class_labels: matrix.class_labels().to_vec(),
            epoch_objectives,
        });
    }

    let mut weights = Vec::with_capacity(n_classes);
    let mut bias = Vec::with_capacity(n_classes);
    let mut epoch_objectives = vec![0.0; cfg.epochs];
    for c in 0..n_classes {
        let targets: Vec<f64> = matrix
            .labels()
            .iter()
            .map(|&l| if l as usize == c { 1.0 } else { -1.0 })
            .collect();
        let sub_cfg = TrainConfig { seed: cfg.seed.wrapping_add(c as u64), ..*cfg };
        let (w, b, objs) = train_binary_svm(matrix, &targets, &sub_cfg);
        weights.push(w);
        bias.push(b);
        for (total, o) in epoch_objectives.iter_mut().zip(objs) {
            *total += o;
        }
    }
    Ok(LinearModel {
        kind: LinearKind::Svm,
        weights,
        bias,
        class_labels: matrix.class_labels().to_vec(),
        epoch_objectives,
    })
}

/// Scores a row. Logistic models return softmax probabilities; SVMs return
/// raw margins (binary models expose `[-m, m]`). Ties pick the lowest
/// class index.
pub fn predict_linear(model: &LinearModel, row: &SparseVector) -> Result<(usize, Vec<f64>)> {
    let width = model.n_features() as u32;
    if let Some(max) = row.max_column() {
        if max >= width {
            return Err(BaselineError::ColumnOutOfRange(max));
        }
    }
    let margins: Vec<f64> = model
        .weights
        .iter()
        .zip(&model.bias)
        .map(|(w, &b)| {
            b + row
                .entries()
                .iter()
                .map(|&(col, x)| w[col as usize] * x)
                .sum::<f64>()
        })
        .collect();

    let scores = match model.kind {
        LinearKind::Logistic => {
            let z = log_sum_exp(&margins);
            margins.iter().map(|&m| (m - z).exp()).collect::<Vec<f64>>()
        }
        LinearKind::Svm => {
            if margins.len() == 1 {
                vec![-margins[0], margins[0]]
            } else {
                margins
            }
        }
    };
    Ok((argmax_tie_lowest(&scores), scores))
}
