//! Confusion matrices, precision/recall/F1 and report formatting.
//!
//! Averaging follows the usual conventions: micro pools TP/FP/FN over all
//! classes (which for single-label data collapses to accuracy), macro is
//! the unweighted class mean, weighted is the support-weighted class mean.
//! Zero denominators yield 0 and are flagged in the report.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("truth and prediction lists have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Row = true class, column = predicted class.
#[derive(Debug, Clone)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
    class_labels: Vec<String>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>, class_labels: Vec<String>) -> Self {
        assert_eq!(counts.len(), class_labels.len());
        assert!(counts.iter().all(|row| row.len() == class_labels.len()));
        Self { counts, class_labels }
    }

    /// Tallies string-labeled truths against predictions.
    pub fn from_labels(truths: &[String], preds: &[String], labels: &[String]) -> Result<Self> {
        if truths.len() != preds.len() {
            return Err(EvalError::LengthMismatch(truths.len(), preds.len()));
        }
        let index = |l: &String| {
            labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| EvalError::UnknownLabel(l.clone()))
        };
        let c = labels.len();
        let mut counts = vec![vec![0u64; c]; c];
        for (t, p) in truths.iter().zip(preds) {
            counts[index(t)?][index(p)?] += 1;
        }
        Ok(Self::from_counts(counts, labels.to_vec()))
    }

    /// Tallies index-labeled truths against predictions.
    pub fn from_indices(truths: &[u32], preds: &[u32], labels: &[String]) -> Result<Self> {
        if truths.len() != preds.len() {
            return Err(EvalError::LengthMismatch(truths.len(), preds.len()));
        }
        let c = labels.len();
        let mut counts = vec![vec![0u64; c]; c];
        for (&t, &p) in truths.iter().zip(preds) {
            if t as usize >= c {
                return Err(EvalError::UnknownLabel(t.to_string()));
            }
            if p as usize >= c {
                return Err(EvalError::UnknownLabel(p.to_string()));
            }
            counts[t as usize][p as usize] += 1;
        }
        Ok(Self::from_counts(counts, labels.to_vec()))
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn tp(&self, c: usize) -> u64 {
        self.counts[c][c]
    }

    fn fp(&self, c: usize) -> u64 {
        (0..self.n_classes()).filter(|&t| t != c).map(|t| self.counts[t][c]).sum()
    }

    fn fn_(&self, c: usize) -> u64 {
        (0..self.n_classes()).filter(|&p| p != c).map(|p| self.counts[c][p]).sum()
    }

    /// Row sum: number of instances whose true class is `c`.
    pub fn support(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }
}

/// Precision/recall/F1 triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn f1_of(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Per-class metrics; `zero_division` marks classes where a 0/0 was
/// replaced by the 0 convention.
#[derive(Debug, Clone)]
pub struct ClassMetrics {
    pub class_labels: Vec<String>,
    pub per_class: Vec<Prf>,
    pub zero_division: Vec<bool>,
}

pub fn per_class_prf(cm: &ConfusionMatrix) -> Result<ClassMetrics> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let mut per_class = Vec::with_capacity(cm.n_classes());
    let mut zero_division = Vec::with_capacity(cm.n_classes());
    for c in 0..cm.n_classes() {
        let tp = cm.tp(c);
        let (p, pz) = ratio(tp, tp + cm.fp(c));
        let (r, rz) = ratio(tp, tp + cm.fn_(c));
        per_class.push(Prf { precision: p, recall: r, f1: f1_of(p, r) });
        zero_division.push(pz || rz);
    }
    Ok(ClassMetrics {
        class_labels: cm.class_labels.clone(),
        per_class,
        zero_division,
    })
}

/// Micro, macro and weighted averages plus accuracy.
#[derive(Debug, Clone, Copy)]
pub struct AveragedMetrics {
    pub micro: Prf,
    pub macro_avg: Prf,
    pub weighted: Prf,
    pub accuracy: f64,
    pub zero_division_hit: bool,
}

pub fn average_metrics(cm: &ConfusionMatrix) -> Result<AveragedMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let per_class = per_class_prf(cm)?;

    let tp_sum: u64 = (0..cm.n_classes()).map(|c| cm.tp(c)).sum();
    let fp_sum: u64 = (0..cm.n_classes()).map(|c| cm.fp(c)).sum();
    let fn_sum: u64 = (0..cm.n_classes()).map(|c| cm.fn_(c)).sum();
    let (micro_p, _) = ratio(tp_sum, tp_sum + fp_sum);
    let (micro_r, _) = ratio(tp_sum, tp_sum + fn_sum);
    let micro = Prf { precision: micro_p, recall: micro_r, f1: f1_of(micro_p, micro_r) };

    let c = cm.n_classes() as f64;
    let macro_avg = Prf {
        precision: per_class.per_class.iter().map(|m| m.precision).sum::<f64>() / c,
        recall: per_class.per_class.iter().map(|m| m.recall).sum::<f64>() / c,
        f1: per_class.per_class.iter().map(|m| m.f1).sum::<f64>() / c,
    };

    let mut weighted = Prf { precision: 0.0, recall: 0.0, f1: 0.0 };
    for (ci, m) in per_class.per_class.iter().enumerate() {
        let w = cm.support(ci) as f64 / total as f64;
        weighted.precision += w * m.precision;
        weighted.recall += w * m.recall;
        weighted.f1 += w * m.f1;
    }

    let accuracy = tp_sum as f64 / total as f64;
    Ok(AveragedMetrics {
        micro,
        macro_avg,
        weighted,
        accuracy,
        zero_division_hit: per_class.zero_division.iter().any(|&z| z),
    })
}

/// One classifier/dataset result destined for a report.
#[derive(Debug, Clone)]
pub struct NamedResult {
    pub classifier: String,
    pub dataset: String,
    pub metrics: AveragedMetrics,
}

/// Rendered report: an aligned text table plus machine-readable CSV rows
/// with columns (classifier, dataset, avg_kind, precision, recall, f1,
/// accuracy). Numbers carry 4 decimal places.
#[derive(Debug, Clone)]
pub struct Report {
    pub text: String,
    pub csv: String,
}

pub fn format_report(results: &[NamedResult]) -> Report {
    let rows: Vec<[String; 7]> = results
        .iter()
        .flat_map(|r| {
            let m = &r.metrics;
            [
                ("micro", m.micro),
                ("macro", m.macro_avg),
                ("weighted", m.weighted),
            ]
            .into_iter()
            .map(|(kind, prf)| {
                [
                    r.classifier.clone(),
                    r.dataset.clone(),
                    kind.to_string(),
                    format!("{:.4}", prf.precision),
                    format!("{:.4}", prf.recall),
                    format!("{:.4}", prf.f1),
                    format!("{:.4}", m.accuracy),
                ]
            })
            .collect::<Vec<_>>()
        })
        .collect();

    let header = ["classifier", "dataset", "avg_kind", "precision", "recall", "f1", "accuracy"];
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }

    let mut text = String::new();
    for (i, h) in header.iter().enumerate() {
        let _ = write!(text, "{:<width$}  ", h, width = widths[i]);
    }
    text.push('\n');
    for (i, _) in header.iter().enumerate() {
        let _ = write!(text, "{}  ", "-".repeat(widths[i]));
    }
    text.push('\n');
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            let _ = write!(text, "{:<width$}  ", cell, width = widths[i]);
        }
        text.push('\n');
    }
    if results.iter().any(|r| r.metrics.zero_division_hit) {
        text.push_str("note: zero-denominator metrics reported as 0\n");
    }

    let mut csv = String::from("classifier,dataset,avg_kind,precision,recall,f1,accuracy\n");
    for row in &rows {
        let escaped: Vec<String> = row
            .iter()
            .map(|cell| {
                if cell.contains(',') || cell.contains('"') {
                    format!("\"{}\"", cell.replace('"', "\"\""))
                } else {
                    cell.clone()
                }
            })
            .collect();
        csv.push_str(&escaped.join(","));
        csv.push('\n');
    }
    Report { text, csv }
}
