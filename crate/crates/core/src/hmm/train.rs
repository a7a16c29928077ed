//! Baum-Welch expectation-maximization with multi-sequence accumulation.

use super::algo::{backward_scaled, forward_scaled, require_possible};
use super::{HmmError, HmmModel, ObservationSeq, Result};

/// Re-estimates `λ = (A, B, π)` on a corpus of observation sequences.
///
/// Stops when the relative log-likelihood improvement drops below `tol` or
/// after `max_iters` iterations. Returns the refined model and the corpus
/// log-likelihood measured at the start of each iteration; EM guarantees
/// this trace is non-decreasing. Rows that receive no expected mass (a
/// state never visited) are reset to uniform so the stochasticity
/// invariants always hold.
pub fn baum_welch(
    init: &HmmModel,
    corpus: &[ObservationSeq],
    max_iters: usize,
    tol: f64,
) -> Result<(HmmModel, Vec<f64>)> {
    if corpus.is_empty() {
        return Err(HmmError::EmptyCorpus);
    }
    init.validate()?;
    let n = init.n_states();
    let m = init.n_symbols();

    let mut model = init.clone();
    let mut trace = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;

    for _ in 0..max_iters.max(1) {
        let mut pi_acc = vec![0.0f64; n];
        let mut a_num = vec![vec![0.0f64; n]; n];
        let mut a_den = vec![0.0f64; n];
        let mut b_num = vec![vec![0.0f64; m]; n];
        let mut b_den = vec![0.0f64; n];
        let mut total_ll = 0.0f64;

        for obs in corpus {
            let fwd = forward_scaled(&model, obs)?;
            total_ll += require_possible(fwd.log_likelihood)?;
            let betas = backward_scaled(&model, obs, &fwd.scales);
            let t_len = obs.len();

            for i in 0..n {
                pi_acc[i] += fwd.alphas[0][i] * betas[0][i];
            }
            for t in 0..t_len {
                let symbol = obs.symbols[t];
                for i in 0..n {
                    let gamma = fwd.alphas[t][i] * betas[t][i];
                    b_num[i][symbol] += gamma;
                    b_den[i] += gamma;
                    if t + 1 < t_len {
                        a_den[i] += gamma;
                    }
                }
            }
            for t in 0..t_len - 1 {
                let next_symbol = obs.symbols[t + 1];
                let scale = fwd.scales[t + 1];
                for i in 0..n {
                    for j in 0..n {
                        let xi = fwd.alphas[t][i] * model.a[i][j] * model.b[j][next_symbol]
                            * betas[t + 1][j]
                            / scale;
                        a_num[i][j] += xi;
                    }
                }
            }
        }

        trace.push(total_ll);
        let done = prev_ll.is_finite() && {
            let rel = (total_ll - prev_ll).abs() / prev_ll.abs().max(1.0);
            rel < tol
        };
        prev_ll = total_ll;

        let seqs = corpus.len() as f64;
        for (i, p) in pi_acc.iter().enumerate() {
            model.pi[i] = p / seqs;
        }
        normalize_or_uniform(&mut model.pi);
        for i in 0..n {
            if a_den[i] > 0.0 {
                for j in 0..n {
                    model.a[i][j] = a_num[i][j] / a_den[i];
                }
            }
            normalize_or_uniform(&mut model.a[i]);
            if b_den[i] > 0.0 {
                for k in 0..m {
                    model.b[i][k] = b_num[i][k] / b_den[i];
                }
            }
            normalize_or_uniform(&mut model.b[i]);
        }

        if done {
            break;
        }
    }

    Ok((model, trace))
}

fn normalize_or_uniform(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 {
        for v in row.iter_mut() {
            *v /= sum;
        }
    } else {
        let u = 1.0 / row.len() as f64;
        for v in row.iter_mut() {
            *v = u;
        }
    }
}
