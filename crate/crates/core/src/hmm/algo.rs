//! Scaled forward/backward recursions and Viterbi decoding.

use super::{HmmModel, HmmError, ObservationSeq, Result};

/// Result of the scaled forward pass.
///
/// `alphas[t]` holds the per-step normalized forward variables and
/// `scales[t]` the normalizer, so the exact forward probability at time t
/// is `alphas[t][i] * scales[0..=t].product()` and the sequence
/// log-likelihood is the sum of log scales.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub log_likelihood: f64,
    pub alphas: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
}

/// Computes `ln P(O | λ)` with the per-step scaled recursion.
///
/// A sequence with zero likelihood yields a `-inf` log-likelihood rather
/// than an error; only out-of-range symbols are rejected.
pub fn forward_scaled(model: &HmmModel, obs: &ObservationSeq) -> Result<ForwardPass> {
    model.check_symbols(obs)?;
    let n = model.n_states();
    let t_len = obs.len();

    let mut alphas = vec![vec![0.0f64; n]; t_len];
    let mut scales = vec![0.0f64; t_len];
    let mut log_likelihood = 0.0f64;

    for t in 0..t_len {
        let symbol = obs.symbols[t];
        if t == 0 {
            for i in 0..n {
                alphas[0][i] = model.pi[i] * model.b[i][symbol];
            }
        } else {
            let (prev, cur) = alphas.split_at_mut(t);
            let prev = &prev[t - 1];
            for (j, slot) in cur[0].iter_mut().enumerate() {
                let mass: f64 = (0..n).map(|i| prev[i] * model.a[i][j]).sum();
                *slot = mass * model.b[j][symbol];
            }
        }
        let scale: f64 = alphas[t].iter().sum();
        scales[t] = scale;
        if scale <= 0.0 {
            // Impossible event; everything past this point stays zero.
            return Ok(ForwardPass {
                log_likelihood: f64::NEG_INFINITY,
                alphas,
                scales,
            });
        }
        for a in &mut alphas[t] {
            *a /= scale;
        }
        log_likelihood += scale.ln();
    }

    Ok(ForwardPass { log_likelihood, alphas, scales })
}

/// Backward variables scaled by the forward scales, so that
/// `alphas[t][i] * betas[t][i]` is the state posterior γ_t(i).
pub(crate) fn backward_scaled(
    model: &HmmModel,
    obs: &ObservationSeq,
    scales: &[f64],
) -> Vec<Vec<f64>> {
    let n = model.n_states();
    let t_len = obs.len();
    let mut betas = vec![vec![0.0f64; n]; t_len];
    for v in &mut betas[t_len - 1] {
        *v = 1.0;
    }
    for t in (0..t_len - 1).rev() {
        let symbol = obs.symbols[t + 1];
        let scale = scales[t + 1];
        for i in 0..n {
            let mass: f64 = (0..n)
                .map(|j| model.a[i][j] * model.b[j][symbol] * betas[t + 1][j])
                .sum();
            betas[t][i] = mass / scale;
        }
    }
    betas
}

/// Most probable state path in log space. Backpointer ties resolve to the
/// lower state index. A zero-probability sequence returns `-inf` with a
/// best-effort path.
pub fn viterbi(model: &HmmModel, obs: &ObservationSeq) -> Result<(Vec<usize>, f64)> {
    model.check_symbols(obs)?;
    let n = model.n_states();
    let t_len = obs.len();

    let mut delta = vec![vec![f64::NEG_INFINITY; n]; t_len];
    let mut back = vec![vec![0usize; n]; t_len];

    for i in 0..n {
        delta[0][i] = model.pi[i].ln() + model.b[i][obs.symbols[0]].ln();
    }
    for t in 1..t_len {
        let symbol = obs.symbols[t];
        for j in 0..n {
            let mut best_i = 0;
            let mut best = delta[t - 1][0] + model.a[0][j].ln();
            for i in 1..n {
                let cand = delta[t - 1][i] + model.a[i][j].ln();
                if cand > best {
                    best = cand;
                    best_i = i;
                }
            }
            delta[t][j] = best + model.b[j][symbol].ln();
            back[t][j] = best_i;
        }
    }

    let mut last = 0;
    for i in 1..n {
        if delta[t_len - 1][i] > delta[t_len - 1][last] {
            last = i;
        }
    }
    let log_prob = delta[t_len - 1][last];

    let mut path = vec![0usize; t_len];
    path[t_len - 1] = last;
    for t in (1..t_len).rev() {
        path[t - 1] = back[t][path[t]];
    }
    Ok((path, log_prob))
}

/// Rejects sequences the model cannot emit, mapping them to the dedicated
/// error. Used where a hard failure is preferable to the `-inf` sentinel.
pub(crate) fn require_possible(ll: f64) -> Result<f64> {
    if ll.is_finite() {
        Ok(ll)
    } else {
        Err(HmmError::ImpossibleSequence)
    }
}
