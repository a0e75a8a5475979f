//! Forward–backward in log space and Viterbi decoding.

use crate::crf::features::FeatureVector;
use crate::crf::model::{Compiled, CrfModel};
use crate::error::{Error, Result};
use crate::textproc::LabelSequence;

pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log forward table (`n x L`) and log partition.
fn forward(em: &[f64], tr: &[f64], n: usize, l: usize) -> (Vec<f64>, f64) {
    let mut alpha = vec![0.0; n * l];
    alpha[..l].copy_from_slice(&em[..l]);
    for t in 1..n {
        for y in 0..l {
            let prev = &alpha[(t - 1) * l..t * l];
            let lse = log_sum_exp((0..l).map(|p| prev[p] + tr[p * l + y]));
            alpha[t * l + y] = lse + em[t * l + y];
        }
    }
    let log_z = log_sum_exp(alpha[(n - 1) * l..].iter().copied());
    (alpha, log_z)
}

fn backward(em: &[f64], tr: &[f64], n: usize, l: usize) -> Vec<f64> {
    let mut beta = vec![0.0; n * l];
    for t in (0..n.saturating_sub(1)).rev() {
        for y in 0..l {
            let lse = log_sum_exp((0..l).map(|nx| tr[y * l + nx] + em[(t + 1) * l + nx] + beta[(t + 1) * l + nx]));
            beta[t * l + y] = lse;
        }
    }
    beta
}

impl CrfModel {
    /// `log Z(x)`, the log-sum of `exp(score)` over every labeling.
    pub fn log_partition(&self, feats: &[FeatureVector]) -> f64 {
        if feats.is_empty() {
            return 0.0;
        }
        let compiled = self.compile(feats);
        let em = self.emissions(&compiled, self.weights());
        forward(&em, self.transitions(self.weights()), feats.len(), self.num_labels()).1
    }

    /// Regularized conditional log-likelihood `Σ log p(y|x) − l2·‖w‖²` and its
    /// gradient.
    pub fn log_likelihood_and_gradient(
        &self,
        batch: &[(Vec<FeatureVector>, LabelSequence)],
    ) -> Result<(f64, Vec<f64>)> {
        let compiled = batch
            .iter()
            .map(|(feats, labels)| {
                if feats.len() != labels.len() {
                    return Err(Error::LengthMismatch { expected: feats.len(), found: labels.len() });
                }
                Ok((self.compile(feats), self.label_ids(labels)?))
            })
            .collect::<Result<Vec<_>>>()?;
        self.objective(&compiled, self.weights())
    }

    pub(crate) fn objective(&self, data: &[(Compiled, Vec<usize>)], weights: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; weights.len()];
        let mut ll = 0.0;
        for (compiled, ys) in data {
            ll += self.accumulate(compiled, ys, weights, &mut grad);
        }
        let mut penalty = 0.0;
        for (g, w) in grad.iter_mut().zip(weights) {
            penalty += w * w;
            *g -= 2.0 * self.l2() * w;
        }
        let value = ll - self.l2() * penalty;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical("non-finite objective or gradient".into()));
        }
        Ok((value, grad))
    }

    /// Adds empirical minus expected counts for one sequence into `grad` and
    /// returns its log-likelihood.
    fn accumulate(&self, compiled: &Compiled, ys: &[usize], weights: &[f64], grad: &mut [f64]) -> f64 {
        let n = ys.len();
        if n == 0 {
            return 0.0;
        }
        let l = self.num_labels();
        let em = self.emissions(compiled, weights);
        let tr = self.transitions(weights);
        let (alpha, log_z) = forward(&em, tr, n, l);
        let beta = backward(&em, tr, n, l);
        let tr_offset = self.transition_index(0, 0);

        for t in 0..n {
            let mut marginal = vec![0.0; l];
            for (y, m) in marginal.iter_mut().enumerate() {
                *m = (alpha[t * l + y] + beta[t * l + y] - log_z).exp();
            }
            marginal[ys[t]] -= 1.0;
            for &f in &compiled[t] {
                let row = &mut grad[f * l..(f + 1) * l];
                for (g, m) in row.iter_mut().zip(&marginal) {
                    *g -= m;
                }
            }
            if t > 0 {
                grad[tr_offset + ys[t - 1] * l + ys[t]] += 1.0;
                for p in 0..l {
                    for y in 0..l {
                        let lp = alpha[(t - 1) * l + p] + tr[p * l + y] + em[t * l + y] + beta[t * l + y] - log_z;
                        grad[tr_offset + p * l + y] -= lp.exp();
                    }
                }
            }
        }

        let gold = self.score_compiled(compiled, ys, weights);
        gold - log_z
    }

    /// Most probable labeling. Ties go to the lower label index, both for the
    /// final label and at every backpointer.
    pub fn viterbi(&self, feats: &[FeatureVector]) -> LabelSequence {
        self.tags_for(&self.viterbi_ids(&self.compile(feats)))
    }

    /// Label indices of [`CrfModel::viterbi`].
    pub fn viterbi_path(&self, feats: &[FeatureVector]) -> Vec<usize> {
        self.viterbi_ids(&self.compile(feats))
    }

    fn viterbi_ids(&self, compiled: &Compiled) -> Vec<usize> {
        let n = compiled.len();
        if n == 0 {
            return Vec::new();
        }
        let l = self.num_labels();
        let em = self.emissions(compiled, self.weights());
        let tr = self.transitions(self.weights());

        let mut delta = vec![0.0; n * l];
        let mut back = vec![0usize; n * l];
        delta[..l].copy_from_slice(&em[..l]);
        for t in 1..n {
            for y in 0..l {
                let mut best = 0;
                let mut best_score = delta[(t - 1) * l] + tr[y];
                for p in 1..l {
                    let s = delta[(t - 1) * l + p] + tr[p * l + y];
                    if s > best_score {
                        best = p;
                        best_score = s;
                    }
                }
                delta[t * l + y] = best_score + em[t * l + y];
                back[t * l + y] = best;
            }
        }

        let last = &delta[(n - 1) * l..];
        let mut y = 0;
        for (k, &s) in last.iter().enumerate().skip(1) {
            if s > last[y] {
                y = k;
            }
        }
        let mut path = vec![0; n];
        path[n - 1] = y;
        for t in (1..n).rev() {
            y = back[t * l + y];
            path[t - 1] = y;
        }
        path
    }

    pub fn tags_for(&self, path: &[usize]) -> LabelSequence {
        path.iter().map(|&y| self.labels()[y].clone()).collect()
    }
}
