use std::collections::{BTreeSet, HashMap};

use crate::brat::{Corpus, EntitySpan};
use crate::crf::features::extract_sequence;
use crate::crf::model::{Compiled, CrfModel};
use crate::error::{Error, Result};
use crate::textproc::{decode_bio, encode_bio, resolve_overlaps, tokenize, Tag};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub l2: f64,
    pub max_iterations: usize,
    /// Stop once the relative objective change of an accepted step falls
    /// below this.
    pub tolerance: f64,
    /// Unused; training is deterministic.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { l2: 0.1, max_iterations: 200, tolerance: 1e-6, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::InvalidConfig(format!("l2 must be >= 0, got {}", self.l2)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStep {
    pub iteration: usize,
    pub objective: f64,
    pub step_size: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    /// Iteration 0 is the all-zero starting point.
    pub steps: Vec<TrainStep>,
    pub converged: bool,
    /// Gold entities widened to token boundaries while building labels.
    pub snapped: usize,
    /// Gold entities lost to overlap resolution or to token conflicts.
    pub dropped: usize,
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

/// Trains a model on every document of `corpus`.
///
/// Full-batch gradient ascent. Each iteration proposes a Barzilai–Borwein
/// step and backtracks by halving until the Armijo condition holds, so every
/// accepted step increases the objective.
pub fn train(corpus: &Corpus, config: &TrainConfig) -> Result<(CrfModel, TrainLog)> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut log = TrainLog::default();
    let mut types = BTreeSet::new();
    let mut sequences = Vec::with_capacity(corpus.len());
    for doc in corpus.documents() {
        let tokens = tokenize(&doc.text);
        if tokens.is_empty() {
            continue;
        }
        let kept = resolve_overlaps(doc.entities());
        log.dropped += doc.entities().len() - kept.len();
        let enc = encode_bio(&tokens, &kept);
        log.snapped += enc.snapped;
        log.dropped += enc.dropped;
        types.extend(kept.iter().map(|e| e.entity_type.clone()));
        sequences.push((extract_sequence(&tokens), enc.labels));
    }
    if log.snapped > 0 || log.dropped > 0 {
        log::warn!("{} entities snapped to token boundaries, {} dropped", log.snapped, log.dropped);
    }

    let mut labels = vec![Tag::Outside];
    for t in &types {
        labels.push(Tag::Begin(t.clone()));
        labels.push(Tag::Inside(t.clone()));
    }

    let mut feature_ids: HashMap<&str, usize> = HashMap::new();
    let mut features: Vec<String> = Vec::new();
    for (feats, _) in &sequences {
        for fv in feats {
            for f in fv.iter() {
                if !feature_ids.contains_key(f) {
                    feature_ids.insert(f, features.len());
                    features.push(f.to_string());
                }
            }
        }
    }
    drop(feature_ids);

    let mut model = CrfModel::new(labels, features, config.l2)?;
    let data: Vec<(Compiled, Vec<usize>)> = sequences
        .iter()
        .map(|(feats, labels)| Ok((model.compile(feats), model.label_ids(labels)?)))
        .collect::<Result<_>>()?;
    log::info!(
        "training on {} sequences, {} features, {} labels",
        data.len(),
        model.features().len(),
        model.num_labels()
    );

    let mut w = vec![0.0; model.weights().len()];
    let (mut f, mut g) = model.objective(&data, &w)?;
    log.steps.push(TrainStep { iteration: 0, objective: f, step_size: 0.0 });
    let mut step = 1.0 / norm_sq(&g).sqrt().max(1.0);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;

    for iteration in 1..=config.max_iterations {
        if let Some((w_prev, g_prev)) = &prev {
            // Ascent on f is descent on -f, whose gradient difference is g_prev - g.
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..w.len() {
                let s = w[i] - w_prev[i];
                ss += s * s;
                sy += s * (g_prev[i] - g[i]);
            }
            step = if sy > 0.0 { ss / sy } else { step * 2.0 };
        }

        let slope = norm_sq(&g);
        if slope == 0.0 {
            log.converged = true;
            break;
        }
        let accepted = loop {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(w, g)| w + step * g).collect();
            match model.objective(&data, &trial) {
                Ok((ft, gt)) if ft >= f + ARMIJO * step * slope => break Some((trial, ft, gt)),
                Ok(_) | Err(Error::Numerical(_)) => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((w_new, f_new, g_new)) = accepted else {
            log.converged = true;
            break;
        };

        let rel = (f_new - f).abs() / f.abs().max(1.0);
        prev = Some((std::mem::replace(&mut w, w_new), std::mem::replace(&mut g, g_new)));
        f = f_new;
        log.steps.push(TrainStep { iteration, objective: f, step_size: step });
        log::debug!("iteration {iteration}: objective {f:.6} step {step:.3e}");
        if rel < config.tolerance {
            log.converged = true;
            break;
        }
    }

    model.set_weights(w)?;
    Ok((model, log))
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Tokenizes, decodes and converts back to spans over `text`. Features not
/// seen in training are ignored.
pub fn tag_document(model: &CrfModel, text: &str) -> Vec<EntitySpan> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Vec::new();
    }
    let labels = model.viterbi(&extract_sequence(&tokens));
    decode_bio(&tokens, &labels, text).expect("viterbi output is aligned with its tokens")
}
