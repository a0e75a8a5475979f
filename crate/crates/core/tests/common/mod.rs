//! Independent oracles and random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chempat::brat::{Corpus, Document, EntitySpan};
use chempat::crf::{CrfModel, FeatureVector};
use chempat::textproc::{LabelSequence, Tag};
use chempat::ENTITY_TYPES;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ALPHABET: &[char] = &['a', 'b', 'C', '1', ' ', '-', 'é', '°', 'µ', '化'];

pub fn random_text(rng: &mut impl Rng, len: usize) -> String {
    (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
}

/// Up to `max_spans` random spans over `len` characters, drawn from the
/// first `types` entity types.
pub fn random_spans(
    rng: &mut impl Rng,
    len: usize,
    max_spans: usize,
    types: usize,
) -> Vec<(usize, usize, &'static str)> {
    let n = rng.gen_range(0..=max_spans);
    (0..n)
        .map(|_| {
            let start = rng.gen_range(0..len);
            let end = rng.gen_range(start + 1..=len.min(start + 12));
            (start, end, ENTITY_TYPES[rng.gen_range(0..types)])
        })
        .collect()
}

/// A gold corpus and a prediction corpus over the same texts. Predictions
/// are partly perturbed copies of gold spans so that exact, relaxed and
/// missing matches all occur.
pub fn random_gold_pred(rng: &mut impl Rng, docs: usize, max_spans: usize, types: usize) -> (Corpus, Corpus) {
    let mut gold = Corpus::new();
    let mut pred = Corpus::new();
    for d in 0..docs {
        let len = rng.gen_range(10..40);
        let text = random_text(rng, len);
        let g = random_spans(rng, len, max_spans, types);
        let mut p = Vec::new();
        for &(s, e, t) in &g {
            match rng.gen_range(0..4) {
                0 => p.push((s, e, t)),
                1 => {
                    let s2 = s.saturating_sub(rng.gen_range(0..3));
                    let e2 = (e + rng.gen_range(0..3)).min(len);
                    p.push((s2, e2, t));
                }
                2 => p.push((s, e, ENTITY_TYPES[rng.gen_range(0..types)])),
                _ => {}
            }
        }
        p.extend(random_spans(rng, len, max_spans / 4, types));
        p.truncate(max_spans);
        let id = format!("d{d}");
        gold.insert(Document::from_triples(id.clone(), text.clone(), g).unwrap());
        pred.insert(Document::from_triples(id, text, p).unwrap());
    }
    (gold, pred)
}

fn overlaps(a: &EntitySpan, b: &EntitySpan) -> bool {
    a.entity_type == b.entity_type && a.start < b.end && b.start < a.end
}

/// Maximum one-to-one matching size over same-type overlapping pairs, by
/// exhaustive search.
pub fn max_overlap_matching(gold: &[EntitySpan], pred: &[EntitySpan]) -> usize {
    fn rec(i: usize, gold: &[EntitySpan], pred: &[EntitySpan], used: &mut Vec<bool>) -> usize {
        if i == gold.len() {
            return 0;
        }
        let mut best = rec(i + 1, gold, pred, used);
        for j in 0..pred.len() {
            if !used[j] && overlaps(&gold[i], &pred[j]) {
                used[j] = true;
                best = best.max(1 + rec(i + 1, gold, pred, used));
                used[j] = false;
            }
        }
        best
    }
    rec(0, gold, pred, &mut vec![false; pred.len()])
}

pub type Triple = (usize, usize, String);

pub fn triples(doc: &Document) -> BTreeSet<Triple> {
    doc.entities().iter().map(|e| (e.start, e.end, e.entity_type.clone())).collect()
}

/// Strict-majority vote by direct counting over member corpora.
pub fn vote_oracle(members: &[&Corpus]) -> BTreeMap<String, BTreeSet<Triple>> {
    let k = members.len();
    let mut counts: BTreeMap<String, BTreeMap<Triple, usize>> = BTreeMap::new();
    for corpus in members {
        for doc in corpus.documents() {
            let entry = counts.entry(doc.id.clone()).or_default();
            for t in triples(doc) {
                *entry.entry(t).or_default() += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|(id, c)| (id, c.into_iter().filter(|&(_, v)| 2 * v > k).map(|(t, _)| t).collect()))
        .collect()
}

/// Exact micro F1 by set intersection.
pub fn exact_f1_oracle(gold: &Corpus, pred: &BTreeMap<String, BTreeSet<Triple>>) -> f64 {
    let empty = BTreeSet::new();
    let (mut tp, mut n_gold, mut n_pred) = (0usize, 0usize, 0usize);
    for doc in gold.documents() {
        let g = triples(doc);
        let p = pred.get(&doc.id).unwrap_or(&empty);
        tp += g.intersection(p).count();
        n_gold += g.len();
    }
    for p in pred.values() {
        n_pred += p.len();
    }
    let precision = if n_pred == 0 { 0.0 } else { tp as f64 / n_pred as f64 };
    let recall = if n_gold == 0 { 0.0 } else { tp as f64 / n_gold as f64 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Every labeling of length `n` over `l` labels, in lexicographic order.
pub fn all_paths(n: usize, l: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..l).map(move |y| {
                    let mut q = p.clone();
                    q.push(y);
                    q
                })
            })
            .collect();
    }
    out
}

/// Direct score from the weight layout: emission weights of every present
/// feature plus transition weights.
pub fn score_oracle(model: &CrfModel, feats: &[FeatureVector], path: &[usize]) -> f64 {
    let w = model.weights();
    let mut s = 0.0;
    for (t, fv) in feats.iter().enumerate() {
        for f in fv.iter() {
            if let Some(id) = model.feature_id(f) {
                s += w[model.emission_index(id, path[t])];
            }
        }
        if t > 0 {
            s += w[model.transition_index(path[t - 1], path[t])];
        }
    }
    s
}

pub fn labels(l: usize) -> Vec<Tag> {
    let all = ["O", "B-x", "I-x", "B-y", "I-y"];
    all[..l].iter().map(|s| s.parse().unwrap()).collect()
}

pub const FEATURE_POOL: [&str; 5] = ["f0", "f1", "f2", "f3", "unseen"];

/// A random model over the first four pool features, with either continuous
/// or small-integer weights, and a random observation sequence.
pub fn random_crf(rng: &mut impl Rng, n: usize, l: usize, integer: bool) -> (CrfModel, Vec<FeatureVector>) {
    let features: Vec<String> = FEATURE_POOL[..4].iter().map(|s| s.to_string()).collect();
    let mut model = CrfModel::new(labels(l), features, rng.gen_range(0.0..0.5)).unwrap();
    let weights = (0..model.weights().len())
        .map(|_| if integer { rng.gen_range(-1i32..=1) as f64 } else { rng.gen_range(-2.0..2.0) })
        .collect();
    model.set_weights(weights).unwrap();
    let feats =
        (0..n).map(|_| FEATURE_POOL.iter().filter(|_| rng.gen_bool(0.5)).copied().collect::<FeatureVector>()).collect();
    (model, feats)
}

pub fn tags(model: &CrfModel, path: &[usize]) -> LabelSequence {
    path.iter().map(|&y| model.labels()[y].clone()).collect()
}

/// Central finite-difference gradient of the regularized log-likelihood.
pub fn finite_difference(model: &CrfModel, batch: &[(Vec<FeatureVector>, LabelSequence)], h: f64) -> Vec<f64> {
    let base = model.weights().to_vec();
    let mut probe = model.clone();
    (0..base.len())
        .map(|i| {
            let mut w = base.clone();
            w[i] = base[i] + h;
            probe.set_weights(w.clone()).unwrap();
            let up = probe.log_likelihood_and_gradient(batch).unwrap().0;
            w[i] = base[i] - h;
            probe.set_weights(w).unwrap();
            let down = probe.log_likelihood_and_gradient(batch).unwrap().0;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, 1e-8)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-8)
}

/// Best-scoring path by enumeration. Among equal scores the path with the
/// smallest last label wins, then the smallest second-to-last, and so on:
/// the order a lowest-index backtrace produces.
pub fn brute_force_viterbi(model: &CrfModel, feats: &[FeatureVector]) -> Vec<usize> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for path in all_paths(feats.len(), model.num_labels()) {
        let s = score_oracle(model, feats, &path);
        let better = match &best {
            None => true,
            Some((bs, bp)) => s > *bs || (s == *bs && path.iter().rev().lt(bp.iter().rev())),
        };
        if better {
            best = Some((s, path));
        }
    }
    best.unwrap().1
}

/// Sum of `p(y|x)` over every labeling, from the oracle score and the
/// model's partition function.
pub fn total_probability(model: &CrfModel, feats: &[FeatureVector]) -> f64 {
    let log_z = model.log_partition(feats);
    all_paths(feats.len(), model.num_labels()).iter().map(|p| (score_oracle(model, feats, p) - log_z).exp()).sum()
}

/// Writes a BRAT directory with `.txt` and `.ann` files.
pub fn write_dir(dir: &std::path::Path, corpus: &Corpus, with_text: bool) {
    chempat::brat::write_corpus(corpus, dir, with_text).unwrap();
}
