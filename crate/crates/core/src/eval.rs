//! Exact and relaxed span evaluation, type confusion and span-error analysis.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::brat::{entity_types, Corpus, EntitySpan};
use crate::error::{Error, Result};
use crate::ENTITY_TYPES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatchMode {
    Exact,
    Relaxed,
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMode::Exact => "exact",
            MatchMode::Relaxed => "relaxed",
        })
    }
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(MatchMode::Exact),
            "relaxed" => Ok(MatchMode::Relaxed),
            _ => Err(Error::InvalidConfig(format!("unknown match mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocMatches {
    /// `(gold, predicted)`, sorted by gold span.
    pub pairs: Vec<(EntitySpan, EntitySpan)>,
    pub false_negatives: Vec<EntitySpan>,
    pub false_positives: Vec<EntitySpan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchReport {
    pub mode: MatchMode,
    pub documents: BTreeMap<String, DocMatches>,
}

impl MatchReport {
    pub fn true_positives(&self) -> usize {
        self.documents.values().map(|d| d.pairs.len()).sum()
    }
}

fn doc_ids(gold: &Corpus, pred: &Corpus) -> Vec<String> {
    let ids: BTreeSet<&str> = gold.ids().chain(pred.ids()).collect();
    ids.into_iter().map(str::to_string).collect()
}

fn match_with(gold: &Corpus, pred: &Corpus, mode: MatchMode) -> MatchReport {
    let empty: &[EntitySpan] = &[];
    let documents = doc_ids(gold, pred)
        .into_par_iter()
        .map(|id| {
            let g = gold.get(&id).map_or(empty, |d| d.entities());
            let p = pred.get(&id).map_or(empty, |d| d.entities());
            let m = match mode {
                MatchMode::Exact => match_doc_exact(g, p),
                MatchMode::Relaxed => match_doc_relaxed(g, p),
            };
            (id, m)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    MatchReport { mode, documents }
}

pub fn match_spans(gold: &Corpus, pred: &Corpus, mode: MatchMode) -> MatchReport {
    match_with(gold, pred, mode)
}

/// Pairs identical `(start, end, type)` triples. Documents missing from
/// `pred` contribute all their gold spans as false negatives.
pub fn match_exact(gold: &Corpus, pred: &Corpus) -> MatchReport {
    match_with(gold, pred, MatchMode::Exact)
}

/// Pairs same-type spans sharing at least one character, one-to-one.
///
/// Candidate pairs are taken greedily by overlap length (longest first, exact
/// triples first among equals, then gold start, then predicted start). The
/// greedy matching is then extended along augmenting paths, so the number of
/// pairs is always the maximum possible; when greedy is already maximum it is
/// returned unchanged.
pub fn match_relaxed(gold: &Corpus, pred: &Corpus) -> MatchReport {
    match_with(gold, pred, MatchMode::Relaxed)
}

fn match_doc_exact(gold: &[EntitySpan], pred: &[EntitySpan]) -> DocMatches {
    let mut out = DocMatches::default();
    let pred_keys: BTreeMap<_, &EntitySpan> = pred.iter().map(|p| (p.key(), p)).collect();
    let mut used = BTreeSet::new();
    for g in gold {
        let key = g.key();
        match pred_keys.get(&key) {
            Some(p) if used.insert(key) => out.pairs.push((g.clone(), (*p).clone())),
            _ => out.false_negatives.push(g.clone()),
        }
    }
    out.false_positives = pred.iter().filter(|p| !used.contains(&p.key())).cloned().collect();
    out
}

fn match_doc_relaxed(gold: &[EntitySpan], pred: &[EntitySpan]) -> DocMatches {
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for (gi, g) in gold.iter().enumerate() {
        for (pi, p) in pred.iter().enumerate() {
            if g.entity_type == p.entity_type {
                let ov = g.overlap(p);
                if ov > 0 {
                    candidates.push((ov, gi, pi));
                }
            }
        }
    }
    candidates.sort_by(|&(oa, ga, pa), &(ob, gb, pb)| {
        let exact_a = gold[ga].same_triple(&pred[pa]);
        let exact_b = gold[gb].same_triple(&pred[pb]);
        ob.cmp(&oa)
            .then(exact_b.cmp(&exact_a))
            .then(gold[ga].start.cmp(&gold[gb].start))
            .then(pred[pa].start.cmp(&pred[pb].start))
            .then(ga.cmp(&gb))
            .then(pa.cmp(&pb))
    });

    let mut gold_to: Vec<Option<usize>> = vec![None; gold.len()];
    let mut pred_to: Vec<Option<usize>> = vec![None; pred.len()];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); gold.len()];
    for &(_, gi, pi) in &candidates {
        adjacency[gi].push(pi);
        if gold_to[gi].is_none() && pred_to[pi].is_none() {
            gold_to[gi] = Some(pi);
            pred_to[pi] = Some(gi);
        }
    }

    // A gold span with no augmenting path now never gains one later, so a
    // single pass over the unmatched gold spans reaches maximum cardinality.
    for gi in 0..gold.len() {
        if gold_to[gi].is_none() && !adjacency[gi].is_empty() {
            let mut visited = vec![false; pred.len()];
            augment(gi, &adjacency, &mut gold_to, &mut pred_to, &mut visited);
        }
    }

    let mut out = DocMatches::default();
    for (gi, g) in gold.iter().enumerate() {
        match gold_to[gi] {
            Some(pi) => out.pairs.push((g.clone(), pred[pi].clone())),
            None => out.false_negatives.push(g.clone()),
        }
    }
    out.false_positives = pred.iter().zip(&pred_to).filter(|(_, m)| m.is_none()).map(|(p, _)| p.clone()).collect();
    out
}

fn augment(
    gi: usize,
    adjacency: &[Vec<usize>],
    gold_to: &mut [Option<usize>],
    pred_to: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for &pi in &adjacency[gi] {
        if visited[pi] {
            continue;
        }
        visited[pi] = true;
        let free = match pred_to[pi] {
            None => true,
            Some(other) => augment(other, adjacency, gold_to, pred_to, visited),
        };
        if free {
            gold_to[gi] = Some(pi);
            pred_to[pi] = Some(gi);
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Metrics { tp, fp, fn_, precision, recall, f1: f1_score(precision, recall) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub mode: MatchMode,
    pub per_type: BTreeMap<String, Metrics>,
    /// Micro average over all types.
    pub overall: Metrics,
}

pub fn compute_metrics(report: &MatchReport) -> Scores {
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for doc in report.documents.values() {
        for (g, _) in &doc.pairs {
            counts.entry(g.entity_type.clone()).or_default().0 += 1;
        }
        for p in &doc.false_positives {
            counts.entry(p.entity_type.clone()).or_default().1 += 1;
        }
        for g in &doc.false_negatives {
            counts.entry(g.entity_type.clone()).or_default().2 += 1;
        }
    }
    let (tp, fp, fn_) = counts.values().fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
    Scores {
        mode: report.mode,
        per_type: counts.into_iter().map(|(t, (tp, fp, fn_))| (t, Metrics::from_counts(tp, fp, fn_))).collect(),
        overall: Metrics::from_counts(tp, fp, fn_),
    }
}

/// Overall micro metrics for one mode.
pub fn evaluate(gold: &Corpus, pred: &Corpus, mode: MatchMode) -> Scores {
    compute_metrics(&match_with(gold, pred, mode))
}

/// `entity, mode, tp, fp, fn, precision, recall, f1` with an `ALL` row per
/// mode. Every mode lists the same set of types.
pub fn metrics_tsv(scores: &[Scores]) -> String {
    let types: BTreeSet<&str> = scores.iter().flat_map(|s| s.per_type.keys().map(String::as_str)).collect();
    let mut out = String::from("entity\tmode\ttp\tfp\tfn\tprecision\trecall\tf1\n");
    let row = |out: &mut String, name: &str, mode: MatchMode, m: &Metrics| {
        let _ = writeln!(
            out,
            "{name}\t{mode}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
            m.tp, m.fp, m.fn_, m.precision, m.recall, m.f1
        );
    };
    for s in scores {
        for t in &types {
            let m = s.per_type.get(*t).copied().unwrap_or_default();
            row(&mut out, t, s.mode, &m);
        }
        row(&mut out, "ALL", s.mode, &s.overall);
    }
    out
}

pub const NONE: &str = "NONE";

/// Gold type (rows) against predicted type (columns) for exact offsets.
/// The last row and column are `NONE`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    fn position(&self, label: &str) -> usize {
        self.labels.iter().position(|l| l == label).expect("label in universe")
    }

    pub fn get(&self, gold: &str, pred: &str) -> usize {
        self.counts[self.position(gold)][self.position(pred)]
    }

    /// Row-normalized view; all-zero rows stay zero.
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: usize = row.iter().sum();
                row.iter().map(|&c| ratio(c, total)).collect()
            })
            .collect()
    }

    fn csv_with(&self, cell: impl Fn(usize, usize) -> String) -> String {
        let mut out = String::from("gold\\pred");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(l);
            for j in 0..self.labels.len() {
                out.push(',');
                out.push_str(&cell(i, j));
            }
            out.push('\n');
        }
        out
    }

    pub fn counts_csv(&self) -> String {
        self.csv_with(|i, j| self.counts[i][j].to_string())
    }

    pub fn normalized_csv(&self) -> String {
        let norm = self.normalized();
        self.csv_with(|i, j| format!("{:.6}", norm[i][j]))
    }
}

/// Builds the type-confusion matrix. The universe is the ten task types plus
/// any other type present, sorted, then `NONE`.
pub fn confusion(gold: &Corpus, pred: &Corpus) -> ConfusionMatrix {
    let mut universe: BTreeSet<String> = ENTITY_TYPES.iter().map(|t| t.to_string()).collect();
    universe.extend(entity_types([gold, pred]));
    let mut labels: Vec<String> = universe.into_iter().collect();
    labels.push(NONE.to_string());
    let pos: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let none = labels.len() - 1;
    let mut counts = vec![vec![0usize; labels.len()]; labels.len()];

    let empty: &[EntitySpan] = &[];
    for id in doc_ids(gold, pred) {
        let g = gold.get(&id).map_or(empty, |d| d.entities());
        let p = pred.get(&id).map_or(empty, |d| d.entities());

        let mut by_offsets: BTreeMap<(usize, usize), BTreeSet<&str>> = BTreeMap::new();
        for e in p {
            by_offsets.entry((e.start, e.end)).or_default().insert(&e.entity_type);
        }
        let gold_offsets: BTreeSet<(usize, usize)> = g.iter().map(|e| (e.start, e.end)).collect();

        for e in g {
            let col = match by_offsets.get(&(e.start, e.end)) {
                Some(types) if types.contains(e.entity_type.as_str()) => pos[e.entity_type.as_str()],
                Some(types) => pos[types.iter().next().expect("non-empty")],
                None => none,
            };
            counts[pos[e.entity_type.as_str()]][col] += 1;
        }
        for e in p {
            if !gold_offsets.contains(&(e.start, e.end)) {
                counts[none][pos[e.entity_type.as_str()]] += 1;
            }
        }
    }
    ConfusionMatrix { labels, counts }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpanRelation {
    PredictedLonger,
    PredictedShorter,
    Shifted,
}

impl SpanRelation {
    /// `None` when the spans have identical offsets.
    pub fn classify(gold: &EntitySpan, pred: &EntitySpan) -> Option<Self> {
        if gold.start == pred.start && gold.end == pred.end {
            None
        } else if pred.start <= gold.start && pred.end >= gold.end {
            Some(SpanRelation::PredictedLonger)
        } else if pred.start >= gold.start && pred.end <= gold.end {
            Some(SpanRelation::PredictedShorter)
        } else {
            Some(SpanRelation::Shifted)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanError {
    pub doc_id: String,
    pub gold: EntitySpan,
    pub pred: EntitySpan,
    pub relation: SpanRelation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthBucket {
    pub start: usize,
    /// Exclusive; `None` for the open-ended last bucket.
    pub end: Option<usize>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanErrorReport {
    pub errors: Vec<SpanError>,
    pub longer: usize,
    pub shorter: usize,
    pub shifted: usize,
    pub histogram: Vec<LengthBucket>,
    /// Share of errors whose gold surface contains whitespace.
    pub multiword_fraction: f64,
}

pub const BUCKET_WIDTH: usize = 5;
pub const BUCKET_COUNT: usize = 11;

/// Relaxed matches that are not exact, classified and bucketed by gold
/// length in characters.
pub fn span_errors(gold: &Corpus, pred: &Corpus) -> SpanErrorReport {
    let relaxed = match_relaxed(gold, pred);
    let mut errors = Vec::new();
    for (id, doc) in &relaxed.documents {
        for (g, p) in &doc.pairs {
            if let Some(relation) = SpanRelation::classify(g, p) {
                errors.push(SpanError { doc_id: id.clone(), gold: g.clone(), pred: p.clone(), relation });
            }
        }
    }

    let mut histogram: Vec<LengthBucket> = (0..BUCKET_COUNT)
        .map(|i| LengthBucket {
            start: i * BUCKET_WIDTH,
            end: (i + 1 < BUCKET_COUNT).then_some((i + 1) * BUCKET_WIDTH),
            count: 0,
        })
        .collect();
    let count = |r: SpanRelation| errors.iter().filter(|e| e.relation == r).count();
    let mut multiword = 0;
    for e in &errors {
        let bucket = (e.gold.len() / BUCKET_WIDTH).min(BUCKET_COUNT - 1);
        histogram[bucket].count += 1;
        if e.gold.surface.chars().any(char::is_whitespace) {
            multiword += 1;
        }
    }

    SpanErrorReport {
        longer: count(SpanRelation::PredictedLonger),
        shorter: count(SpanRelation::PredictedShorter),
        shifted: count(SpanRelation::Shifted),
        multiword_fraction: ratio(multiword, errors.len()),
        histogram,
        errors,
    }
}

impl SpanErrorReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bucket_start\tbucket_end\tcount\n");
        for b in &self.histogram {
            let end = b.end.map_or_else(|| "inf".to_string(), |e| e.to_string());
            let _ = writeln!(out, "{}\t{end}\t{}", b.start, b.count);
        }
        let _ = writeln!(out, "# summary");
        let _ = writeln!(out, "longer\tshorter\tshifted\tmultiword_fraction");
        let _ = writeln!(out, "{}\t{}\t{}\t{:.4}", self.longer, self.shorter, self.shifted, self.multiword_fraction);
        out
    }
}
