//! Entity-level majority voting over independent model predictions.
//!
//! Votes pool only on identical `(start, end, type)` triples. Each type is
//! voted independently, so the output may hold overlapping spans and several
//! types on one passage.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::brat::{Corpus, Document, SpanKey};
use crate::error::{Error, Result};
use crate::eval::{evaluate, MatchMode, Metrics};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSet {
    pub model_name: String,
    pub predictions: Corpus,
}

impl PredictionSet {
    pub fn new(model_name: impl Into<String>, predictions: Corpus) -> Self {
        PredictionSet { model_name: model_name.into(), predictions }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct DocTally {
    text: String,
    votes: BTreeMap<SpanKey, BTreeSet<String>>,
}

/// Per document: every predicted triple and the models that predicted it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteTally {
    models: Vec<String>,
    docs: BTreeMap<String, DocTally>,
}

impl VoteTally {
    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.docs.keys().map(String::as_str)
    }

    /// Voters for one triple of one document.
    pub fn voters(&self, doc_id: &str, key: &SpanKey) -> Option<&BTreeSet<String>> {
        self.docs.get(doc_id)?.votes.get(key)
    }

    pub fn votes(&self, doc_id: &str) -> impl Iterator<Item = (&SpanKey, &BTreeSet<String>)> + '_ {
        self.docs.get(doc_id).into_iter().flat_map(|d| d.votes.iter())
    }

    pub fn triple_count(&self) -> usize {
        self.docs.values().map(|d| d.votes.len()).sum()
    }
}

pub fn tally_votes(sets: &[PredictionSet]) -> Result<VoteTally> {
    let mut seen = BTreeSet::new();
    for s in sets {
        if !seen.insert(s.model_name.as_str()) {
            return Err(Error::DuplicateModel(s.model_name.clone()));
        }
    }

    let mut docs: BTreeMap<String, DocTally> = BTreeMap::new();
    for set in sets {
        for doc in set.predictions.documents() {
            let entry = docs
                .entry(doc.id.clone())
                .or_insert_with(|| DocTally { text: doc.text.clone(), votes: BTreeMap::new() });
            // Documents deduplicate triples, so each model votes once per triple.
            for e in doc.entities() {
                entry.votes.entry(e.key()).or_default().insert(set.model_name.clone());
            }
        }
    }
    Ok(VoteTally { models: sets.iter().map(|s| s.model_name.clone()).collect(), docs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quorum {
    /// Accept iff `2 * votes > members`.
    StrictMajority,
    /// Accept iff `votes >= m`.
    AtLeast(usize),
}

impl Quorum {
    pub fn accepts(self, votes: usize, members: usize) -> bool {
        match self {
            Quorum::StrictMajority => 2 * votes > members,
            Quorum::AtLeast(m) => votes >= m,
        }
    }
}

impl fmt::Display for Quorum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quorum::StrictMajority => f.write_str("strict-majority"),
            Quorum::AtLeast(m) => write!(f, "at-least:{m}"),
        }
    }
}

impl FromStr for Quorum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "strict-majority" {
            return Ok(Quorum::StrictMajority);
        }
        s.strip_prefix("at-least:")
            .and_then(|m| m.parse().ok())
            .map(Quorum::AtLeast)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown quorum {s:?}; use strict-majority or at-least:<m>")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleConfig {
    pub quorum: Quorum,
    pub members: Vec<String>,
}

impl EnsembleConfig {
    pub fn new(quorum: Quorum, members: Vec<String>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidConfig("an ensemble needs at least one member".into()));
        }
        if let Quorum::AtLeast(m) = quorum {
            if m == 0 || m > members.len() {
                return Err(Error::InvalidConfig(format!("at-least:{m} needs 1 <= m <= {} members", members.len())));
            }
        }
        Ok(EnsembleConfig { quorum, members })
    }

    /// Strict majority over every model of the tally.
    pub fn majority_of(tally: &VoteTally) -> Result<Self> {
        Self::new(Quorum::StrictMajority, tally.models().to_vec())
    }
}

/// Emits every triple whose member votes meet the quorum. Surfaces come from
/// the document text.
pub fn majority_vote(tally: &VoteTally, config: &EnsembleConfig) -> Result<Corpus> {
    let members: BTreeSet<&str> = config.members.iter().map(String::as_str).collect();
    for doc in tally.docs.values() {
        for voters in doc.votes.values() {
            if let Some(outsider) = voters.iter().find(|v| !members.contains(v.as_str())) {
                return Err(Error::NonMember(outsider.clone()));
            }
        }
    }
    vote_subset(tally, &members, config.quorum)
}

/// Like [`majority_vote`] but ignores votes from models outside `members`,
/// so one tally serves every subset during composition search.
fn vote_subset(tally: &VoteTally, members: &BTreeSet<&str>, quorum: Quorum) -> Result<Corpus> {
    let k = members.len();
    tally
        .docs
        .iter()
        .map(|(id, doc)| {
            let accepted = doc.votes.iter().filter(|(_, voters)| {
                let n = voters.iter().filter(|v| members.contains(v.as_str())).count();
                n > 0 && quorum.accepts(n, k)
            });
            Document::from_triples(
                id.clone(),
                doc.text.clone(),
                accepted.map(|(key, _)| (key.start, key.end, key.entity_type.as_str())),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionRow {
    /// Sorted member names.
    pub members: Vec<String>,
    pub exact: Metrics,
    pub relaxed: Metrics,
}

/// All index subsets of `0..n` with size in `[min, max]`, by size then
/// lexicographically.
pub fn subsets(n: usize, min: usize, max: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in min..=max.min(n) {
        rec(0, n, size, &mut Vec::new(), &mut out);
    }
    out
}

/// Strict-majority votes every member subset of size `min..=max`, scores it
/// on `gold`, and ranks by exact micro F1 (descending), then smaller subsets,
/// then member names. The first row is the composition to keep.
pub fn search_composition(
    sets: &[PredictionSet],
    gold: &Corpus,
    min_size: usize,
    max_size: usize,
) -> Result<Vec<CompositionRow>> {
    if min_size < 2 || min_size > max_size || max_size > sets.len() {
        return Err(Error::InvalidConfig(format!(
            "composition sizes need 2 <= min ({min_size}) <= max ({max_size}) <= models ({})",
            sets.len()
        )));
    }
    let mut missing = BTreeSet::new();
    for s in sets {
        missing.extend(s.predictions.ids_missing_from(gold));
    }
    if !missing.is_empty() {
        return Err(Error::IdMismatch { missing: missing.into_iter().collect() });
    }

    let tally = tally_votes(sets)?;
    let mut rows = subsets(sets.len(), min_size, max_size)
        .into_par_iter()
        .map(|subset| {
            let mut names: Vec<String> = subset.iter().map(|&i| sets[i].model_name.clone()).collect();
            names.sort();
            let members: BTreeSet<&str> = names.iter().map(String::as_str).collect();
            let voted = vote_subset(&tally, &members, Quorum::StrictMajority)?;
            Ok(CompositionRow {
                exact: evaluate(gold, &voted, MatchMode::Exact).overall,
                relaxed: evaluate(gold, &voted, MatchMode::Relaxed).overall,
                members: names,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        b.exact.f1.total_cmp(&a.exact.f1).then(a.members.len().cmp(&b.members.len())).then(a.members.cmp(&b.members))
    });
    Ok(rows)
}

pub fn composition_tsv(rows: &[CompositionRow]) -> String {
    let mut out = String::from(
        "members\texact_precision\texact_recall\texact_f1\trelaxed_precision\trelaxed_recall\trelaxed_f1\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            r.members.join(","),
            r.exact.precision,
            r.exact.recall,
            r.exact.f1,
            r.relaxed.precision,
            r.relaxed.recall,
            r.relaxed.f1
        );
    }
    out
}
