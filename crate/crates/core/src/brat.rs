//! BRAT standoff I/O.
//!
//! Only text-bound (`T`) annotations are read. Offsets are counted in Unicode
//! scalar values, so `start`/`end` index `text.chars()`, never bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A typed character interval `[start, end)` over a document.
///
/// Field order makes the derived `Ord` sort by `(start, end, type)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub entity_type: String,
    pub surface: String,
}

impl EntitySpan {
    /// Builds a span over `text`, taking the surface from the text itself.
    pub fn new(entity_type: &str, start: usize, end: usize, text: &str) -> Result<Self> {
        Self::with_index(entity_type, start, end, text, &CharIndex::new(text), "-")
    }

    pub(crate) fn with_index(
        entity_type: &str,
        start: usize,
        end: usize,
        text: &str,
        index: &CharIndex,
        id: &str,
    ) -> Result<Self> {
        validate_type(entity_type)?;
        if start >= end || end > index.len() {
            return Err(Error::Bounds { id: id.to_string(), start, end, len: index.len() });
        }
        Ok(EntitySpan {
            start,
            end,
            entity_type: entity_type.to_string(),
            surface: index.slice(text, start, end).to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// The identity used for deduplication, voting and exact matching.
    pub fn key(&self) -> SpanKey {
        SpanKey { start: self.start, end: self.end, entity_type: self.entity_type.clone() }
    }

    pub fn overlap(&self, other: &EntitySpan) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        hi.saturating_sub(lo)
    }

    pub fn same_triple(&self, other: &EntitySpan) -> bool {
        self.start == other.start && self.end == other.end && self.entity_type == other.entity_type
    }
}

/// `(start, end, type)` without the surface.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpanKey {
    pub start: usize,
    pub end: usize,
    pub entity_type: String,
}

/// Entity types become a whitespace-delimited field of the T-line, so any
/// whitespace (not only tab and newline) is rejected.
pub fn validate_type(entity_type: &str) -> Result<()> {
    if entity_type.is_empty() || entity_type.chars().any(char::is_whitespace) {
        return Err(Error::InvalidType(entity_type.to_string()));
    }
    Ok(())
}

/// Byte offsets of every char boundary of a text, so char offsets can be
/// sliced in O(1).
#[derive(Debug, Clone)]
pub struct CharIndex {
    bounds: Vec<usize>,
}

impl CharIndex {
    pub fn new(text: &str) -> Self {
        let mut bounds: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bounds.push(text.len());
        CharIndex { bounds }
    }

    /// Number of chars in the text.
    pub fn len(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slice<'t>(&self, text: &'t str, start: usize, end: usize) -> &'t str {
        &text[self.bounds[start]..self.bounds[end]]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    entities: Vec<EntitySpan>,
}

impl Document {
    /// Entities are sorted by `(start, end, type)` and deduplicated on that
    /// triple. Every entity is checked against the text.
    pub fn new(id: impl Into<String>, text: impl Into<String>, entities: Vec<EntitySpan>) -> Result<Self> {
        let id = id.into();
        let text = text.into();
        let index = CharIndex::new(&text);
        for e in &entities {
            let checked = EntitySpan::with_index(&e.entity_type, e.start, e.end, &text, &index, &id)?;
            if checked.surface != e.surface {
                return Err(Error::SurfaceMismatch {
                    id: id.clone(),
                    expected: checked.surface,
                    found: e.surface.clone(),
                });
            }
        }
        Ok(Document { id, text, entities: canonical(entities) })
    }

    /// A document with entities given as triples; surfaces are filled in from
    /// the text.
    pub fn from_triples<'a>(
        id: impl Into<String>,
        text: impl Into<String>,
        triples: impl IntoIterator<Item = (usize, usize, &'a str)>,
    ) -> Result<Self> {
        let id = id.into();
        let text = text.into();
        let index = CharIndex::new(&text);
        let entities = triples
            .into_iter()
            .map(|(s, e, t)| EntitySpan::with_index(t, s, e, &text, &index, &id))
            .collect::<Result<Vec<_>>>()?;
        Ok(Document { id, text, entities: canonical(entities) })
    }

    pub fn entities(&self) -> &[EntitySpan] {
        &self.entities
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// Same text, different entities.
    pub fn with_entities(&self, entities: Vec<EntitySpan>) -> Result<Self> {
        Document::new(self.id.clone(), self.text.clone(), entities)
    }
}

fn canonical(mut entities: Vec<EntitySpan>) -> Vec<EntitySpan> {
    entities.sort();
    entities.dedup_by(|a, b| a.same_triple(b));
    entities
}

/// Documents keyed by id, iterated in id order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: BTreeMap<String, Document>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a document, replacing any previous document with that id.
    pub fn insert(&mut self, doc: Document) -> Option<Document> {
        self.documents.insert(doc.id.clone(), doc)
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.documents.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> impl ExactSizeIterator<Item = &Document> + '_ {
        self.documents.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.documents.keys().map(String::as_str)
    }

    pub fn entity_count(&self) -> usize {
        self.documents.values().map(|d| d.entities.len()).sum()
    }

    /// Ids of `self` that are absent from `reference`.
    pub fn ids_missing_from(&self, reference: &Corpus) -> Vec<String> {
        self.ids().filter(|id| !reference.contains(id)).map(str::to_string).collect()
    }
}

impl FromIterator<Document> for Corpus {
    fn from_iter<I: IntoIterator<Item = Document>>(iter: I) -> Self {
        let mut corpus = Corpus::new();
        for doc in iter {
            corpus.insert(doc);
        }
        corpus
    }
}

/// Result of parsing one `.ann` file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedAnn {
    pub entities: Vec<EntitySpan>,
    /// One message per skipped non-`T` line.
    pub warnings: Vec<String>,
}

/// Parses the T-lines of a `.ann` file against its document text. Skipped
/// lines are reported through `log::warn!`.
pub fn parse_ann(ann_content: &str, doc_text: &str) -> Result<Vec<EntitySpan>> {
    let parsed = parse_ann_detailed(ann_content, doc_text)?;
    for w in &parsed.warnings {
        log::warn!("{w}");
    }
    Ok(parsed.entities)
}

pub fn parse_ann_detailed(ann_content: &str, doc_text: &str) -> Result<ParsedAnn> {
    let index = CharIndex::new(doc_text);
    let mut entities = Vec::new();
    let mut warnings = Vec::new();

    for (lineno, raw) in ann_content.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        if !line.starts_with('T') {
            let prefix = line.chars().next().unwrap_or(' ');
            warnings.push(format!("line {line_no}: skipping non-entity annotation ({prefix})"));
            continue;
        }

        let mut fields = line.splitn(3, '\t');
        let id = fields.next().unwrap_or_default();
        let (Some(body), Some(surface)) = (fields.next(), fields.next()) else {
            return Err(Error::Parse { line: line_no, message: format!("expected 3 tab-separated fields in {id}") });
        };
        if body.contains(';') {
            return Err(Error::Unsupported { line: line_no, feature: format!("discontinuous span in {id}") });
        }
        let parts: Vec<&str> = body.split_whitespace().collect();
        let [entity_type, start, end] = parts[..] else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected '<type> <start> <end>' in {id}, found {body:?}"),
            });
        };
        let offset = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse { line: line_no, message: format!("non-numeric offset {s:?} in {id}") })
        };
        let (start, end) = (offset(start)?, offset(end)?);
        let span =
            EntitySpan::with_index(entity_type, start, end, doc_text, &index, id).map_err(|e| e.at_line(line_no))?;
        if flatten(&span.surface) != flatten(surface) {
            return Err(Error::SurfaceMismatch {
                id: id.to_string(),
                expected: span.surface,
                found: surface.to_string(),
            }
            .at_line(line_no));
        }
        entities.push(span);
    }

    Ok(ParsedAnn { entities: canonical(entities), warnings })
}

/// T-lines cannot carry line breaks or tabs; those become spaces.
fn flatten(s: &str) -> String {
    s.chars().map(|c| if matches!(c, '\n' | '\r' | '\t') { ' ' } else { c }).collect()
}

/// Writes entities as T-lines numbered in `(start, end, type)` order.
pub fn serialize_ann(entities: &[EntitySpan]) -> String {
    let mut sorted: Vec<&EntitySpan> = entities.iter().collect();
    sorted.sort();
    let mut out = String::new();
    for (k, e) in sorted.iter().enumerate() {
        let _ = writeln!(out, "T{}\t{} {} {}\t{}", k + 1, e.entity_type, e.start, e.end, flatten(&e.surface));
    }
    out
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Lists `<stem>` → path for every file with the given extension.
fn files_with_extension(dir: &Path, ext: &str) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some(ext) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path);
        }
    }
    Ok(out)
}

/// Loads a flat directory of `<id>.txt` / `<id>.ann` pairs. A `.txt` without
/// `.ann` yields a document with no entities; an `.ann` without `.txt` is an
/// error.
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let texts = files_with_extension(dir, "txt")?;
    let anns = files_with_extension(dir, "ann")?;
    if let Some((_, orphan)) = anns.iter().find(|(id, _)| !texts.contains_key(*id)) {
        return Err(Error::MissingText { path: orphan.clone() });
    }

    let docs: Vec<Document> = texts
        .par_iter()
        .map(|(id, txt_path)| {
            let text = read_to_string(txt_path)?;
            let entities = match anns.get(id) {
                Some(ann_path) => {
                    let ann = read_to_string(ann_path)?;
                    parse_ann(&ann, &text).map_err(|e| e.in_file(ann_path))?
                }
                None => Vec::new(),
            };
            Ok(Document { id: id.clone(), text, entities })
        })
        .collect::<Result<_>>()?;
    Ok(docs.into_iter().collect())
}

/// Loads only the `.txt` files of a directory, as documents without entities.
pub fn load_texts(dir: &Path) -> Result<Corpus> {
    let texts = files_with_extension(dir, "txt")?;
    let docs: Vec<Document> = texts
        .par_iter()
        .map(|(id, path)| Ok(Document { id: id.clone(), text: read_to_string(path)?, entities: Vec::new() }))
        .collect::<Result<_>>()?;
    Ok(docs.into_iter().collect())
}

/// Reads a prediction directory (`.ann` only) against the texts of
/// `reference`. Documents without an `.ann` get no entities; any `.txt`
/// files in the directory are ignored.
pub fn load_predictions(dir: &Path, reference: &Corpus) -> Result<Corpus> {
    let anns = files_with_extension(dir, "ann")?;
    let missing: Vec<String> = anns.keys().filter(|id| !reference.contains(id)).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::IdMismatch { missing }.in_file(dir));
    }

    let docs: Vec<Document> = reference
        .documents
        .par_iter()
        .map(|(id, doc)| {
            let entities = match anns.get(id) {
                Some(path) => {
                    let ann = read_to_string(path)?;
                    parse_ann(&ann, &doc.text).map_err(|e| e.in_file(path))?
                }
                None => Vec::new(),
            };
            Ok(Document { id: id.clone(), text: doc.text.clone(), entities })
        })
        .collect::<Result<_>>()?;
    Ok(docs.into_iter().collect())
}

/// Writes one `<id>.ann` per document, plus `<id>.txt` when `with_text` is set.
pub fn write_corpus(corpus: &Corpus, dir: &Path, with_text: bool) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for doc in corpus.documents() {
        let ann_path = dir.join(format!("{}.ann", doc.id));
        fs::write(&ann_path, serialize_ann(&doc.entities)).map_err(|e| Error::io(&ann_path, e))?;
        if with_text {
            let txt_path = dir.join(format!("{}.txt", doc.id));
            fs::write(&txt_path, &doc.text).map_err(|e| Error::io(&txt_path, e))?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeCount {
    pub entity_type: String,
    pub count: usize,
    pub percent: u32,
}

/// Per-type entity counts sorted by type name, followed by an `All` row.
///
/// Percentages are integers apportioned by largest remainder so the type
/// rows always sum to exactly 100.
pub fn corpus_stats(corpus: &Corpus) -> Vec<TypeCount> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus.documents() {
        for e in &doc.entities {
            *counts.entry(e.entity_type.as_str()).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();

    let mut rows: Vec<TypeCount> =
        counts.iter().map(|(t, &c)| TypeCount { entity_type: t.to_string(), count: c, percent: 0 }).collect();

    #[allow(clippy::manual_checked_ops)]
    if total > 0 {
        // Exact quotient/remainder in integers: percent = floor(100c/total),
        // leftover points go to the largest remainders (ties by type name).
        let mut assigned = 0u32;
        let mut remainders: Vec<(usize, usize)> = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter_mut().enumerate() {
            let scaled = row.count * 100;
            row.percent = (scaled / total) as u32;
            assigned += row.percent;
            remainders.push((scaled % total, i));
        }
        remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in remainders.iter().take((100 - assigned) as usize) {
            rows[i].percent += 1;
        }
    }

    rows.push(TypeCount { entity_type: "All".to_string(), count: total, percent: if total > 0 { 100 } else { 0 } });
    rows
}

pub fn stats_tsv(rows: &[TypeCount]) -> String {
    let mut out = String::from("entity\tcount\tpercent\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}", r.entity_type, r.count, r.percent);
    }
    out
}

/// All entity types appearing in any of the corpora.
pub fn entity_types<'a>(corpora: impl IntoIterator<Item = &'a Corpus>) -> BTreeSet<String> {
    corpora
        .into_iter()
        .flat_map(|c| c.documents())
        .flat_map(|d| d.entities.iter().map(|e| e.entity_type.clone()))
        .collect()
}
