//! Tokenization and the BIO bridge between spans and token labels.

use std::fmt;
use std::str::FromStr;

use crate::brat::{CharIndex, EntitySpan};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Letter,
    Digit,
    Space,
    Other,
}

fn classify(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Space
    } else if c.is_alphabetic() {
        CharClass::Letter
    } else if c.is_numeric() {
        CharClass::Digit
    } else {
        CharClass::Other
    }
}

/// Splits text into maximal letter runs, maximal digit runs, and single
/// other non-whitespace characters. Offsets are in chars.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens: Vec<Token> = Vec::new();
    let mut current: Option<(CharClass, usize, String)> = None;

    for (pos, c) in text.chars().enumerate() {
        let class = classify(c);
        if let Some((open, _, buf)) = current.as_mut() {
            if *open == class && matches!(class, CharClass::Letter | CharClass::Digit) {
                buf.push(c);
                continue;
            }
        }
        if let Some((_, start, surface)) = current.take() {
            let end = start + surface.chars().count();
            tokens.push(Token { surface, start, end });
        }
        if class != CharClass::Space {
            current = Some((class, pos, c.to_string()));
        }
    }
    if let Some((_, start, surface)) = current {
        let end = start + surface.chars().count();
        tokens.push(Token { surface, start, end });
    }
    tokens
}

/// One BIO2 tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Outside,
    Begin(String),
    Inside(String),
}

impl Tag {
    pub fn entity_type(&self) -> Option<&str> {
        match self {
            Tag::Outside => None,
            Tag::Begin(t) | Tag::Inside(t) => Some(t),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str("O"),
            Tag::Begin(t) => write!(f, "B-{t}"),
            Tag::Inside(t) => write!(f, "I-{t}"),
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "O" => Ok(Tag::Outside),
            _ => match s.split_at_checked(2) {
                Some(("B-", t)) if !t.is_empty() => Ok(Tag::Begin(t.to_string())),
                Some(("I-", t)) if !t.is_empty() => Ok(Tag::Inside(t.to_string())),
                _ => Err(Error::UnknownLabel(s.to_string())),
            },
        }
    }
}

/// Tags aligned 1:1 with a token list.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSequence(pub Vec<Tag>);

impl LabelSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// No `I-x` directly after `O` or after a tag of another type.
    pub fn is_well_formed(&self) -> bool {
        let mut prev: Option<&str> = None;
        for tag in &self.0 {
            if let Tag::Inside(t) = tag {
                if prev != Some(t.as_str()) {
                    return false;
                }
            }
            prev = tag.entity_type();
        }
        true
    }
}

impl FromIterator<Tag> for LabelSequence {
    fn from_iter<I: IntoIterator<Item = Tag>>(iter: I) -> Self {
        LabelSequence(iter.into_iter().collect())
    }
}

/// Keeps a maximal non-overlapping subset, longest spans first, then by
/// start, then by type name.
pub fn resolve_overlaps(entities: &[EntitySpan]) -> Vec<EntitySpan> {
    let mut order: Vec<&EntitySpan> = entities.iter().collect();
    order.sort_by(|a, b| b.len().cmp(&a.len()).then(a.start.cmp(&b.start)).then(a.entity_type.cmp(&b.entity_type)));

    let mut kept: Vec<EntitySpan> = Vec::new();
    for e in order {
        if kept.iter().all(|k| k.overlap(e) == 0) {
            kept.push(e.clone());
        }
    }
    kept.sort();
    kept
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BioEncoding {
    pub labels: LabelSequence,
    /// Entities whose boundaries cut through a token and were widened.
    pub snapped: usize,
    /// Entities that got no token of their own (whitespace-only, or every
    /// covered token already claimed by an earlier entity).
    pub dropped: usize,
}

/// Labels tokens from non-overlapping entities. Entities that cut through a
/// token are snapped outward to whole tokens.
pub fn encode_bio(tokens: &[Token], entities: &[EntitySpan]) -> BioEncoding {
    let mut labels = vec![Tag::Outside; tokens.len()];
    let mut claimed = vec![false; tokens.len()];
    let mut snapped = 0;
    let mut dropped = 0;

    let mut sorted: Vec<&EntitySpan> = entities.iter().collect();
    sorted.sort();

    for e in sorted {
        // Tokens are sorted, so the covered ones form a contiguous range.
        let first = tokens.partition_point(|t| t.end <= e.start);
        let last = tokens.partition_point(|t| t.start < e.end);
        if first >= last {
            dropped += 1;
            continue;
        }
        if tokens[first].start < e.start || tokens[last - 1].end > e.end {
            snapped += 1;
        }
        let mut begun = false;
        for i in first..last {
            if claimed[i] {
                continue;
            }
            claimed[i] = true;
            labels[i] = if begun { Tag::Inside(e.entity_type.clone()) } else { Tag::Begin(e.entity_type.clone()) };
            begun = true;
        }
        if !begun {
            dropped += 1;
        }
    }

    BioEncoding { labels: LabelSequence(labels), snapped, dropped }
}

/// Turns B/I runs back into spans over `text`. An `I-x` that does not
/// continue an `x` run is read as `B-x`.
pub fn decode_bio(tokens: &[Token], labels: &LabelSequence, text: &str) -> Result<Vec<EntitySpan>> {
    if tokens.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: tokens.len(), found: labels.len() });
    }
    let index = CharIndex::new(text);
    let mut spans = Vec::new();
    let mut open: Option<(&str, usize, usize)> = None;

    let mut close = |open: &mut Option<(&str, usize, usize)>| -> Result<()> {
        if let Some((t, s, e)) = open.take() {
            spans.push(EntitySpan::with_index(t, s, e, text, &index, "-")?);
        }
        Ok(())
    };

    for (token, tag) in tokens.iter().zip(&labels.0) {
        match tag {
            Tag::Outside => close(&mut open)?,
            Tag::Inside(t) if matches!(open, Some((ot, _, _)) if ot == t.as_str()) => {
                if let Some((_, _, end)) = open.as_mut() {
                    *end = token.end;
                }
            }
            Tag::Begin(t) | Tag::Inside(t) => {
                close(&mut open)?;
                open = Some((t.as_str(), token.start, token.end));
            }
        }
    }
    close(&mut open)?;
    Ok(spans)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triples(tokens: &[Token]) -> Vec<(&str, usize, usize)> {
        tokens.iter().map(|t| (t.surface.as_str(), t.start, t.end)).collect()
    }

    fn span(t: &str, s: usize, e: usize, text: &str) -> EntitySpan {
        EntitySpan::new(t, s, e, text).unwrap()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(triples(&tokenize("2 h")), vec![("2", 0, 1), ("h", 2, 3)]);
        assert_eq!(triples(&tokenize("61%")), vec![("61", 0, 2), ("%", 2, 3)]);
        assert_eq!(
            triples(&tokenize("4-(6-Bromo")),
            vec![("4", 0, 1), ("-", 1, 2), ("(", 2, 3), ("6", 3, 4), ("-", 4, 5), ("Bromo", 5, 10)]
        );
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \n\t ").is_empty());
    }

    #[test]
    fn tokenize_counts_chars_not_bytes() {
        assert_eq!(triples(&tokenize("at 25 °C")), vec![("at", 0, 2), ("25", 3, 5), ("°", 6, 7), ("C", 7, 8)]);
        assert_eq!(triples(&tokenize("éther")), vec![("éther", 0, 5)]);
    }

    #[test]
    fn resolve_overlaps_examples() {
        let text = "0123456789abcdef";
        let disjoint = vec![span("A", 0, 3, text), span("B", 5, 8, text)];
        assert_eq!(resolve_overlaps(&disjoint), disjoint);

        let nested = vec![span("A", 0, 10, text), span("B", 2, 5, text)];
        assert_eq!(resolve_overlaps(&nested), vec![span("A", 0, 10, text)]);

        let same = vec![span("B", 0, 5, text), span("A", 0, 5, text)];
        assert_eq!(resolve_overlaps(&same), vec![span("A", 0, 5, text)]);

        let chain = vec![span("A", 0, 4, text), span("B", 3, 8, text), span("C", 7, 10, text)];
        assert_eq!(resolve_overlaps(&chain), vec![span("B", 3, 8, text)]);
    }

    #[test]
    fn encode_temperature() {
        let text = "at 25 °C";
        let tokens = tokenize(text);
        let enc = encode_bio(&tokens, &[span("temperature", 3, 5, text)]);
        assert_eq!(enc.labels.0, vec![Tag::Outside, Tag::Begin("temperature".into()), Tag::Outside, Tag::Outside]);
        assert_eq!(enc.snapped, 0);
    }

    #[test]
    fn encode_basic() {
        let text = "2 h";
        let tokens = tokenize(text);
        assert_eq!(encode_bio(&tokens, &[]).labels.0, vec![Tag::Outside, Tag::Outside]);
        let enc = encode_bio(&tokens, &[span("x", 0, 3, text)]);
        assert_eq!(enc.labels.0, vec![Tag::Begin("x".into()), Tag::Inside("x".into())]);
    }

    #[test]
    fn encode_snaps_outward() {
        let text = "Bromopyridine";
        let tokens = tokenize(text);
        let enc = encode_bio(&tokens, &[span("x", 0, 5, text)]);
        assert_eq!(enc.labels.0, vec![Tag::Begin("x".into())]);
        assert_eq!(enc.snapped, 1);

        // Two entities sharing one token after snapping: the first keeps it.
        let enc = encode_bio(&tokens, &[span("x", 0, 5, text), span("y", 5, 13, text)]);
        assert_eq!(enc.labels.0, vec![Tag::Begin("x".into())]);
        assert_eq!(enc.dropped, 1);
    }

    #[test]
    fn encode_drops_whitespace_only() {
        let text = "a   b";
        let enc = encode_bio(&tokenize(text), &[span("x", 2, 3, text)]);
        assert_eq!(enc.dropped, 1);
        assert!(enc.labels.0.iter().all(|t| *t == Tag::Outside));
    }

    #[test]
    fn decode_examples() {
        let text = "2 h";
        let tokens = tokenize(text);
        let labels: LabelSequence = [Tag::Begin("time".into()), Tag::Inside("time".into())].into_iter().collect();
        assert_eq!(decode_bio(&tokens, &labels, text).unwrap(), vec![span("time", 0, 3, text)]);

        let none = LabelSequence(vec![Tag::Outside; 2]);
        assert!(decode_bio(&tokens, &none, text).unwrap().is_empty());

        let repaired = LabelSequence(vec![Tag::Outside, Tag::Inside("time".into())]);
        assert_eq!(decode_bio(&tokens, &repaired, text).unwrap(), vec![span("time", 2, 3, text)]);
    }

    #[test]
    fn decode_splits_on_type_change_and_begin() {
        let text = "a b c d";
        let tokens = tokenize(text);
        let labels = LabelSequence(vec![
            Tag::Begin("x".into()),
            Tag::Inside("y".into()),
            Tag::Begin("y".into()),
            Tag::Inside("y".into()),
        ]);
        assert_eq!(
            decode_bio(&tokens, &labels, text).unwrap(),
            vec![span("x", 0, 1, text), span("y", 2, 3, text), span("y", 4, 7, text)]
        );
    }

    #[test]
    fn decode_length_mismatch() {
        let tokens = tokenize("2 h");
        let err = decode_bio(&tokens, &LabelSequence(vec![Tag::Outside]), "2 h").unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn tag_parsing() {
        assert_eq!("O".parse::<Tag>().unwrap(), Tag::Outside);
        assert_eq!("B-time".parse::<Tag>().unwrap(), Tag::Begin("time".into()));
        assert_eq!("I-yield_percent".parse::<Tag>().unwrap(), Tag::Inside("yield_percent".into()));
        assert!("B-".parse::<Tag>().is_err());
        assert!("X-time".parse::<Tag>().is_err());
        assert_eq!(Tag::Inside("time".into()).to_string(), "I-time");
    }

    #[test]
    fn well_formedness() {
        let ok = LabelSequence(vec![Tag::Begin("x".into()), Tag::Inside("x".into()), Tag::Outside]);
        assert!(ok.is_well_formed());
        assert!(!LabelSequence(vec![Tag::Outside, Tag::Inside("x".into())]).is_well_formed());
        assert!(!LabelSequence(vec![Tag::Begin("y".into()), Tag::Inside("x".into())]).is_well_formed());
    }
}
