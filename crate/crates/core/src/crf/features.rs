//! Hand-crafted token features over a ±2 window. No part-of-speech tags and
//! no gazetteers.

use std::collections::BTreeSet;

use crate::textproc::Token;

/// Features active at one token position, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVector(pub BTreeSet<String>);

impl FeatureVector {
    pub fn contains(&self, feature: &str) -> bool {
        self.0.contains(feature)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        FeatureVector(iter.into_iter().map(Into::into).collect())
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.surface
    }
}

pub const WINDOW: i64 = 2;
const MAX_AFFIX: usize = 4;

fn offset_tag(d: i64) -> String {
    match d {
        0 => "@0".to_string(),
        d if d > 0 => format!("@+{d}"),
        d => format!("@{d}"),
    }
}

/// Capitalization pattern: upper → `A`, other letters → `a`, digits → `0`,
/// anything else → `-`.
pub fn shape_pattern(token: &str) -> String {
    token
        .chars()
        .map(|c| {
            if c.is_uppercase() {
                'A'
            } else if c.is_alphabetic() {
                'a'
            } else if c.is_numeric() {
                '0'
            } else {
                '-'
            }
        })
        .collect()
}

fn is_all(token: &str, pred: impl Fn(char) -> bool) -> bool {
    !token.is_empty() && token.chars().all(pred)
}

pub fn token_type(token: &str) -> &'static str {
    if is_all(token, char::is_numeric) {
        "digit"
    } else if is_all(token, char::is_alphabetic) {
        "word"
    } else if is_all(token, |c| !c.is_alphanumeric()) {
        "symbol"
    } else {
        "mixed"
    }
}

fn token_features(token: &str, d: i64, out: &mut BTreeSet<String>) {
    let at = offset_tag(d);
    let mut push = |name: String| {
        out.insert(name + &at);
    };

    push(format!("w={token}"));
    push(format!("lower={}", token.to_lowercase()));
    push(format!("pat={}", shape_pattern(token)));
    push(format!("type={}", token_type(token)));

    let chars: Vec<char> = token.chars().collect();
    if d == 0 {
        for n in 1..=MAX_AFFIX.min(chars.len()) {
            push(format!("pre{n}={}", chars[..n].iter().collect::<String>()));
            push(format!("suf{n}={}", chars[chars.len() - n..].iter().collect::<String>()));
        }
    }

    let is_digit = is_all(token, char::is_numeric);
    if is_digit && (chars.len() == 2 || chars.len() == 4) {
        push(format!("dlen={}", chars.len()));
    }
    if token.chars().any(char::is_numeric) && token.chars().any(char::is_alphabetic) {
        push("has_digit_and_alpha".into());
    }
    for (c, name) in [('-', "has_hyphen"), (',', "has_comma"), ('.', "has_period")] {
        if token.contains(c) {
            push(name.into());
        }
    }
    if is_all(token, char::is_uppercase) {
        push("all_upper".into());
    }
    if is_all(token, char::is_lowercase) {
        push("all_lower".into());
    }
    if is_all(token, char::is_alphabetic) {
        push("is_alpha".into());
    }
    if is_digit {
        push("is_digit".into());
    }
    if is_all(token, |c| !c.is_alphanumeric()) {
        push("is_symbol".into());
    }
}

/// Features for position `i`. Window positions before the sequence emit
/// `BOS@d`, after it `EOS@d`. Affix features only appear for the centre token.
pub fn extract_features<S: AsRef<str>>(tokens: &[S], i: usize) -> FeatureVector {
    assert!(i < tokens.len(), "position {i} out of range for {} tokens", tokens.len());
    let mut out = BTreeSet::new();
    for d in -WINDOW..=WINDOW {
        let j = i as i64 + d;
        if j < 0 {
            out.insert(format!("BOS{}", offset_tag(d)));
        } else if j >= tokens.len() as i64 {
            out.insert(format!("EOS{}", offset_tag(d)));
        } else {
            token_features(tokens[j as usize].as_ref(), d, &mut out);
        }
    }
    FeatureVector(out)
}

/// Features for every position of a sequence.
pub fn extract_sequence<S: AsRef<str>>(tokens: &[S]) -> Vec<FeatureVector> {
    (0..tokens.len()).map(|i| extract_features(tokens, i)).collect()
}
