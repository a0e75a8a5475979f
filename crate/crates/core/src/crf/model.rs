use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::crf::features::FeatureVector;
use crate::error::{Error, Result};
use crate::textproc::{LabelSequence, Tag};

pub(crate) const MAGIC: &str = "CRFTAG v1";

/// A linear-chain CRF.
///
/// Weights are laid out as `|features| x |labels|` emission weights
/// (row-major by feature) followed by a `|labels| x |labels|` transition
/// block indexed `[from][to]`. Position 0 has no transition term; the
/// `BOS@-1` feature row plays the role of the start-state weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    labels: Vec<Tag>,
    label_index: HashMap<Tag, usize>,
    features: Vec<String>,
    feature_index: HashMap<String, usize>,
    weights: Vec<f64>,
    l2: f64,
}

/// Feature ids active at each position, unknown features removed.
pub(crate) type Compiled = Vec<Vec<usize>>;

impl CrfModel {
    /// A zero-weight model. Duplicate labels or features are rejected.
    pub fn new(labels: Vec<Tag>, features: Vec<String>, l2: f64) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidConfig("a model needs at least one label".into()));
        }
        if !(l2.is_finite() && l2 >= 0.0) {
            return Err(Error::InvalidConfig(format!("l2 must be a non-negative real, got {l2}")));
        }
        let mut label_index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if label_index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate label {l}")));
            }
        }
        let mut feature_index = HashMap::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if feature_index.insert(f.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate feature {f:?}")));
            }
        }
        let n = features.len() * labels.len() + labels.len() * labels.len();
        Ok(CrfModel { labels, label_index, features, feature_index, weights: vec![0.0; n], l2 })
    }

    pub fn labels(&self) -> &[Tag] {
        &self.labels
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn feature_id(&self, feature: &str) -> Option<usize> {
        self.feature_index.get(feature).copied()
    }

    pub fn label_id(&self, label: &Tag) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(Error::LengthMismatch { expected: self.weights.len(), found: weights.len() });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::Numerical(format!("non-finite weight {w}")));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn emission_index(&self, feature: usize, label: usize) -> usize {
        feature * self.labels.len() + label
    }

    pub fn transition_index(&self, from: usize, to: usize) -> usize {
        let l = self.labels.len();
        self.features.len() * l + from * l + to
    }

    pub fn set_emission(&mut self, feature: &str, label: &Tag, weight: f64) -> Result<()> {
        let f = self.feature_id(feature).ok_or_else(|| Error::InvalidConfig(format!("unknown feature {feature:?}")))?;
        let y = self.label_id(label).ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        let i = self.emission_index(f, y);
        self.weights[i] = weight;
        Ok(())
    }

    pub fn set_transition(&mut self, from: &Tag, to: &Tag, weight: f64) -> Result<()> {
        let a = self.label_id(from).ok_or_else(|| Error::UnknownLabel(from.to_string()))?;
        let b = self.label_id(to).ok_or_else(|| Error::UnknownLabel(to.to_string()))?;
        let i = self.transition_index(a, b);
        self.weights[i] = weight;
        Ok(())
    }

    pub(crate) fn compile(&self, feats: &[FeatureVector]) -> Compiled {
        feats.iter().map(|fv| fv.iter().filter_map(|f| self.feature_id(f)).collect()).collect()
    }

    pub(crate) fn label_ids(&self, labels: &LabelSequence) -> Result<Vec<usize>> {
        labels.0.iter().map(|l| self.label_id(l).ok_or_else(|| Error::UnknownLabel(l.to_string()))).collect()
    }

    /// Emission scores, `n x |labels|` row-major.
    pub(crate) fn emissions(&self, compiled: &Compiled, weights: &[f64]) -> Vec<f64> {
        let l = self.labels.len();
        let mut out = vec![0.0; compiled.len() * l];
        for (t, ids) in compiled.iter().enumerate() {
            let row = &mut out[t * l..(t + 1) * l];
            for &f in ids {
                let w = &weights[f * l..(f + 1) * l];
                for (r, w) in row.iter_mut().zip(w) {
                    *r += w;
                }
            }
        }
        out
    }

    pub(crate) fn transitions<'w>(&self, weights: &'w [f64]) -> &'w [f64] {
        &weights[self.features.len() * self.labels.len()..]
    }

    /// Unnormalized log-score of a labeling.
    pub fn score_sequence(&self, feats: &[FeatureVector], labels: &LabelSequence) -> Result<f64> {
        if feats.len() != labels.len() {
            return Err(Error::LengthMismatch { expected: feats.len(), found: labels.len() });
        }
        let ys = self.label_ids(labels)?;
        let compiled = self.compile(feats);
        Ok(self.score_compiled(&compiled, &ys, &self.weights))
    }

    pub(crate) fn score_compiled(&self, compiled: &Compiled, ys: &[usize], weights: &[f64]) -> f64 {
        let l = self.labels.len();
        let em = self.emissions(compiled, weights);
        let tr = self.transitions(weights);
        let mut score = 0.0;
        for (t, &y) in ys.iter().enumerate() {
            if t > 0 {
                score += tr[ys[t - 1] * l + y];
            }
            score += em[t * l + y];
        }
        score
    }

    /// Versioned text form. Weights are written with 17 significant digits,
    /// which round-trips every `f64` exactly.
    pub fn to_model_text(&self) -> Result<String> {
        let names: Vec<String> = self.labels.iter().map(Tag::to_string).collect();
        if let Some(bad) = names.iter().find(|n| n.contains(',')) {
            return Err(Error::InvalidConfig(format!("label {bad:?} contains a comma")));
        }
        let l = self.labels.len();
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "labels\t{}", names.join(","));
        let _ = writeln!(out, "l2\t{:.16e}", self.l2);
        for (f, name) in self.features.iter().enumerate() {
            let row: Vec<String> = self.weights[f * l..(f + 1) * l].iter().map(|w| format!("{w:.16e}")).collect();
            let _ = writeln!(out, "F\t{name}\t{}", row.join(","));
        }
        let tr = self.transitions(&self.weights);
        for a in 0..l {
            for b in 0..l {
                let _ = writeln!(out, "T\t{},{}\t{:.16e}", names[a], names[b], tr[a * l + b]);
            }
        }
        Ok(out)
    }

    pub fn from_model_text(text: &str) -> Result<Self> {
        let bad = |line: usize, message: String| Error::ModelFormat { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

        match lines.next() {
            Some((_, MAGIC)) => {}
            Some((n, other)) => return Err(bad(n, format!("expected {MAGIC:?}, found {other:?}"))),
            None => return Err(bad(1, "empty model file".into())),
        }

        let (n, line) = lines.next().ok_or_else(|| bad(2, "missing labels line".into()))?;
        let labels: Vec<Tag> = match line.split_once('\t') {
            Some(("labels", list)) => {
                list.split(',').map(|s| s.parse::<Tag>()).collect::<Result<_>>().map_err(|e| bad(n, e.to_string()))?
            }
            _ => return Err(bad(n, "expected labels line".into())),
        };

        let parse_f64 = |n: usize, s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| bad(n, format!("bad number {s:?}")))?;
            if !v.is_finite() {
                return Err(bad(n, format!("non-finite number {s:?}")));
            }
            Ok(v)
        };

        let (n, line) = lines.next().ok_or_else(|| bad(3, "missing l2 line".into()))?;
        let l2 = match line.split_once('\t') {
            Some(("l2", v)) => parse_f64(n, v)?,
            _ => return Err(bad(n, "expected l2 line".into())),
        };

        let k = labels.len();
        let mut features = Vec::new();
        let mut emission = Vec::new();
        let mut transitions: Vec<Option<f64>> = vec![None; k * k];
        let label_pos: HashMap<String, usize> = labels.iter().enumerate().map(|(i, l)| (l.to_string(), i)).collect();

        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[..] {
                ["F", name, row] => {
                    let ws = row.split(',').map(|s| parse_f64(n, s)).collect::<Result<Vec<_>>>()?;
                    if ws.len() != k {
                        return Err(bad(n, format!("expected {k} weights, found {}", ws.len())));
                    }
                    features.push(name.to_string());
                    emission.extend(ws);
                }
                ["T", pair, w] => {
                    let (a, b) = pair.split_once(',').ok_or_else(|| bad(n, format!("bad transition {pair:?}")))?;
                    let lookup =
                        |s: &str| label_pos.get(s).copied().ok_or_else(|| bad(n, format!("unknown label {s:?}")));
                    let (a, b) = (lookup(a)?, lookup(b)?);
                    if transitions[a * k + b].replace(parse_f64(n, w)?).is_some() {
                        return Err(bad(n, format!("duplicate transition {pair}")));
                    }
                }
                _ => return Err(bad(n, format!("unrecognized line {line:?}"))),
            }
        }

        let mut model = CrfModel::new(labels, features, l2).map_err(|e| bad(0, e.to_string()))?;
        let mut weights = emission;
        for (i, t) in transitions.into_iter().enumerate() {
            weights.push(t.ok_or_else(|| bad(0, format!("missing transition {},{}", i / k, i % k)))?);
        }
        model.set_weights(weights)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_model_text()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_model_text(&text).map_err(|e| e.in_file(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(names: &[&str]) -> Vec<Tag> {
        names.iter().map(|n| n.parse().unwrap()).collect()
    }

    #[test]
    fn weight_layout() {
        let m = CrfModel::new(tags(&["O", "B-x", "I-x"]), vec!["a".into(), "b".into()], 0.1).unwrap();
        assert_eq!(m.weights().len(), 2 * 3 + 9);
        assert_eq!(m.emission_index(1, 2), 5);
        assert_eq!(m.transition_index(0, 0), 6);
        assert_eq!(m.transition_index(2, 1), 6 + 7);
    }

    #[test]
    fn zero_weights_score_zero() {
        let m = CrfModel::new(tags(&["O", "B-x"]), vec!["f".into()], 0.0).unwrap();
        let feats = vec![FeatureVector::from_iter(["f"]), FeatureVector::from_iter(["g"])];
        for labels in [tags(&["O", "O"]), tags(&["B-x", "O"]), tags(&["B-x", "B-x"])] {
            assert_eq!(m.score_sequence(&feats, &LabelSequence(labels)).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_emission_weight() {
        let mut m = CrfModel::new(tags(&["O", "B-x"]), vec!["f".into()], 0.0).unwrap();
        m.set_emission("f", &"B-x".parse().unwrap(), 2.0).unwrap();
        let feats = vec![FeatureVector::from_iter(["f"])];
        assert_eq!(m.score_sequence(&feats, &LabelSequence(tags(&["B-x"]))).unwrap(), 2.0);
        assert_eq!(m.score_sequence(&feats, &LabelSequence(tags(&["O"]))).unwrap(), 0.0);
    }

    #[test]
    fn score_uses_transitions() {
        let mut m = CrfModel::new(tags(&["O", "B-x", "I-x"]), vec!["f".into()], 0.0).unwrap();
        m.set_transition(&"B-x".parse().unwrap(), &"I-x".parse().unwrap(), 1.5).unwrap();
        m.set_emission("f", &"I-x".parse().unwrap(), 0.25).unwrap();
        let feats = vec![FeatureVector::default(), FeatureVector::from_iter(["f", "unknown"])];
        let s = m.score_sequence(&feats, &LabelSequence(tags(&["B-x", "I-x"]))).unwrap();
        assert_eq!(s, 1.75);
    }

    #[test]
    fn score_errors() {
        let m = CrfModel::new(tags(&["O"]), vec![], 0.0).unwrap();
        let feats = vec![FeatureVector::default()];
        assert!(matches!(m.score_sequence(&feats, &LabelSequence(vec![])), Err(Error::LengthMismatch { .. })));
        assert!(matches!(m.score_sequence(&feats, &LabelSequence(tags(&["B-y"]))), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn text_round_trip() {
        let mut m =
            CrfModel::new(tags(&["O", "B-time", "I-time"]), vec!["w=,@0".into(), "BOS@-1".into()], 0.1).unwrap();
        let ws: Vec<f64> = (0..m.weights().len()).map(|i| (i as f64 * 0.7311).sin() / 3.0).collect();
        m.set_weights(ws).unwrap();
        let text = m.to_model_text().unwrap();
        assert!(text.starts_with("CRFTAG v1\nlabels\tO,B-time,I-time\nl2\t"));
        let back = CrfModel::from_model_text(&text).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.weights().iter().zip(m.weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn empty_feature_model_round_trips() {
        let m = CrfModel::new(tags(&["O"]), vec![], 0.0).unwrap();
        assert_eq!(CrfModel::from_model_text(&m.to_model_text().unwrap()).unwrap(), m);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(CrfModel::from_model_text("CRFTAG v2\n"), Err(Error::ModelFormat { line: 1, .. })));
        assert!(matches!(CrfModel::from_model_text(""), Err(Error::ModelFormat { .. })));
        let m = CrfModel::new(tags(&["O", "B-x"]), vec!["f".into()], 0.0).unwrap();
        let text = m.to_model_text().unwrap();
        let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(CrfModel::from_model_text(&truncated).is_err());
        let corrupted = text.replace("F\tf\t", "F\tf\tx,");
        assert!(CrfModel::from_model_text(&corrupted).is_err());
    }
}
