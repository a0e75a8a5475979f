mod common;

use std::collections::BTreeSet;

use chempat::brat::{Corpus, Document};
use chempat::ensemble::{
    composition_tsv, majority_vote, search_composition, subsets, tally_votes, EnsembleConfig, PredictionSet, Quorum,
};
use chempat::Error;
use common::*;
use proptest::prelude::*;

fn member_sets(seed: u64, k: usize) -> (Corpus, Vec<PredictionSet>) {
    let mut r = rng(seed);
    let (gold, _) = random_gold_pred(&mut r, 3, 8, 3);
    let sets = (0..k)
        .map(|i| {
            let (_, pred) = random_gold_pred(&mut rng(seed.wrapping_add(i as u64 + 1)), 3, 8, 3);
            // Reuse gold texts so every member covers the same documents.
            let pred: Corpus = gold
                .documents()
                .map(|g| {
                    let p = pred.get(&g.id).unwrap();
                    let len = g.char_len();
                    let mut spans: Vec<_> = p
                        .entities()
                        .iter()
                        .filter(|e| e.end <= len)
                        .map(|e| (e.start, e.end, e.entity_type.as_str()))
                        .collect();
                    spans.extend(g.entities().iter().take(i + 1).map(|e| (e.start, e.end, e.entity_type.as_str())));
                    Document::from_triples(g.id.clone(), g.text.clone(), spans).unwrap()
                })
                .collect();
            PredictionSet::new(format!("m{i}"), pred)
        })
        .collect();
    (gold, sets)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vote_matches_counting(seed in any::<u64>(), k in 1..=6usize) {
        let (_, sets) = member_sets(seed, k);
        let tally = tally_votes(&sets).unwrap();
        let voted = majority_vote(&tally, &EnsembleConfig::majority_of(&tally).unwrap()).unwrap();
        let refs: Vec<&Corpus> = sets.iter().map(|s| &s.predictions).collect();
        let want = vote_oracle(&refs);
        for doc in voted.documents() {
            prop_assert_eq!(&triples(doc), &want[&doc.id]);
            for e in doc.entities() {
                prop_assert_eq!(&e.surface, &doc.text.chars().skip(e.start).take(e.len()).collect::<String>());
            }
        }
    }

    #[test]
    fn member_order_is_irrelevant(seed in any::<u64>(), k in 2..=5usize) {
        let (_, mut sets) = member_sets(seed, k);
        let tally = tally_votes(&sets).unwrap();
        let a = majority_vote(&tally, &EnsembleConfig::majority_of(&tally).unwrap()).unwrap();
        sets.reverse();
        let tally = tally_votes(&sets).unwrap();
        let b = majority_vote(&tally, &EnsembleConfig::majority_of(&tally).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn search_ranks_like_enumeration(seed in any::<u64>(), k in 2..=4usize) {
        let (gold, sets) = member_sets(seed, k);
        let rows = search_composition(&sets, &gold, 2, k).unwrap();
        prop_assert_eq!(rows.len(), subsets(k, 2, k).len());
        for row in &rows {
            let members: Vec<&Corpus> =
                sets.iter().filter(|s| row.members.contains(&s.model_name)).map(|s| &s.predictions).collect();
            let f1 = exact_f1_oracle(&gold, &vote_oracle(&members));
            prop_assert!((row.exact.f1 - f1).abs() < 1e-12);
            prop_assert!(row.relaxed.f1 >= row.exact.f1);
        }
        for w in rows.windows(2) {
            let key = |r: &chempat::ensemble::CompositionRow| (std::cmp::Reverse(ordered(r.exact.f1)), r.members.len(), r.members.clone());
            prop_assert!(key(&w[0]) <= key(&w[1]));
        }
    }
}

fn ordered(x: f64) -> u64 {
    x.to_bits()
}

#[test]
fn subset_counts() {
    assert_eq!(subsets(5, 2, 5).len(), 26);
    assert_eq!(subsets(7, 2, 7).len(), 120);
    assert_eq!(subsets(3, 3, 3), vec![vec![0, 1, 2]]);
}

#[test]
fn even_split_is_rejected() {
    let doc = |spans: Vec<(usize, usize, &str)>| -> Corpus {
        std::iter::once(Document::from_triples("d", "in DMF", spans).unwrap()).collect()
    };
    let sets = vec![
        PredictionSet::new("a", doc(vec![(3, 6, "solvent")])),
        PredictionSet::new("b", doc(vec![(3, 6, "solvent")])),
        PredictionSet::new("c", doc(vec![])),
        PredictionSet::new("d", doc(vec![])),
    ];
    let tally = tally_votes(&sets).unwrap();
    let strict = majority_vote(&tally, &EnsembleConfig::majority_of(&tally).unwrap()).unwrap();
    assert!(strict.get("d").unwrap().entities().is_empty());
    let lenient = EnsembleConfig::new(Quorum::AtLeast(2), tally.models().to_vec()).unwrap();
    assert_eq!(majority_vote(&tally, &lenient).unwrap().get("d").unwrap().entities().len(), 1);
}

#[test]
fn search_rejects_unknown_documents() {
    let (gold, mut sets) = member_sets(3, 3);
    let extra = Document::from_triples("stray", "x", Vec::<(usize, usize, &str)>::new()).unwrap();
    sets[1].predictions.insert(extra);
    assert!(matches!(search_composition(&sets, &gold, 2, 3), Err(Error::IdMismatch { .. })));
    assert!(matches!(search_composition(&sets, &gold, 1, 3), Err(Error::InvalidConfig(_))));
    assert!(matches!(search_composition(&sets, &gold, 2, 4), Err(Error::InvalidConfig(_))));
}

#[test]
fn composition_report_layout() {
    let (gold, sets) = member_sets(5, 3);
    let rows = search_composition(&sets, &gold, 2, 3).unwrap();
    let tsv = composition_tsv(&rows);
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("members\texact_precision"));
    let names: BTreeSet<&str> = lines[1].split('\t').next().unwrap().split(',').collect();
    assert!(names.len() >= 2);
}
