//! Templated reaction-procedure snippets with `time`, `temperature` and
//! `yield_percent` annotations. Deterministic for a given seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::brat::{Corpus, Document};

struct Builder {
    text: String,
    len: usize,
    entities: Vec<(usize, usize, &'static str)>,
}

impl Builder {
    fn push(&mut self, s: &str) {
        self.text.push_str(s);
        self.len += s.chars().count();
    }

    fn entity(&mut self, s: &str, entity_type: &'static str) {
        let start = self.len;
        self.push(s);
        self.entities.push((start, self.len, entity_type));
    }
}

const COMPOUNDS: &[&str] = &[
    "4-(6-Bromo-3-methoxypyridin-2-yl)-6-chloropyrimidin-2-amine",
    "the aldehyde",
    "N,N-diisopropylethylamine",
    "sodium borohydride",
    "Intermediate 13",
    "the crude residue",
    "potassium carbonate",
    "2-chloro-5-nitropyridine",
];
const SOLVENTS: &[&str] = &["THF", "DMF", "methanol", "dichloromethane", "EtOAc", "toluene"];
const VERBS: &[&str] = &["stirred", "heated", "refluxed", "kept", "shaken"];

fn time(rng: &mut impl Rng) -> String {
    let n: u32 = rng.gen_range(1..49);
    match rng.gen_range(0..5) {
        0 => format!("{n} h"),
        1 => format!("{n} hours"),
        2 => format!("{} min", rng.gen_range(5..121)),
        3 => format!("{n}.5 h"),
        _ => format!("{} days", rng.gen_range(2..8)),
    }
}

fn temperature(rng: &mut impl Rng) -> String {
    let t: i32 = rng.gen_range(-78..151);
    match rng.gen_range(0..3) {
        0 => format!("{t} °C"),
        1 => format!("{t}°C"),
        _ => format!("{t} ° C"),
    }
}

fn yield_percent(rng: &mut impl Rng) -> String {
    let p: u32 = rng.gen_range(5..100);
    match rng.gen_range(0..3) {
        0 => format!("{p}%"),
        1 => format!("{p}.{}%", rng.gen_range(0..10)),
        _ => format!("{p} %"),
    }
}

fn pick<'a>(rng: &mut impl Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty")
}

fn sentence(b: &mut Builder, rng: &mut impl Rng) {
    match rng.gen_range(0..6) {
        0 => {
            b.push(&format!("The mixture was {} for ", pick(rng, VERBS)));
            b.entity(&time(rng), "time");
            b.push(" at ");
            b.entity(&temperature(rng), "temperature");
            b.push(" (");
            b.entity(&yield_percent(rng), "yield_percent");
            b.push(").");
        }
        1 => {
            b.push(&format!(
                "{} was added and the solution was {} at ",
                capitalize(pick(rng, COMPOUNDS)),
                pick(rng, VERBS)
            ));
            b.entity(&temperature(rng), "temperature");
            b.push(" for ");
            b.entity(&time(rng), "time");
            b.push(".");
        }
        2 => {
            b.push("After ");
            b.entity(&time(rng), "time");
            b.push(&format!(", the product was collected by filtration ({} mg, ", rng.gen_range(10..900)));
            b.entity(&yield_percent(rng), "yield_percent");
            b.push(").");
        }
        3 => {
            b.push(&format!(
                "Compound {} was dissolved in {} mL of {}.",
                rng.gen_range(1..40),
                rng.gen_range(2..60),
                pick(rng, SOLVENTS)
            ));
        }
        4 => {
            b.push("Stirring was continued for ");
            b.entity(&time(rng), "time");
            b.push(" while the temperature was held at ");
            b.entity(&temperature(rng), "temperature");
            b.push(".");
        }
        _ => {
            b.push(&format!("The title compound was obtained as a white solid ({} g, ", rng.gen_range(1..20)));
            b.entity(&yield_percent(rng), "yield_percent");
            b.push(&format!(") after washing with {}.", pick(rng, SOLVENTS)));
        }
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// `n` documents named `<prefix><index>` of one to three sentences each.
pub fn generate(n: usize, seed: u64, prefix: &str) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut b = Builder { text: String::new(), len: 0, entities: Vec::new() };
            for k in 0..rng.gen_range(1..4) {
                if k > 0 {
                    b.push(" ");
                }
                sentence(&mut b, &mut rng);
            }
            Document::from_triples(format!("{prefix}{i:04}"), b.text, b.entities).expect("generated spans are valid")
        })
        .collect()
}

/// 200 training and 50 held-out snippets from disjoint seeds.
pub fn train_test_split(seed: u64) -> (Corpus, Corpus) {
    (generate(200, seed, "train"), generate(50, seed ^ 0x9e37_79b9_7f4a_7c15, "test"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let a = generate(20, 7, "s");
        assert_eq!(a, generate(20, 7, "s"));
        assert_ne!(a, generate(20, 8, "s"));
        for doc in a.documents() {
            for e in doc.entities() {
                assert!(!e.surface.starts_with(' ') && !e.surface.ends_with(' '));
            }
        }
        assert!(a.entity_count() > 20);
    }
}
