//! Named entity recognition tooling for chemical patent snippets.
//!
//! - [`brat`]: BRAT standoff corpora (`.txt` / `.ann` pairs).
//! - [`textproc`]: tokenization, BIO encoding, overlap resolution.
//! - [`crf`]: a hand-featured linear-chain CRF tagger.
//! - [`ensemble`]: majority voting over model predictions and exhaustive
//!   composition search.
//! - [`eval`]: exact/relaxed span metrics, confusion matrix, span errors.
//! - [`cli`]: the `chempat` command-line front end.

pub mod brat;
pub mod cli;
pub mod crf;
pub mod ensemble;
mod error;
pub mod eval;
pub mod synthetic;
pub mod textproc;

pub use brat::{Corpus, Document, EntitySpan};
pub use error::{Error, Result};

/// The ten entity types of the ChEMU named entity recognition task.
pub const ENTITY_TYPES: [&str; 10] = [
    "example_label",
    "other_compound",
    "reaction_product",
    "reagent_catalyst",
    "solvent",
    "starting_material",
    "temperature",
    "time",
    "yield_other",
    "yield_percent",
];
