//! Linear-chain CRF baseline: ±2 window features, L2-regularized
//! conditional log-likelihood training, Viterbi decoding.

mod features;
mod inference;
mod model;
mod train;

pub use features::{extract_features, extract_sequence, shape_pattern, token_type, FeatureVector, WINDOW};
pub use model::CrfModel;
pub use train::{tag_document, train, TrainConfig, TrainLog, TrainStep};
