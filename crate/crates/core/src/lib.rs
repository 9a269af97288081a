//! Entity-state tracking toolkit for procedural text.
//!
//! The pipeline: format QA instances for an external model, estimate
//! transition scores from gold grids, decode the model's state logits with
//! mention-weighted Viterbi, reconcile locations with the decoded states,
//! and score the result.

pub mod consistency;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod evaluator;
pub mod harness;
pub mod jsonl;
pub mod qaformat;
pub mod scalar;
pub mod transitions;

pub use corpus::{AnnotationGrid, Corpus, Entity, LocationValue, Procedure, StateVocabulary, Track};
pub use decoder::{DecodeConfig, EmissionSet, Emissions, EntityEmissions};
pub use error::{Error, Result};
pub use evaluator::EvalReport;
pub use scalar::Score;

pub type TransitionModelF64 = transitions::TransitionModel<f64>;
pub type TransitionModelF32 = transitions::TransitionModel<f32>;
pub type EmissionsF64 = decoder::Emissions<f64>;
pub type EmissionsF32 = decoder::Emissions<f32>;
