//! Synthetic emission oracle, tau grid search and the end-to-end pipeline.

mod pipeline;
mod synth;
mod tune;

pub use pipeline::{
    decode_corpus, decode_records, grids_from_tracks, load_decoded, objective, resolve_records, run_pipeline,
    save_decoded, DecodedRecord, EntityResult, PipelineOutput,
};
pub use synth::{synth_corpus, synth_emissions, BiasKey, OracleConfig, NOISELESS_LOGIT};
pub use tune::{tune, GridSpec, TuneCell, TuneResult};
