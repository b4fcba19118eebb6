//! Run configuration, toy corpus generation and the command implementations
//! behind the CLI verbs.

mod commands;
mod config;
mod corpus;

pub use commands::{
    cmd_eval, cmd_make_toy_corpus, cmd_refine, cmd_render, cmd_synth, cmd_train, read_score, refine_audio,
    render_audio, sidecar_path, EvalJob, RefineSummary, RenderSummary, RunMetadata, TrainJob, TrainSummary,
};
pub use config::{string_override, RunConfig};
pub use corpus::{
    harmonic_weights, load_toy_dataset, make_toy_corpus, midi_hz, random_score, read_corpus_manifest,
    render_performed, render_synthetic, toy_library, toy_note_sample, write_toy_library, CorpusEntry,
    CorpusSummary, StyleParams, ToyCorpusSpec, TOY_RATE,
};
