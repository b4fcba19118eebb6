//! Concatenative sampler: one-shot note samples placed on a timeline with
//! per-note ADSR envelopes.

mod envelope;
mod library;
mod render;

pub use envelope::{apply_adsr, AdsrEnvelope};
pub use library::{load_library, ManifestEntry, NoteSample, SampleLibrary, Selection};
pub use render::{render_track, RenderOptions};
