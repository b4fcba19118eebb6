//! Realism and faithfulness metrics: Fréchet distance between embedding
//! sets and note-level transcription F1.

mod embed;
mod frechet;
mod notes;
mod report;
mod transcribe;

pub use embed::{embed_set, embed_toy, EMBEDDING_DIM, EMBEDDING_RATE};
pub use frechet::{frechet_distance, EmbeddingSet, COVARIANCE_EPSILON};
pub use notes::{note_f1, NoteScores, DEFAULT_ONSET_TOLERANCE_S};
pub use report::{config_hash, content_hash, MetricReport};
pub use transcribe::{transcribe_mono, TranscribedNote};
