use std::path::PathBuf;

use crate::midi::MidiError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("midi: {0}")]
    Midi(#[from] MidiError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("sample library: {0}")]
    Library(String),

    #[error("unknown instrument {0:?}")]
    UnknownInstrument(String),

    #[error("invalid waveform: {0}")]
    Waveform(String),

    #[error("codec: {0}")]
    Codec(String),

    #[error("latent shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("noise source exhausted at step {0}")]
    NoiseExhausted(usize),

    #[error("inversion inconsistency at step {step}: zero ancestral noise but residual {residual:e}")]
    Inversion { step: usize, residual: f64 },

    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error("unknown {kind} {name:?}; registered: {available}")]
    Unregistered {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("evaluation: {0}")]
    Eval(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attaches the file an error arose from, unless it already names one.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ (Error::Io { .. } | Error::Wav { .. } | Error::File { .. }) => e,
            e => Error::File {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(expected: impl std::fmt::Display, actual: impl std::fmt::Display) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
