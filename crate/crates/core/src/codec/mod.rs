//! Compressed representation the diffusion model operates on.

mod latent;
mod polyphase;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use latent::Latent;
pub use polyphase::{PolyphaseBasis, PolyphaseCodec};

use crate::audio::Waveform;
use crate::{Error, Result};

/// Default frame length / downsampling ratio.
pub const DEFAULT_DOWNSAMPLE: usize = 32;

/// Linear waveform <-> latent map. Trained autoencoders plug in here too.
pub trait Codec: Send + Sync {
    fn name(&self) -> &str;
    fn downsample(&self) -> usize;
    /// Latent channels produced for audio with `audio_channels` channels.
    fn latent_channels(&self, audio_channels: usize) -> usize;
    fn encode(&self, audio: &Waveform) -> Result<Latent>;
    fn decode(&self, z: &Latent) -> Result<Waveform>;
}

type CodecFactory = fn(usize) -> Result<Arc<dyn Codec>>;

/// Codecs selectable by name.
pub struct CodecRegistry {
    factories: BTreeMap<String, CodecFactory>,
}

impl Default for CodecRegistry {
    fn default() -> Self {
        let mut r = Self {
            factories: BTreeMap::new(),
        };
        r.register("dct", |d| Ok(Arc::new(PolyphaseCodec::new(PolyphaseBasis::Dct, d)?)));
        r.register("identity", |d| Ok(Arc::new(PolyphaseCodec::new(PolyphaseBasis::Identity, d)?)));
        r
    }
}

impl CodecRegistry {
    pub fn register(&mut self, name: &str, factory: CodecFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, name: &str, downsample: usize) -> Result<Arc<dyn Codec>> {
        let f = self.factories.get(name).ok_or_else(|| Error::Unregistered {
            kind: "codec",
            name: name.to_string(),
            available: self.names().join(", "),
        })?;
        f(downsample)
    }
}
