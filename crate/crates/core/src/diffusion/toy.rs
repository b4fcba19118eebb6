use std::path::Path;

use super::network::{self, NetConfig};
use super::{Condition, Denoiser, Vocabulary};
use crate::codec::Latent;
use crate::{seed, Error, Real, Result};

const MAGIC: &[u8; 4] = b"RSCK";
const VERSION: u32 = 2;

/// Conditional convolutional denoiser over latent frames.
///
/// Latents with a multiple of `config.channels` rows (stereo codec output)
/// are processed group by group with shared weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDenoiser {
    config: NetConfig,
    sigma_data: f32,
    latent_scale: f32,
    vocab: Vocabulary,
    params: Vec<f32>,
}

impl ToyDenoiser {
    pub fn new_random(channels: usize, hidden: usize, fourier: usize, vocab: Vocabulary, sigma_data: f32, seed: u64) -> Self {
        let config = NetConfig {
            channels,
            hidden,
            fourier,
            vocab: vocab.len(),
        };
        let params = config.init_params(&mut seed::rng(seed::derive(seed, "denoiser-init")));
        ToyDenoiser {
            config,
            sigma_data,
            latent_scale: 1.0,
            vocab,
            params,
        }
    }

    pub fn from_parts(config: NetConfig, sigma_data: f32, vocab: Vocabulary, params: Vec<f32>) -> Result<Self> {
        if config.vocab != vocab.len() {
            return Err(Error::Checkpoint(format!(
                "vocabulary has {} entries, network expects {}",
                vocab.len(),
                config.vocab
            )));
        }
        if params.len() != config.param_count() {
            return Err(Error::Checkpoint(format!(
                "{} parameters, network expects {}",
                params.len(),
                config.param_count()
            )));
        }
        if !(sigma_data > 0.0 && sigma_data.is_finite()) {
            return Err(Error::Checkpoint(format!("invalid sigma_data {sigma_data}")));
        }
        Ok(ToyDenoiser {
            config,
            sigma_data,
            latent_scale: 1.0,
            vocab,
            params,
        })
    }

    /// Sets the factor applied to codec latents before they reach the network.
    pub fn with_latent_scale(mut self, latent_scale: f32) -> Result<Self> {
        if !(latent_scale > 0.0 && latent_scale.is_finite()) {
            return Err(Error::Checkpoint(format!("invalid latent scale {latent_scale}")));
        }
        self.latent_scale = latent_scale;
        Ok(self)
    }

    pub fn latent_scale(&self) -> f32 {
        self.latent_scale
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn sigma_data(&self) -> f32 {
        self.sigma_data
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    pub fn evaluate<T: Real>(&self, z: &Latent<T>, sigma: T, cond: &Condition) -> Result<Latent<T>> {
        let c = self.config.channels;
        if z.channels() == 0 || z.channels() % c != 0 {
            return Err(Error::shape(
                format!("a multiple of {c} latent channels"),
                z.shape_str(),
            ));
        }
        if cond.index >= self.vocab.len() {
            return Err(Error::Config(format!(
                "condition index {} outside vocabulary of {}",
                cond.index,
                self.vocab.len()
            )));
        }
        if !(sigma > T::zero()) {
            return Err(Error::Schedule(format!("denoiser needs sigma > 0, got {sigma}")));
        }
        let len = z.frames();
        let p: Vec<T> = self.params.iter().map(|&v| T::of_f32(v)).collect();
        let sd = T::of_f32(self.sigma_data);
        let mut out = Vec::with_capacity(z.len());
        for group in z.values().chunks(c * len) {
            let (d, _) = network::forward(&self.config, &p, group, len, sigma, sd, cond.index);
            out.extend(d);
        }
        z.with_data(out)
    }

    /// Binary checkpoint: magic, version, network shape, `sigma_data`,
    /// latent scale, vocabulary, tensor shape table, then little-endian f32 values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        let put = |b: &mut Vec<u8>, v: u32| b.extend_from_slice(&v.to_le_bytes());
        put(&mut b, VERSION);
        put(&mut b, self.config.channels as u32);
        put(&mut b, self.config.hidden as u32);
        put(&mut b, self.config.fourier as u32);
        b.extend_from_slice(&self.sigma_data.to_le_bytes());
        b.extend_from_slice(&self.latent_scale.to_le_bytes());
        put(&mut b, self.vocab.len() as u32);
        for label in self.vocab.labels() {
            put(&mut b, label.len() as u32);
            b.extend_from_slice(label.as_bytes());
        }
        let tensors = self.config.tensors();
        put(&mut b, tensors.len() as u32);
        for t in &tensors {
            put(&mut b, t.name.len() as u32);
            b.extend_from_slice(t.name.as_bytes());
            put(&mut b, t.shape.len() as u32);
            for &d in &t.shape {
                put(&mut b, d as u32);
            }
        }
        for v in &self.params {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let channels = r.u32()? as usize;
        let hidden = r.u32()? as usize;
        let fourier = r.u32()? as usize;
        let sigma_data = f32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        let latent_scale = f32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        let n_labels = r.u32()? as usize;
        let mut labels = Vec::new();
        for _ in 0..n_labels {
            labels.push(r.string()?);
        }
        if labels.first().map(String::as_str) != Some("") {
            return Err(Error::Checkpoint("vocabulary lacks the null entry".into()));
        }
        let vocab = Vocabulary::from_raw(labels);
        let config = NetConfig {
            channels,
            hidden,
            fourier,
            vocab: n_labels,
        };
        if channels == 0 || hidden == 0 || fourier == 0 || fourier > 30 {
            return Err(Error::Checkpoint(format!(
                "invalid network shape {channels}/{hidden}/{fourier}"
            )));
        }
        let expected = config.tensors();
        let n_tensors = r.u32()? as usize;
        if n_tensors != expected.len() {
            return Err(Error::Checkpoint(format!(
                "{n_tensors} tensors, expected {}",
                expected.len()
            )));
        }
        for spec in &expected {
            let name = r.string()?;
            let ndim = r.u32()? as usize;
            let shape = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            if name != spec.name || shape != spec.shape {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} {shape:?} does not match {} {:?}",
                    spec.name, spec.shape
                )));
            }
        }
        let count = config.param_count();
        let raw = r.take(count * 4)?;
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let params: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite weights".into()));
        }
        Self::from_parts(config, sigma_data, vocab, params)?.with_latent_scale(latent_scale)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Checkpoint("label is not UTF-8".into()))
    }
}

impl<T: Real> Denoiser<T> for ToyDenoiser {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn denoise(&self, z: &Latent<T>, sigma: T, cond: &Condition) -> Result<Latent<T>> {
        self.evaluate(z, sigma, cond)
    }

    fn latent_scale(&self) -> f64 {
        self.latent_scale as f64
    }
}
