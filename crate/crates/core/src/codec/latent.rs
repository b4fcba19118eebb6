use crate::{Error, Real, Result};

const MAGIC: &[u8; 4] = b"RSLT";
const VERSION: u32 = 1;

/// `channels x frames` matrix (channel-major) with codec metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Latent<T = f32> {
    channels: usize,
    frames: usize,
    downsample: usize,
    source_rate: u32,
    data: Vec<T>,
}

impl<T: Real> Latent<T> {
    pub fn new(channels: usize, frames: usize, downsample: usize, source_rate: u32, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * frames {
            return Err(Error::shape(
                format!("{channels}x{frames}"),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self {
            channels,
            frames,
            downsample,
            source_rate,
            data,
        })
    }

    pub fn zeros(channels: usize, frames: usize, downsample: usize, source_rate: u32) -> Self {
        Self {
            channels,
            frames,
            downsample,
            source_rate,
            data: vec![T::zero(); channels * frames],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.channels, self.frames, self.downsample, self.source_rate)
    }

    /// Same shape and metadata, new values.
    pub fn with_data(&self, data: Vec<T>) -> Result<Self> {
        Self::new(self.channels, self.frames, self.downsample, self.source_rate, data)
    }

    /// Same metadata, standard-normal entries.
    pub fn randn_like<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let data = (0..self.data.len()).map(|_| T::standard_normal(rng)).collect();
        Self { data, ..self.clone() }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn downsample(&self) -> usize {
        self.downsample
    }

    pub fn source_rate(&self) -> u32 {
        self.source_rate
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, channel: usize) -> &[T] {
        &self.data[channel * self.frames..(channel + 1) * self.frames]
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}", self.channels, self.frames)
    }

    pub fn check_same_shape<U: Real>(&self, other: &Latent<U>) -> Result<()> {
        if self.channels != other.channels || self.frames != other.frames {
            return Err(Error::shape(self.shape_str(), other.shape_str()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Latent<U> {
        Latent {
            channels: self.channels,
            frames: self.frames,
            downsample: self.downsample,
            source_rate: self.source_rate,
            data: self.data.iter().map(|&v| U::lit(v.as_f64())).collect(),
        }
    }

    /// `a * self + b * other`, elementwise.
    pub fn lincomb(&self, a: T, other: &Latent<T>, b: T) -> Result<Latent<T>> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&x, &y)| a * x + b * y).collect();
        Ok(Latent { data, ..self.clone() })
    }

    pub fn sub(&self, other: &Latent<T>) -> Result<Latent<T>> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&x, &y)| x - y).collect();
        Ok(Latent { data, ..self.clone() })
    }

    pub fn scaled(&self, a: T) -> Latent<T> {
        Latent {
            data: self.data.iter().map(|&x| a * x).collect(),
            ..self.clone()
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v.as_f64() * v.as_f64()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `||self - reference|| / ||reference||`.
    pub fn relative_l2(&self, reference: &Latent<T>) -> f64 {
        let diff: f64 = self
            .data
            .iter()
            .zip(&reference.data)
            .map(|(&a, &b)| {
                let d = a.as_f64() - b.as_f64();
                d * d
            })
            .sum();
        diff.sqrt() / reference.norm().max(f64::MIN_POSITIVE)
    }

    /// Crop of frames `[start, start + len)`.
    pub fn frame_window(&self, start: usize, len: usize) -> Latent<T> {
        let mut data = Vec::with_capacity(self.channels * len);
        for c in 0..self.channels {
            data.extend_from_slice(&self.row(c)[start..start + len]);
        }
        Latent {
            frames: len,
            data,
            ..self.clone()
        }
    }

    /// Little-endian binary: magic, version, {channels, frames, downsample,
    /// source_rate} as u32, then `channels * frames` f32 values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 4 * self.data.len());
        out.extend(MAGIC);
        for v in [
            VERSION,
            self.channels as u32,
            self.frames as u32,
            self.downsample as u32,
            self.source_rate,
        ] {
            out.extend(v.to_le_bytes());
        }
        for v in &self.data {
            out.extend((v.as_f64() as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |m: &str| Error::Codec(format!("latent file: {m}"));
        if bytes.len() < 24 || &bytes[..4] != MAGIC {
            return Err(err("bad magic"));
        }
        let word = |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap());
        if word(0) != VERSION {
            return Err(err(&format!("unsupported version {}", word(0))));
        }
        let (channels, frames) = (word(1) as usize, word(2) as usize);
        let n = channels
            .checked_mul(frames)
            .filter(|n| n.checked_mul(4).map_or(false, |b| b == bytes.len() - 24))
            .ok_or_else(|| err("length does not match header"))?;
        let data = bytes[24..]
            .chunks_exact(4)
            .map(|c| T::of_f32(f32::from_le_bytes(c.try_into().unwrap())))
            .collect::<Vec<_>>();
        debug_assert_eq!(data.len(), n as usize);
        Self::new(channels, frames, word(3) as usize, word(4), data)
    }
}
