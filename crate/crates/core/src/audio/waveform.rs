use crate::{Error, Result};

/// Multichannel PCM audio. All channels have equal length. Samples are
/// unclipped internally; [`Waveform::clipped`] applies the output stage limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    sample_rate: u32,
    channels: Vec<Vec<f32>>,
}

impl Waveform {
    pub fn new(sample_rate: u32, channels: Vec<Vec<f32>>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Waveform("sample rate must be positive".into()));
        }
        if channels.is_empty() {
            return Err(Error::Waveform("at least one channel required".into()));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::Waveform("channels differ in length".into()));
        }
        Ok(Self {
            sample_rate,
            channels,
        })
    }

    pub fn mono(sample_rate: u32, samples: Vec<f32>) -> Result<Self> {
        Self::new(sample_rate, vec![samples])
    }

    pub fn silent(sample_rate: u32, num_channels: usize, len: usize) -> Result<Self> {
        Self::new(sample_rate, vec![vec![0.0; len]; num_channels.max(1)])
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, k: usize) -> &[f32] {
        &self.channels[k]
    }

    pub fn channels(&self) -> &[Vec<f32>] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [Vec<f32>] {
        &mut self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f32>> {
        self.channels
    }

    pub fn peak(&self) -> f32 {
        self.channels
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f32, |m, &x| m.max(x.abs()))
    }

    pub fn energy(&self) -> f64 {
        self.channels
            .iter()
            .flat_map(|c| c.iter())
            .map(|&x| (x as f64) * (x as f64))
            .sum()
    }

    /// Average of all channels.
    pub fn to_mono(&self) -> Waveform {
        if self.num_channels() == 1 {
            return self.clone();
        }
        let n = self.num_channels() as f32;
        let samples = (0..self.len())
            .map(|i| self.channels.iter().map(|c| c[i]).sum::<f32>() / n)
            .collect();
        Waveform {
            sample_rate: self.sample_rate,
            channels: vec![samples],
        }
    }

    /// Copy restricted to `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Waveform {
        Waveform {
            sample_rate: self.sample_rate,
            channels: self.channels.iter().map(|c| c[start..end].to_vec()).collect(),
        }
    }

    /// Truncates or zero-pads every channel to `len`.
    pub fn with_len(mut self, len: usize) -> Waveform {
        for c in &mut self.channels {
            c.resize(len, 0.0);
        }
        self
    }

    pub fn scaled(&self, gain: f32) -> Waveform {
        Waveform {
            sample_rate: self.sample_rate,
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|x| x * gain).collect())
                .collect(),
        }
    }

    /// Final output stage: hard clip to [-1, 1].
    pub fn clipped(&self) -> Waveform {
        Waveform {
            sample_rate: self.sample_rate,
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|x| x.clamp(-1.0, 1.0)).collect())
                .collect(),
        }
    }
}
