use serde::{Deserialize, Serialize};

use crate::audio::Waveform;

/// Linear attack/decay/release envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdsrEnvelope {
    pub attack_s: f64,
    pub decay_s: f64,
    pub sustain_level: f64,
    pub release_s: f64,
}

impl Default for AdsrEnvelope {
    /// 5 ms attack, no decay, 100 % sustain, 200 ms release.
    fn default() -> Self {
        Self {
            attack_s: 0.005,
            decay_s: 0.0,
            sustain_level: 1.0,
            release_s: 0.2,
        }
    }
}

impl AdsrEnvelope {
    pub fn is_valid(&self) -> bool {
        self.attack_s >= 0.0
            && self.decay_s >= 0.0
            && self.release_s >= 0.0
            && (0.0..=1.0).contains(&self.sustain_level)
    }

    /// Gain before release, `k` samples after note onset.
    fn held_gain(&self, k: f64, rate: f64) -> f64 {
        let attack = self.attack_s * rate;
        if k < attack {
            return k / attack;
        }
        let decay = self.decay_s * rate;
        if k < attack + decay {
            return 1.0 - (1.0 - self.sustain_level) * (k - attack) / decay;
        }
        self.sustain_level
    }

    /// Per-sample gain curve for a note, followed by the release tail.
    ///
    /// Sample `k` covers `[k, k + 1)` and takes the envelope value at its
    /// midpoint, so the attack spans samples `0..A` with a nonzero first
    /// sample and unity from `A`, and the release spans `off..off + R`.
    /// Total length is `round((duration + release) * rate)`.
    pub fn gain_curve(&self, note_duration_s: f64, rate: u32) -> Vec<f64> {
        let r = rate as f64;
        let off = (note_duration_s * r).round() as usize;
        let total = ((note_duration_s + self.release_s) * r).round() as usize;
        let release = self.release_s * r;
        let level_at_off = self.held_gain(off as f64, r);
        (0..total)
            .map(|k| {
                if k < off {
                    self.held_gain(k as f64 + 0.5, r).min(1.0)
                } else if release > 0.0 {
                    (level_at_off * (1.0 - ((k - off) as f64 + 0.5) / release)).max(0.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Shapes a one-shot sample for a note of the given duration. Shorter
/// sources are zero-padded, never looped.
pub fn apply_adsr(audio: &Waveform, note_duration_s: f64, env: &AdsrEnvelope) -> Waveform {
    let gain = env.gain_curve(note_duration_s, audio.sample_rate());
    let channels = audio
        .channels()
        .iter()
        .map(|src| {
            gain.iter()
                .enumerate()
                .map(|(k, &g)| src.get(k).map_or(0.0, |&x| (x as f64 * g) as f32))
                .collect()
        })
        .collect();
    Waveform::new(audio.sample_rate(), channels).expect("equal-length channels")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(rate: u32, secs: f64) -> Waveform {
        Waveform::mono(rate, vec![1.0; (rate as f64 * secs) as usize]).unwrap()
    }

    #[test]
    fn attack_reaches_unity_at_sample_80() {
        let out = apply_adsr(&ones(16000, 2.0), 1.0, &AdsrEnvelope::default());
        let x = out.channel(0);
        assert!(x[0] > 0.0);
        assert!(x[79] < 1.0);
        assert_eq!(x[80], 1.0);
        for k in 0..80 {
            assert!((x[k] as f64 - (k as f64 + 0.5) / 80.0).abs() < 1e-6);
        }
    }

    #[test]
    fn release_tail_is_3200_samples() {
        let out = apply_adsr(&ones(16000, 2.0), 1.0, &AdsrEnvelope::default());
        let x = out.channel(0);
        assert_eq!(x.len(), 16000 + 3200);
        assert_eq!(x[15999], 1.0);
        assert!(x[16000] < 1.0);
        for k in 16000..19200 {
            assert!(x[k] > 0.0 && x[k] < x[k - 1]);
        }
        assert!((x[19199] as f64 - 0.5 / 3200.0).abs() < 1e-6);
    }

    #[test]
    fn plateau_is_exactly_one() {
        let out = apply_adsr(&ones(16000, 2.0), 1.0, &AdsrEnvelope::default());
        assert!(out.channel(0)[80..16000].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn short_source_is_zero_padded() {
        let out = apply_adsr(&ones(16000, 0.1), 0.5, &AdsrEnvelope::default());
        assert_eq!(out.len(), 11200);
        assert!(out.channel(0)[1600..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn decay_stage_and_early_release() {
        let env = AdsrEnvelope {
            attack_s: 0.01,
            decay_s: 0.01,
            sustain_level: 0.5,
            release_s: 0.01,
        };
        let g = env.gain_curve(0.1, 1000);
        assert_eq!(g.len(), 110);
        assert_eq!(g[9], 0.95);
        assert!((g[15] - 0.725).abs() < 1e-12);
        assert_eq!(g[50], 0.5);
        assert!((g[105] - 0.225).abs() < 1e-12);
        // Note shorter than the attack releases from the partial level.
        let g = env.gain_curve(0.005, 1000);
        assert!((g[5] - 0.475).abs() < 1e-12);
    }
}
