use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{AdsrEnvelope, SampleLibrary};
use crate::audio::{resample, Waveform};
use crate::midi::{Score, CC_EXPRESSION};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderOptions {
    pub working_rate: u32,
    pub out_rate: u32,
    pub envelope: AdsrEnvelope,
    /// Scale each note by requested/sample velocity. Off by default.
    pub velocity_gain: bool,
    /// Scale by the channel's CC11 (expression) value over time. Off by default.
    pub expression_gain: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            working_rate: 16_000,
            out_rate: 44_100,
            envelope: AdsrEnvelope::default(),
            velocity_gain: false,
            expression_gain: false,
        }
    }
}

/// Plays `shift` semitones higher by reading the source `2^(shift/12)` times faster.
fn pitch_shifted(audio: &Waveform, shift: i32, needed: usize) -> Waveform {
    if shift == 0 {
        return audio.clone();
    }
    let ratio = 2f64.powf(shift as f64 / 12.0);
    let rate = audio.sample_rate();
    // Only the part of the source that ends up audible, plus kernel margin.
    let src_needed = ((needed as f64 * ratio).ceil() as usize + 256).min(audio.len());
    let src = audio.slice(0, src_needed);
    let virtual_rate = (rate as f64 * ratio).round().max(1.0) as u32;
    let as_faster = Waveform::new(virtual_rate, src.into_channels()).expect("valid channels");
    let mut out = resample(&as_faster, rate);
    // resample() keeps the tag; restore the real rate.
    out = Waveform::new(rate, out.into_channels()).expect("valid channels");
    out
}

/// Renders every note of `score` with samples of `instrument`, mixing by
/// plain summation at the working rate, then resamples to the output rate.
///
/// Each note starts at sample `round(onset * working_rate)`. The track covers
/// the last note offset plus the release; an empty score yields a silent
/// track of release length.
pub fn render_track(score: &Score, lib: &SampleLibrary, instrument: &str, opts: &RenderOptions) -> Result<Waveform> {
    let rate = opts.working_rate;
    let lib_rate = lib.working_rate();
    let notes = score.notes();
    let nch = lib.samples().map(|s| s.audio.num_channels()).max().unwrap_or(1);
    let release_len = (opts.envelope.release_s * rate as f64).round() as usize;

    let mut cache: HashMap<(u8, u8, i32, usize), Waveform> = HashMap::new();
    let mut placed = Vec::with_capacity(notes.len());
    let mut total = release_len;
    for note in &notes {
        let sel = lib.select(instrument, note.pitch, note.velocity)?;
        let start = (note.onset_s * rate as f64).round() as usize;
        let len = ((note.duration_s() + opts.envelope.release_s) * rate as f64).round() as usize;
        let key = (sel.sample.pitch, sel.sample.velocity, sel.pitch_shift, len);
        let src = cache.entry(key).or_insert_with(|| {
            let at_rate = if lib_rate == rate {
                sel.sample.audio.clone()
            } else {
                resample(&sel.sample.audio, rate)
            };
            pitch_shifted(&at_rate, sel.pitch_shift, len)
        });
        let mut shaped = super::apply_adsr(src, note.duration_s(), &opts.envelope);
        if opts.velocity_gain {
            shaped = shaped.scaled(note.velocity as f32 / sel.sample.velocity as f32);
        }
        total = total.max(start + shaped.len());
        placed.push((start, note.channel, shaped));
    }

    let expression: Vec<_> = score
        .controls()
        .into_iter()
        .filter(|c| c.controller == CC_EXPRESSION)
        .collect();
    let mut mix = vec![vec![0.0f32; total]; nch];
    for (start, channel, shaped) in placed {
        for (c, out) in mix.iter_mut().enumerate() {
            let src = shaped.channel(c.min(shaped.num_channels() - 1));
            for (k, &v) in src.iter().enumerate() {
                let mut v = v;
                if opts.expression_gain {
                    let t = (start + k) as f64 / rate as f64;
                    let cc = expression
                        .iter()
                        .filter(|e| e.channel == channel && e.time_s <= t)
                        .last()
                        .map_or(127, |e| e.value);
                    v *= cc as f32 / 127.0;
                }
                out[start + k] += v;
            }
        }
    }
    let track = Waveform::new(rate, mix)?;
    Ok(resample(&track, opts.out_rate))
}
