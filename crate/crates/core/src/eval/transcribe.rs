use serde::{Deserialize, Serialize};

use crate::audio::{resample, Waveform};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscribedNote {
    pub pitch: u8,
    pub onset_s: f64,
    pub offset_s: f64,
    pub confidence: f64,
}

const RATE: u32 = 16000;
const HOP: usize = 160;
const WINDOW: usize = 640;
const TAU_MIN: usize = 8;
const TAU_MAX: usize = 320;
const YIN_THRESHOLD: f64 = 0.2;
/// Frames at a new semitone needed before a pitch change is accepted.
const HYSTERESIS: usize = 3;
const MIN_NOTE_S: f64 = 0.05;
/// Longest run of aperiodic but non-silent frames bridged inside a note.
const MAX_GAP_FRAMES: usize = 5;
const BLOCK: usize = 40;
/// Energy comparison window, long enough to span a period of any tracked pitch.
const ATTACK_WINDOW: usize = TAU_MAX;
/// Energy ratio between adjacent windows that marks an attack.
const ATTACK_RATIO: f64 = 1.6;

#[derive(Debug, Clone, Copy)]
struct Frame {
    midi: f64,
    confidence: f64,
}

fn frame_time(t: usize) -> f64 {
    (t * HOP + WINDOW / 2) as f64 / RATE as f64
}

/// Cumulative-mean-normalized difference pitch estimate (YIN).
fn yin(x: &[f64], start: usize) -> Option<Frame> {
    let w = WINDOW - TAU_MAX;
    let at = |i: usize| x.get(start + i).copied().unwrap_or(0.0);
    let seg: Vec<f64> = (0..WINDOW).map(at).collect();
    let mut d = vec![0.0; TAU_MAX + 1];
    for (tau, slot) in d.iter_mut().enumerate().skip(1) {
        *slot = (0..w).map(|j| (seg[j] - seg[j + tau]).powi(2)).sum();
    }
    let mut cmnd = vec![1.0; TAU_MAX + 1];
    let mut running = 0.0;
    for tau in 1..=TAU_MAX {
        running += d[tau];
        cmnd[tau] = if running > 0.0 { d[tau] * tau as f64 / running } else { 1.0 };
    }
    let mut tau = (TAU_MIN..TAU_MAX).find(|&t| cmnd[t] < YIN_THRESHOLD)?;
    while tau + 1 < TAU_MAX && cmnd[tau + 1] < cmnd[tau] {
        tau += 1;
    }
    let (a, b, c) = (cmnd[tau - 1], cmnd[tau], cmnd[tau + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 1e-12 { (0.5 * (a - c) / denom).clamp(-1.0, 1.0) } else { 0.0 };
    let f0 = RATE as f64 / (tau as f64 + shift);
    Some(Frame {
        midi: 69.0 + 12.0 * (f0 / 440.0).log2(),
        confidence: (1.0 - b).clamp(0.0, 1.0),
    })
}

/// Sample positions of sharp energy rises: block boundaries where the
/// energy of the following 20 ms exceeds that of the preceding 20 ms by
/// `ATTACK_RATIO`, kept if they are the strongest rise within 40 ms.
fn attacks(x: &[f64], floor: f64) -> Vec<usize> {
    let mut prefix = vec![0.0; x.len() + 1];
    for (i, v) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v * v;
    }
    let mean_sq = |a: usize, b: usize| (prefix[b.min(x.len())] - prefix[a.min(x.len())]) / ATTACK_WINDOW as f64;
    let floor_e = floor * floor;
    let blocks = x.len().div_ceil(BLOCK);
    let after: Vec<f64> = (0..blocks).map(|b| mean_sq(b * BLOCK, b * BLOCK + ATTACK_WINDOW)).collect();
    let rise: Vec<f64> = (0..blocks)
        .map(|b| {
            let before = mean_sq((b * BLOCK).saturating_sub(ATTACK_WINDOW), b * BLOCK);
            (after[b].max(floor_e) / before.max(floor_e)).ln()
        })
        .collect();
    let radius = 40 * RATE as usize / 1000 / BLOCK;
    (0..blocks)
        .filter(|&b| {
            rise[b] > ATTACK_RATIO.ln()
                && after[b] > floor_e
                && (b.saturating_sub(radius)..(b + radius + 1).min(blocks)).all(|o| rise[o] < rise[b] || (rise[o] == rise[b] && o >= b))
        })
        .map(|b| b * BLOCK)
        .collect()
}

struct Segment {
    start: usize,
    end: usize,
    frames: Vec<Frame>,
}

/// Monophonic transcription: YIN pitch per 10 ms hop, voiced runs split at
/// semitone changes (with hysteresis) and at sharp attacks; each run is one
/// note at the median pitch. Notes shorter than 50 ms are dropped.
pub fn transcribe_mono(audio: &Waveform) -> Vec<TranscribedNote> {
    if audio.is_empty() {
        return Vec::new();
    }
    let mono = resample(&audio.to_mono(), RATE);
    let x: Vec<f64> = mono.channel(0).iter().map(|&v| v as f64).collect();
    let n_frames = x.len().div_ceil(HOP);
    let rms: Vec<f64> = (0..n_frames)
        .map(|t| {
            let s = &x[t * HOP..(t * HOP + WINDOW).min(x.len())];
            (s.iter().map(|v| v * v).sum::<f64>() / WINDOW as f64).sqrt()
        })
        .collect();
    let peak = rms.iter().copied().fold(0.0, f64::max);
    let gate = (0.02 * peak).max(1e-4);
    if peak < gate {
        return Vec::new();
    }
    let frames: Vec<Option<Frame>> = (0..n_frames)
        .map(|t| if rms[t] >= gate { yin(&x, t * HOP) } else { None })
        .collect();
    let silent = |t: usize| rms[t] < gate;

    let mut segments: Vec<Segment> = Vec::new();
    let mut current: Option<(Segment, i32)> = None;
    let mut pending: Vec<(usize, Frame)> = Vec::new();
    let mut gap = 0;
    for (t, f) in frames.iter().enumerate() {
        let Some(f) = *f else {
            gap += 1;
            if silent(t) || gap > MAX_GAP_FRAMES {
                if let Some((seg, _)) = current.take() {
                    segments.push(seg);
                }
                pending.clear();
            }
            continue;
        };
        gap = 0;
        let q = f.midi.round() as i32;
        match current.as_mut() {
            None => {
                current = Some((
                    Segment {
                        start: t,
                        end: t,
                        frames: vec![f],
                    },
                    q,
                ))
            }
            Some((seg, pitch)) if *pitch == q => {
                seg.end = t;
                seg.frames.push(f);
                pending.clear();
            }
            Some(_) => {
                if pending.last().is_some_and(|(_, p)| p.midi.round() as i32 != q) {
                    pending.clear();
                }
                pending.push((t, f));
                if pending.len() >= HYSTERESIS {
                    let (seg, _) = current.take().expect("segment in progress");
                    segments.push(seg);
                    current = Some((
                        Segment {
                            start: pending[0].0,
                            end: t,
                            frames: pending.iter().map(|(_, f)| *f).collect(),
                        },
                        q,
                    ));
                    pending.clear();
                }
            }
        }
    }
    if let Some((seg, _)) = current.take() {
        segments.push(seg);
    }

    let attack_times: Vec<f64> = attacks(&x, gate).iter().map(|&s| s as f64 / RATE as f64).collect();
    let mut notes: Vec<(TranscribedNote, usize)> = Vec::new();
    for seg in &segments {
        let seg_on = frame_time(seg.start);
        let seg_off = frame_time(seg.end) + HOP as f64 / (2.0 * RATE as f64);
        // Attack that opened this run, if one lies shortly before its first frame.
        let onset = attack_times
            .iter()
            .copied()
            .filter(|&a| a >= seg_on - 0.12 && a <= seg_on + 0.03)
            .fold(None, |best: Option<f64>, a| Some(best.map_or(a, |b| if (a - seg_on).abs() < (b - seg_on).abs() { a } else { b })))
            .unwrap_or(seg_on)
            .max(0.0);
        let mut cuts = vec![onset];
        cuts.extend(attack_times.iter().copied().filter(|&a| a > onset + 0.06 && a < seg_off - MIN_NOTE_S));
        for (k, &start) in cuts.iter().enumerate() {
            let end = cuts.get(k + 1).copied().unwrap_or(seg_off);
            if end - start < MIN_NOTE_S {
                continue;
            }
            let mut pitches: Vec<f64> = Vec::new();
            let mut conf = 0.0;
            for (i, f) in seg.frames.iter().enumerate() {
                let ft = frame_time(seg.start + i);
                if ft >= start - 0.02 && ft < end {
                    pitches.push(f.midi);
                    conf += f.confidence;
                }
            }
            if pitches.is_empty() {
                continue;
            }
            conf /= pitches.len() as f64;
            pitches.sort_by(f64::total_cmp);
            let median = pitches[pitches.len() / 2];
            let pitch = median.round();
            if !(0.0..=127.0).contains(&pitch) {
                continue;
            }
            let note = TranscribedNote {
                pitch: pitch as u8,
                onset_s: start,
                offset_s: end,
                confidence: conf,
            };
            // A pitch-tracking glitch at a transition can claim the same attack
            // as the note that follows; the better-supported run keeps it.
            match notes.last_mut() {
                Some((prev, support)) if (prev.onset_s - start).abs() < 1e-9 => {
                    if pitches.len() > *support {
                        *prev = note;
                        *support = pitches.len();
                    }
                }
                _ => notes.push((note, pitches.len())),
            }
        }
    }
    notes.into_iter().map(|(n, _)| n).collect()
}
