//! Standard MIDI File input and the time-resolved score model.

mod parse;
mod sustain;
mod write;

pub use parse::parse_smf;
pub use sustain::apply_sustain;
pub use write::write_smf;

/// Tempo in effect when a file carries no tempo meta event (120 BPM).
pub const DEFAULT_TEMPO_US: u32 = 500_000;

pub const CC_SUSTAIN: u8 = 64;
pub const CC_EXPRESSION: u8 = 11;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MidiError {
    #[error("missing MThd header")]
    MissingHeader,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated {what} at byte {offset}")]
    Truncated { what: &'static str, offset: usize },
    #[error("unsupported SMF format {0}")]
    UnsupportedFormat(u16),
    #[error("SMPTE time division is not supported")]
    SmpteDivision,
    #[error("invalid event at byte {offset}: {reason}")]
    InvalidEvent { offset: usize, reason: String },
    #[error("invalid score: {0}")]
    InvalidScore(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoteEvent {
    pub pitch: u8,
    pub velocity: u8,
    pub onset_s: f64,
    pub offset_s: f64,
    pub channel: u8,
}

impl NoteEvent {
    pub fn duration_s(&self) -> f64 {
        self.offset_s - self.onset_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlEvent {
    pub controller: u8,
    pub value: u8,
    pub time_s: f64,
    pub channel: u8,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventTrack {
    /// Sorted by onset.
    pub notes: Vec<NoteEvent>,
    /// Sorted by time.
    pub controls: Vec<ControlEvent>,
}

/// Tempo change: from `tick` on, one quarter note lasts `us_per_quarter` microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TempoChange {
    pub tick: u64,
    pub us_per_quarter: u32,
}

/// Parsed score. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    ticks_per_quarter: u16,
    tempo_map: Vec<TempoChange>,
    /// Seconds elapsed at each tempo change.
    tempo_origin_s: Vec<f64>,
    tracks: Vec<EventTrack>,
}

impl Score {
    /// Builds a score, normalising the tempo map: sorted by tick, later entries
    /// win on equal ticks, and a default entry is inserted at tick 0 if needed.
    pub fn new(
        ticks_per_quarter: u16,
        mut tempo_map: Vec<TempoChange>,
        tracks: Vec<EventTrack>,
    ) -> Result<Self, MidiError> {
        if ticks_per_quarter == 0 {
            return Err(MidiError::InvalidScore("ticks_per_quarter must be positive".into()));
        }
        if tempo_map.iter().any(|t| t.us_per_quarter == 0) {
            return Err(MidiError::InvalidScore("zero tempo".into()));
        }
        tempo_map.sort_by_key(|t| t.tick);
        let mut dedup: Vec<TempoChange> = Vec::with_capacity(tempo_map.len() + 1);
        for t in tempo_map {
            match dedup.last_mut() {
                Some(last) if last.tick == t.tick => *last = t,
                _ => dedup.push(t),
            }
        }
        if dedup.first().map_or(true, |t| t.tick > 0) {
            dedup.insert(
                0,
                TempoChange {
                    tick: 0,
                    us_per_quarter: DEFAULT_TEMPO_US,
                },
            );
        }
        let mut tempo_origin_s = Vec::with_capacity(dedup.len());
        let mut acc = 0.0;
        for (k, t) in dedup.iter().enumerate() {
            if k > 0 {
                let prev = dedup[k - 1];
                acc += segment_seconds(t.tick - prev.tick, prev.us_per_quarter, ticks_per_quarter);
            }
            tempo_origin_s.push(acc);
        }
        for track in &tracks {
            for n in &track.notes {
                validate_note(n)?;
            }
            for c in &track.controls {
                if c.controller > 127 || c.value > 127 || c.channel > 15 || !(c.time_s >= 0.0) {
                    return Err(MidiError::InvalidScore(format!("control event out of range: {c:?}")));
                }
            }
        }
        Ok(Self {
            ticks_per_quarter,
            tempo_map: dedup,
            tempo_origin_s,
            tracks,
        })
    }

    /// Single-track score at a constant tempo, e.g. for generated fixtures.
    pub fn from_notes(notes: Vec<NoteEvent>, bpm: f64) -> Result<Self, MidiError> {
        let mut notes = notes;
        notes.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s).then(a.pitch.cmp(&b.pitch)));
        let us = (60_000_000.0 / bpm).round();
        if !(us >= 1.0 && us <= 16_777_215.0) {
            return Err(MidiError::InvalidScore(format!("tempo {bpm} BPM out of range")));
        }
        Score::new(
            480,
            vec![TempoChange {
                tick: 0,
                us_per_quarter: us as u32,
            }],
            vec![EventTrack {
                notes,
                controls: Vec::new(),
            }],
        )
    }

    pub fn ticks_per_quarter(&self) -> u16 {
        self.ticks_per_quarter
    }

    pub fn tempo_map(&self) -> &[TempoChange] {
        &self.tempo_map
    }

    pub fn tracks(&self) -> &[EventTrack] {
        &self.tracks
    }

    pub fn with_tracks(&self, tracks: Vec<EventTrack>) -> Result<Self, MidiError> {
        Score::new(self.ticks_per_quarter, self.tempo_map.clone(), tracks)
    }

    /// All notes of all tracks, ordered by onset then pitch.
    pub fn notes(&self) -> Vec<NoteEvent> {
        let mut all: Vec<NoteEvent> = self.tracks.iter().flat_map(|t| t.notes.iter().copied()).collect();
        all.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s).then(a.pitch.cmp(&b.pitch)));
        all
    }

    pub fn controls(&self) -> Vec<ControlEvent> {
        let mut all: Vec<ControlEvent> =
            self.tracks.iter().flat_map(|t| t.controls.iter().copied()).collect();
        all.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
        all
    }

    /// Time of the last note offset, 0 for an empty score.
    pub fn end_s(&self) -> f64 {
        self.tracks
            .iter()
            .flat_map(|t| t.notes.iter().map(|n| n.offset_s))
            .fold(0.0, f64::max)
    }

    /// Piecewise-linear integration of the tempo map.
    pub fn ticks_to_seconds(&self, tick: u64) -> f64 {
        let k = self.tempo_map.partition_point(|t| t.tick <= tick) - 1;
        let seg = self.tempo_map[k];
        self.tempo_origin_s[k] + segment_seconds(tick - seg.tick, seg.us_per_quarter, self.ticks_per_quarter)
    }

    /// Inverse of [`Score::ticks_to_seconds`], rounded to the nearest tick.
    pub fn seconds_to_ticks(&self, seconds: f64) -> u64 {
        let seconds = seconds.max(0.0);
        let k = self.tempo_origin_s.partition_point(|&s| s <= seconds).max(1) - 1;
        let seg = self.tempo_map[k];
        let rest = seconds - self.tempo_origin_s[k];
        let ticks = rest * 1e6 * self.ticks_per_quarter as f64 / seg.us_per_quarter as f64;
        seg.tick + ticks.round() as u64
    }
}

fn segment_seconds(ticks: u64, us_per_quarter: u32, tpq: u16) -> f64 {
    ticks as f64 * us_per_quarter as f64 * 1e-6 / tpq as f64
}

fn validate_note(n: &NoteEvent) -> Result<(), MidiError> {
    let ok = n.pitch <= 127
        && (1..=127).contains(&n.velocity)
        && n.channel <= 15
        && n.onset_s >= 0.0
        && n.offset_s > n.onset_s
        && n.offset_s.is_finite();
    if ok {
        Ok(())
    } else {
        Err(MidiError::InvalidScore(format!("note out of range: {n:?}")))
    }
}
