use std::collections::HashMap;

use super::{ControlEvent, EventTrack, MidiError, NoteEvent, Score, TempoChange};

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], MidiError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(MidiError::Truncated { what, offset: self.pos })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, MidiError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, MidiError> {
        let b = self.take(2, what)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, MidiError> {
        let b = self.take(4, what)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    /// Variable-length quantity, at most four bytes.
    fn vlq(&mut self, what: &'static str) -> Result<u32, MidiError> {
        let start = self.pos;
        let mut v: u32 = 0;
        for _ in 0..4 {
            let b = self.u8(what)?;
            v = (v << 7) | (b & 0x7f) as u32;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(MidiError::InvalidEvent {
            offset: start,
            reason: "variable-length quantity longer than 4 bytes".into(),
        })
    }
}

/// Raw note/control events in ticks, before the tempo map is known.
#[derive(Default)]
struct RawTrack {
    notes: Vec<(u64, u64, u8, u8, u8)>, // onset, offset, channel, pitch, velocity
    controls: Vec<(u64, u8, u8, u8)>,   // tick, channel, controller, value
}

/// Parses a format 0 or 1 Standard MIDI File.
///
/// Note-on with velocity 0 acts as note-off. A note-on for a key that is
/// already sounding truncates the earlier note at the new onset. Notes still
/// open at the end of their track are closed there; zero-length notes are dropped.
pub fn parse_smf(bytes: &[u8]) -> Result<Score, MidiError> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < 4 || &bytes[..4] != b"MThd" {
        return Err(MidiError::MissingHeader);
    }
    r.pos = 4;
    let len = r.u32("header length")? as usize;
    if len < 6 {
        return Err(MidiError::MalformedHeader(format!("header length {len} < 6")));
    }
    let format = r.u16("header")?;
    let ntrks = r.u16("header")?;
    let division = r.u16("header")?;
    r.take(len - 6, "header")?;
    match format {
        0 | 1 => {}
        2 => return Err(MidiError::UnsupportedFormat(2)),
        f => return Err(MidiError::MalformedHeader(format!("unknown format {f}"))),
    }
    if division & 0x8000 != 0 {
        return Err(MidiError::SmpteDivision);
    }
    if division == 0 {
        return Err(MidiError::MalformedHeader("zero ticks per quarter".into()));
    }
    if format == 0 && ntrks != 1 {
        return Err(MidiError::MalformedHeader(format!("format 0 with {ntrks} tracks")));
    }

    let mut tempo = Vec::new();
    let mut raw_tracks = Vec::new();
    while raw_tracks.len() < ntrks as usize {
        if r.pos >= bytes.len() {
            return Err(MidiError::Truncated {
                what: "track chunk",
                offset: r.pos,
            });
        }
        let id = r.take(4, "chunk id")?;
        let clen = r.u32("chunk length")? as usize;
        let body = r.take(clen, "chunk body")?;
        if id != b"MTrk" {
            continue;
        }
        let base = r.pos - clen;
        raw_tracks.push(parse_track(body, base, &mut tempo)?);
    }

    let mut score = Score::new(division, tempo, Vec::new())?;
    let tracks = raw_tracks
        .into_iter()
        .map(|raw| {
            let mut notes: Vec<NoteEvent> = raw
                .notes
                .iter()
                .map(|&(on, off, channel, pitch, velocity)| NoteEvent {
                    pitch,
                    velocity,
                    onset_s: score.ticks_to_seconds(on),
                    offset_s: score.ticks_to_seconds(off),
                    channel,
                })
                .filter(|n| n.offset_s > n.onset_s)
                .collect();
            notes.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s).then(a.pitch.cmp(&b.pitch)));
            let controls = raw
                .controls
                .iter()
                .map(|&(tick, channel, controller, value)| ControlEvent {
                    controller,
                    value,
                    time_s: score.ticks_to_seconds(tick),
                    channel,
                })
                .collect();
            EventTrack { notes, controls }
        })
        .collect();
    score = score.with_tracks(tracks)?;
    Ok(score)
}

fn parse_track(body: &[u8], base: usize, tempo: &mut Vec<TempoChange>) -> Result<RawTrack, MidiError> {
    let mut r = Reader { bytes: body, pos: 0 };
    let mut out = RawTrack::default();
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;
    // (channel, pitch) -> (onset tick, velocity)
    let mut open: HashMap<(u8, u8), (u64, u8)> = HashMap::new();
    let invalid = |pos: usize, reason: String| MidiError::InvalidEvent {
        offset: base + pos,
        reason,
    };

    while r.pos < body.len() {
        tick = tick.saturating_add(r.vlq("delta time")? as u64);
        let at = r.pos;
        let mut status = r.u8("event")?;
        let first_data;
        if status < 0x80 {
            status = running.ok_or_else(|| invalid(at, "data byte without running status".into()))?;
            first_data = Some(body[at]);
        } else {
            first_data = None;
        }
        match status {
            0x80..=0xEF => {
                running = Some(status);
                let kind = status & 0xF0;
                let channel = status & 0x0F;
                let data = |r: &mut Reader| -> Result<u8, MidiError> {
                    let b = r.u8("channel message")?;
                    if b > 127 {
                        return Err(invalid(r.pos - 1, format!("data byte {b:#04x} out of range")));
                    }
                    Ok(b)
                };
                let a = match first_data {
                    Some(b) => b,
                    None => data(&mut r)?,
                };
                let b = if matches!(kind, 0xC0 | 0xD0) { 0 } else { data(&mut r)? };
                match kind {
                    0x90 if b > 0 => {
                        if let Some((on, vel)) = open.insert((channel, a), (tick, b)) {
                            out.notes.push((on, tick, channel, a, vel));
                        }
                    }
                    0x80 | 0x90 => {
                        if let Some((on, vel)) = open.remove(&(channel, a)) {
                            out.notes.push((on, tick, channel, a, vel));
                        }
                    }
                    0xB0 => out.controls.push((tick, channel, a, b)),
                    _ => {}
                }
            }
            0xFF => {
                running = None;
                let kind = r.u8("meta type")?;
                let len = r.vlq("meta length")? as usize;
                let data = r.take(len, "meta data")?;
                match kind {
                    0x51 => {
                        if len != 3 {
                            return Err(invalid(at, format!("tempo meta of length {len}")));
                        }
                        let us = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                        if us == 0 {
                            return Err(invalid(at, "zero tempo".into()));
                        }
                        tempo.push(TempoChange {
                            tick,
                            us_per_quarter: us,
                        });
                    }
                    0x2F => break,
                    _ => {}
                }
            }
            0xF0 | 0xF7 => {
                running = None;
                let len = r.vlq("sysex length")? as usize;
                r.take(len, "sysex data")?;
            }
            s => return Err(invalid(at, format!("unexpected status byte {s:#04x}"))),
        }
    }

    let mut rest: Vec<_> = open.into_iter().collect();
    rest.sort();
    for ((channel, pitch), (on, vel)) in rest {
        out.notes.push((on, tick, channel, pitch, vel));
    }
    out.controls.sort_by_key(|c| c.0);
    Ok(out)
}
