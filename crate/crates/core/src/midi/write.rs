use super::Score;

fn push_vlq(out: &mut Vec<u8>, mut v: u32) {
    let mut stack = [0u8; 4];
    let mut n = 0;
    loop {
        stack[n] = (v & 0x7f) as u8;
        n += 1;
        v >>= 7;
        if v == 0 {
            break;
        }
    }
    for k in (0..n).rev() {
        out.push(if k > 0 { stack[k] | 0x80 } else { stack[k] });
    }
}

/// Serialises a score as SMF (format 0 for one track, else format 1), with
/// the tempo map carried by the first track. Event times are rounded to the
/// nearest tick.
pub fn write_smf(score: &Score) -> Vec<u8> {
    let ntracks = score.tracks().len().max(1);
    let mut out = b"MThd".to_vec();
    out.extend(6u32.to_be_bytes());
    out.extend((if ntracks == 1 { 0u16 } else { 1u16 }).to_be_bytes());
    out.extend((ntracks as u16).to_be_bytes());
    out.extend(score.ticks_per_quarter().to_be_bytes());

    let empty = super::EventTrack::default();
    for k in 0..ntracks {
        let track = score.tracks().get(k).unwrap_or(&empty);
        // (tick, order, bytes); order puts tempo, note-offs and controls before note-ons.
        let mut events: Vec<(u64, u8, Vec<u8>)> = Vec::new();
        if k == 0 {
            for t in score.tempo_map() {
                let b = t.us_per_quarter.to_be_bytes();
                events.push((t.tick, 0, vec![0xFF, 0x51, 0x03, b[1], b[2], b[3]]));
            }
        }
        for n in &track.notes {
            let on = score.seconds_to_ticks(n.onset_s);
            let off = score.seconds_to_ticks(n.offset_s).max(on + 1);
            events.push((on, 3, vec![0x90 | n.channel, n.pitch, n.velocity]));
            events.push((off, 1, vec![0x80 | n.channel, n.pitch, 0]));
        }
        for c in &track.controls {
            events.push((
                score.seconds_to_ticks(c.time_s),
                2,
                vec![0xB0 | c.channel, c.controller, c.value],
            ));
        }
        events.sort_by_key(|e| (e.0, e.1));

        let mut body = Vec::new();
        let mut last = 0u64;
        for (tick, _, bytes) in events {
            push_vlq(&mut body, (tick - last).min(0x0FFF_FFFF) as u32);
            body.extend(bytes);
            last = tick;
        }
        push_vlq(&mut body, 0);
        body.extend([0xFF, 0x2F, 0x00]);
        out.extend(b"MTrk");
        out.extend((body.len() as u32).to_be_bytes());
        out.extend(body);
    }
    out
}
