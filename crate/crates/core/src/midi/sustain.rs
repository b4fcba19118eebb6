use super::{EventTrack, Score, CC_SUSTAIN};

/// Extends note offsets held by the sustain pedal (CC64 >= 64) on their
/// channel to the pedal release or the next onset of the same pitch,
/// whichever comes first. A pedal that is never released holds until the
/// end of the score.
pub fn apply_sustain(score: &Score) -> Score {
    let controls = score.controls();
    if !controls.iter().any(|c| c.controller == CC_SUSTAIN) {
        return score.clone();
    }
    let end = controls.iter().map(|c| c.time_s).fold(score.end_s(), f64::max);

    // Per channel: list of [down, up) pedal intervals.
    let mut intervals: [Vec<(f64, f64)>; 16] = Default::default();
    let mut down: [Option<f64>; 16] = [None; 16];
    for c in controls.iter().filter(|c| c.controller == CC_SUSTAIN) {
        let ch = c.channel as usize;
        match (c.value >= 64, down[ch]) {
            (true, None) => down[ch] = Some(c.time_s),
            (false, Some(t0)) => {
                intervals[ch].push((t0, c.time_s));
                down[ch] = None;
            }
            _ => {}
        }
    }
    for ch in 0..16 {
        if let Some(t0) = down[ch] {
            intervals[ch].push((t0, end));
        }
    }

    let all = score.notes();
    let tracks = score
        .tracks()
        .iter()
        .map(|track| {
            let notes = track
                .notes
                .iter()
                .map(|n| {
                    let mut n = *n;
                    let held = intervals[n.channel as usize]
                        .iter()
                        .find(|&&(d, u)| n.offset_s >= d && n.offset_s < u);
                    if let Some(&(_, up)) = held {
                        let next_onset = all
                            .iter()
                            .filter(|m| m.channel == n.channel && m.pitch == n.pitch && m.onset_s > n.onset_s)
                            .map(|m| m.onset_s)
                            .fold(f64::INFINITY, f64::min);
                        n.offset_s = n.offset_s.max(up.min(next_onset));
                    }
                    n
                })
                .collect();
            EventTrack {
                notes,
                controls: track.controls.clone(),
            }
        })
        .collect();
    score
        .with_tracks(tracks)
        .expect("sustain only lengthens valid notes")
}
