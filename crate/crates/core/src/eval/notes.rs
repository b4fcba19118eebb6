use serde::{Deserialize, Serialize};

use super::TranscribedNote;
use crate::midi::NoteEvent;

pub const DEFAULT_ONSET_TOLERANCE_S: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
}

/// One-to-one matching on equal pitch and `|onset difference| <= tol`.
///
/// Per pitch, references are taken in onset order and each claims the
/// earliest unclaimed hypothesis inside its window. For points on a line
/// this greedy choice yields a maximum matching.
pub fn note_f1(reference: &[NoteEvent], hypothesis: &[TranscribedNote], onset_tol: f64) -> NoteScores {
    let matched = matching(reference, hypothesis, onset_tol).len();
    let precision = if hypothesis.is_empty() {
        0.0
    } else {
        matched as f64 / hypothesis.len() as f64
    };
    let recall = if reference.is_empty() {
        0.0
    } else {
        matched as f64 / reference.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    NoteScores {
        precision,
        recall,
        f1,
        matched,
    }
}

/// Matched `(reference index, hypothesis index)` pairs.
pub(crate) fn matching(reference: &[NoteEvent], hypothesis: &[TranscribedNote], tol: f64) -> Vec<(usize, usize)> {
    let mut refs: Vec<usize> = (0..reference.len()).collect();
    refs.sort_by(|&a, &b| reference[a].onset_s.total_cmp(&reference[b].onset_s).then(a.cmp(&b)));
    let mut hyps: Vec<usize> = (0..hypothesis.len()).collect();
    hyps.sort_by(|&a, &b| hypothesis[a].onset_s.total_cmp(&hypothesis[b].onset_s).then(a.cmp(&b)));
    let mut used = vec![false; hypothesis.len()];
    let mut pairs = Vec::new();
    for &r in &refs {
        let note = &reference[r];
        let found = hyps.iter().copied().find(|&h| {
            !used[h]
                && hypothesis[h].pitch == note.pitch
                && (hypothesis[h].onset_s - note.onset_s).abs() <= tol
        });
        if let Some(h) = found {
            used[h] = true;
            pairs.push((r, h));
        }
    }
    pairs
}
