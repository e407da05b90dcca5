//! REMI-style note-level tokens with beat markers.
//!
//! Each measure starts with `bar`; with beat markers on, every beat after
//! the first emits `beat` at its grid time. A note is `[pos_k] note_m len_t`
//! where `k` is the tick offset from the latest `bar` or `beat` (omitted when
//! zero, and shared by simultaneous notes), `m` the MIDI number and `t` the
//! duration in ticks.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{measure_grid, GridSeq, NoteLevelError, NoteLevelEvent, NoteLevelSeq};
use crate::notation::TimeSignature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoteToken {
    Bar,
    Beat,
    Pos(u32),
    Note(u8),
    Len(u32),
}

impl fmt::Display for NoteToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoteToken::Bar => f.write_str("bar"),
            NoteToken::Beat => f.write_str("beat"),
            NoteToken::Pos(k) => write!(f, "pos_{k}"),
            NoteToken::Note(m) => write!(f, "note_{m}"),
            NoteToken::Len(t) => write!(f, "len_{t}"),
        }
    }
}

impl FromStr for NoteToken {
    type Err = NoteTokenError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NoteTokenError::Unknown(s.to_string());
        match s {
            "bar" => return Ok(NoteToken::Bar),
            "beat" => return Ok(NoteToken::Beat),
            _ => {}
        }
        let (head, n) = s.split_once('_').ok_or_else(bad)?;
        if n.is_empty() || n.starts_with('0') || !n.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        match head {
            "pos" => n.parse().map(NoteToken::Pos).map_err(|_| bad()),
            "note" => n.parse::<u8>().ok().filter(|m| *m < 128).map(NoteToken::Note).ok_or_else(bad),
            "len" => n.parse().map(NoteToken::Len).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NoteTokenError {
    #[error("unknown note-level token `{0}`")]
    Unknown(String),
    #[error("token {index} `{token}`: {detail}")]
    Grammar { index: usize, token: String, detail: &'static str },
}

/// Note-level tokens of a grid sequence.
pub fn tokenize_notelevel(seq: &GridSeq, beats: bool) -> Result<Vec<NoteToken>, NoteLevelError> {
    if seq.meter.first().is_none_or(|(m, _)| *m != 0) {
        return Err(NoteLevelError::Meter);
    }
    for e in &seq.events {
        if e.duration < 1 {
            return Err(NoteLevelError::Duration { onset: e.onset, duration: e.duration });
        }
        if e.onset < 0 {
            return Err(NoteLevelError::Negative { onset: e.onset });
        }
    }
    let mut events = seq.events.clone();
    events.sort_by_key(|e| (e.onset, e.midi, e.duration));
    let last = events.last().map_or(0, |e| e.onset + 1);
    let grid = measure_grid(&seq.meter, seq.measures, last);

    let mut out = Vec::with_capacity(events.len() * 3 + grid.len() * 4);
    let mut next = events.iter().peekable();
    for (mi, &(start, time)) in grid.iter().enumerate() {
        let end = grid.get(mi + 1).map_or(i64::MAX, |(s, _)| *s);
        out.push(NoteToken::Bar);
        let step = i64::from(time.beat_ticks());
        let mut beat_times = (1..i64::from(time.beats())).map(|k| start + k * step).peekable();
        let mut anchor = start;
        let mut last_onset = None;
        while let Some(e) = next.next_if(|e| e.onset < end) {
            if beats {
                while let Some(b) = beat_times.next_if(|b| *b <= e.onset) {
                    out.push(NoteToken::Beat);
                    anchor = b;
                    last_onset = None;
                }
            }
            if last_onset != Some(e.onset) {
                let k = e.onset - anchor;
                if k > 0 {
                    out.push(NoteToken::Pos(k as u32));
                }
                last_onset = Some(e.onset);
            }
            out.push(NoteToken::Note(e.midi));
            out.push(NoteToken::Len(e.duration as u32));
        }
        if beats {
            out.extend(beat_times.map(|_| NoteToken::Beat));
        }
    }
    Ok(out)
}

/// Rebuild events from note-level tokens, given the meter they were written
/// with. Strict: any grammar slip is an error.
pub fn detokenize_notelevel(
    tokens: &[NoteToken],
    meter: &[(usize, TimeSignature)],
    beats: bool,
) -> Result<GridSeq, NoteTokenError> {
    let bars = tokens.iter().filter(|t| **t == NoteToken::Bar).count();
    let grid = measure_grid(meter, bars, 0);
    let mut events = Vec::new();
    let mut measure: Option<usize> = None;
    let mut anchor = 0;
    let mut beat_in_measure = 0;
    let mut now = 0;
    let mut pitch: Option<u8> = None;
    for (index, tok) in tokens.iter().enumerate() {
        let fail = |detail| Err(NoteTokenError::Grammar { index, token: tok.to_string(), detail });
        if pitch.is_some() && !matches!(tok, NoteToken::Len(_)) {
            return fail("expected len after note");
        }
        match *tok {
            NoteToken::Bar => {
                let m = measure.map_or(0, |m| m + 1);
                measure = Some(m);
                anchor = grid[m].0;
                now = anchor;
                beat_in_measure = 0;
            }
            NoteToken::Beat => {
                let Some(m) = measure else { return fail("beat before the first bar") };
                let time = grid[m].1;
                beat_in_measure += 1;
                if !beats || beat_in_measure >= time.beats() {
                    return fail("more beats than the meter allows");
                }
                anchor = grid[m].0 + i64::from(beat_in_measure * time.beat_ticks());
                now = anchor;
            }
            NoteToken::Pos(k) => {
                if measure.is_none() {
                    return fail("pos before the first bar");
                }
                now = anchor + i64::from(k);
            }
            NoteToken::Note(m) => {
                if measure.is_none() {
                    return fail("note before the first bar");
                }
                pitch = Some(m);
            }
            NoteToken::Len(t) => {
                let Some(midi) = pitch.take() else { return fail("len without a note") };
                events.push(NoteLevelEvent { onset: now, midi, duration: i64::from(t) });
            }
        }
    }
    if pitch.is_some() {
        return Err(NoteTokenError::Grammar { index: tokens.len(), token: String::new(), detail: "sequence ends inside a note" });
    }
    events.sort_by_key(|e| (e.onset, e.midi, e.duration));
    Ok(NoteLevelSeq { events, meter: meter.to_vec(), measures: bars })
}

/// Longest `len_*` value listed by [`vocabulary`]: four whole notes.
pub const VOCAB_MAX_LEN: u32 = 384;

/// Note-level token inventory. `pos_*` runs to 23 with beat markers, or to
/// the longest measure (12/8 or 12/4) without them; `len_*` is open-ended in
/// sequences but listed up to [`VOCAB_MAX_LEN`].
pub fn vocabulary(beats: bool) -> Vec<String> {
    let max_pos = if beats {
        23
    } else {
        TimeSignature::all().map(|t| super::measure_ticks(t) as u32).max().unwrap_or(96) - 1
    };
    let mut v = vec![NoteToken::Bar];
    if beats {
        v.push(NoteToken::Beat);
    }
    v.extend((1..=max_pos).map(NoteToken::Pos));
    v.extend((0..128).map(NoteToken::Note));
    v.extend((1..=VOCAB_MAX_LEN).map(NoteToken::Len));
    v.into_iter().map(|t| t.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(events: &[(i64, u8, i64)], time: TimeSignature, measures: usize) -> GridSeq {
        NoteLevelSeq {
            events: events.iter().map(|&(onset, midi, duration)| NoteLevelEvent { onset, midi, duration }).collect(),
            meter: vec![(0, time)],
            measures,
        }
    }

    fn line(t: &[NoteToken]) -> String {
        t.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn downbeat_quarter() {
        let s = seq(&[(0, 60, 24)], TimeSignature::common(), 1);
        assert_eq!(line(&tokenize_notelevel(&s, true).unwrap()), "bar note_60 len_24 beat beat beat");
    }

    #[test]
    fn offbeat_eighth() {
        let s = seq(&[(36, 60, 12)], TimeSignature::common(), 1);
        assert_eq!(line(&tokenize_notelevel(&s, true).unwrap()), "bar beat pos_12 note_60 len_12 beat beat");
    }

    #[test]
    fn chord_shares_pos_and_remi_counts_from_bar() {
        let s = seq(&[(30, 60, 6), (30, 64, 6), (31, 67, 1)], TimeSignature::common(), 1);
        assert_eq!(
            line(&tokenize_notelevel(&s, true).unwrap()),
            "bar beat pos_6 note_60 len_6 note_64 len_6 pos_7 note_67 len_1 beat beat"
        );
        assert_eq!(
            line(&tokenize_notelevel(&s, false).unwrap()),
            "bar pos_30 note_60 len_6 note_64 len_6 pos_31 note_67 len_1"
        );
    }

    #[test]
    fn every_subdivision_has_a_pos() {
        let events: Vec<_> = (0..24).map(|k| (k, 60, 1)).collect();
        let s = seq(&events, TimeSignature::new(1, 4).unwrap(), 1);
        let toks = tokenize_notelevel(&s, true).unwrap();
        let pos: Vec<u32> = toks.iter().filter_map(|t| if let NoteToken::Pos(k) = t { Some(*k) } else { None }).collect();
        assert_eq!(pos, (1..24).collect::<Vec<_>>());
    }

    #[test]
    fn inverse_on_mixed_meter() {
        let meter = vec![(0, TimeSignature::new(6, 8).unwrap()), (1, TimeSignature::new(3, 4).unwrap())];
        let s = NoteLevelSeq {
            events: [(0, 60, 12), (11, 62, 30), (72, 64, 100), (130, 65, 2)]
                .iter()
                .map(|&(onset, midi, duration)| NoteLevelEvent { onset, midi, duration })
                .collect(),
            meter: meter.clone(),
            measures: 2,
        };
        for beats in [true, false] {
            let toks = tokenize_notelevel(&s, beats).unwrap();
            assert_eq!(detokenize_notelevel(&toks, &meter, beats).unwrap(), s);
        }
    }

    #[test]
    fn events_past_the_last_measure_add_bars() {
        let s = seq(&[(100, 60, 24)], TimeSignature::common(), 1);
        let toks = tokenize_notelevel(&s, true).unwrap();
        assert_eq!(toks.iter().filter(|t| **t == NoteToken::Bar).count(), 2);
    }

    #[test]
    fn token_text() {
        for s in ["bar", "beat", "pos_1", "note_127", "len_384"] {
            assert_eq!(s.parse::<NoteToken>().unwrap().to_string(), s);
        }
        for s in ["pos_0", "pos_01", "note_128", "len_", "len_x", "rest"] {
            assert!(s.parse::<NoteToken>().is_err(), "{s}");
        }
        let v = vocabulary(true);
        assert_eq!(v.len(), 2 + 23 + 128 + 384);
        assert!(vocabulary(false).contains(&"pos_143".to_string()));
    }
}
