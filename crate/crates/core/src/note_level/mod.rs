//! Note-level (MIDI-like) view of a score.
//!
//! A score is down-converted into sounding notes on a grid of
//! [`crate::notation::TICKS_PER_QUARTER`] ticks per quarter note: tie chains merge, spelling
//! collapses to MIDI numbers, voices and staves mix into one stream.
//! Timing can then be perturbed to imitate unquantized input and snapped
//! back onto the grid before tokenization.

mod midi;
mod perturb;
mod tokens;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::notation::{measure_capacity, Event, Score, StaffId, Tie, TimeSignature};

pub use midi::write_smf;
pub use perturb::{perturb, snap_to_grid, PerturbError, PerturbParams};
pub use tokens::{detokenize_notelevel, tokenize_notelevel, vocabulary, NoteToken, NoteTokenError};

/// One sounding note. `T` is `i64` ticks on the grid, or a float after
/// perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteLevelEvent<T> {
    pub onset: T,
    pub midi: u8,
    pub duration: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteLevelSeq<T> {
    pub events: Vec<NoteLevelEvent<T>>,
    /// `(measure index, time signature)` from measure 0 on.
    pub meter: Vec<(usize, TimeSignature)>,
    pub measures: usize,
}

/// Grid-aligned sequence, in ticks.
pub type GridSeq = NoteLevelSeq<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NoteLevelError {
    #[error("staff {staff} measure {}: tie is never completed", .measure + 1)]
    DanglingTie { staff: StaffId, measure: usize },
    #[error("staff {staff} measure {}: duration {duration} is off the tick grid", .measure + 1)]
    OffGrid { staff: StaffId, measure: usize, duration: String },
    #[error("meter map must start at measure 0")]
    Meter,
    #[error("event at tick {onset} has duration {duration}; durations must be at least 1 tick")]
    Duration { onset: i64, duration: i64 },
    #[error("event at tick {onset} is before the first bar")]
    Negative { onset: i64 },
}

impl<T: Copy> NoteLevelSeq<T> {
    /// Time signature in effect for a measure index.
    pub fn time_at(&self, measure: usize) -> TimeSignature {
        time_at(&self.meter, measure)
    }
}

fn time_at(meter: &[(usize, TimeSignature)], measure: usize) -> TimeSignature {
    meter
        .iter()
        .take_while(|(m, _)| *m <= measure)
        .last()
        .map_or_else(TimeSignature::common, |(_, t)| *t)
}

/// Length of one measure in ticks.
pub fn measure_ticks(time: TimeSignature) -> i64 {
    let ticks = measure_capacity(time).ticks().expect("vocabulary times lie on the grid");
    i64::from(ticks)
}

/// Start tick and time signature of each measure, extended with the last
/// meter until the bars cover `until` (exclusive) and there are at least
/// `min_measures` of them.
pub fn measure_grid(meter: &[(usize, TimeSignature)], min_measures: usize, until: i64) -> Vec<(i64, TimeSignature)> {
    let mut out = Vec::with_capacity(min_measures);
    let mut start = 0;
    let mut m = 0;
    while m < min_measures || start < until {
        let t = time_at(meter, m);
        out.push((start, t));
        start += measure_ticks(t);
        m += 1;
    }
    out
}

/// Turn a score into sounding notes.
pub fn downconvert(score: &Score) -> Result<GridSeq, NoteLevelError> {
    let starts: Vec<i64> = measure_grid(&score.meter_map(), score.measure_count(), 0)
        .into_iter()
        .map(|(s, _)| s)
        .collect();
    let mut events: Vec<NoteLevelEvent<i64>> = Vec::new();
    for id in StaffId::BOTH {
        let staff = score.staff(id);
        let streams = staff.measures.iter().map(|m| m.voices.len()).max().unwrap_or(0);
        for v in 0..streams {
            // (midi, index into `events`, measure where the chain began)
            let mut open: Vec<(u8, usize, usize)> = Vec::new();
            let dangling = |open: &[(u8, usize, usize)]| {
                open.first().map(|&(_, _, measure)| NoteLevelError::DanglingTie { staff: id, measure })
            };
            for (mi, measure) in staff.measures.iter().enumerate() {
                let Some(voice) = measure.voices.get(v) else {
                    if let Some(e) = dangling(&open) {
                        return Err(e);
                    }
                    continue;
                };
                for (offset, event) in voice.timed() {
                    let off_grid = || NoteLevelError::OffGrid {
                        staff: id,
                        measure: mi,
                        duration: event.duration().to_string(),
                    };
                    let d = i64::from(event.duration().ticks().ok_or_else(off_grid)?);
                    let onset = starts[mi] + i64::from(offset.ticks().ok_or_else(off_grid)?);
                    let Event::Note(note) = event else {
                        if let Some(e) = dangling(&open) {
                            return Err(e);
                        }
                        continue;
                    };
                    let receives = note.tie.is_some_and(Tie::receives);
                    let continues = note.tie.is_some_and(Tie::continues);
                    let mut next_open = Vec::new();
                    for p in &note.pitches {
                        let midi = p.midi_number();
                        let held = receives.then(|| open.iter().position(|(m, _, _)| *m == midi)).flatten();
                        let (index, began) = match held {
                            Some(k) => {
                                let (_, index, began) = open.remove(k);
                                events[index].duration += d;
                                (index, began)
                            }
                            None => {
                                events.push(NoteLevelEvent { onset, midi, duration: d });
                                (events.len() - 1, mi)
                            }
                        };
                        if continues {
                            next_open.push((midi, index, began));
                        }
                    }
                    if let Some(e) = dangling(&open) {
                        return Err(e);
                    }
                    open = next_open;
                }
            }
            if let Some(e) = dangling(&open) {
                return Err(e);
            }
        }
    }
    events.sort_by_key(|e| (e.onset, e.midi, e.duration));
    Ok(NoteLevelSeq { events, meter: score.meter_map(), measures: score.measure_count() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::{Duration, KeySignature, NoteEvent, Pitch, Voice};

    fn pitch(s: &str) -> Pitch {
        s.parse().unwrap()
    }

    #[test]
    fn tie_across_barline_merges() {
        let mut s = Score::empty(2, KeySignature::natural(), TimeSignature::common());
        s.right.measures[0].voices[0] = Voice::new(vec![
            Event::rest(Duration::quarters(2)),
            NoteEvent::new(vec![pitch("C4")], Duration::quarters(2)).with_tie(Tie::Start).into(),
        ]);
        s.right.measures[1].voices[0] = Voice::new(vec![
            NoteEvent::new(vec![pitch("C4")], Duration::QUARTER).with_tie(Tie::Stop).into(),
            Event::rest(Duration::quarters(3)),
        ]);
        let seq = downconvert(&s).unwrap();
        assert_eq!(seq.events, vec![NoteLevelEvent { onset: 48, midi: 60, duration: 72 }]);
    }

    #[test]
    fn rests_only() {
        let s = Score::empty(3, KeySignature::natural(), TimeSignature::new(3, 4).unwrap());
        let seq = downconvert(&s).unwrap();
        assert!(seq.events.is_empty());
        assert_eq!(seq.meter, vec![(0, TimeSignature::new(3, 4).unwrap())]);
        assert_eq!(seq.measures, 3);
    }

    #[test]
    fn voices_merge_sorted() {
        let mut s = Score::empty(1, KeySignature::natural(), TimeSignature::common());
        s.right.measures[0].voices = vec![
            Voice::new(vec![
                NoteEvent::new(vec![pitch("E4")], Duration::quarters(2)).into(),
                Event::rest(Duration::quarters(2)),
            ]),
            Voice::new(vec![
                NoteEvent::new(vec![pitch("C4")], Duration::QUARTER).into(),
                Event::rest(Duration::quarters(3)),
            ]),
        ];
        let seq = downconvert(&s).unwrap();
        assert_eq!(
            seq.events,
            vec![NoteLevelEvent { onset: 0, midi: 60, duration: 24 }, NoteLevelEvent { onset: 0, midi: 64, duration: 48 }]
        );
    }

    #[test]
    fn dangling_tie_names_measure() {
        let mut s = Score::empty(2, KeySignature::natural(), TimeSignature::common());
        s.left.measures[1].voices[0] = Voice::new(vec![
            Event::rest(Duration::quarters(3)),
            NoteEvent::new(vec![pitch("C3")], Duration::QUARTER).with_tie(Tie::Start).into(),
        ]);
        assert_eq!(downconvert(&s), Err(NoteLevelError::DanglingTie { staff: StaffId::Left, measure: 1 }));
    }

    #[test]
    fn grid_extends_past_the_meter() {
        let g = measure_grid(&[(0, TimeSignature::new(3, 4).unwrap()), (1, TimeSignature::common())], 1, 200);
        assert_eq!(g.iter().map(|(s, _)| *s).collect::<Vec<_>>(), vec![0, 72, 168]);
    }
}
