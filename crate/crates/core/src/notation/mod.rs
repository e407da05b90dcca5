//! In-memory model of a two-staff piano score.
//!
//! Every other module (tokenizers, MusicXML I/O, down-conversion, the
//! metric) reads and writes these types. Values are plain data: build
//! them directly, then run [`validate_score`] to check the structural
//! invariants that the constructors cannot enforce on their own.

mod duration;
mod pitch;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use duration::{Duration, TICKS_PER_QUARTER};
pub use pitch::{Alter, Pitch, Step, MAX_OCTAVE};
pub use validate::{validate_score, Issue, IssueKind, ValidationReport};
pub(crate) use validate::{beam_issue, tie_fixes};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NotationError {
    #[error("octave {0} outside 0..=8")]
    Octave(u8),
    #[error("malformed pitch `{0}`")]
    PitchSyntax(String),
    #[error("malformed duration `{0}`")]
    DurationSyntax(String),
    #[error("key signature with {0} fifths is outside the vocabulary (at most 6 accidentals)")]
    Key(i32),
    #[error("time signature {0}/{1} is outside the vocabulary")]
    Time(u32, u32),
    #[error("malformed time signature `{0}`")]
    TimeSyntax(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StaffId {
    Right,
    Left,
}

impl StaffId {
    pub const BOTH: [StaffId; 2] = [StaffId::Right, StaffId::Left];
}

impl fmt::Display for StaffId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StaffId::Right => "R",
            StaffId::Left => "L",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Clef {
    Treble,
    Bass,
}

impl Clef {
    pub const ALL: [Clef; 2] = [Clef::Bass, Clef::Treble];

    pub fn name(self) -> &'static str {
        match self {
            Clef::Treble => "treble",
            Clef::Bass => "bass",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyKind {
    Sharp,
    Flat,
    Natural,
}

/// Key signature as a count of sharps or flats, at most six.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeySignature {
    fifths: i8,
}

impl KeySignature {
    pub const MAX_ACCIDENTALS: u8 = 6;

    pub fn natural() -> KeySignature {
        KeySignature { fifths: 0 }
    }

    pub fn sharps(n: u8) -> Result<KeySignature, NotationError> {
        KeySignature::from_fifths(n as i32)
    }

    pub fn flats(n: u8) -> Result<KeySignature, NotationError> {
        KeySignature::from_fifths(-(n as i32))
    }

    pub fn from_fifths(fifths: i32) -> Result<KeySignature, NotationError> {
        if fifths.unsigned_abs() > Self::MAX_ACCIDENTALS as u32 {
            return Err(NotationError::Key(fifths));
        }
        Ok(KeySignature { fifths: fifths as i8 })
    }

    pub fn fifths(&self) -> i32 {
        self.fifths as i32
    }

    pub fn kind(&self) -> KeyKind {
        match self.fifths {
            0 => KeyKind::Natural,
            f if f > 0 => KeyKind::Sharp,
            _ => KeyKind::Flat,
        }
    }

    pub fn count(&self) -> u8 {
        self.fifths.unsigned_abs()
    }

    /// Sharps 1..=6, flats 1..=6, then natural.
    pub fn all() -> impl Iterator<Item = KeySignature> {
        (1..=6)
            .map(|n| KeySignature { fifths: n })
            .chain((1..=6).map(|n| KeySignature { fifths: -n }))
            .chain(std::iter::once(KeySignature::natural()))
    }
}

/// Time signature. The vocabulary admits 1..=12 beats over a quarter,
/// eighth or sixteenth beat unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct TimeSignature {
    beats: u8,
    beat_type: u8,
}

impl TimeSignature {
    pub const BEAT_TYPES: [u8; 3] = [4, 8, 16];
    pub const MAX_BEATS: u8 = 12;

    pub fn new(beats: u32, beat_type: u32) -> Result<TimeSignature, NotationError> {
        let ok = (1..=Self::MAX_BEATS as u32).contains(&beats)
            && Self::BEAT_TYPES.iter().any(|&b| b as u32 == beat_type);
        if !ok {
            return Err(NotationError::Time(beats, beat_type));
        }
        Ok(TimeSignature {
            beats: beats as u8,
            beat_type: beat_type as u8,
        })
    }

    pub fn common() -> TimeSignature {
        TimeSignature { beats: 4, beat_type: 4 }
    }

    pub fn beats(&self) -> u32 {
        self.beats as u32
    }

    pub fn beat_type(&self) -> u32 {
        self.beat_type as u32
    }

    /// Length of one beat unit in grid ticks (at most 24).
    pub fn beat_ticks(&self) -> u32 {
        4 * TICKS_PER_QUARTER / self.beat_type as u32
    }

    pub fn all() -> impl Iterator<Item = TimeSignature> {
        Self::BEAT_TYPES.into_iter().flat_map(|beat_type| {
            (1..=Self::MAX_BEATS).map(move |beats| TimeSignature { beats, beat_type })
        })
    }
}

impl fmt::Display for TimeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.beats, self.beat_type)
    }
}

impl std::str::FromStr for TimeSignature {
    type Err = NotationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NotationError::TimeSyntax(s.to_string());
        let (b, t) = s.split_once('/').ok_or_else(bad)?;
        TimeSignature::new(b.parse().map_err(|_| bad())?, t.parse().map_err(|_| bad())?)
    }
}

impl From<TimeSignature> for String {
    fn from(t: TimeSignature) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for TimeSignature {
    type Error = NotationError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Length of a full measure in quarter notes.
pub fn measure_capacity(ts: TimeSignature) -> Duration {
    Duration::new(ts.beats() * 4, ts.beat_type()).expect("beat type is non-zero")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stem {
    Up,
    Down,
}

impl Stem {
    pub const ALL: [Stem; 2] = [Stem::Up, Stem::Down];

    pub fn name(self) -> &'static str {
        match self {
            Stem::Up => "up",
            Stem::Down => "down",
        }
    }
}

/// State of one beam level at a note.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BeamState {
    Start,
    Stop,
    Continue,
    PartialLeft,
    PartialRight,
}

impl BeamState {
    pub const ALL: [BeamState; 5] = [
        BeamState::Start,
        BeamState::Stop,
        BeamState::Continue,
        BeamState::PartialLeft,
        BeamState::PartialRight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BeamState::Start => "start",
            BeamState::Stop => "stop",
            BeamState::Continue => "continue",
            BeamState::PartialLeft => "partial-left",
            BeamState::PartialRight => "partial-right",
        }
    }

    pub fn from_name(s: &str) -> Option<BeamState> {
        BeamState::ALL.into_iter().find(|b| b.name() == s)
    }
}

/// Maximum beam levels on one note (down to 128th notes).
pub const MAX_BEAMS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tie {
    Start,
    Continue,
    Stop,
}

impl Tie {
    pub const ALL: [Tie; 3] = [Tie::Start, Tie::Continue, Tie::Stop];

    pub fn name(self) -> &'static str {
        match self {
            Tie::Start => "start",
            Tie::Continue => "continue",
            Tie::Stop => "stop",
        }
    }

    /// Whether the tie carries on into the next note of the voice.
    pub fn continues(self) -> bool {
        matches!(self, Tie::Start | Tie::Continue)
    }

    /// Whether the note receives a tie from the previous note.
    pub fn receives(self) -> bool {
        matches!(self, Tie::Continue | Tie::Stop)
    }
}

/// A note or chord. `beams` is empty when the note is not beamed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NoteEvent {
    pub pitches: Vec<Pitch>,
    pub duration: Duration,
    pub stem: Option<Stem>,
    pub beams: Vec<BeamState>,
    pub tie: Option<Tie>,
}

impl NoteEvent {
    pub fn new(pitches: Vec<Pitch>, duration: Duration) -> NoteEvent {
        NoteEvent {
            pitches,
            duration,
            stem: None,
            beams: Vec::new(),
            tie: None,
        }
    }

    pub fn with_stem(mut self, stem: Stem) -> NoteEvent {
        self.stem = Some(stem);
        self
    }

    pub fn with_beams(mut self, beams: Vec<BeamState>) -> NoteEvent {
        self.beams = beams;
        self
    }

    pub fn with_tie(mut self, tie: Tie) -> NoteEvent {
        self.tie = Some(tie);
        self
    }

    /// Sort pitches into canonical chord order and drop duplicates.
    pub fn canonicalize(&mut self) {
        self.pitches.sort();
        self.pitches.dedup();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RestEvent {
    pub duration: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Event {
    Note(NoteEvent),
    Rest(RestEvent),
}

impl Event {
    pub fn rest(duration: Duration) -> Event {
        Event::Rest(RestEvent { duration })
    }

    pub fn duration(&self) -> Duration {
        match self {
            Event::Note(n) => n.duration,
            Event::Rest(r) => r.duration,
        }
    }

    pub fn as_note(&self) -> Option<&NoteEvent> {
        match self {
            Event::Note(n) => Some(n),
            Event::Rest(_) => None,
        }
    }

    pub fn as_note_mut(&mut self) -> Option<&mut NoteEvent> {
        match self {
            Event::Note(n) => Some(n),
            Event::Rest(_) => None,
        }
    }
}

impl From<NoteEvent> for Event {
    fn from(n: NoteEvent) -> Event {
        Event::Note(n)
    }
}

/// One voice of one measure.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Voice {
    pub events: Vec<Event>,
}

impl Voice {
    pub fn new(events: Vec<Event>) -> Voice {
        Voice { events }
    }

    pub fn total(&self) -> Duration {
        self.events.iter().map(Event::duration).sum()
    }

    /// Events paired with their onset from the start of the measure.
    pub fn timed(&self) -> impl Iterator<Item = (Duration, &Event)> {
        self.events.iter().scan(Duration::ZERO, |t, e| {
            let onset = *t;
            *t += e.duration();
            Some((onset, e))
        })
    }

    /// A voice of rests filling `length`.
    pub fn rests(length: Duration) -> Voice {
        let parts = length.decompose().unwrap_or_else(|| vec![length]);
        Voice::new(parts.into_iter().map(Event::rest).collect())
    }
}

/// A measure of one staff. Attribute changes take effect at its start.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Measure {
    pub clef: Option<Clef>,
    pub key: Option<KeySignature>,
    pub time: Option<TimeSignature>,
    pub voices: Vec<Voice>,
}

impl Measure {
    pub fn new(voices: Vec<Voice>) -> Measure {
        Measure {
            voices,
            ..Measure::default()
        }
    }

    pub fn has_changes(&self) -> bool {
        self.clef.is_some() || self.key.is_some() || self.time.is_some()
    }
}

/// Clef, key and time in effect at some point of a staff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Attributes {
    pub clef: Clef,
    pub key: KeySignature,
    pub time: TimeSignature,
}

impl Attributes {
    pub fn apply(&mut self, m: &Measure) {
        if let Some(c) = m.clef {
            self.clef = c;
        }
        if let Some(k) = m.key {
            self.key = k;
        }
        if let Some(t) = m.time {
            self.time = t;
        }
    }
}

/// One staff: initial attributes plus its measures.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Staff {
    pub clef: Clef,
    pub key: KeySignature,
    pub time: TimeSignature,
    pub measures: Vec<Measure>,
}

impl Staff {
    pub fn new(clef: Clef, key: KeySignature, time: TimeSignature) -> Staff {
        Staff {
            clef,
            key,
            time,
            measures: Vec::new(),
        }
    }

    pub fn initial(&self) -> Attributes {
        Attributes {
            clef: self.clef,
            key: self.key,
            time: self.time,
        }
    }

    /// Attributes in effect for each measure, in order.
    pub fn attributes(&self) -> Vec<Attributes> {
        let mut cur = self.initial();
        self.measures
            .iter()
            .map(|m| {
                cur.apply(m);
                cur
            })
            .collect()
    }

    /// Attributes in effect at measure `index` (the last measure's if past the end).
    pub fn attributes_at(&self, index: usize) -> Attributes {
        let mut cur = self.initial();
        for m in self.measures.iter().take(index + 1) {
            cur.apply(m);
        }
        cur
    }
}

/// A two-staff piano score.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Score {
    pub right: Staff,
    pub left: Staff,
}

impl Score {
    pub fn staff(&self, id: StaffId) -> &Staff {
        match id {
            StaffId::Right => &self.right,
            StaffId::Left => &self.left,
        }
    }

    pub fn staff_mut(&mut self, id: StaffId) -> &mut Staff {
        match id {
            StaffId::Right => &mut self.right,
            StaffId::Left => &mut self.left,
        }
    }

    pub fn measure_count(&self) -> usize {
        self.right.measures.len().max(self.left.measures.len())
    }

    /// Time signature per measure, taken from the right staff.
    pub fn meter_map(&self) -> Vec<(usize, TimeSignature)> {
        let mut map = vec![(0, self.right.time)];
        for (i, m) in self.right.measures.iter().enumerate().skip(1) {
            if let Some(t) = m.time {
                map.push((i, t));
            }
        }
        map
    }

    /// A score of `measures` rest-only measures in both staves.
    pub fn empty(measures: usize, key: KeySignature, time: TimeSignature) -> Score {
        let cap = measure_capacity(time);
        let make = |clef| Staff {
            clef,
            key,
            time,
            measures: (0..measures).map(|_| Measure::new(vec![Voice::rests(cap)])).collect(),
        };
        Score {
            right: make(Clef::Treble),
            left: make(Clef::Bass),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacities() {
        let cap = |b, t| measure_capacity(TimeSignature::new(b, t).unwrap());
        assert_eq!(cap(4, 4), Duration::quarters(4));
        assert_eq!(cap(6, 8), Duration::quarters(3));
        assert_eq!(cap(3, 4), Duration::quarters(3));
        assert_eq!(cap(7, 16), Duration::new(7, 4).unwrap());
    }

    #[test]
    fn every_vocabulary_meter_has_positive_grid_capacity() {
        let all: Vec<_> = TimeSignature::all().collect();
        assert_eq!(all.len(), 36);
        for ts in all {
            let cap = measure_capacity(ts);
            assert!(!cap.is_zero());
            assert!(cap.ticks().is_some());
            assert!(ts.beat_ticks() <= 24);
        }
    }

    #[test]
    fn key_ranges() {
        assert_eq!(KeySignature::all().count(), 13);
        assert!(KeySignature::sharps(7).is_err());
        assert!(KeySignature::from_fifths(-7).is_err());
        let k = KeySignature::flats(2).unwrap();
        assert_eq!((k.kind(), k.count()), (KeyKind::Flat, 2));
        assert_eq!(KeySignature::natural().kind(), KeyKind::Natural);
    }

    #[test]
    fn time_rejects_outside_vocabulary() {
        assert!(TimeSignature::new(2, 2).is_err());
        assert!(TimeSignature::new(0, 4).is_err());
        assert!(TimeSignature::new(13, 8).is_err());
        assert!(TimeSignature::new(3, 3).is_err());
    }

    #[test]
    fn attributes_follow_changes() {
        let mut s = Score::empty(3, KeySignature::natural(), TimeSignature::common());
        s.right.measures[1].key = Some(KeySignature::sharps(2).unwrap());
        let attrs = s.right.attributes();
        assert_eq!(attrs[0].key, KeySignature::natural());
        assert_eq!(attrs[1].key.count(), 2);
        assert_eq!(attrs[2].key.count(), 2);
        assert_eq!(s.right.attributes_at(2), attrs[2]);
    }
}
