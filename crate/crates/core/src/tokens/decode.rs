//! Token sequence → score, with recovery.
//!
//! Decoding never fails. Each grammar violation is logged as one
//! [`FormatError`] together with the repair applied, so a sequence decodes
//! without any entry exactly when it is a well-formed tokenization.
//! [`validate_tokens`] runs the same pass and keeps only the report, which
//! makes the validator and the decoder agree by construction.

use std::fmt;

use serde::Serialize;

use super::ScoreToken;
use crate::notation::{
    beam_issue, measure_capacity, tie_fixes, Attributes, Clef, Duration, Event, KeySignature, Measure, NoteEvent,
    Pitch, Score, Staff, StaffId, TimeSignature, Voice,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatErrorKind {
    UnbalancedVoiceTags,
    OrphanAttribute,
    MissingDuration,
    MeasureLengthMismatch,
    StaffLengthDisagreement,
    UnknownToken,
    MisorderedToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormatError {
    pub kind: FormatErrorKind,
    /// Position of the offending token; the sequence length for problems
    /// detected at the end.
    pub index: usize,
    pub detail: String,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at token {}: {}", self.kind, self.index, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct FormatErrorReport {
    pub errors: Vec<FormatError>,
}

impl FormatErrorReport {
    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn count(&self, kind: FormatErrorKind) -> usize {
        self.errors.iter().filter(|e| e.kind == kind).count()
    }

    pub fn has(&self, kind: FormatErrorKind) -> bool {
        self.count(kind) > 0
    }
}

/// Rebuild a score from tokens of either form, repairing what it must.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> (Score, FormatErrorReport) {
    let mut d = Decoder::default();
    for (i, t) in tokens.iter().enumerate() {
        let t = t.as_ref();
        match t.parse::<ScoreToken>() {
            Ok(tok) => d.token(i, tok),
            Err(e) => d.err(FormatErrorKind::UnknownToken, i, e.to_string()),
        }
    }
    d.finish(tokens.len())
}

/// Grammar check without keeping the decoded score.
pub fn validate_tokens<S: AsRef<str>>(tokens: &[S]) -> FormatErrorReport {
    detokenize(tokens).1
}

/// Token index of the first token of each event: measure → voice → event.
type EventIndex = Vec<Vec<Vec<usize>>>;

struct Pending {
    pitches: Vec<Pitch>,
    rest: bool,
}

#[derive(Clone, Copy)]
enum Stage {
    /// Last event is a note; `rank` is the last attribute seen
    /// (0 len, 1 stem, 2 beam or folded attr, 3 tie).
    Note { rank: u8 },
    Rest,
}

struct StaffBuild {
    id: StaffId,
    staff: Staff,
    index: EventIndex,
    header: u8,
    attrs: Attributes,
    measure: Measure,
    measure_index: Vec<Vec<usize>>,
    measure_first: Option<usize>,
    change_rank: Option<u8>,
    voice: Option<(Voice, Vec<usize>)>,
    pending: Option<Pending>,
    stage: Option<Stage>,
}

impl StaffBuild {
    fn new(id: StaffId, key: KeySignature, time: TimeSignature) -> StaffBuild {
        let clef = match id {
            StaffId::Right => Clef::Treble,
            StaffId::Left => Clef::Bass,
        };
        let staff = Staff::new(clef, key, time);
        StaffBuild {
            id,
            attrs: staff.initial(),
            staff,
            index: Vec::new(),
            header: 0,
            measure: Measure::default(),
            measure_index: Vec::new(),
            measure_first: None,
            change_rank: None,
            voice: None,
            pending: None,
            stage: None,
        }
    }

    fn has_open_measure(&self) -> bool {
        self.measure_first.is_some() || self.voice.is_some() || !self.measure.voices.is_empty()
    }

    fn set_attr(&mut self, tok: &ScoreToken, initial: bool) {
        let m = &mut self.measure;
        match *tok {
            ScoreToken::Clef(c) => {
                self.attrs.clef = c;
                if initial { self.staff.clef = c } else { m.clef = Some(c) }
            }
            ScoreToken::Key(k) => {
                self.attrs.key = k;
                if initial { self.staff.key = k } else { m.key = Some(k) }
            }
            ScoreToken::Time(t) => {
                self.attrs.time = t;
                if initial { self.staff.time = t } else { m.time = Some(t) }
            }
            _ => unreachable!("not an attribute token"),
        }
    }
}

fn attr_rank(tok: &ScoreToken) -> u8 {
    match tok {
        ScoreToken::Clef(_) => 0,
        ScoreToken::Key(_) => 1,
        _ => 2,
    }
}

/// Right-staff time per measure, used to keep the left staff in step.
struct Meter {
    initial: TimeSignature,
    changes: Vec<Option<TimeSignature>>,
    effective: Vec<TimeSignature>,
}

const ATTR_NAMES: [&str; 3] = ["clef", "key", "time"];

#[derive(Default)]
struct Decoder {
    errors: Vec<FormatError>,
    right: Option<(Staff, EventIndex)>,
    meter: Option<Meter>,
    left: Option<(Staff, EventIndex)>,
    cur: Option<StaffBuild>,
}

impl Decoder {
    fn err(&mut self, kind: FormatErrorKind, index: usize, detail: impl Into<String>) {
        self.errors.push(FormatError { kind, index, detail: detail.into() });
    }

    fn start(&mut self, id: StaffId) {
        let (key, time) = match &self.right {
            Some((r, _)) => (r.key, r.time),
            None => (KeySignature::natural(), TimeSignature::common()),
        };
        self.cur = Some(StaffBuild::new(id, key, time));
    }

    fn cur(&mut self) -> &mut StaffBuild {
        self.cur.as_mut().expect("staff started")
    }

    fn ensure_started(&mut self, i: usize) {
        if self.cur.is_none() {
            self.err(FormatErrorKind::MisorderedToken, i, "sequence does not start with R");
            self.start(StaffId::Right);
        }
    }

    fn ensure_header(&mut self, i: usize) {
        let header = self.cur().header;
        for slot in header..3 {
            self.err(
                FormatErrorKind::MisorderedToken,
                i,
                format!("missing initial {} token", ATTR_NAMES[slot as usize]),
            );
        }
        self.cur().header = 3;
        self.check_left_initial_time(i);
    }

    fn set_right(&mut self, staff: Staff, index: EventIndex) {
        self.meter = Some(Meter {
            initial: staff.time,
            changes: staff.measures.iter().map(|m| m.time).collect(),
            effective: staff.attributes().iter().map(|a| a.time).collect(),
        });
        self.right = Some((staff, index));
    }

    fn check_left_initial_time(&mut self, i: usize) {
        let Some(rt) = self.meter.as_ref().map(|m| m.initial) else { return };
        let b = self.cur();
        if b.id == StaffId::Left && b.staff.time != rt {
            let found = b.staff.time;
            b.staff.time = rt;
            b.attrs.time = rt;
            self.err(
                FormatErrorKind::MisorderedToken,
                i,
                format!("left staff time {found} disagrees with right staff {rt}"),
            );
        }
    }

    fn capacity(&self) -> Duration {
        let b = self.cur.as_ref().expect("staff started");
        let m = b.staff.measures.len();
        if b.id == StaffId::Left {
            if let Some(meter) = &self.meter {
                if let Some(t) = meter.effective.get(m) {
                    return measure_capacity(*t);
                }
            }
        }
        measure_capacity(b.attrs.time)
    }

    fn close_voice(&mut self, i: usize) {
        let cap = self.capacity();
        let Some((mut voice, mut idx)) = self.cur().voice.take() else { return };
        let total = voice.total();
        if total != cap {
            self.err(
                FormatErrorKind::MeasureLengthMismatch,
                i,
                format!("voice sums to {total}, measure holds {cap}"),
            );
            let mut t = Duration::ZERO;
            let keep = voice
                .events
                .iter()
                .take_while(|e| {
                    t += e.duration();
                    t <= cap
                })
                .count();
            voice.events.truncate(keep);
            idx.truncate(keep);
            let fill = cap - voice.total();
            for r in Voice::rests(fill).events {
                voice.events.push(r);
                idx.push(i);
            }
        }
        let b = self.cur();
        b.measure.voices.push(voice);
        b.measure_index.push(idx);
        b.stage = None;
    }

    fn close_measure(&mut self, i: usize) {
        if self.cur().voice.is_some() {
            self.close_voice(i);
        }
        let cap = self.capacity();
        if self.cur().measure.voices.is_empty() {
            self.err(FormatErrorKind::MeasureLengthMismatch, i, "measure without voices");
            let b = self.cur();
            let rests = Voice::rests(cap);
            b.measure_index.push(vec![i; rests.events.len()]);
            b.measure.voices.push(rests);
        }
        let first = self.cur().measure_first.unwrap_or(i);
        if self.cur().staff.measures.is_empty() && self.cur().measure.has_changes() {
            self.err(
                FormatErrorKind::MisorderedToken,
                first,
                "attribute change before the first measure's voices; folded into the initial attributes",
            );
            let b = self.cur();
            if let Some(c) = b.measure.clef.take() {
                b.staff.clef = c;
            }
            if let Some(k) = b.measure.key.take() {
                b.staff.key = k;
            }
            if let Some(t) = b.measure.time.take() {
                b.staff.time = t;
            }
            self.check_left_initial_time(first);
        }
        if self.cur().id == StaffId::Left {
            let mi = self.cur().staff.measures.len();
            let right = self.meter.as_ref().and_then(|m| Some((*m.changes.get(mi)?, m.effective[mi])));
            if let Some((expected, effective)) = right {
                let found = self.cur().measure.time;
                if found != expected {
                    let show = |t: Option<TimeSignature>| t.map_or("none".to_string(), |t| t.to_string());
                    self.err(
                        FormatErrorKind::MisorderedToken,
                        first,
                        format!("left time change {} disagrees with right staff {}", show(found), show(expected)),
                    );
                    let b = self.cur();
                    b.measure.time = expected;
                    b.attrs.time = effective;
                }
            }
        }
        let b = self.cur();
        b.staff.measures.push(std::mem::take(&mut b.measure));
        b.index.push(std::mem::take(&mut b.measure_index));
        b.measure_first = None;
        b.change_rank = None;
        b.stage = None;
    }

    fn end_staff(&mut self, i: usize) {
        self.resolve_pending(i);
        if self.cur().voice.is_some() {
            self.err(FormatErrorKind::UnbalancedVoiceTags, i, "voice still open at end of staff");
        }
        if self.cur().has_open_measure() {
            self.err(FormatErrorKind::MisorderedToken, i, "last measure is not terminated by bar");
            self.close_measure(i);
        }
        let b = self.cur.take().expect("staff started");
        let slot = (b.staff, b.index);
        match b.id {
            StaffId::Right => self.set_right(slot.0, slot.1),
            StaffId::Left => self.left = Some(slot),
        }
    }

    fn resolve_pending(&mut self, i: usize) {
        if let Some(b) = self.cur.as_mut() {
            if b.pending.take().is_some() {
                self.err(FormatErrorKind::MissingDuration, i, "note or rest without a duration token");
            }
        }
    }

    fn open_voice(&mut self, i: usize) {
        let b = self.cur();
        b.voice = Some((Voice::default(), Vec::new()));
        b.measure_first.get_or_insert(i);
        b.stage = None;
    }

    fn finish_event(&mut self, i: usize, len: Duration, stem: Option<crate::notation::Stem>, beams: Vec<crate::notation::BeamState>, folded: bool) {
        let b = self.cur();
        let p = b.pending.take().expect("pending event");
        let (voice, idx) = b.voice.as_mut().expect("event inside voice");
        let start = i - p.pitches.len().max(1);
        if p.rest {
            voice.events.push(Event::rest(len));
            b.stage = Some(Stage::Rest);
            idx.push(start);
            if folded && (stem.is_some() || !beams.is_empty()) {
                self.err(FormatErrorKind::OrphanAttribute, i, "rest carries stem or beam attributes");
            }
        } else {
            let mut note = NoteEvent::new(p.pitches, len);
            note.canonicalize();
            note.stem = stem;
            note.beams = beams;
            voice.events.push(Event::Note(note));
            idx.push(start);
            b.stage = Some(Stage::Note { rank: if folded { 2 } else { 0 } });
        }
    }

    fn token(&mut self, i: usize, tok: ScoreToken) {
        if let Some(b) = self.cur.as_mut() {
            if let Some(p) = b.pending.as_mut() {
                match tok {
                    ScoreToken::Note(pitch) if !p.rest => {
                        let last = *p.pitches.last().expect("pending note has a pitch");
                        p.pitches.push(pitch);
                        if pitch <= last {
                            self.err(FormatErrorKind::MisorderedToken, i, "chord pitches must strictly ascend");
                        }
                        return;
                    }
                    ScoreToken::Len(len) => return self.finish_event(i, len, None, Vec::new(), false),
                    ScoreToken::Attr(a) => return self.finish_event(i, a.len, a.stem, a.beams, true),
                    _ => self.resolve_pending(i),
                }
            }
        }

        match tok {
            ScoreToken::Staff(StaffId::Right) => {
                if self.cur.is_none() && self.right.is_none() {
                    self.start(StaffId::Right);
                } else {
                    self.err(FormatErrorKind::MisorderedToken, i, "unexpected R");
                }
            }
            ScoreToken::Staff(StaffId::Left) => match self.cur.as_ref().map(|b| b.id) {
                None if self.left.is_none() && self.right.is_none() => {
                    self.err(FormatErrorKind::MisorderedToken, i, "L before any R staff");
                    self.set_right(Staff::new(Clef::Treble, KeySignature::natural(), TimeSignature::common()), Vec::new());
                    self.start(StaffId::Left);
                }
                Some(StaffId::Right) => {
                    self.ensure_header(i);
                    self.end_staff(i);
                    self.start(StaffId::Left);
                }
                _ => self.err(FormatErrorKind::MisorderedToken, i, "unexpected L"),
            },
            ScoreToken::Clef(_) | ScoreToken::Key(_) | ScoreToken::Time(_) => self.attribute(i, tok),
            ScoreToken::VoiceOpen => {
                self.ensure_started(i);
                self.ensure_header(i);
                if self.cur().voice.is_some() {
                    self.err(FormatErrorKind::UnbalancedVoiceTags, i, "<voice> before the previous voice closed");
                    self.close_voice(i);
                }
                self.open_voice(i);
            }
            ScoreToken::VoiceClose => {
                if self.cur.as_ref().is_some_and(|b| b.voice.is_some()) {
                    self.close_voice(i);
                } else {
                    self.err(FormatErrorKind::UnbalancedVoiceTags, i, "</voice> without an open voice");
                }
            }
            ScoreToken::Note(_) | ScoreToken::Rest => {
                self.ensure_started(i);
                self.ensure_header(i);
                if self.cur().voice.is_none() {
                    self.err(FormatErrorKind::UnbalancedVoiceTags, i, "event outside a voice");
                    self.open_voice(i);
                }
                let b = self.cur();
                b.stage = None;
                b.pending = Some(match tok {
                    ScoreToken::Note(p) => Pending { pitches: vec![p], rest: false },
                    _ => Pending { pitches: Vec::new(), rest: true },
                });
            }
            ScoreToken::Len(_) | ScoreToken::Attr(_) => {
                self.err(FormatErrorKind::OrphanAttribute, i, "duration without a note or rest");
            }
            ScoreToken::Stem(_) | ScoreToken::Beam(_) | ScoreToken::Tie(_) => self.note_attribute(i, tok),
            ScoreToken::Bar => {
                self.ensure_started(i);
                self.ensure_header(i);
                if self.cur().voice.is_some() {
                    self.err(FormatErrorKind::UnbalancedVoiceTags, i, "voice not closed before bar");
                }
                self.close_measure(i);
            }
        }
    }

    fn attribute(&mut self, i: usize, tok: ScoreToken) {
        self.ensure_started(i);
        let rank = attr_rank(&tok);
        let b = self.cur();
        b.stage = None;
        if b.header < 3 {
            if rank < b.header {
                self.err(FormatErrorKind::MisorderedToken, i, "repeated or out-of-order initial attribute");
                return;
            }
            for slot in b.header..rank {
                self.errors.push(FormatError {
                    kind: FormatErrorKind::MisorderedToken,
                    index: i,
                    detail: format!("missing initial {} token", ATTR_NAMES[slot as usize]),
                });
            }
            let b = self.cur();
            b.set_attr(&tok, true);
            b.header = rank + 1;
            if b.header == 3 {
                self.check_left_initial_time(i);
            }
            return;
        }
        let problem = if b.voice.is_some() {
            Some("attribute change inside a voice")
        } else if !b.measure.voices.is_empty() {
            Some("attribute change after the measure's voices")
        } else if b.change_rank.is_some_and(|r| r >= rank) {
            Some("attribute changes must be ordered clef, key, time")
        } else {
            None
        };
        if let Some(p) = problem {
            self.err(FormatErrorKind::MisorderedToken, i, p);
            return;
        }
        b.set_attr(&tok, false);
        b.change_rank = Some(rank);
        b.measure_first.get_or_insert(i);
    }

    fn note_attribute(&mut self, i: usize, tok: ScoreToken) {
        let rank = match tok {
            ScoreToken::Stem(_) => 1,
            ScoreToken::Beam(_) => 2,
            _ => 3,
        };
        let stage = self.cur.as_ref().and_then(|b| b.stage);
        match stage {
            None => self.err(FormatErrorKind::OrphanAttribute, i, format!("`{tok}` does not follow a note")),
            Some(Stage::Rest) => self.err(FormatErrorKind::OrphanAttribute, i, format!("`{tok}` follows a rest")),
            Some(Stage::Note { rank: seen }) if rank <= seen => {
                self.err(FormatErrorKind::MisorderedToken, i, format!("`{tok}` repeated or out of order"))
            }
            Some(Stage::Note { .. }) => {
                let b = self.cur();
                b.stage = Some(Stage::Note { rank });
                let (voice, _) = b.voice.as_mut().expect("stage implies open voice");
                let note = voice.events.last_mut().and_then(Event::as_note_mut).expect("stage implies a note");
                match tok {
                    ScoreToken::Stem(s) => note.stem = Some(s),
                    ScoreToken::Beam(bs) => note.beams = bs,
                    ScoreToken::Tie(t) => note.tie = Some(t),
                    _ => unreachable!(),
                }
            }
        }
    }

    fn finish(mut self, n: usize) -> (Score, FormatErrorReport) {
        match self.cur.as_ref().map(|b| b.id) {
            None if self.right.is_none() => {
                self.err(FormatErrorKind::MisorderedToken, n.min(1).saturating_sub(1), "no score content");
                let staff = |c| Staff::new(c, KeySignature::natural(), TimeSignature::common());
                let score = Score { right: staff(Clef::Treble), left: staff(Clef::Bass) };
                return (score, self.report());
            }
            None => {}
            Some(StaffId::Right) => {
                self.ensure_header(n);
                self.end_staff(n);
                self.err(FormatErrorKind::MisorderedToken, n, "missing L staff");
                self.start(StaffId::Left);
                self.cur().header = 3;
                self.end_staff(n);
            }
            Some(StaffId::Left) => {
                self.ensure_header(n);
                self.end_staff(n);
            }
        }
        let (mut right, mut ridx) = self.right.take().expect("right staff");
        let (mut left, mut lidx) = self.left.take().expect("left staff");

        let (nr, nl) = (right.measures.len(), left.measures.len());
        if nr != nl {
            self.err(
                FormatErrorKind::StaffLengthDisagreement,
                n,
                format!("right staff has {nr} measures, left staff has {nl}"),
            );
            let (short, sidx, long) = if nr < nl {
                (&mut right, &mut ridx, &left)
            } else {
                (&mut left, &mut lidx, &right)
            };
            let long_attrs = long.attributes();
            for (a, lm) in long_attrs.iter().zip(&long.measures).skip(short.measures.len()) {
                let mut m = Measure::new(vec![Voice::rests(measure_capacity(a.time))]);
                m.time = lm.time;
                sidx.push(vec![vec![n; m.voices[0].events.len()]]);
                short.measures.push(m);
            }
        }

        for (staff, idx) in [(&mut right, &ridx), (&mut left, &lidx)] {
            self.repair_beams(staff, idx);
        }
        for (id, staff, idx) in [(StaffId::Right, &mut right, &ridx), (StaffId::Left, &mut left, &lidx)] {
            for fix in tie_fixes(id, staff) {
                let at = idx[fix.measure][fix.voice][fix.event];
                self.err(FormatErrorKind::OrphanAttribute, at, fix.detail);
                if let Some(note) = staff.measures[fix.measure].voices[fix.voice].events[fix.event].as_note_mut() {
                    note.tie = fix.replacement;
                }
            }
        }
        (Score { right, left }, self.report())
    }

    fn repair_beams(&mut self, staff: &mut Staff, idx: &EventIndex) {
        for (mi, measure) in staff.measures.iter_mut().enumerate() {
            for (vi, voice) in measure.voices.iter_mut().enumerate() {
                if let Some((ei, detail)) = beam_issue(voice) {
                    self.err(FormatErrorKind::OrphanAttribute, idx[mi][vi][ei], format!("{detail}; beams of this voice dropped"));
                    for e in &mut voice.events {
                        if let Some(n) = e.as_note_mut() {
                            n.beams.clear();
                        }
                    }
                }
            }
        }
    }

    fn report(mut self) -> FormatErrorReport {
        self.errors.sort_by_key(|e| e.index);
        FormatErrorReport { errors: self.errors }
    }
}
