use std::fmt;

use serde::Serialize;

use super::{measure_capacity, BeamState, Event, Score, Staff, StaffId, Tie, Voice, MAX_BEAMS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueKind {
    MeasureCountMismatch,
    TimeSignatureMismatch,
    ChangeInFirstMeasure,
    NoVoices,
    EmptyVoice,
    UnderfullVoice,
    OverfullVoice,
    EmptyChord,
    UnorderedChord,
    ZeroDuration,
    TooManyBeams,
    MalformedBeam,
    DanglingTie,
    OrphanTie,
}

/// One invariant violation, located as precisely as the check allows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub kind: IssueKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub staff: Option<StaffId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voice: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event: Option<usize>,
    pub detail: String,
}

impl Issue {
    fn at(kind: IssueKind, staff: StaffId, measure: usize, detail: impl Into<String>) -> Issue {
        Issue {
            kind,
            staff: Some(staff),
            measure: Some(measure),
            voice: None,
            event: None,
            detail: detail.into(),
        }
    }

    fn voice(mut self, v: usize) -> Issue {
        self.voice = Some(v);
        self
    }

    fn event(mut self, e: usize) -> Issue {
        self.event = Some(e);
        self
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        if let Some(s) = self.staff {
            write!(f, " staff {s}")?;
        }
        if let Some(m) = self.measure {
            write!(f, " measure {m}")?;
        }
        if let Some(v) = self.voice {
            write!(f, " voice {v}")?;
        }
        if let Some(e) = self.event {
            write!(f, " event {e}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn count(&self, kind: IssueKind) -> usize {
        self.issues.iter().filter(|i| i.kind == kind).count()
    }
}

/// Check every structural invariant of a score. An empty report means the
/// score can be tokenized and round-tripped.
pub fn validate_score(score: &Score) -> ValidationReport {
    let mut issues = Vec::new();

    let (nr, nl) = (score.right.measures.len(), score.left.measures.len());
    if nr != nl {
        issues.push(Issue {
            kind: IssueKind::MeasureCountMismatch,
            staff: None,
            measure: None,
            voice: None,
            event: None,
            detail: format!("right staff has {nr} measures, left staff has {nl}"),
        });
    }

    if score.right.time != score.left.time {
        issues.push(Issue::at(
            IssueKind::TimeSignatureMismatch,
            StaffId::Left,
            0,
            format!("initial time {} differs from right staff {}", score.left.time, score.right.time),
        ));
    }
    for (i, (r, l)) in score.right.measures.iter().zip(&score.left.measures).enumerate() {
        if r.time != l.time {
            issues.push(Issue::at(
                IssueKind::TimeSignatureMismatch,
                StaffId::Left,
                i,
                format!("time change {:?} differs from right staff {:?}", l.time.map(|t| t.to_string()), r.time.map(|t| t.to_string())),
            ));
        }
    }

    for id in StaffId::BOTH {
        let staff = score.staff(id);
        check_staff(id, staff, &mut issues);
        let mut fixes = tie_fixes(id, staff);
        fixes.sort_by_key(|f| (f.measure, f.voice, f.event));
        issues.extend(fixes.into_iter().map(|f| {
            Issue::at(f.kind, id, f.measure, f.detail)
                .voice(f.voice)
                .event(f.event)
        }));
    }

    ValidationReport { issues }
}

fn check_staff(id: StaffId, staff: &Staff, issues: &mut Vec<Issue>) {
    if let Some(first) = staff.measures.first() {
        if first.has_changes() {
            issues.push(Issue::at(
                IssueKind::ChangeInFirstMeasure,
                id,
                0,
                "attribute change in the first measure; use the staff's initial attributes",
            ));
        }
    }
    for (mi, (measure, attrs)) in staff.measures.iter().zip(staff.attributes()).enumerate() {
        let cap = measure_capacity(attrs.time);
        if measure.voices.is_empty() {
            issues.push(Issue::at(IssueKind::NoVoices, id, mi, "measure has no voices"));
        }
        for (vi, voice) in measure.voices.iter().enumerate() {
            if voice.events.is_empty() {
                issues.push(Issue::at(IssueKind::EmptyVoice, id, mi, "voice has no events").voice(vi));
            } else {
                let total = voice.total();
                if total < cap {
                    issues.push(
                        Issue::at(IssueKind::UnderfullVoice, id, mi, format!("voice sums to {total}, measure holds {cap}"))
                            .voice(vi),
                    );
                } else if total > cap {
                    issues.push(
                        Issue::at(IssueKind::OverfullVoice, id, mi, format!("voice sums to {total}, measure holds {cap}"))
                            .voice(vi),
                    );
                }
            }
            for (ei, event) in voice.events.iter().enumerate() {
                let here = |kind, detail: &str| Issue::at(kind, id, mi, detail).voice(vi).event(ei);
                if event.duration().is_zero() {
                    issues.push(here(IssueKind::ZeroDuration, "event has zero duration"));
                }
                if let Event::Note(n) = event {
                    if n.pitches.is_empty() {
                        issues.push(here(IssueKind::EmptyChord, "note without pitches"));
                    } else if n.pitches.windows(2).any(|w| w[0] >= w[1]) {
                        issues.push(here(IssueKind::UnorderedChord, "chord pitches not strictly ascending"));
                    }
                    if n.beams.len() > MAX_BEAMS {
                        issues.push(here(IssueKind::TooManyBeams, "more than five beam levels"));
                    }
                }
            }
            if let Some((ei, detail)) = beam_issue(voice) {
                issues.push(Issue::at(IssueKind::MalformedBeam, id, mi, detail).voice(vi).event(ei));
            }
        }
    }
}

/// First beam inconsistency in a voice, if any. Each level must open with
/// `start`, carry on with `continue` and close with `stop` before the voice
/// ends; partial hooks are only allowed while their level is closed. Rests
/// inside a group are allowed, unbeamed notes are not.
pub(crate) fn beam_issue(voice: &Voice) -> Option<(usize, String)> {
    let mut open = [false; MAX_BEAMS];
    for (ei, event) in voice.events.iter().enumerate() {
        let Event::Note(note) = event else { continue };
        for (level, is_open) in open.iter_mut().enumerate() {
            let state = note.beams.get(level).copied();
            let problem = match (state, *is_open) {
                (Some(BeamState::Start), false) => {
                    *is_open = true;
                    None
                }
                (Some(BeamState::Start), true) => Some("beam start inside an open group"),
                (Some(BeamState::Continue), true) => None,
                (Some(BeamState::Continue), false) => Some("beam continue without a start"),
                (Some(BeamState::Stop), true) => {
                    *is_open = false;
                    None
                }
                (Some(BeamState::Stop), false) => Some("beam stop without a start"),
                (Some(BeamState::PartialLeft | BeamState::PartialRight), false) => None,
                (Some(_), true) => Some("partial beam inside an open group"),
                (None, true) => Some("unbeamed note inside an open group"),
                (None, false) => None,
            };
            if let Some(p) = problem {
                return Some((ei, format!("level {}: {p}", level + 1)));
            }
        }
    }
    if let Some(level) = open.iter().position(|&o| o) {
        return Some((voice.events.len().saturating_sub(1), format!("level {}: group never stopped", level + 1)));
    }
    None
}

/// A tie correction: set the tie of one note to `replacement`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct TieFix {
    pub staff: StaffId,
    pub measure: usize,
    pub voice: usize,
    pub event: usize,
    pub replacement: Option<Tie>,
    pub kind: super::IssueKind,
    pub detail: String,
}

/// Walk each voice stream of a staff (voice index `v` of consecutive
/// measures) and list the tie attributes that would have to change for
/// every chain to read start, continue*, stop.
pub(crate) fn tie_fixes(id: StaffId, staff: &Staff) -> Vec<TieFix> {
    let streams = staff.measures.iter().map(|m| m.voices.len()).max().unwrap_or(0);
    let mut fixes = Vec::new();
    for v in 0..streams {
        // (measure, event, tie) of the note whose tie is still open
        let mut open: Option<(usize, usize, Tie)> = None;
        let dangle = |open: &mut Option<(usize, usize, Tie)>, fixes: &mut Vec<TieFix>| {
            if let Some((m, e, t)) = open.take() {
                fixes.push(TieFix {
                    staff: id,
                    measure: m,
                    voice: v,
                    event: e,
                    replacement: match t {
                        Tie::Continue => Some(Tie::Stop),
                        _ => None,
                    },
                    kind: IssueKind::DanglingTie,
                    detail: format!("tie_{} is not followed by a tied note", t.name()),
                });
            }
        };
        for (mi, measure) in staff.measures.iter().enumerate() {
            let Some(voice) = measure.voices.get(v) else {
                dangle(&mut open, &mut fixes);
                continue;
            };
            for (ei, event) in voice.events.iter().enumerate() {
                let tie = match event {
                    Event::Rest(_) => {
                        dangle(&mut open, &mut fixes);
                        continue;
                    }
                    Event::Note(n) => n.tie,
                };
                match tie {
                    None => dangle(&mut open, &mut fixes),
                    Some(Tie::Start) => {
                        dangle(&mut open, &mut fixes);
                        open = Some((mi, ei, Tie::Start));
                    }
                    Some(t @ (Tie::Continue | Tie::Stop)) if open.is_some() => {
                        open = (t == Tie::Continue).then_some((mi, ei, t));
                    }
                    Some(t) => {
                        fixes.push(TieFix {
                            staff: id,
                            measure: mi,
                            voice: v,
                            event: ei,
                            replacement: (t == Tie::Continue).then_some(Tie::Start),
                            kind: IssueKind::OrphanTie,
                            detail: format!("tie_{} without a preceding tied note", t.name()),
                        });
                        if t == Tie::Continue {
                            open = Some((mi, ei, Tie::Start));
                        }
                    }
                }
            }
        }
        dangle(&mut open, &mut fixes);
    }
    fixes
}
