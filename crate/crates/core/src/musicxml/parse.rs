use std::collections::BTreeMap;

use roxmltree::{Document, Node, ParsingOptions};

use super::{MusicXmlError, Parsed, Profile, UnknownPolicy, Warning};
use crate::notation::{
    beam_issue, measure_capacity, tie_fixes, validate_score, Alter, BeamState, Clef, Duration, Event, KeySignature,
    Measure, NoteEvent, Pitch, Score, Staff, StaffId, Step, Stem, Tie, TimeSignature, Voice,
};

/// Elements read for their content, or deliberately ignored without comment.
const SCORE_CHILDREN: &[&str] = &[
    "work", "movement-number", "movement-title", "identification", "defaults", "credit", "part-list", "part",
];
const MEASURE_CHILDREN: &[&str] = &["attributes", "note", "backup", "forward", "print", "barline", "direction", "sound"];
const ATTRIBUTE_CHILDREN: &[&str] = &["divisions", "key", "time", "staves", "clef", "instruments"];
const NOTE_CHILDREN: &[&str] = &[
    "chord", "pitch", "rest", "duration", "tie", "voice", "type", "dot", "time-modification", "stem", "staff",
    "beam", "notations", "accidental", "instrument",
];
const NOTATION_CHILDREN: &[&str] = &["tied"];
const BARLINE_CHILDREN: &[&str] = &["bar-style"];
const DIRECTION_CHILDREN: &[&str] = &["direction-type", "staff", "voice", "offset", "sound"];

/// Read a part-wise MusicXML document into a score.
pub fn parse_musicxml(text: &str, profile: &Profile) -> Result<Parsed, MusicXmlError> {
    let opts = ParsingOptions { allow_dtd: true, ..ParsingOptions::default() };
    let doc = Document::parse_with_options(text, opts).map_err(|e| MusicXmlError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "score-partwise" {
        return Err(MusicXmlError::Structure(format!(
            "root element is <{}>, expected <score-partwise>",
            root.tag_name().name()
        )));
    }
    let mut p = Parser { profile: *profile, warnings: Vec::new() };
    p.check_children(root, SCORE_CHILDREN, None)?;
    let parts: Vec<Node> = elements(root).filter(|n| n.has_tag_name("part")).collect();
    if parts.len() != 1 {
        return Err(MusicXmlError::Structure(format!("expected one part, found {}", parts.len())));
    }
    p.part(parts[0])
}

fn elements<'a, 'i>(n: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    n.children().filter(Node::is_element)
}

fn child<'a, 'i>(n: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    elements(n).find(|c| c.has_tag_name(name))
}

fn child_text<'a>(n: Node<'a, '_>, name: &str) -> Option<&'a str> {
    child(n, name).and_then(|c| c.text()).map(str::trim)
}

/// Staff number (1 or 2) from a `number` or `<staff>` field; `None` when absent.
fn staff_number(s: Option<&str>, measure: usize) -> Result<Option<usize>, MusicXmlError> {
    match s.map(str::trim) {
        None => Ok(None),
        Some("1") => Ok(Some(0)),
        Some("2") => Ok(Some(1)),
        Some(other) => Err(MusicXmlError::Content { measure, detail: format!("staff number {other} (expected 1 or 2)") }),
    }
}

/// One note element's worth of data, chords merged.
struct Raw {
    onset: Duration,
    duration: Duration,
    rest: bool,
    pitches: Vec<Pitch>,
    stem: Option<Stem>,
    beams: Vec<BeamState>,
    tie_start: bool,
    tie_stop: bool,
}

struct Parser {
    profile: Profile,
    warnings: Vec<Warning>,
}

impl Parser {
    fn warn(&mut self, element: &str, measure: Option<usize>, detail: impl Into<String>) {
        self.warnings.push(Warning { element: element.to_string(), measure, detail: detail.into() });
    }

    /// Report (or reject) every child element outside `known`.
    fn check_children(&mut self, n: Node, known: &[&str], measure: Option<usize>) -> Result<(), MusicXmlError> {
        for c in elements(n) {
            let name = c.tag_name().name();
            if !known.contains(&name) {
                self.unknown(name, measure)?;
            }
        }
        Ok(())
    }

    fn unknown(&mut self, name: &str, measure: Option<usize>) -> Result<(), MusicXmlError> {
        match self.profile.unknown {
            UnknownPolicy::Fail => Err(MusicXmlError::Unsupported { element: name.to_string(), measure }),
            UnknownPolicy::Warn => {
                self.warn(name, measure, "not modeled; skipped");
                Ok(())
            }
        }
    }

    fn part(mut self, part: Node) -> Result<Parsed, MusicXmlError> {
        let mut divisions: Option<u32> = None;
        let mut staves: Option<usize> = None;
        let mut initial: [(Option<Clef>, Option<KeySignature>, Option<TimeSignature>); 2] = [(None, None, None); 2];
        let mut current = [(Clef::Treble, KeySignature::natural(), TimeSignature::common()); 2];
        let mut staffs: [Vec<Measure>; 2] = [Vec::new(), Vec::new()];
        let mut system_starts = Vec::new();

        let mut measures = Vec::new();
        for m in elements(part) {
            if m.has_tag_name("measure") {
                measures.push(m);
            } else {
                self.unknown(m.tag_name().name(), None)?;
            }
        }
        if measures.is_empty() {
            return Err(MusicXmlError::Structure("part has no measures".into()));
        }
        for (mi, m) in measures.into_iter().enumerate() {
            self.check_children(m, MEASURE_CHILDREN, Some(mi))?;
            let mut changes: [Measure; 2] = Default::default();
            let mut cursor = Duration::ZERO;
            let mut raws: BTreeMap<(usize, (u32, String)), Vec<Raw>> = BTreeMap::new();
            let mut last_note: Option<(usize, (u32, String))> = None;

            for c in elements(m) {
                match c.tag_name().name() {
                    "attributes" => {
                        if !cursor.is_zero() {
                            self.warn("attributes", Some(mi), "mid-measure attributes applied at the measure start");
                        }
                        self.check_children(c, ATTRIBUTE_CHILDREN, Some(mi))?;
                        self.attributes(c, mi, &mut divisions, &mut staves, &mut changes)?;
                    }
                    "note" => {
                        let div = divisions.ok_or_else(|| MusicXmlError::Content {
                            measure: mi,
                            detail: "note before <divisions>".into(),
                        })?;
                        if child(c, "grace").is_some() || child(c, "cue").is_some() {
                            self.unknown(if child(c, "grace").is_some() { "grace" } else { "cue" }, Some(mi))?;
                            continue;
                        }
                        self.check_children(c, NOTE_CHILDREN, Some(mi))?;
                        if let Some(n) = child(c, "notations") {
                            self.check_children(n, NOTATION_CHILDREN, Some(mi))?;
                        }
                        let raw = self.note(c, mi, div, cursor)?;
                        let staff = staff_number(child_text(c, "staff"), mi)?.unwrap_or(0);
                        let voice_text = child_text(c, "voice").unwrap_or("1").to_string();
                        let key = (staff, (voice_text.parse().unwrap_or(u32::MAX), voice_text));
                        if child(c, "chord").is_some() {
                            let prev = last_note
                                .as_ref()
                                .and_then(|k| raws.get_mut(k))
                                .and_then(|v| v.last_mut())
                                .filter(|r| !r.rest && !raw.rest);
                            let Some(prev) = prev else {
                                return Err(MusicXmlError::Content {
                                    measure: mi,
                                    detail: "<chord/> without a preceding note".into(),
                                });
                            };
                            prev.pitches.extend(raw.pitches);
                            prev.tie_start |= raw.tie_start;
                            prev.tie_stop |= raw.tie_stop;
                            continue;
                        }
                        cursor += raw.duration;
                        raws.entry(key.clone()).or_default().push(raw);
                        last_note = Some(key);
                    }
                    "backup" | "forward" => {
                        let div = divisions.unwrap_or(1);
                        let d = self.duration_of(c, mi, div)?;
                        if c.has_tag_name("forward") {
                            cursor += d;
                        } else {
                            cursor = cursor.checked_sub(d).ok_or_else(|| MusicXmlError::Content {
                                measure: mi,
                                detail: "<backup> moves before the measure start".into(),
                            })?;
                        }
                    }
                    "print" => {
                        if mi > 0 && c.attribute("new-system") == Some("yes") {
                            system_starts.push(mi);
                        }
                    }
                    "barline" => {
                        self.check_children(c, BARLINE_CHILDREN, Some(mi))?;
                    }
                    "direction" => {
                        self.check_children(c, DIRECTION_CHILDREN, Some(mi))?;
                        for dt in elements(c).filter(|n| n.has_tag_name("direction-type")) {
                            self.check_children(dt, &[], Some(mi))?;
                        }
                    }
                    _ => {}
                }
            }

            if mi == 0 {
                match staves {
                    Some(2) => {}
                    Some(n) => return Err(MusicXmlError::StaffCount(n)),
                    None => return Err(MusicXmlError::StaffCount(1)),
                }
                for (s, ch) in changes.iter_mut().enumerate() {
                    initial[s] = (ch.clef.take(), ch.key.take(), ch.time.take());
                    let (c, k, t) = &initial[s];
                    let default_clef = if s == 0 { Clef::Treble } else { Clef::Bass };
                    current[s] = (c.unwrap_or(default_clef), k.unwrap_or_else(KeySignature::natural), t.unwrap_or(TimeSignature::common()));
                    if c.is_none() {
                        self.warn("clef", Some(0), format!("staff {} has no initial clef; assuming {}", s + 1, default_clef.name()));
                    }
                    if k.is_none() {
                        self.warn("key", Some(0), format!("staff {} has no initial key; assuming natural", s + 1));
                    }
                    if t.is_none() {
                        self.warn("time", Some(0), format!("staff {} has no initial time; assuming 4/4", s + 1));
                    }
                }
            } else {
                for (s, ch) in changes.iter().enumerate() {
                    if let Some(c) = ch.clef {
                        current[s].0 = c;
                    }
                    if let Some(k) = ch.key {
                        current[s].1 = k;
                    }
                    if let Some(t) = ch.time {
                        current[s].2 = t;
                    }
                }
            }

            for (s, mut measure) in changes.into_iter().enumerate() {
                let cap = measure_capacity(current[s].2);
                for ((staff, (_, name)), list) in raws.iter_mut().filter(|((st, _), _)| *st == s) {
                    let voice = self.assemble(std::mem::take(list), cap, mi, *staff, name)?;
                    measure.voices.push(voice);
                }
                if measure.voices.is_empty() {
                    self.warn("note", Some(mi), format!("staff {} has no notes; filled with rests", s + 1));
                    measure.voices.push(Voice::rests(cap));
                }
                staffs[s].push(measure);
            }
        }

        let build = |s: usize, measures: Vec<Measure>| {
            let (c, k, t) = current_initial(&initial[s], s);
            Staff { clef: c, key: k, time: t, measures }
        };
        let [rm, lm] = staffs;
        let mut score = Score { right: build(0, rm), left: build(1, lm) };
        self.repair(&mut score);
        let report = validate_score(&score);
        if !report.is_empty() {
            return Err(MusicXmlError::InvalidScore(report));
        }
        Ok(Parsed { score, warnings: self.warnings, system_starts })
    }

    fn attributes(
        &mut self,
        n: Node,
        mi: usize,
        divisions: &mut Option<u32>,
        staves: &mut Option<usize>,
        changes: &mut [Measure; 2],
    ) -> Result<(), MusicXmlError> {
        for c in elements(n) {
            let targets = |c: Node| -> Result<Vec<usize>, MusicXmlError> {
                Ok(match staff_number(c.attribute("number"), mi)? {
                    Some(s) => vec![s],
                    None => vec![0, 1],
                })
            };
            match c.tag_name().name() {
                "divisions" => {
                    let d: u32 = c.text().unwrap_or("").trim().parse().ok().filter(|d| *d > 0).ok_or_else(|| {
                        MusicXmlError::Content { measure: mi, detail: "divisions must be a positive integer".into() }
                    })?;
                    *divisions = Some(d);
                }
                "staves" => {
                    let s: usize = c.text().unwrap_or("").trim().parse().map_err(|_| MusicXmlError::StaffCount(0))?;
                    if s != 2 {
                        return Err(MusicXmlError::StaffCount(s));
                    }
                    *staves = Some(s);
                }
                "key" => {
                    let fifths: i32 = child_text(c, "fifths").and_then(|t| t.parse().ok()).ok_or_else(|| {
                        MusicXmlError::Content { measure: mi, detail: "key without <fifths>".into() }
                    })?;
                    let k = KeySignature::from_fifths(fifths).map_err(|_| MusicXmlError::Key { measure: mi, fifths })?;
                    for s in targets(c)? {
                        changes[s].key = Some(k);
                    }
                }
                "time" => {
                    let beats = child_text(c, "beats");
                    let beat_type = child_text(c, "beat-type");
                    let text = format!("{}/{}", beats.unwrap_or("?"), beat_type.unwrap_or("?"));
                    let t = beats
                        .zip(beat_type)
                        .and_then(|(b, t)| Some((b.parse().ok()?, t.parse().ok()?)))
                        .and_then(|(b, t)| TimeSignature::new(b, t).ok())
                        .ok_or(MusicXmlError::Time { measure: mi, text })?;
                    for s in targets(c)? {
                        changes[s].time = Some(t);
                    }
                }
                "clef" => {
                    let sign = child_text(c, "sign").unwrap_or("");
                    let line = child_text(c, "line").unwrap_or("");
                    let clef = match (sign, line) {
                        ("G", "2" | "") => Clef::Treble,
                        ("F", "4" | "") => Clef::Bass,
                        _ => return Err(MusicXmlError::Clef { measure: mi, text: format!("{sign}{line}") }),
                    };
                    if child(c, "clef-octave-change").is_some() {
                        self.warn("clef-octave-change", Some(mi), "octave transposition of the clef ignored");
                    }
                    let s = staff_number(c.attribute("number"), mi)?.unwrap_or(0);
                    changes[s].clef = Some(clef);
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn duration_of(&mut self, n: Node, mi: usize, div: u32) -> Result<Duration, MusicXmlError> {
        let raw: u32 = child_text(n, "duration").and_then(|t| t.parse().ok()).ok_or_else(|| MusicXmlError::Content {
            measure: mi,
            detail: format!("<{}> without a valid <duration>", n.tag_name().name()),
        })?;
        Ok(Duration::new(raw, div).expect("divisions are positive"))
    }

    fn note(&mut self, n: Node, mi: usize, div: u32, onset: Duration) -> Result<Raw, MusicXmlError> {
        let duration = self.duration_of(n, mi, div)?;
        let bad = |detail: String| MusicXmlError::Content { measure: mi, detail };
        if duration.is_zero() {
            return Err(bad("note with zero duration".into()));
        }
        if duration.ticks().is_none() {
            return Err(bad(format!("duration {duration} is off the 1/24-quarter grid")));
        }
        let rest = child(n, "rest").is_some();
        let mut pitches = Vec::new();
        if !rest {
            let p = child(n, "pitch").ok_or_else(|| bad("note without <pitch> or <rest>".into()))?;
            let step = child_text(p, "step")
                .and_then(|s| s.chars().next())
                .and_then(Step::from_letter)
                .ok_or_else(|| bad("pitch without a valid <step>".into()))?;
            let alter_num: f64 = child_text(p, "alter").map_or(Ok(0.0), |a| a.parse()).map_err(|_| bad("bad <alter>".into()))?;
            if alter_num.fract() != 0.0 {
                return Err(bad(format!("microtonal alter {alter_num}")));
            }
            let alter = Alter::from_semitones(alter_num as i32).ok_or_else(|| bad(format!("alter {alter_num} outside ±2")))?;
            let octave: u8 = child_text(p, "octave").and_then(|o| o.parse().ok()).ok_or_else(|| bad("pitch without <octave>".into()))?;
            pitches.push(Pitch::new(step, alter, octave).map_err(|e| bad(e.to_string()))?);
        }
        let stem = match child_text(n, "stem") {
            Some("up") => Some(Stem::Up),
            Some("down") => Some(Stem::Down),
            _ => None,
        };
        let mut beams: Vec<(u32, BeamState)> = Vec::new();
        for b in elements(n).filter(|c| c.has_tag_name("beam")) {
            let level: u32 = b.attribute("number").unwrap_or("1").parse().unwrap_or(1);
            let state = match b.text().map(str::trim) {
                Some("begin") => BeamState::Start,
                Some("continue") => BeamState::Continue,
                Some("end") => BeamState::Stop,
                Some("forward hook") => BeamState::PartialRight,
                Some("backward hook") => BeamState::PartialLeft,
                other => return Err(bad(format!("beam value {:?}", other.unwrap_or("")))),
            };
            beams.push((level, state));
        }
        beams.sort_by_key(|(l, _)| *l);
        let mut tie_start = false;
        let mut tie_stop = false;
        let ties: Vec<Node> = elements(n).filter(|c| c.has_tag_name("tie")).collect();
        let tied: Vec<Node> = child(n, "notations")
            .map(|x| elements(x).filter(|c| c.has_tag_name("tied")).collect())
            .unwrap_or_default();
        for t in if ties.is_empty() { tied } else { ties } {
            match t.attribute("type") {
                Some("start") => tie_start = true,
                Some("stop") => tie_stop = true,
                Some("continue") => {
                    tie_start = true;
                    tie_stop = true;
                }
                _ => {}
            }
        }
        Ok(Raw {
            onset,
            duration,
            rest,
            pitches,
            stem,
            beams: beams.into_iter().map(|(_, s)| s).collect(),
            tie_start,
            tie_stop,
        })
    }

    /// Order one voice's notes in time, filling gaps with rests.
    fn assemble(&mut self, mut raws: Vec<Raw>, cap: Duration, mi: usize, staff: usize, name: &str) -> Result<Voice, MusicXmlError> {
        raws.sort_by_key(|r| r.onset);
        let mut events = Vec::new();
        let mut t = Duration::ZERO;
        let mut gap = false;
        for r in raws {
            let Some(hole) = r.onset.checked_sub(t) else {
                return Err(MusicXmlError::Content {
                    measure: mi,
                    detail: format!("voice {name} of staff {} overlaps itself", staff + 1),
                });
            };
            if !hole.is_zero() {
                gap = true;
                events.extend(Voice::rests(hole).events);
            }
            t = r.onset + r.duration;
            events.push(if r.rest {
                Event::rest(r.duration)
            } else {
                let mut note = NoteEvent::new(r.pitches, r.duration);
                note.canonicalize();
                note.stem = r.stem;
                note.beams = r.beams;
                note.tie = match (r.tie_start, r.tie_stop) {
                    (true, true) => Some(Tie::Continue),
                    (true, false) => Some(Tie::Start),
                    (false, true) => Some(Tie::Stop),
                    _ => None,
                };
                Event::Note(note)
            });
        }
        match cap.checked_sub(t) {
            None => {
                return Err(MusicXmlError::Content {
                    measure: mi,
                    detail: format!("voice {name} of staff {} runs {t} quarters in a {cap}-quarter measure", staff + 1),
                })
            }
            Some(tail) if !tail.is_zero() => {
                gap = true;
                events.extend(Voice::rests(tail).events);
            }
            _ => {}
        }
        if gap {
            self.warn("forward", Some(mi), format!("gaps in voice {name} of staff {} filled with rests", staff + 1));
        }
        Ok(Voice::new(events))
    }

    /// Drop malformed beam groups and unmatched ties, with a warning each.
    fn repair(&mut self, score: &mut Score) {
        for id in StaffId::BOTH {
            let staff = score.staff_mut(id);
            for (mi, m) in staff.measures.iter_mut().enumerate() {
                for v in &mut m.voices {
                    if let Some((_, detail)) = beam_issue(v) {
                        self.warn("beam", Some(mi), format!("staff {id}: {detail}; beams of the voice removed"));
                        for e in &mut v.events {
                            if let Some(n) = e.as_note_mut() {
                                n.beams.clear();
                            }
                        }
                    }
                }
            }
            for fix in tie_fixes(id, staff) {
                self.warn("tie", Some(fix.measure), format!("staff {id}: {}", fix.detail));
                if let Some(n) = staff.measures[fix.measure].voices[fix.voice].events[fix.event].as_note_mut() {
                    n.tie = fix.replacement;
                }
            }
        }
    }
}

fn current_initial(
    initial: &(Option<Clef>, Option<KeySignature>, Option<TimeSignature>),
    s: usize,
) -> (Clef, KeySignature, TimeSignature) {
    let (c, k, t) = initial;
    (
        c.unwrap_or(if s == 0 { Clef::Treble } else { Clef::Bass }),
        k.unwrap_or_else(KeySignature::natural),
        t.unwrap_or(TimeSignature::common()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::musicxml::emit_musicxml;

    fn doc(measure_body: &str) -> String {
        format!(
            r#"<?xml version="1.0" encoding="UTF-8"?>
<score-partwise version="3.1">
  <part-list><score-part id="P1"><part-name>Piano</part-name></score-part></part-list>
  <part id="P1">
    <measure number="1">
      <attributes>
        <divisions>2</divisions>
        <key><fifths>0</fifths></key>
        <time><beats>4</beats><beat-type>4</beat-type></time>
        <staves>2</staves>
        <clef number="1"><sign>G</sign><line>2</line></clef>
        <clef number="2"><sign>F</sign><line>4</line></clef>
      </attributes>
      {measure_body}
    </measure>
  </part>
</score-partwise>"#
        )
    }

    const MINIMAL: &str = r#"
      <note><pitch><step>C</step><octave>4</octave></pitch><duration>2</duration><voice>1</voice><type>quarter</type><staff>1</staff></note>
      <note><rest/><duration>6</duration><voice>1</voice><staff>1</staff></note>
      <backup><duration>8</duration></backup>
      <note><rest measure="yes"/><duration>8</duration><voice>5</voice><staff>2</staff></note>"#;

    #[test]
    fn minimal_document() {
        let parsed = parse_musicxml(&doc(MINIMAL), &Profile::default()).unwrap();
        assert!(parsed.warnings.is_empty(), "{:?}", parsed.warnings);
        let s = parsed.score;
        assert_eq!(s.measure_count(), 1);
        let rv = &s.right.measures[0].voices;
        assert_eq!(rv.len(), 1);
        assert_eq!(rv[0].events[0], Event::Note(NoteEvent::new(vec!["C4".parse().unwrap()], Duration::QUARTER)));
        assert_eq!(s.left.measures[0].voices, vec![Voice::new(vec![Event::rest(Duration::quarters(4))])]);
    }

    #[test]
    fn dynamics_are_skipped_with_a_warning() {
        let with = format!(
            "<direction placement=\"below\"><direction-type><dynamics><p/></dynamics></direction-type><staff>1</staff></direction>{MINIMAL}"
        );
        let a = parse_musicxml(&doc(MINIMAL), &Profile::default()).unwrap();
        let b = parse_musicxml(&doc(&with), &Profile::default()).unwrap();
        assert_eq!(a.score, b.score);
        assert_eq!(b.warnings.len(), 1);
        assert_eq!(b.warnings[0].element, "dynamics");
        assert_eq!(b.warnings[0].measure, Some(0));
        assert!(matches!(
            parse_musicxml(&doc(&with), &Profile::strict()),
            Err(MusicXmlError::Unsupported { element, .. }) if element == "dynamics"
        ));
    }

    #[test]
    fn chord_elements_merge() {
        let body = r#"
      <note><pitch><step>C</step><octave>4</octave></pitch><duration>8</duration><voice>1</voice><staff>1</staff></note>
      <note><chord/><pitch><step>E</step><octave>4</octave></pitch><duration>8</duration><voice>1</voice><staff>1</staff></note>
      <note><chord/><pitch><step>G</step><octave>4</octave></pitch><duration>8</duration><voice>1</voice><staff>1</staff></note>
      <backup><duration>8</duration></backup>
      <note><rest/><duration>8</duration><voice>5</voice><staff>2</staff></note>"#;
        let s = parse_musicxml(&doc(body), &Profile::default()).unwrap().score;
        let n = s.right.measures[0].voices[0].events[0].as_note().unwrap();
        let names: Vec<String> = n.pitches.iter().map(ToString::to_string).collect();
        assert_eq!(names, ["C4", "E4", "G4"]);
        assert_eq!(s.right.measures[0].voices[0].events.len(), 1);
    }

    #[test]
    fn tie_across_barline_emits_tie_and_tied() {
        let mut s = Score::empty(2, KeySignature::natural(), TimeSignature::common());
        let c4: Pitch = "C4".parse().unwrap();
        s.right.measures[0].voices[0] = Voice::new(vec![
            Event::rest(Duration::quarters(2)),
            NoteEvent::new(vec![c4], Duration::quarters(2)).with_tie(Tie::Start).into(),
        ]);
        s.right.measures[1].voices[0] = Voice::new(vec![
            NoteEvent::new(vec![c4], Duration::quarters(2)).with_tie(Tie::Stop).into(),
            Event::rest(Duration::quarters(2)),
        ]);
        let xml = emit_musicxml(&s).unwrap();
        assert!(xml.contains("<tie type=\"start\"/>") && xml.contains("<tied type=\"start\"/>"));
        assert!(xml.contains("<tie type=\"stop\"/>") && xml.contains("<tied type=\"stop\"/>"));
        let back = parse_musicxml(&xml, &Profile::strict()).unwrap();
        assert_eq!(back.score, s);
        assert!(back.warnings.is_empty());
    }

    #[test]
    fn tied_used_when_tie_absent() {
        let body = r#"
      <note><pitch><step>C</step><octave>4</octave></pitch><duration>4</duration><voice>1</voice><staff>1</staff><notations><tied type="start"/></notations></note>
      <note><pitch><step>C</step><octave>4</octave></pitch><duration>4</duration><voice>1</voice><staff>1</staff><notations><tied type="stop"/></notations></note>
      <backup><duration>8</duration></backup>
      <note><rest/><duration>8</duration><voice>5</voice><staff>2</staff></note>"#;
        let s = parse_musicxml(&doc(body), &Profile::default()).unwrap().score;
        let ties: Vec<_> = s.right.measures[0].voices[0].events.iter().map(|e| e.as_note().unwrap().tie).collect();
        assert_eq!(ties, [Some(Tie::Start), Some(Tie::Stop)]);
    }

    #[test]
    fn empty_score_round_trips() {
        let s = Score::empty(1, KeySignature::natural(), TimeSignature::common());
        let xml = emit_musicxml(&s).unwrap();
        assert_eq!(xml.matches("<rest/>").count(), 2);
        assert_eq!(parse_musicxml(&xml, &Profile::strict()).unwrap().score, s);
    }

    #[test]
    fn hard_errors() {
        let one_staff = doc(MINIMAL).replace("<staves>2</staves>", "<staves>1</staves>");
        assert!(matches!(parse_musicxml(&one_staff, &Profile::default()), Err(MusicXmlError::StaffCount(1))));
        let key7 = doc(MINIMAL).replace("<fifths>0</fifths>", "<fifths>7</fifths>");
        assert!(matches!(parse_musicxml(&key7, &Profile::default()), Err(MusicXmlError::Key { fifths: 7, .. })));
        let cut = doc(MINIMAL).replace("<beat-type>4</beat-type>", "<beat-type>2</beat-type>");
        assert!(matches!(parse_musicxml(&cut, &Profile::default()), Err(MusicXmlError::Time { .. })));
        let alto = doc(MINIMAL).replace("<sign>G</sign>", "<sign>C</sign>");
        assert!(matches!(parse_musicxml(&alto, &Profile::default()), Err(MusicXmlError::Clef { .. })));
        assert!(matches!(parse_musicxml("<score-partwise>", &Profile::default()), Err(MusicXmlError::Xml(_))));
    }

    #[test]
    fn gaps_and_system_marks() {
        let body = r#"
      <print new-system="yes"/>
      <forward><duration>4</duration><voice>1</voice><staff>1</staff></forward>
      <note><pitch><step>D</step><octave>5</octave></pitch><duration>2</duration><voice>1</voice><staff>1</staff></note>
      <backup><duration>6</duration></backup>
      <note><rest/><duration>8</duration><voice>5</voice><staff>2</staff></note>"#;
        let parsed = parse_musicxml(&doc(body), &Profile::default()).unwrap();
        assert!(parsed.system_starts.is_empty());
        let v = &parsed.score.right.measures[0].voices[0];
        assert_eq!(v.total(), Duration::quarters(4));
        assert_eq!(v.events.len(), 3);
        assert_eq!(parsed.warnings.len(), 1);
    }
}
