use std::fmt::Write;

use super::{MusicXmlError, DIVISIONS, LEFT_VOICE_BASE};
use crate::notation::{
    validate_score, Alter, BeamState, Clef, Duration, Event, KeySignature, Measure, NoteEvent, Score, StaffId,
    Stem, Tie, TimeSignature,
};

/// Write a well-formed score as a part-wise MusicXML document.
pub fn emit_musicxml(score: &Score) -> Result<String, MusicXmlError> {
    let report = validate_score(score);
    if !report.is_empty() {
        return Err(MusicXmlError::InvalidScore(report));
    }
    let mut out = String::new();
    out.push_str(concat!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n",
        "<!DOCTYPE score-partwise PUBLIC \"-//Recordare//DTD MusicXML 3.1 Partwise//EN\" ",
        "\"http://www.musicxml.org/dtds/partwise.dtd\">\n",
        "<score-partwise version=\"3.1\">\n",
        "  <part-list>\n",
        "    <score-part id=\"P1\"><part-name>Piano</part-name></score-part>\n",
        "  </part-list>\n",
        "  <part id=\"P1\">\n",
    ));
    let meter = score.right.attributes();
    for (mi, attrs) in meter.iter().enumerate().take(score.measure_count()) {
        let measures = [&score.right.measures[mi], &score.left.measures[mi]];
        writeln!(out, "    <measure number=\"{}\">", mi + 1).unwrap();
        if mi == 0 {
            let initial = [score.right.initial(), score.left.initial()];
            let m = |i: usize| Measure {
                clef: Some(initial[i].clef),
                key: Some(initial[i].key),
                time: Some(initial[i].time),
                voices: Vec::new(),
            };
            write_attributes(&mut out, [&m(0), &m(1)], true);
        } else if measures.iter().any(|m| m.has_changes()) {
            write_attributes(&mut out, measures, false);
        }
        let cap = attrs.time;
        let cap_divs = ticks(crate::notation::measure_capacity(cap));
        let mut first = true;
        for (si, id) in StaffId::BOTH.into_iter().enumerate() {
            for (vi, voice) in measures[si].voices.iter().enumerate() {
                if !first {
                    writeln!(out, "      <backup><duration>{cap_divs}</duration></backup>").unwrap();
                }
                first = false;
                let number = match id {
                    StaffId::Right => vi + 1,
                    StaffId::Left => vi + LEFT_VOICE_BASE,
                };
                for event in &voice.events {
                    write_event(&mut out, event, number, si + 1);
                }
            }
        }
        out.push_str("    </measure>\n");
    }
    out.push_str("  </part>\n</score-partwise>\n");
    Ok(out)
}

fn ticks(d: Duration) -> u32 {
    d.ticks().expect("validated durations lie on the tick grid")
}

fn write_attributes(out: &mut String, measures: [&Measure; 2], initial: bool) {
    out.push_str("      <attributes>\n");
    if initial {
        writeln!(out, "        <divisions>{DIVISIONS}</divisions>").unwrap();
    }
    for (i, m) in measures.iter().enumerate() {
        if let Some(k) = m.key {
            write_key(out, i + 1, k);
        }
    }
    for (i, m) in measures.iter().enumerate() {
        if let Some(t) = m.time {
            write_time(out, i + 1, t);
        }
    }
    if initial {
        out.push_str("        <staves>2</staves>\n");
    }
    for (i, m) in measures.iter().enumerate() {
        if let Some(c) = m.clef {
            let (sign, line) = match c {
                Clef::Treble => ("G", 2),
                Clef::Bass => ("F", 4),
            };
            writeln!(out, "        <clef number=\"{}\"><sign>{sign}</sign><line>{line}</line></clef>", i + 1).unwrap();
        }
    }
    out.push_str("      </attributes>\n");
}

fn write_key(out: &mut String, staff: usize, k: KeySignature) {
    writeln!(out, "        <key number=\"{staff}\"><fifths>{}</fifths></key>", k.fifths()).unwrap();
}

fn write_time(out: &mut String, staff: usize, t: TimeSignature) {
    writeln!(
        out,
        "        <time number=\"{staff}\"><beats>{}</beats><beat-type>{}</beat-type></time>",
        t.beats(),
        t.beat_type()
    )
    .unwrap();
}

/// Note type name, dot count and whether a triplet bracket applies.
fn notation_type(d: Duration) -> Option<(&'static str, u8, bool)> {
    const TYPES: [(&str, u32, u32); 7] = [
        ("whole", 4, 1),
        ("half", 2, 1),
        ("quarter", 1, 1),
        ("eighth", 1, 2),
        ("16th", 1, 4),
        ("32nd", 1, 8),
        ("64th", 1, 16),
    ];
    for (name, n, m) in TYPES {
        for (dots, triplet, (mn, md)) in [(0, false, (1, 1)), (1, false, (3, 2)), (2, false, (7, 4)), (0, true, (2, 3))] {
            if Duration::new(n * mn, m * md) == Some(d) {
                return Some((name, dots, triplet));
            }
        }
    }
    None
}

fn alter_value(a: Alter) -> Option<i32> {
    match a {
        Alter::Natural => None,
        other => Some(other.semitones()),
    }
}

fn write_event(out: &mut String, event: &Event, voice: usize, staff: usize) {
    let d = event.duration();
    let divs = ticks(d) * DIVISIONS / crate::notation::TICKS_PER_QUARTER;
    let kind = notation_type(d);
    let tail = |out: &mut String, stem: Option<Stem>| {
        if let Some((name, dots, triplet)) = kind {
            writeln!(out, "        <type>{name}</type>").unwrap();
            for _ in 0..dots {
                out.push_str("        <dot/>\n");
            }
            if triplet {
                out.push_str(
                    "        <time-modification><actual-notes>3</actual-notes><normal-notes>2</normal-notes></time-modification>\n",
                );
            }
        }
        if let Some(s) = stem {
            writeln!(out, "        <stem>{}</stem>", s.name()).unwrap();
        }
        writeln!(out, "        <staff>{staff}</staff>").unwrap();
    };
    match event {
        Event::Rest(_) => {
            out.push_str("      <note>\n        <rest/>\n");
            writeln!(out, "        <duration>{divs}</duration>\n        <voice>{voice}</voice>").unwrap();
            tail(out, None);
            out.push_str("      </note>\n");
        }
        Event::Note(n) => {
            for (pi, p) in n.pitches.iter().enumerate() {
                out.push_str("      <note>\n");
                if pi > 0 {
                    out.push_str("        <chord/>\n");
                }
                write!(out, "        <pitch><step>{}</step>", p.step().letter()).unwrap();
                if let Some(a) = alter_value(p.alter()) {
                    write!(out, "<alter>{a}</alter>").unwrap();
                }
                writeln!(out, "<octave>{}</octave></pitch>", p.octave()).unwrap();
                writeln!(out, "        <duration>{divs}</duration>").unwrap();
                let ties = tie_types(n);
                for t in ties {
                    writeln!(out, "        <tie type=\"{t}\"/>").unwrap();
                }
                writeln!(out, "        <voice>{voice}</voice>").unwrap();
                tail(out, n.stem);
                write_beams(out, &n.beams);
                if !ties.is_empty() {
                    out.push_str("        <notations>");
                    for t in ties {
                        write!(out, "<tied type=\"{t}\"/>").unwrap();
                    }
                    out.push_str("</notations>\n");
                }
                out.push_str("      </note>\n");
            }
        }
    }
}

fn tie_types(n: &NoteEvent) -> &'static [&'static str] {
    match n.tie {
        None => &[],
        Some(Tie::Start) => &["start"],
        Some(Tie::Stop) => &["stop"],
        Some(Tie::Continue) => &["stop", "start"],
    }
}

fn write_beams(out: &mut String, beams: &[BeamState]) {
    for (i, b) in beams.iter().enumerate() {
        let value = match b {
            BeamState::Start => "begin",
            BeamState::Continue => "continue",
            BeamState::Stop => "end",
            BeamState::PartialRight => "forward hook",
            BeamState::PartialLeft => "backward hook",
        };
        writeln!(out, "        <beam number=\"{}\">{value}</beam>", i + 1).unwrap();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_names() {
        assert_eq!(notation_type(Duration::quarters(4)), Some(("whole", 0, false)));
        assert_eq!(notation_type(Duration::new(3, 2).unwrap()), Some(("quarter", 1, false)));
        assert_eq!(notation_type(Duration::new(7, 2).unwrap()), Some(("half", 2, false)));
        assert_eq!(notation_type(Duration::new(1, 3).unwrap()), Some(("eighth", 0, true)));
        assert_eq!(notation_type(Duration::new(1, 24).unwrap()), Some(("64th", 0, true)));
        assert_eq!(notation_type(Duration::new(5, 4).unwrap()), None);
    }

    #[test]
    fn all_vocabulary_lengths_have_a_type() {
        for d in Duration::vocabulary() {
            assert!(notation_type(d).is_some(), "{d}");
        }
    }
}
