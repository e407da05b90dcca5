use thiserror::Error;

use super::{Form, NoteAttr, ScoreToken, TokenSeq};
use crate::notation::{validate_score, Event, Score, Staff, StaffId, ValidationReport};

#[derive(Debug, Clone, Error)]
pub enum TokenizeError {
    #[error("score is not well-formed ({} issue(s), first: {})", .0.issues.len(), .0.issues[0])]
    InvalidScore(ValidationReport),
    #[error("duration {duration} in staff {staff} measure {measure} is outside the token vocabulary")]
    Duration {
        staff: StaffId,
        measure: usize,
        duration: crate::notation::Duration,
    },
}

/// Serialize a well-formed score into tokens of the requested form.
pub fn tokenize_score(score: &Score, form: Form) -> Result<TokenSeq, TokenizeError> {
    let report = validate_score(score);
    if !report.is_empty() {
        return Err(TokenizeError::InvalidScore(report));
    }
    let mut tokens = Vec::new();
    for id in StaffId::BOTH {
        encode_staff(id, score.staff(id), form, &mut tokens)?;
    }
    Ok(TokenSeq { form, tokens })
}

fn encode_staff(id: StaffId, staff: &Staff, form: Form, out: &mut Vec<ScoreToken>) -> Result<(), TokenizeError> {
    out.push(ScoreToken::Staff(id));
    out.push(ScoreToken::Clef(staff.clef));
    out.push(ScoreToken::Key(staff.key));
    out.push(ScoreToken::Time(staff.time));
    for (mi, measure) in staff.measures.iter().enumerate() {
        out.extend(measure.clef.map(ScoreToken::Clef));
        out.extend(measure.key.map(ScoreToken::Key));
        out.extend(measure.time.map(ScoreToken::Time));
        for voice in &measure.voices {
            out.push(ScoreToken::VoiceOpen);
            for event in &voice.events {
                let duration = event.duration();
                if !duration.in_vocabulary() {
                    return Err(TokenizeError::Duration { staff: id, measure: mi, duration });
                }
                match event {
                    Event::Rest(_) => {
                        out.push(ScoreToken::Rest);
                        out.push(match form {
                            Form::Regular => ScoreToken::Len(duration),
                            Form::Concatenated => ScoreToken::Attr(NoteAttr { len: duration, stem: None, beams: Vec::new() }),
                        });
                    }
                    Event::Note(n) => {
                        out.extend(n.pitches.iter().copied().map(ScoreToken::Note));
                        match form {
                            Form::Regular => {
                                out.push(ScoreToken::Len(duration));
                                out.extend(n.stem.map(ScoreToken::Stem));
                                if !n.beams.is_empty() {
                                    out.push(ScoreToken::Beam(n.beams.clone()));
                                }
                            }
                            Form::Concatenated => out.push(ScoreToken::Attr(NoteAttr {
                                len: duration,
                                stem: n.stem,
                                beams: n.beams.clone(),
                            })),
                        }
                        out.extend(n.tie.map(ScoreToken::Tie));
                    }
                }
            }
            out.push(ScoreToken::VoiceClose);
        }
        out.push(ScoreToken::Bar);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::*;

    fn single(event: Event) -> Score {
        let mut s = Score::empty(1, KeySignature::natural(), TimeSignature::common());
        let mut events = vec![event.clone()];
        let fill = Duration::quarters(4) - event.duration();
        events.extend(Voice::rests(fill).events);
        s.right.measures[0].voices = vec![Voice::new(events)];
        s
    }

    fn voice_body(seq: &TokenSeq) -> String {
        let line = seq.to_line();
        let start = line.find("<voice>").unwrap() + "<voice> ".len();
        line[start..].split(" rest").next().unwrap().to_string()
    }

    fn eighth_c4() -> NoteEvent {
        NoteEvent::new(vec!["C4".parse().unwrap()], Duration::new(1, 2).unwrap())
            .with_stem(Stem::Up)
            .with_beams(vec![BeamState::Start])
    }

    #[test]
    fn note_token_order() {
        // The lone beam start is malformed as a score, so build the voice with its stop partner.
        let mut s = single(Event::rest(Duration::quarters(1)));
        let mut stop = eighth_c4();
        stop.beams = vec![BeamState::Stop];
        s.right.measures[0].voices[0].events = vec![eighth_c4().into(), stop.into(), Event::rest(Duration::quarters(3))];
        let reg = tokenize_score(&s, Form::Regular).unwrap();
        assert!(voice_body(&reg).starts_with("note_C4 len_1/2 stem_up beam_start note_C4"));
        let cat = tokenize_score(&s, Form::Concatenated).unwrap();
        assert!(voice_body(&cat).starts_with("note_C4 attr_1/2_up_start note_C4"));
    }

    #[test]
    fn rest_tokens() {
        let s = single(Event::rest(Duration::new(1, 4).unwrap()));
        let line = tokenize_score(&s, Form::Regular).unwrap().to_line();
        assert!(line.contains("<voice> rest len_1/4 rest"), "{line}");
        let line = tokenize_score(&s, Form::Concatenated).unwrap().to_line();
        assert!(line.contains("<voice> rest attr_1/4 rest"), "{line}");
    }

    #[test]
    fn two_voices_in_succession() {
        let mut s = Score::empty(1, KeySignature::natural(), TimeSignature::common());
        s.right.measures[0].voices.push(Voice::rests(Duration::quarters(4)));
        let line = tokenize_score(&s, Form::Regular).unwrap().to_line();
        assert_eq!(
            line,
            "R clef_treble key_natural time_4/4 <voice> rest len_4 </voice> <voice> rest len_4 </voice> bar \
             L clef_bass key_natural time_4/4 <voice> rest len_4 </voice> bar"
        );
    }

    #[test]
    fn changes_follow_bar() {
        let mut s = Score::empty(2, KeySignature::natural(), TimeSignature::common());
        s.right.measures[1].key = Some(KeySignature::flats(2).unwrap());
        s.right.measures[1].clef = Some(Clef::Bass);
        let line = tokenize_score(&s, Form::Regular).unwrap().to_line();
        assert!(line.contains("bar clef_bass key_flat_2 <voice>"), "{line}");
    }

    #[test]
    fn rejects_invalid_and_off_vocabulary() {
        let mut s = single(Event::rest(Duration::quarters(1)));
        s.left.measures.clear();
        assert!(matches!(tokenize_score(&s, Form::Regular), Err(TokenizeError::InvalidScore(_))));

        let mut s = Score::empty(1, KeySignature::natural(), TimeSignature::common());
        s.right.measures[0].voices = vec![Voice::new(vec![Event::rest(Duration::new(5, 2).unwrap()), Event::rest(Duration::new(3, 2).unwrap())])];
        assert!(matches!(tokenize_score(&s, Form::Regular), Err(TokenizeError::Duration { .. })));
    }
}
