use super::{Form, NoteAttr, ScoreToken};
use crate::notation::{BeamState, Clef, Duration, KeySignature, Pitch, StaffId, Stem, Tie, TimeSignature, MAX_BEAMS};

/// Every beam list of one to five levels, shortest first.
fn beam_lists() -> Vec<Vec<BeamState>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<BeamState>> = vec![Vec::new()];
    for _ in 0..MAX_BEAMS {
        layer = layer
            .iter()
            .flat_map(|prefix| {
                BeamState::ALL.into_iter().map(move |b| {
                    let mut v = prefix.clone();
                    v.push(b);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// The closed token inventory of one form, in a fixed order.
pub fn vocabulary(form: Form) -> Vec<String> {
    let mut toks: Vec<ScoreToken> = vec![
        ScoreToken::Staff(StaffId::Right),
        ScoreToken::Staff(StaffId::Left),
        ScoreToken::Bar,
    ];
    toks.extend(Clef::ALL.map(ScoreToken::Clef));
    toks.extend(KeySignature::all().map(ScoreToken::Key));
    toks.extend(TimeSignature::all().map(ScoreToken::Time));
    toks.extend([ScoreToken::VoiceOpen, ScoreToken::VoiceClose, ScoreToken::Rest]);
    toks.extend(Pitch::all().map(ScoreToken::Note));
    let lens = Duration::vocabulary();
    match form {
        Form::Regular => {
            toks.extend(lens.into_iter().map(ScoreToken::Len));
            toks.extend(Stem::ALL.map(ScoreToken::Stem));
            toks.extend(beam_lists().into_iter().map(ScoreToken::Beam));
        }
        Form::Concatenated => {
            let beams = beam_lists();
            let stems = [None, Some(Stem::Up), Some(Stem::Down)];
            for len in lens {
                for stem in stems {
                    toks.push(ScoreToken::Attr(NoteAttr { len, stem, beams: Vec::new() }));
                    for b in &beams {
                        toks.push(ScoreToken::Attr(NoteAttr { len, stem, beams: b.clone() }));
                    }
                }
            }
        }
    }
    toks.extend(Tie::ALL.map(ScoreToken::Tie));
    toks.into_iter().map(|t| t.to_string()).collect()
}
