//! Notation-level score tokens.
//!
//! A score becomes one flat sequence: `R`, the right staff's clef, key and
//! time, its measures (attribute changes, `<voice> ... </voice>` groups,
//! `bar`), then `L` and the left staff likewise. Notes are `note_*` tokens
//! (several for a chord) followed by `len_*` and the optional `stem_*`,
//! `beam_*` and `tie_*` tokens. The concatenated form folds len, stem and
//! beam into a single `attr_*` token.

mod decode;
mod encode;
mod forms;
mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::notation::{
    BeamState, Clef, Duration, KeyKind, KeySignature, Pitch, StaffId, Stem, Tie, TimeSignature, MAX_BEAMS,
};

pub use decode::{detokenize, validate_tokens, FormatError, FormatErrorKind, FormatErrorReport};
pub use encode::{tokenize_score, TokenizeError};
pub use forms::{concat_form, expand_form, FormError};
pub use vocab::vocabulary;

/// Which of the two score token layouts a sequence uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    #[default]
    Regular,
    Concatenated,
}

impl FromStr for Form {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "regular" => Ok(Form::Regular),
            "concatenated" | "concat" => Ok(Form::Concatenated),
            _ => Err(format!("unknown form `{s}` (expected regular or concatenated)")),
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Form::Regular => "regular",
            Form::Concatenated => "concatenated",
        })
    }
}

/// Duration, stem and beams folded into one token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NoteAttr {
    pub len: Duration,
    pub stem: Option<Stem>,
    pub beams: Vec<BeamState>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ScoreToken {
    Staff(StaffId),
    Bar,
    Clef(Clef),
    Key(KeySignature),
    Time(TimeSignature),
    VoiceOpen,
    VoiceClose,
    Rest,
    Note(Pitch),
    Len(Duration),
    Stem(Stem),
    Beam(Vec<BeamState>),
    Tie(Tie),
    Attr(NoteAttr),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("unknown token `{0}`")]
    Unknown(String),
    #[error("malformed attr token `{0}`: {1}")]
    MalformedAttr(String, &'static str),
}

fn join_beams(f: &mut fmt::Formatter<'_>, beams: &[BeamState]) -> fmt::Result {
    for b in beams {
        write!(f, "_{}", b.name())?;
    }
    Ok(())
}

impl fmt::Display for ScoreToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreToken::Staff(s) => write!(f, "{s}"),
            ScoreToken::Bar => f.write_str("bar"),
            ScoreToken::Clef(c) => write!(f, "clef_{}", c.name()),
            ScoreToken::Key(k) => match k.kind() {
                KeyKind::Natural => f.write_str("key_natural"),
                KeyKind::Sharp => write!(f, "key_sharp_{}", k.count()),
                KeyKind::Flat => write!(f, "key_flat_{}", k.count()),
            },
            ScoreToken::Time(t) => write!(f, "time_{t}"),
            ScoreToken::VoiceOpen => f.write_str("<voice>"),
            ScoreToken::VoiceClose => f.write_str("</voice>"),
            ScoreToken::Rest => f.write_str("rest"),
            ScoreToken::Note(p) => write!(f, "note_{p}"),
            ScoreToken::Len(d) => write!(f, "len_{d}"),
            ScoreToken::Stem(s) => write!(f, "stem_{}", s.name()),
            ScoreToken::Beam(b) => {
                f.write_str("beam")?;
                join_beams(f, b)
            }
            ScoreToken::Tie(t) => write!(f, "tie_{}", t.name()),
            ScoreToken::Attr(a) => {
                write!(f, "attr_{}", a.len)?;
                if let Some(s) = a.stem {
                    write!(f, "_{}", s.name())?;
                }
                join_beams(f, &a.beams)
            }
        }
    }
}

fn parse_beams(fields: &[&str]) -> Option<Vec<BeamState>> {
    if fields.is_empty() || fields.len() > MAX_BEAMS {
        return None;
    }
    fields.iter().map(|s| BeamState::from_name(s)).collect()
}

fn parse_vocab_len(s: &str) -> Option<Duration> {
    s.parse::<Duration>().ok().filter(Duration::in_vocabulary)
}

impl FromStr for ScoreToken {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || TokenError::Unknown(s.to_string());
        let tok = match s {
            "R" => ScoreToken::Staff(StaffId::Right),
            "L" => ScoreToken::Staff(StaffId::Left),
            "bar" => ScoreToken::Bar,
            "<voice>" => ScoreToken::VoiceOpen,
            "</voice>" => ScoreToken::VoiceClose,
            "rest" => ScoreToken::Rest,
            "key_natural" => ScoreToken::Key(KeySignature::natural()),
            "clef_treble" => ScoreToken::Clef(Clef::Treble),
            "clef_bass" => ScoreToken::Clef(Clef::Bass),
            _ => {
                let (head, tail) = s.split_once('_').ok_or_else(unknown)?;
                match head {
                    "key" => {
                        let (kind, n) = tail.split_once('_').ok_or_else(unknown)?;
                        let n: u8 = match n {
                            "1" | "2" | "3" | "4" | "5" | "6" => n.parse().unwrap(),
                            _ => return Err(unknown()),
                        };
                        ScoreToken::Key(match kind {
                            "sharp" => KeySignature::sharps(n),
                            "flat" => KeySignature::flats(n),
                            _ => return Err(unknown()),
                        }.map_err(|_| unknown())?)
                    }
                    "time" => {
                        let (b, t) = tail.split_once('/').ok_or_else(unknown)?;
                        let b: u32 = b.parse().map_err(|_| unknown())?;
                        let t: u32 = t.parse().map_err(|_| unknown())?;
                        let ts = TimeSignature::new(b, t).map_err(|_| unknown())?;
                        if ts.to_string() != tail {
                            return Err(unknown());
                        }
                        ScoreToken::Time(ts)
                    }
                    "note" => ScoreToken::Note(tail.parse().map_err(|_| unknown())?),
                    "len" => ScoreToken::Len(parse_vocab_len(tail).ok_or_else(unknown)?),
                    "stem" => ScoreToken::Stem(match tail {
                        "up" => Stem::Up,
                        "down" => Stem::Down,
                        _ => return Err(unknown()),
                    }),
                    "beam" => {
                        let fields: Vec<&str> = tail.split('_').collect();
                        ScoreToken::Beam(parse_beams(&fields).ok_or_else(unknown)?)
                    }
                    "tie" => ScoreToken::Tie(Tie::ALL.into_iter().find(|t| t.name() == tail).ok_or_else(unknown)?),
                    "attr" => ScoreToken::Attr(parse_attr(s, tail)?),
                    _ => return Err(unknown()),
                }
            }
        };
        Ok(tok)
    }
}

fn parse_attr(whole: &str, tail: &str) -> Result<NoteAttr, TokenError> {
    let bad = |why| TokenError::MalformedAttr(whole.to_string(), why);
    let fields: Vec<&str> = tail.split('_').collect();
    let len = parse_vocab_len(fields[0]).ok_or_else(|| bad("first field must be a vocabulary duration"))?;
    let mut rest = &fields[1..];
    let stem = match rest.first() {
        Some(&"up") => Some(Stem::Up),
        Some(&"down") => Some(Stem::Down),
        _ => None,
    };
    if stem.is_some() {
        rest = &rest[1..];
    }
    let beams = if rest.is_empty() {
        Vec::new()
    } else {
        if rest.len() > MAX_BEAMS {
            return Err(bad("more than five beam fields"));
        }
        parse_beams(rest).ok_or_else(|| bad("unrecognized beam field"))?
    };
    Ok(NoteAttr { len, stem, beams })
}

/// A tokenized score in one form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub form: Form,
    pub tokens: Vec<ScoreToken>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn strings(&self) -> Vec<String> {
        self.tokens.iter().map(ToString::to_string).collect()
    }

    /// Space-separated line, the on-disk token format.
    pub fn to_line(&self) -> String {
        self.strings().join(" ")
    }
}

/// Split one line of a token file into tokens.
pub fn split_line(line: &str) -> Vec<&str> {
    line.split_ascii_whitespace().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering_round_trips() {
        for s in [
            "R", "L", "bar", "clef_treble", "clef_bass", "key_sharp_2", "key_flat_6", "key_natural",
            "time_4/4", "time_12/8", "<voice>", "</voice>", "rest", "note_C#4", "note_Bbb0", "len_1/2",
            "len_4", "stem_up", "beam_start_continue", "beam_partial-left", "tie_stop",
            "attr_1/2_up_start", "attr_1/4", "attr_3/4_down", "attr_1/8_start_start_partial-right",
        ] {
            let t: ScoreToken = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
    }

    #[test]
    fn rejects_outside_vocabulary() {
        for s in [
            "key_sharp_7", "key_sharp_0", "key_natural_0", "time_2/2", "time_04/4", "len_1/16", "len_2/4",
            "note_H4", "beam_", "beam_start_start_start_start_start_start", "tie_begin", "stem_none",
            "clef_alto", "r", "voice", "",
        ] {
            assert!(matches!(s.parse::<ScoreToken>(), Err(TokenError::Unknown(_))), "{s}");
        }
    }

    #[test]
    fn malformed_attr_is_typed() {
        for s in ["attr_", "attr_up", "attr_1/2_up_sideways", "attr_1/2_start_stop_stop_stop_stop_stop"] {
            assert!(matches!(s.parse::<ScoreToken>(), Err(TokenError::MalformedAttr(..))), "{s}");
        }
    }
}
