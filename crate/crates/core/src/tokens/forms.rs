use thiserror::Error;

use super::{NoteAttr, ScoreToken, TokenError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormError {
    #[error("token {index} `{token}`: malformed attr token ({reason})")]
    MalformedAttr { index: usize, token: String, reason: &'static str },
    #[error("token {index} `{token}` belongs to the other form")]
    WrongForm { index: usize, token: String },
}

/// Fold every `len [stem] [beam]` run into one `attr_*` token. Other tokens,
/// including ties and unknown strings, pass through unchanged.
pub fn concat_form<S: AsRef<str>>(tokens: &[S]) -> Result<Vec<String>, FormError> {
    let parsed: Vec<Option<ScoreToken>> = tokens.iter().map(|t| t.as_ref().parse().ok()).collect();
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        match &parsed[i] {
            Some(ScoreToken::Len(len)) => {
                let mut attr = NoteAttr { len: *len, stem: None, beams: Vec::new() };
                i += 1;
                if let Some(Some(ScoreToken::Stem(s))) = parsed.get(i) {
                    attr.stem = Some(*s);
                    i += 1;
                }
                if let Some(Some(ScoreToken::Beam(b))) = parsed.get(i) {
                    attr.beams = b.clone();
                    i += 1;
                }
                out.push(ScoreToken::Attr(attr).to_string());
            }
            Some(ScoreToken::Attr(_)) => {
                return Err(FormError::WrongForm { index: i, token: tokens[i].as_ref().to_string() });
            }
            _ => {
                out.push(tokens[i].as_ref().to_string());
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Unfold every `attr_*` token into `len [stem] [beam]`.
pub fn expand_form<S: AsRef<str>>(tokens: &[S]) -> Result<Vec<String>, FormError> {
    let mut out = Vec::with_capacity(tokens.len() * 3 / 2);
    for (index, t) in tokens.iter().enumerate() {
        let t = t.as_ref();
        match t.parse::<ScoreToken>() {
            Ok(ScoreToken::Attr(a)) => {
                out.push(ScoreToken::Len(a.len).to_string());
                if let Some(s) = a.stem {
                    out.push(ScoreToken::Stem(s).to_string());
                }
                if !a.beams.is_empty() {
                    out.push(ScoreToken::Beam(a.beams).to_string());
                }
            }
            Ok(ScoreToken::Len(_) | ScoreToken::Stem(_) | ScoreToken::Beam(_)) => {
                return Err(FormError::WrongForm { index, token: t.to_string() });
            }
            Err(TokenError::MalformedAttr(token, reason)) => {
                return Err(FormError::MalformedAttr { index, token, reason });
            }
            _ => out.push(t.to_string()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(s: &str) -> Vec<&str> {
        s.split(' ').collect()
    }

    #[test]
    fn folds_note_attributes() {
        let out = concat_form(&split("note_C4 len_1/2 stem_up beam_start tie_start")).unwrap();
        assert_eq!(out, split("note_C4 attr_1/2_up_start tie_start"));
        assert_eq!(expand_form(&out).unwrap(), split("note_C4 len_1/2 stem_up beam_start tie_start"));
    }

    #[test]
    fn rest_case_round_trips() {
        let reg = split("rest len_1/4");
        let cat = concat_form(&reg).unwrap();
        assert_eq!(cat, split("rest attr_1/4"));
        assert_eq!(expand_form(&cat).unwrap(), reg);
    }

    #[test]
    fn beam_without_stem() {
        let reg = split("note_C4 len_1/4 beam_start_start");
        let cat = concat_form(&reg).unwrap();
        assert_eq!(cat, split("note_C4 attr_1/4_start_start"));
        assert_eq!(expand_form(&cat).unwrap(), reg);
    }

    #[test]
    fn errors_name_the_token() {
        let err = expand_form(&split("note_C4 attr_1/2_up_wobble")).unwrap_err();
        assert!(matches!(&err, FormError::MalformedAttr { index: 1, token, .. } if token == "attr_1/2_up_wobble"));
        assert!(matches!(expand_form(&split("len_1")), Err(FormError::WrongForm { index: 0, .. })));
        assert!(matches!(concat_form(&split("rest attr_1")), Err(FormError::WrongForm { index: 1, .. })));
    }
}
