//! MusicXML interchange for two-staff piano scores.
//!
//! Only part-wise documents with a single two-staff part are read. Elements
//! outside the modeled subset (dynamics, slurs, lyrics, layout, ...) are
//! skipped with a [`Warning`] or rejected, depending on [`Profile`].

mod emit;
mod parse;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::notation::{Score, ValidationReport};

pub use emit::emit_musicxml;
pub use parse::parse_musicxml;

/// Divisions per quarter written by [`emit_musicxml`].
pub const DIVISIONS: u32 = 24;

/// First voice number used for the left staff on emit.
pub const LEFT_VOICE_BASE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownPolicy {
    #[default]
    Warn,
    Fail,
}

/// Parsing options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Profile {
    pub unknown: UnknownPolicy,
}

impl Profile {
    pub fn strict() -> Profile {
        Profile { unknown: UnknownPolicy::Fail }
    }
}

/// Something the parser dropped or repaired. `measure` is zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warning {
    pub element: String,
    pub measure: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.element)?;
        if let Some(m) = self.measure {
            write!(f, " in measure {}", m + 1)?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub score: Score,
    pub warnings: Vec<Warning>,
    /// Zero-based indices of measures that begin a new system, from
    /// `<print new-system="yes">`. Measure 0 is never listed.
    pub system_starts: Vec<usize>,
}

#[derive(Debug, Clone, Error)]
pub enum MusicXmlError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("unsupported document: {0}")]
    Structure(String),
    #[error("expected 2 staves, found {0}")]
    StaffCount(usize),
    #[error("measure {}: key signature with {fifths} fifths is outside the vocabulary", .measure + 1)]
    Key { measure: usize, fifths: i32 },
    #[error("measure {}: time signature {text} is outside the vocabulary", .measure + 1)]
    Time { measure: usize, text: String },
    #[error("measure {}: clef {text} is not treble or bass", .measure + 1)]
    Clef { measure: usize, text: String },
    #[error("measure {}: {detail}", .measure + 1)]
    Content { measure: usize, detail: String },
    #[error("measure {}: element <{element}> is outside the supported subset", .measure.map_or(0, |m| m + 1))]
    Unsupported { element: String, measure: Option<usize> },
    #[error("score is not well-formed ({} issue(s), first: {})", .0.issues.len(), .0.issues[0])]
    InvalidScore(ValidationReport),
}
