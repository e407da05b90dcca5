//! Token representations of two-staff piano scores.
//!
//! * [`notation`]: the score model and its well-formedness check.
//! * [`tokens`]: notation-level tokens (regular and concatenated forms),
//!   with a recovering decoder and a grammar validator.
//! * [`note_level`]: down-conversion to sounding notes, REMI-style tokens
//!   with beat markers, timing perturbation and MIDI export.
//! * [`musicxml`]: reading and writing MusicXML.
//! * [`metric`]: note-wise comparison of a generated score with a reference.
//! * [`corpus`]: segmentation, song-wise splits and paired token files.
//! * [`synth`]: random well-formed scores.

pub mod corpus;
pub mod metric;
pub mod musicxml;
pub mod notation;
pub mod note_level;
pub mod synth;
pub mod tokens;

/// Note-level sequence on the tick grid.
pub type GridSeq = note_level::NoteLevelSeq<i64>;
/// Note-level sequence after timing perturbation.
pub type PerturbedSeq = note_level::NoteLevelSeq<f64>;

pub use notation::{Duration, Pitch, Score};
pub use tokens::{detokenize, tokenize_score, validate_tokens, Form};
