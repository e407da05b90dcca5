//! Random well-formed scores.
//!
//! Used for property tests, benchmarks and synthetic corpora. Rhythms are
//! drawn cell by cell from fixed tables so every measure fills exactly, beams
//! follow the flag count of each note inside a beat group, and ties join
//! adjacent notes of one voice stream (across barlines too).

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::notation::{
    measure_capacity, Alter, BeamState, Clef, Duration, Event, KeySignature, Measure, NoteEvent, Pitch, Score, Staff,
    StaffId, Step, Stem, Tie, TimeSignature, Voice, MAX_OCTAVE,
};

/// Rhythm cells by span length in ticks.
const VARIED_CELLS: &[(u32, &[&[u32]])] = &[
    (6, &[&[6], &[3, 3], &[2, 2, 2], &[1, 1, 1, 3]]),
    (12, &[&[12], &[6, 6], &[9, 3], &[4, 4, 4], &[3, 3, 6], &[6, 3, 3], &[3, 3, 3, 3], &[2, 2, 2, 6], &[8, 4]]),
    (18, &[&[18], &[6, 6, 6], &[12, 6], &[9, 9]]),
    (
        24,
        &[
            &[24], &[12, 12], &[18, 6], &[6, 18], &[6, 6, 12], &[12, 6, 6], &[6, 6, 6, 6], &[8, 8, 8],
            &[4, 4, 4, 4, 4, 4], &[3, 3, 3, 3, 3, 3, 3, 3], &[21, 3], &[9, 3, 12], &[16, 8], &[2, 2, 2, 2, 2, 2, 12],
            &[1, 1, 1, 3, 6, 12],
        ],
    ),
    (36, &[&[36], &[12, 12, 12], &[18, 6, 12], &[24, 12], &[12, 24]]),
    (48, &[&[48], &[42, 6], &[36, 12], &[16, 16, 16], &[32, 16]]),
    (72, &[&[72], &[36, 36], &[48, 24], &[24, 48]]),
    (96, &[&[96], &[84, 12], &[64, 32], &[32, 32, 32], &[48, 48]]),
];

const POPULAR_CELLS: &[(u32, &[&[u32]])] = &[
    (6, &[&[3, 3], &[6]]),
    (12, &[&[6, 6], &[6, 6], &[12]]),
    (18, &[&[6, 6, 6], &[12, 6]]),
    (24, &[&[12, 12], &[12, 12], &[6, 6, 6, 6], &[18, 6], &[6, 6, 12], &[12, 6, 6], &[8, 8, 8], &[24]]),
    (36, &[&[12, 12, 12], &[18, 6, 12], &[12, 12, 12]]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhythmStyle {
    /// Every notated length, triplets and dotted values included.
    Varied,
    /// Running eighths and sixteenths, nearly all beamed.
    Popular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub min_measures: usize,
    pub max_measures: usize,
    pub times: Vec<TimeSignature>,
    pub rhythm: RhythmStyle,
    /// Chance that a staff's measure has a second voice.
    pub second_voice: f64,
    pub chord: f64,
    pub rest: f64,
    pub tie: f64,
    /// Chance that a note carries a stem direction.
    pub stem: f64,
    /// Chance of an attribute change at a measure after the first.
    pub change: f64,
    /// Chance that a staff starts in the other staff's usual clef.
    pub swap_clef: f64,
    /// Chance that a pitch takes a uniformly random octave.
    pub wide_octave: f64,
}

impl SynthConfig {
    /// Broad coverage of the token vocabulary.
    pub fn varied() -> SynthConfig {
        let t = |b, d| TimeSignature::new(b, d).expect("vocabulary time");
        SynthConfig {
            min_measures: 2,
            max_measures: 8,
            times: vec![
                t(2, 4), t(3, 4), t(4, 4), t(5, 4), t(1, 4), t(3, 8), t(6, 8), t(7, 8), t(9, 8), t(12, 8), t(6, 16),
            ],
            rhythm: RhythmStyle::Varied,
            second_voice: 0.25,
            chord: 0.3,
            rest: 0.15,
            tie: 0.08,
            stem: 0.9,
            change: 0.12,
            swap_clef: 0.1,
            wide_octave: 0.05,
        }
    }

    /// Song-like material: simple meters, dense beaming, stems on every note.
    pub fn popular() -> SynthConfig {
        let t = |b, d| TimeSignature::new(b, d).expect("vocabulary time");
        SynthConfig {
            min_measures: 4,
            max_measures: 12,
            times: vec![t(4, 4), t(4, 4), t(3, 4), t(2, 4), t(6, 8)],
            rhythm: RhythmStyle::Popular,
            second_voice: 0.1,
            chord: 0.35,
            rest: 0.04,
            tie: 0.04,
            stem: 1.0,
            change: 0.03,
            swap_clef: 0.0,
            wide_octave: 0.0,
        }
    }
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig::varied()
    }
}

/// A random score from a seed; the same seed always gives the same score.
pub fn seeded_score(seed: u64, cfg: &SynthConfig) -> Score {
    random_score(&mut ChaCha8Rng::seed_from_u64(seed), cfg)
}

pub fn random_score<R: Rng + ?Sized>(rng: &mut R, cfg: &SynthConfig) -> Score {
    let n = rng.random_range(cfg.min_measures..=cfg.max_measures.max(cfg.min_measures));
    let key = random_key(rng);
    let time = *cfg.times.choose(rng).expect("at least one time signature");
    let mut clefs = [Clef::Treble, Clef::Bass];
    for c in &mut clefs {
        if rng.random_bool(cfg.swap_clef) {
            *c = if *c == Clef::Treble { Clef::Bass } else { Clef::Treble };
        }
    }
    let mut staves = [Staff::new(clefs[0], key, time), Staff::new(clefs[1], key, time)];
    let mut current = [staves[0].initial(), staves[1].initial()];

    for mi in 0..n {
        let mut changes: [Measure; 2] = Default::default();
        if mi > 0 && rng.random_bool(cfg.change) {
            match rng.random_range(0..3) {
                0 => {
                    let s = rng.random_range(0..2);
                    let c = if current[s].clef == Clef::Treble { Clef::Bass } else { Clef::Treble };
                    changes[s].clef = Some(c);
                }
                1 => {
                    let k = random_key(rng);
                    changes[0].key = Some(k);
                    changes[1].key = Some(k);
                }
                _ => {
                    let t = *cfg.times.choose(rng).expect("at least one time signature");
                    changes[0].time = Some(t);
                    changes[1].time = Some(t);
                }
            }
        }
        for (s, mut m) in changes.into_iter().enumerate() {
            current[s].apply(&m);
            let voices = if rng.random_bool(cfg.second_voice) { 2 } else { 1 };
            for v in 0..voices {
                m.voices.push(random_voice(rng, cfg, current[s].time, current[s].clef, v, voices));
            }
            staves[s].measures.push(m);
        }
    }
    let [right, left] = staves;
    let mut score = Score { right, left };
    for id in StaffId::BOTH {
        add_ties(rng, cfg, score.staff_mut(id));
    }
    score
}

fn random_key<R: Rng + ?Sized>(rng: &mut R) -> KeySignature {
    KeySignature::from_fifths(rng.random_range(-6..=6)).expect("fifths within range")
}

/// Beat-group lengths in ticks for one measure.
fn groups(time: TimeSignature) -> Vec<u32> {
    let beats = time.beats();
    let unit = time.beat_ticks();
    if time.beat_type() != 4 && beats.is_multiple_of(3) {
        vec![unit * 3; (beats / 3) as usize]
    } else {
        vec![unit; beats as usize]
    }
}

fn cells(style: RhythmStyle) -> &'static [(u32, &'static [&'static [u32]])] {
    match style {
        RhythmStyle::Varied => VARIED_CELLS,
        RhythmStyle::Popular => POPULAR_CELLS,
    }
}

fn cell_for<R: Rng + ?Sized>(rng: &mut R, style: RhythmStyle, span: u32) -> Option<&'static [u32]> {
    let table = cells(style);
    table.iter().find(|(s, _)| *s == span).map(|(_, list)| *list.choose(rng).expect("non-empty cell list"))
}

/// Flag count of a notated length, 0 for quarter and longer.
pub fn flags(d: Duration) -> usize {
    match d.ticks() {
        Some(8 | 12 | 18 | 21) => 1,
        Some(4 | 6 | 9) => 2,
        Some(2 | 3) => 3,
        Some(1) => 4,
        _ => 0,
    }
}

/// Beam states for a run of consecutive beamed notes given their flag counts.
pub fn beam_run(levels: &[usize]) -> Vec<Vec<BeamState>> {
    let k = levels.len();
    let mut out = vec![Vec::new(); k];
    let depth = levels.iter().copied().max().unwrap_or(0);
    for level in 1..=depth {
        for i in 0..k {
            if levels[i] < level {
                continue;
            }
            let prev = i > 0 && levels[i - 1] >= level;
            let next = i + 1 < k && levels[i + 1] >= level;
            out[i].push(match (prev, next) {
                (true, true) => BeamState::Continue,
                (true, false) => BeamState::Stop,
                (false, true) => BeamState::Start,
                (false, false) if i + 1 < k => BeamState::PartialRight,
                (false, false) => BeamState::PartialLeft,
            });
        }
    }
    out
}

fn random_voice<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SynthConfig,
    time: TimeSignature,
    clef: Clef,
    voice: usize,
    voices: usize,
) -> Voice {
    let groups = groups(time);
    let mut events = Vec::new();
    let mut i = 0;
    while i < groups.len() {
        // Merge a few beat groups into one longer span when a cell exists for it.
        let want = if cfg.rhythm == RhythmStyle::Varied && rng.random_bool(0.35) { rng.random_range(2..=4) } else { 1 };
        let mut take = 1;
        for k in (1..=want.min(groups.len() - i)).rev() {
            let span: u32 = groups[i..i + k].iter().sum();
            if cells(cfg.rhythm).iter().any(|(s, _)| *s == span) {
                take = k;
                break;
            }
        }
        let span: u32 = groups[i..i + take].iter().sum();
        let cell = cell_for(rng, cfg.rhythm, span).unwrap_or(&[]);
        let cell: Vec<u32> = if cell.is_empty() { vec![span] } else { cell.to_vec() };
        fill_cell(rng, cfg, &cell, clef, voice, voices, &mut events);
        i += take;
    }
    Voice::new(events)
}

fn fill_cell<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SynthConfig,
    cell: &[u32],
    clef: Clef,
    voice: usize,
    voices: usize,
    out: &mut Vec<Event>,
) {
    let start = out.len();
    for &ticks in cell {
        let d = Duration::from_ticks(ticks);
        if rng.random_bool(cfg.rest) {
            out.push(Event::rest(d));
            continue;
        }
        let count = if rng.random_bool(cfg.chord) { rng.random_range(2..=4) } else { 1 };
        let mut pitches: Vec<Pitch> = (0..count).map(|_| random_pitch(rng, cfg, clef, voice, voices)).collect();
        pitches.sort();
        pitches.dedup();
        out.push(NoteEvent::new(pitches, d).into());
    }
    // Beam runs of flagged notes inside the cell; rests break runs.
    let mut run: Vec<usize> = Vec::new();
    let end = out.len();
    for i in start..=end {
        let flagged = i < end && matches!(&out[i], Event::Note(n) if flags(n.duration) > 0);
        if flagged {
            run.push(i);
            continue;
        }
        if run.len() >= 2 {
            let levels: Vec<usize> = run.iter().map(|&j| flags(out[j].duration())).collect();
            for (&j, beams) in run.iter().zip(beam_run(&levels)) {
                if let Some(n) = out[j].as_note_mut() {
                    n.beams = beams;
                }
            }
        }
        run.clear();
    }
    // Stems: one direction per beam run, chosen by voice or register.
    let mut group_dir: Option<Stem> = None;
    for e in &mut out[start..end] {
        let Some(n) = e.as_note_mut() else {
            group_dir = None;
            continue;
        };
        let dir = match group_dir {
            Some(d) if n.beams.first().is_some_and(|b| *b != BeamState::Start) => d,
            _ => stem_for(n, clef, voice, voices),
        };
        group_dir = (!n.beams.is_empty()).then_some(dir);
        if n.beams.is_empty() {
            if rng.random_bool(cfg.stem) {
                n.stem = Some(dir);
            }
        } else {
            n.stem = Some(dir);
        }
    }
}

fn stem_for(n: &NoteEvent, clef: Clef, voice: usize, voices: usize) -> Stem {
    if voices > 1 {
        return if voice == 0 { Stem::Up } else { Stem::Down };
    }
    let middle = match clef {
        Clef::Treble => 71,
        Clef::Bass => 50,
    };
    let mean = n.pitches.iter().map(|p| p.midi_number() as u32).sum::<u32>() / n.pitches.len() as u32;
    if mean >= middle {
        Stem::Down
    } else {
        Stem::Up
    }
}

fn random_pitch<R: Rng + ?Sized>(rng: &mut R, cfg: &SynthConfig, clef: Clef, voice: usize, voices: usize) -> Pitch {
    let step = *Step::ALL.choose(rng).expect("steps");
    let alter = match rng.random_range(0..20) {
        0..=11 => Alter::Natural,
        12..=14 => Alter::Sharp,
        15..=17 => Alter::Flat,
        18 => Alter::DoubleSharp,
        _ => Alter::DoubleFlat,
    };
    let octave = if rng.random_bool(cfg.wide_octave) {
        rng.random_range(0..=MAX_OCTAVE)
    } else {
        let base: u8 = match clef {
            Clef::Treble => 4,
            Clef::Bass => 2,
        };
        let lift = u8::from(voices > 1 && voice == 0);
        base + lift + rng.random_range(0..2)
    };
    Pitch::new(step, alter, octave).expect("octave within range")
}

/// Tie adjacent notes of each voice stream, copying pitches forward.
fn add_ties<R: Rng + ?Sized>(rng: &mut R, cfg: &SynthConfig, staff: &mut Staff) {
    let streams = staff.measures.iter().map(|m| m.voices.len()).max().unwrap_or(0);
    for v in 0..streams {
        let mut prev: Option<(usize, usize)> = None;
        for mi in 0..staff.measures.len() {
            let Some(len) = staff.measures[mi].voices.get(v).map(|x| x.events.len()) else {
                prev = None;
                continue;
            };
            for ei in 0..len {
                let is_note = staff.measures[mi].voices[v].events[ei].as_note().is_some();
                if !is_note {
                    prev = None;
                    continue;
                }
                if let Some((pm, pe)) = prev {
                    if rng.random_bool(cfg.tie) {
                        let a = staff.measures[pm].voices[v].events[pe].as_note_mut().expect("note");
                        a.tie = Some(if a.tie == Some(Tie::Stop) { Tie::Continue } else { Tie::Start });
                        let pitches = a.pitches.clone();
                        let b = staff.measures[mi].voices[v].events[ei].as_note_mut().expect("note");
                        b.pitches = pitches;
                        b.tie = Some(Tie::Stop);
                    }
                }
                prev = Some((mi, ei));
            }
        }
    }
}

/// Total ticks of one measure's capacity, convenient for generators.
pub fn capacity_ticks(time: TimeSignature) -> u32 {
    measure_capacity(time).ticks().expect("vocabulary times are on the grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::validate_score;

    #[test]
    fn cells_sum_to_their_span() {
        for table in [VARIED_CELLS, POPULAR_CELLS] {
            for (span, list) in table {
                for cell in *list {
                    assert_eq!(cell.iter().sum::<u32>(), *span, "{cell:?}");
                    for t in *cell {
                        assert!(Duration::from_ticks(*t).in_vocabulary(), "{t}");
                    }
                }
            }
        }
    }

    #[test]
    fn every_time_has_cells() {
        for t in SynthConfig::varied().times.into_iter().chain(SynthConfig::popular().times) {
            let g = groups(t);
            assert_eq!(g.iter().sum::<u32>(), capacity_ticks(t));
            for span in g {
                assert!(VARIED_CELLS.iter().any(|(s, _)| *s == span), "{t}");
            }
        }
    }

    #[test]
    fn beam_runs() {
        use BeamState::*;
        assert_eq!(beam_run(&[1, 1]), vec![vec![Start], vec![Stop]]);
        assert_eq!(beam_run(&[1, 3]), vec![vec![Start], vec![Stop, PartialLeft, PartialLeft]]);
        assert_eq!(beam_run(&[2, 1, 2]), vec![vec![Start, PartialRight], vec![Continue], vec![Stop, PartialLeft]]);
        assert_eq!(beam_run(&[2, 2, 1]), vec![vec![Start, Start], vec![Continue, Stop], vec![Stop]]);
    }

    #[test]
    fn generated_scores_are_valid_and_deterministic() {
        for cfg in [SynthConfig::varied(), SynthConfig::popular()] {
            for seed in 0..200 {
                let s = seeded_score(seed, &cfg);
                let r = validate_score(&s);
                assert!(r.is_empty(), "seed {seed}: {:?}", r.issues.first());
                assert_eq!(s, seeded_score(seed, &cfg));
            }
        }
    }
}
