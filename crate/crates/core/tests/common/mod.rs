#![allow(dead_code)]

use scoretok::metric::Aspect;
use scoretok::notation::{
    validate_score, BeamState, Clef, Duration, Event, KeySignature, NoteEvent, Pitch, Score, Stem, Tie, TimeSignature,
    Voice,
};

pub fn p(s: &str) -> Pitch {
    s.parse().unwrap()
}

fn d(ticks: u32) -> Duration {
    Duration::from_ticks(ticks)
}

fn note(pitches: &[&str], ticks: u32) -> NoteEvent {
    NoteEvent::new(pitches.iter().map(|s| p(s)).collect(), d(ticks))
}

/// Two measures of 4/4 with 9 right-hand items and 6 left-hand items.
///
/// R m1: C5 q (stem down), [D5 F5] q, E5 e + F5 e beamed, G5 q tie start
/// R m2: G5 q tie stop, rest q, A5 h
/// L m1: voice 1 C3 h E3 h, voice 2 G2 h C2 h
/// L m2: voice 1 C3 w, voice 2 C2 w
pub fn reference() -> Score {
    let mut s = Score::empty(2, KeySignature::natural(), TimeSignature::common());
    s.right.measures[0].voices = vec![Voice::new(vec![
        note(&["C5"], 24).with_stem(Stem::Down).into(),
        note(&["D5", "F5"], 24).into(),
        note(&["E5"], 12).with_beams(vec![BeamState::Start]).into(),
        note(&["F5"], 12).with_beams(vec![BeamState::Stop]).into(),
        note(&["G5"], 24).with_tie(Tie::Start).into(),
    ])];
    s.right.measures[1].voices = vec![Voice::new(vec![
        note(&["G5"], 24).with_tie(Tie::Stop).into(),
        Event::rest(d(24)),
        note(&["A5"], 48).into(),
    ])];
    s.left.measures[0].voices = vec![
        Voice::new(vec![note(&["C3"], 48).into(), note(&["E3"], 48).into()]),
        Voice::new(vec![note(&["G2"], 48).into(), note(&["C2"], 48).into()]),
    ];
    s.left.measures[1].voices =
        vec![Voice::new(vec![note(&["C3"], 96).into()]), Voice::new(vec![note(&["C2"], 96).into()])];
    assert!(validate_score(&s).is_empty(), "{:?}", validate_score(&s));
    s
}

pub const REFERENCE_ITEMS: usize = 15;

fn edit(f: impl FnOnce(&mut Score)) -> Score {
    let mut s = reference();
    f(&mut s);
    assert!(validate_score(&s).is_empty(), "{:?}", validate_score(&s));
    s
}

fn right_note(s: &mut Score, m: usize, e: usize) -> &mut NoteEvent {
    s.right.measures[m].voices[0].events[e].as_note_mut().unwrap()
}

/// Name, corrupted score and the expected nonzero counts.
pub type Corruption = (&'static str, Score, Vec<(Aspect, usize)>);

/// Single-aspect corruptions of [`reference`] with hand-counted expectations.
pub fn corruptions() -> Vec<Corruption> {
    vec![
        (
            "drop a chord member",
            edit(|s| right_note(s, 0, 1).pitches = vec![p("D5")]),
            vec![(Aspect::NoteDeletion, 1)],
        ),
        (
            "add a chord member",
            edit(|s| right_note(s, 0, 0).pitches = vec![p("C5"), p("A5")]),
            vec![(Aspect::NoteInsertion, 1)],
        ),
        (
            "delete a whole voice",
            edit(|s| {
                s.left.measures[1].voices.pop();
            }),
            vec![(Aspect::NoteDeletion, 1)],
        ),
        (
            "move a voice to the other staff",
            edit(|s| {
                let v = s.left.measures[1].voices.pop().unwrap();
                s.right.measures[1].voices.push(v);
            }),
            vec![(Aspect::Staff, 1)],
        ),
        (
            "exchange second halves of two voices",
            edit(|s| {
                let vs = &mut s.left.measures[0].voices;
                let a = vs[0].events[1].clone();
                vs[0].events[1] = vs[1].events[1].clone();
                vs[1].events[1] = a;
            }),
            vec![(Aspect::Voice, 4)],
        ),
        ("treble clef on the left staff", edit(|s| s.left.clef = Clef::Treble), vec![(Aspect::Clef, 6)]),
        (
            "wrong key on the right staff",
            edit(|s| s.right.key = KeySignature::sharps(1).unwrap()),
            vec![(Aspect::KeySignature, 9)],
        ),
        (
            "8/8 instead of 4/4",
            edit(|s| {
                let t = TimeSignature::new(8, 8).unwrap();
                s.right.time = t;
                s.left.time = t;
            }),
            vec![(Aspect::TimeSignature, 15)],
        ),
        (
            "key change in the second measure",
            edit(|s| {
                s.right.measures[1].key = Some(KeySignature::flats(2).unwrap());
                s.left.measures[1].key = Some(KeySignature::flats(2).unwrap());
            }),
            vec![(Aspect::KeySignature, 5)],
        ),
        ("enharmonic respelling", edit(|s| right_note(s, 0, 1).pitches[1] = p("E#5")), vec![(Aspect::PitchSpelling, 1)]),
        (
            "shorten the last note",
            edit(|s| {
                let v = &mut s.right.measures[1].voices[0].events;
                v[2] = note(&["A5"], 24).into();
                v.push(Event::rest(d(24)));
            }),
            vec![(Aspect::NoteDuration, 1), (Aspect::NoteInsertion, 1)],
        ),
        ("flip a stem", edit(|s| right_note(s, 0, 0).stem = Some(Stem::Up)), vec![(Aspect::StemDirection, 1)]),
        (
            "remove a beam",
            edit(|s| {
                right_note(s, 0, 2).beams.clear();
                right_note(s, 0, 3).beams.clear();
            }),
            vec![(Aspect::Beams, 2)],
        ),
        (
            "remove a tie",
            edit(|s| {
                right_note(s, 0, 4).tie = None;
                right_note(s, 1, 0).tie = None;
            }),
            vec![(Aspect::Ties, 2)],
        ),
    ]
}
