use std::collections::BTreeSet;
use std::fs;

use proptest::prelude::*;
use scoretok::corpus::{build_corpus, segment, CorpusConfig, SegmentPolicy, Song, Split};
use scoretok::notation::{validate_score, Duration, KeySignature, NoteEvent, Score, Tie, TimeSignature, Voice};
use scoretok::note_level::{detokenize_notelevel, NoteToken, PerturbParams};
use scoretok::synth::{seeded_score, SynthConfig};
use scoretok::tokens::{detokenize, tokenize_score, Form};

fn fixed(n: usize) -> SegmentPolicy {
    SegmentPolicy::FixedMeasures { n }
}

fn blank(measures: usize) -> Score {
    Score::empty(measures, KeySignature::natural(), TimeSignature::common())
}

fn ranges(s: &Score, policy: SegmentPolicy, marks: &[usize]) -> Vec<(usize, usize)> {
    segment("x", s, policy, marks).unwrap().iter().map(|s| (s.start, s.end)).collect()
}

#[test]
fn fixed_slices_and_remainder() {
    assert_eq!(ranges(&blank(12), fixed(4), &[]), vec![(0, 4), (4, 8), (8, 12)]);
    assert_eq!(ranges(&blank(10), fixed(4), &[]), vec![(0, 4), (4, 8), (8, 10)]);
    assert!(segment("x", &blank(4), fixed(0), &[]).is_err());
}

#[test]
fn system_marks_with_fallback() {
    let p = SegmentPolicy::SystemMarks { fallback: 4 };
    assert_eq!(ranges(&blank(10), p, &[3, 7]), vec![(0, 3), (3, 7), (7, 10)]);
    assert_eq!(ranges(&blank(10), p, &[]), vec![(0, 4), (4, 8), (8, 10)]);
    assert_eq!(ranges(&blank(10), p, &[0, 40]), vec![(0, 4), (4, 8), (8, 10)]);
}

#[test]
fn key_change_carries_into_the_slice() {
    let mut s = blank(8);
    let d = KeySignature::sharps(2).unwrap();
    s.right.measures[5].key = Some(d);
    s.left.measures[5].key = Some(d);
    let slices = segment("x", &s, fixed(4), &[]).unwrap();
    assert_eq!(slices[1].score.right.key, KeySignature::natural());
    assert_eq!(slices[1].score.right.measures[1].key, Some(d));
    let t = tokenize_score(&slices[1].score, Form::Regular).unwrap().strings();
    assert_eq!(t[2], "key_natural");
    assert!(t.contains(&"key_sharp_2".to_string()));

    let slices = segment("x", &s, fixed(5), &[]).unwrap();
    assert_eq!(slices[1].score.right.key, d);
    assert_eq!(slices[1].score.right.measures[0].key, None);
    assert!(validate_score(&slices[1].score).is_empty());
}

#[test]
fn tie_across_a_cut_is_split() {
    let mut s = blank(2);
    let c4 = "C4".parse().unwrap();
    s.right.measures[0].voices[0] = Voice::new(vec![
        scoretok::notation::Event::rest(Duration::quarters(3)),
        NoteEvent::new(vec![c4], Duration::QUARTER).with_tie(Tie::Start).into(),
    ]);
    s.right.measures[1].voices[0] = Voice::new(vec![
        NoteEvent::new(vec![c4], Duration::QUARTER).with_tie(Tie::Stop).into(),
        scoretok::notation::Event::rest(Duration::quarters(3)),
    ]);
    let slices = segment("x", &s, fixed(1), &[]).unwrap();
    let first = slices[0].score.right.measures[0].voices[0].events[1].as_note().unwrap();
    let second = slices[1].score.right.measures[0].voices[0].events[0].as_note().unwrap();
    assert_eq!((first.tie, second.tie), (None, None));
    assert_eq!(first.duration + second.duration, Duration::quarters(2));
    for sl in &slices {
        assert!(validate_score(&sl.score).is_empty());
    }
}

fn songs(n: usize) -> Vec<Song> {
    (0..n)
        .map(|i| Song { id: format!("song{i:03}"), score: seeded_score(i as u64, &SynthConfig::popular()), system_starts: vec![] })
        .collect()
}

#[test]
fn one_slice_corpus() {
    let s = vec![
        Song { id: "a".into(), score: blank(2), system_starts: vec![] },
        Song { id: "b".into(), score: blank(2), system_starts: vec![] },
        Song { id: "c".into(), score: blank(2), system_starts: vec![] },
    ];
    let c = build_corpus(&s, &CorpusConfig::default()).unwrap();
    assert_eq!(c.pairs.len(), 3);
    for p in &c.pairs {
        let toks: Vec<NoteToken> = p.input.iter().map(|t| t.parse().unwrap()).collect();
        detokenize_notelevel(&toks, &[(0, TimeSignature::common())], true).unwrap();
        assert!(detokenize(&p.target).1.is_empty());
    }
}

#[test]
fn perturbation_changes_only_the_input() {
    let s = songs(5);
    let plain = build_corpus(&s, &CorpusConfig::default()).unwrap();
    let cfg = CorpusConfig { perturb: Some(PerturbParams::default().with_seed(9)), ..CorpusConfig::default() };
    let noisy = build_corpus(&s, &cfg).unwrap();
    assert_eq!(plain.pairs.len(), noisy.pairs.len());
    assert!(plain.pairs.iter().zip(&noisy.pairs).all(|(a, b)| a.target == b.target));
    assert!(plain.pairs.iter().zip(&noisy.pairs).any(|(a, b)| a.input != b.input));
}

#[test]
fn files_are_aligned_and_reproducible() {
    let s = songs(20);
    let cfg = CorpusConfig { seed: 5, perturb: Some(PerturbParams::default()), ..CorpusConfig::default() };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    build_corpus(&s, &cfg).unwrap().write(a.path()).unwrap();
    build_corpus(&s, &cfg).unwrap().write(b.path()).unwrap();
    let mut seen = BTreeSet::new();
    for split in Split::ALL {
        for f in ["input.tokens", "target.tokens"] {
            let x = fs::read(a.path().join(split.name()).join(f)).unwrap();
            assert_eq!(x, fs::read(b.path().join(split.name()).join(f)).unwrap());
        }
        let lines = |f| fs::read_to_string(a.path().join(split.name()).join(f)).unwrap().lines().count();
        assert_eq!(lines("input.tokens"), lines("target.tokens"));
        seen.insert(split);
    }
    assert_eq!(fs::read(a.path().join("manifest.json")).unwrap(), fs::read(b.path().join("manifest.json")).unwrap());
    let m: scoretok::corpus::CorpusManifest =
        serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.assignment.len(), 20);
    assert_eq!(m.songs_in(Split::Train).count(), 16);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn slices_cover_and_keep_attributes(seed in any::<u64>(), n in 1usize..6) {
        let s = seeded_score(seed, &SynthConfig::varied());
        let slices = segment("x", &s, fixed(n), &[]).unwrap();
        let mut next = 0;
        for sl in &slices {
            prop_assert_eq!(sl.start, next);
            next = sl.end;
            prop_assert!(validate_score(&sl.score).is_empty());
            for (id, whole, part) in [("R", &s.right, &sl.score.right), ("L", &s.left, &sl.score.left)] {
                let (all, mine) = (whole.attributes(), part.attributes());
                prop_assert_eq!(&mine[..], &all[sl.start..sl.end], "staff {}", id);
                for (a, b) in whole.measures[sl.start..sl.end].iter().zip(&part.measures) {
                    prop_assert_eq!(a.voices.len(), b.voices.len());
                }
            }
        }
        prop_assert_eq!(next, s.measure_count());
    }
}
