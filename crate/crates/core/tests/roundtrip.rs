use proptest::prelude::*;
use scoretok::musicxml::{emit_musicxml, parse_musicxml, Profile};
use scoretok::synth::{seeded_score, SynthConfig};
use scoretok::tokens::{concat_form, detokenize, expand_form, tokenize_score, validate_tokens, Form};

fn configs() -> impl Strategy<Value = SynthConfig> {
    prop_oneof![Just(SynthConfig::varied()), Just(SynthConfig::popular())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tokens_round_trip(seed in any::<u64>(), cfg in configs()) {
        let s = seeded_score(seed, &cfg);
        for form in [Form::Regular, Form::Concatenated] {
            let seq = tokenize_score(&s, form).unwrap().strings();
            prop_assert_eq!(&seq[0], "R");
            prop_assert!(seq[1].starts_with("clef_") && seq[2].starts_with("key_") && seq[3].starts_with("time_"));
            let (back, report) = detokenize(&seq);
            prop_assert!(report.is_empty(), "{:?}", report.errors.first());
            prop_assert_eq!(&back, &s);
            prop_assert!(validate_tokens(&seq).is_empty());
        }
    }

    #[test]
    fn forms_are_inverse(seed in any::<u64>(), cfg in configs()) {
        let s = seeded_score(seed, &cfg);
        let reg = tokenize_score(&s, Form::Regular).unwrap().strings();
        let cat = tokenize_score(&s, Form::Concatenated).unwrap().strings();
        prop_assert_eq!(&concat_form(&reg).unwrap(), &cat);
        prop_assert_eq!(&expand_form(&cat).unwrap(), &reg);
        prop_assert!(cat.len() <= reg.len());
        let attributed = s.right.measures.iter().chain(&s.left.measures)
            .flat_map(|m| &m.voices).flat_map(|v| &v.events)
            .filter_map(|e| e.as_note())
            .any(|n| n.stem.is_some() || !n.beams.is_empty());
        prop_assert_eq!(cat.len() < reg.len(), attributed);
    }

    #[test]
    fn musicxml_round_trip(seed in any::<u64>(), cfg in configs()) {
        let s = seeded_score(seed, &cfg);
        let xml = emit_musicxml(&s).unwrap();
        let parsed = parse_musicxml(&xml, &Profile::strict()).unwrap();
        prop_assert!(parsed.warnings.is_empty());
        prop_assert_eq!(parsed.score, s);
    }
}
