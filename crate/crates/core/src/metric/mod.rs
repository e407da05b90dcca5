//! Note-wise comparison of a generated score against a reference.
//!
//! Both scores are flattened into items: one per pitch of every note (a
//! three-note chord is three items) and one per rest. Items are aligned
//! exactly on measure, onset and MIDI number (rests on measure, onset and
//! duration), then each aligned pair is checked aspect by aspect. Every
//! count is "items affected"; rates divide by the reference item count.

mod align;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Serialize, Serializer};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::notation::{Score, StaffId};

pub use align::{align, items, Alignment, Item, ItemKind, ItemRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Aspect {
    NoteDeletion,
    NoteInsertion,
    Staff,
    Voice,
    Clef,
    KeySignature,
    TimeSignature,
    PitchSpelling,
    NoteDuration,
    StemDirection,
    Beams,
    Ties,
}

impl Aspect {
    pub const ALL: [Aspect; 12] = [
        Aspect::NoteDeletion,
        Aspect::NoteInsertion,
        Aspect::Staff,
        Aspect::Voice,
        Aspect::Clef,
        Aspect::KeySignature,
        Aspect::TimeSignature,
        Aspect::PitchSpelling,
        Aspect::NoteDuration,
        Aspect::StemDirection,
        Aspect::Beams,
        Aspect::Ties,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Aspect::NoteDeletion => "note_deletion",
            Aspect::NoteInsertion => "note_insertion",
            Aspect::Staff => "staff",
            Aspect::Voice => "voice",
            Aspect::Clef => "clef",
            Aspect::KeySignature => "key_signature",
            Aspect::TimeSignature => "time_signature",
            Aspect::PitchSpelling => "pitch_spelling",
            Aspect::NoteDuration => "note_duration",
            Aspect::StemDirection => "stem_direction",
            Aspect::Beams => "beams",
            Aspect::Ties => "ties",
        }
    }

    pub fn category(self) -> Category {
        match self {
            Aspect::NoteDeletion | Aspect::NoteInsertion => Category::NotePreservation,
            Aspect::Staff | Aspect::Voice => Category::NoteSegregation,
            Aspect::Clef | Aspect::KeySignature | Aspect::TimeSignature => Category::ScoreAttributes,
            _ => Category::NoteAttributes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    NotePreservation,
    NoteSegregation,
    ScoreAttributes,
    NoteAttributes,
}

impl Category {
    pub const ALL: [Category; 4] =
        [Category::NotePreservation, Category::NoteSegregation, Category::ScoreAttributes, Category::NoteAttributes];

    pub fn key(self) -> &'static str {
        match self {
            Category::NotePreservation => "note_preservation",
            Category::NoteSegregation => "note_segregation",
            Category::ScoreAttributes => "score_attributes",
            Category::NoteAttributes => "note_attributes",
        }
    }

    pub fn members(self) -> impl Iterator<Item = Aspect> {
        Aspect::ALL.into_iter().filter(move |a| a.category() == self)
    }
}

/// Affected-item count per aspect.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AspectCounts(BTreeMap<Aspect, usize>);

impl AspectCounts {
    pub fn get(&self, a: Aspect) -> usize {
        self.0.get(&a).copied().unwrap_or(0)
    }

    pub fn set(&mut self, a: Aspect, n: usize) {
        self.0.insert(a, n);
    }

    fn bump(&mut self, a: Aspect) {
        *self.0.entry(a).or_default() += 1;
    }

    pub fn is_zero(&self) -> bool {
        Aspect::ALL.iter().all(|a| self.get(*a) == 0)
    }
}

impl Serialize for AspectCounts {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, usize> = Aspect::ALL.iter().map(|a| (a.key(), self.get(*a))).collect();
        map.serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("reference score has no notes or rests; rates are undefined")]
    EmptyReference,
}

/// Count the items affected by each kind of disagreement.
pub fn count_aspects(alignment: &Alignment, orig: &Score, gen: &Score) -> AspectCounts {
    let oi = items(orig);
    let gi = items(gen);
    let o_by: HashMap<ItemRef, &Item> = oi.iter().map(|i| (i.at, i)).collect();
    let g_by: HashMap<ItemRef, &Item> = gi.iter().map(|i| (i.at, i)).collect();

    let mut c = AspectCounts::default();
    c.set(Aspect::NoteDeletion, alignment.deletions.len());
    c.set(Aspect::NoteInsertion, alignment.insertions.len());

    let partner: HashMap<ItemRef, ItemRef> = alignment.pairs.iter().copied().collect();
    let consistent = |o: &ItemRef| partner.get(o).is_some_and(|g| g.staff == o.staff);
    let consistent_g: HashSet<ItemRef> =
        alignment.pairs.iter().filter(|(o, g)| o.staff == g.staff).map(|(_, g)| *g).collect();

    // Voice groups: (staff, measure, voice) -> members.
    let group = |list: &[Item]| {
        let mut m: HashMap<(StaffId, usize, usize), Vec<ItemRef>> = HashMap::new();
        for i in list {
            m.entry((i.at.staff, i.at.measure, i.at.voice)).or_default().push(i.at);
        }
        m
    };
    let o_groups = group(&oi);
    let g_groups = group(&gi);

    for (o, g) in &alignment.pairs {
        let (a, b) = (o_by[o], g_by[g]);
        if o.staff != g.staff {
            c.bump(Aspect::Staff);
        } else {
            let mine: HashSet<ItemRef> = o_groups[&(o.staff, o.measure, o.voice)]
                .iter()
                .filter(|x| *x != o && consistent(x))
                .map(|x| partner[x])
                .collect();
            let theirs: HashSet<ItemRef> = g_groups[&(g.staff, g.measure, g.voice)]
                .iter()
                .filter(|x| *x != g && consistent_g.contains(x))
                .copied()
                .collect();
            if mine != theirs {
                c.bump(Aspect::Voice);
            }
        }
        if let (ItemKind::Note(pa), ItemKind::Note(pb)) = (&a.kind, &b.kind) {
            if pa.pitch != pb.pitch {
                c.bump(Aspect::PitchSpelling);
            }
            if pa.stem != pb.stem {
                c.bump(Aspect::StemDirection);
            }
            if pa.beams != pb.beams {
                c.bump(Aspect::Beams);
            }
            if pa.tie != pb.tie {
                c.bump(Aspect::Ties);
            }
        }
        if a.duration != b.duration {
            c.bump(Aspect::NoteDuration);
        }
    }

    // Attribute regions: every reference item of a (staff, measure) whose
    // in-effect clef, key or time differs from the generated staff's.
    for id in StaffId::BOTH {
        let oa = orig.staff(id).attributes();
        let ga = gen.staff(id).attributes();
        for i in oi.iter().filter(|i| i.at.staff == id) {
            let Some(g) = ga.get(i.at.measure) else { continue };
            let o = &oa[i.at.measure];
            if o.clef != g.clef {
                c.bump(Aspect::Clef);
            }
            if o.key != g.key {
                c.bump(Aspect::KeySignature);
            }
            if o.time != g.time {
                c.bump(Aspect::TimeSignature);
            }
        }
    }
    c
}

/// Counts normalized by the reference item count.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub counts: AspectCounts,
    /// Reference notes (per pitch) plus rests.
    pub reference_items: usize,
    pub generated_items: usize,
    pub matched: usize,
    /// False when the generated side carries no stem directions at all; the
    /// stem aspect is then left out of every average.
    pub stems_scored: bool,
}

impl MetricReport {
    pub fn rate(&self, a: Aspect) -> Option<f64> {
        if a == Aspect::StemDirection && !self.stems_scored {
            return None;
        }
        Some(100.0 * self.counts.get(a) as f64 / self.reference_items as f64)
    }

    pub fn category(&self, c: Category) -> Option<f64> {
        mean(c.members().filter_map(|a| self.rate(a)))
    }

    /// Mean over the aspects.
    pub fn average(&self) -> f64 {
        mean(Aspect::ALL.iter().filter_map(|a| self.rate(*a))).unwrap_or(0.0)
    }

    /// Mean over the four categories.
    pub fn category_average(&self) -> f64 {
        mean(Category::ALL.iter().filter_map(|c| self.category(*c))).unwrap_or(0.0)
    }

    /// JSON object with rates rounded to two decimals.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for a in Aspect::ALL {
            m.insert(a.key().into(), self.rate(a).map_or(Value::Null, round2));
        }
        for c in Category::ALL {
            m.insert(c.key().into(), self.category(c).map_or(Value::Null, round2));
        }
        m.insert("average".into(), round2(self.average()));
        m.insert("category_average".into(), round2(self.category_average()));
        m.insert("counts".into(), serde_json::to_value(&self.counts).expect("counts serialize"));
        m.insert(
            "totals".into(),
            json!({
                "reference_items": self.reference_items,
                "generated_items": self.generated_items,
                "matched": self.matched,
                "stems_scored": self.stems_scored,
            }),
        );
        Value::Object(m)
    }
}

fn round2(x: f64) -> Value {
    json!((x * 100.0).round() / 100.0)
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn has_stems(score: &Score) -> bool {
    StaffId::BOTH.iter().any(|id| {
        score
            .staff(*id)
            .measures
            .iter()
            .flat_map(|m| &m.voices)
            .flat_map(|v| &v.events)
            .any(|e| e.as_note().is_some_and(|n| n.stem.is_some()))
    })
}

/// Normalize counts into a report.
pub fn report(counts: AspectCounts, orig: &Score, gen: &Score, alignment: &Alignment) -> Result<MetricReport, MetricError> {
    let reference_items = items(orig).len();
    if reference_items == 0 {
        return Err(MetricError::EmptyReference);
    }
    Ok(MetricReport {
        counts,
        reference_items,
        generated_items: alignment.pairs.len() + alignment.insertions.len(),
        matched: alignment.pairs.len(),
        stems_scored: has_stems(gen),
    })
}

/// Align, count and normalize in one step.
pub fn evaluate(orig: &Score, gen: &Score) -> Result<MetricReport, MetricError> {
    let a = align(orig, gen);
    let counts = count_aspects(&a, orig, gen);
    report(counts, orig, gen, &a)
}

/// Corpus-level report from summed counts. Stems are scored when any
/// generated score had them.
pub fn aggregate<'a>(reports: impl IntoIterator<Item = &'a MetricReport>) -> Result<MetricReport, MetricError> {
    let mut total = MetricReport {
        counts: AspectCounts::default(),
        reference_items: 0,
        generated_items: 0,
        matched: 0,
        stems_scored: false,
    };
    for r in reports {
        for a in Aspect::ALL {
            total.counts.set(a, total.counts.get(a) + r.counts.get(a));
        }
        total.reference_items += r.reference_items;
        total.generated_items += r.generated_items;
        total.matched += r.matched;
        total.stems_scored |= r.stems_scored;
    }
    if total.reference_items == 0 {
        return Err(MetricError::EmptyReference);
    }
    Ok(total)
}
