use std::collections::BTreeMap;

use crate::notation::{BeamState, Duration, Pitch, Score, StaffId, Stem, Tie};

/// Position of one item: a single pitch of a note event, or a rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemRef {
    pub staff: StaffId,
    pub measure: usize,
    pub voice: usize,
    pub event: usize,
    /// Index into the chord's pitches; `None` for a rest.
    pub pitch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoteFacts {
    pub pitch: Pitch,
    pub midi: u8,
    pub stem: Option<Stem>,
    pub beams: Vec<BeamState>,
    pub tie: Option<Tie>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ItemKind {
    Note(NoteFacts),
    Rest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub at: ItemRef,
    /// Offset from the start of the measure.
    pub onset: Duration,
    pub duration: Duration,
    pub kind: ItemKind,
}

/// Flatten a score into items, in (staff, measure, voice, event, pitch) order.
pub fn items(score: &Score) -> Vec<Item> {
    let mut out = Vec::new();
    for staff in StaffId::BOTH {
        for (measure, m) in score.staff(staff).measures.iter().enumerate() {
            for (voice, v) in m.voices.iter().enumerate() {
                for (event, (onset, e)) in v.timed().enumerate() {
                    let at = ItemRef { staff, measure, voice, event, pitch: None };
                    match e.as_note() {
                        None => out.push(Item { at, onset, duration: e.duration(), kind: ItemKind::Rest }),
                        Some(n) => out.extend(n.pitches.iter().enumerate().map(|(k, p)| Item {
                            at: ItemRef { pitch: Some(k), ..at },
                            onset,
                            duration: n.duration,
                            kind: ItemKind::Note(NoteFacts {
                                pitch: *p,
                                midi: p.midi_number(),
                                stem: n.stem,
                                beams: n.beams.clone(),
                                tie: n.tie,
                            }),
                        })),
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Alignment {
    /// (reference item, generated item)
    pub pairs: Vec<(ItemRef, ItemRef)>,
    pub deletions: Vec<ItemRef>,
    pub insertions: Vec<ItemRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Note { measure: usize, onset: Duration, midi: u8 },
    Rest { measure: usize, onset: Duration, duration: Duration },
}

fn key(i: &Item) -> Key {
    match &i.kind {
        ItemKind::Note(n) => Key::Note { measure: i.at.measure, onset: i.onset, midi: n.midi },
        ItemKind::Rest => Key::Rest { measure: i.at.measure, onset: i.onset, duration: i.duration },
    }
}

/// Match items with equal keys, preferring partners on the same staff.
/// Within a key, both sides are taken in canonical order, so the result
/// does not depend on how the inputs were built.
pub fn align(orig: &Score, gen: &Score) -> Alignment {
    let mut buckets: BTreeMap<Key, (Vec<ItemRef>, Vec<ItemRef>)> = BTreeMap::new();
    for i in items(orig) {
        buckets.entry(key(&i)).or_default().0.push(i.at);
    }
    for i in items(gen) {
        buckets.entry(key(&i)).or_default().1.push(i.at);
    }
    let mut out = Alignment::default();
    for (_, (os, gs)) in buckets {
        let mut o_left: Vec<Option<ItemRef>> = os.into_iter().map(Some).collect();
        let mut g_left: Vec<Option<ItemRef>> = gs.into_iter().map(Some).collect();
        for same_staff in [true, false] {
            for o in o_left.iter_mut() {
                let Some(oref) = *o else { continue };
                let hit = g_left.iter_mut().find(|g| g.is_some_and(|g| !same_staff || g.staff == oref.staff));
                if let Some(g) = hit {
                    out.pairs.push((oref, g.take().expect("checked above")));
                    *o = None;
                }
            }
        }
        out.deletions.extend(o_left.into_iter().flatten());
        out.insertions.extend(g_left.into_iter().flatten());
    }
    out.pairs.sort();
    out.deletions.sort();
    out.insertions.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::{KeySignature, NoteEvent, TimeSignature, Voice};

    fn whole(p: &str) -> Voice {
        Voice::new(vec![NoteEvent::new(vec![p.parse().unwrap()], Duration::quarters(4)).into()])
    }

    #[test]
    fn same_staff_partner_wins() {
        let mut a = Score::empty(1, KeySignature::natural(), TimeSignature::common());
        a.right.measures[0].voices = vec![whole("C4")];
        a.left.measures[0].voices = vec![whole("C4")];
        let mut b = a.clone();
        b.right.measures[0].voices = vec![whole("B#3")];
        let al = align(&a, &b);
        assert_eq!(al.pairs.len(), 2);
        assert!(al.pairs.iter().all(|(o, g)| o.staff == g.staff));
        assert!(al.deletions.is_empty() && al.insertions.is_empty());
    }
}
