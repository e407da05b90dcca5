//! Standard MIDI File export (format 0, 24 ticks per quarter).

use super::{measure_grid, GridSeq};

const VELOCITY: u8 = 80;
const TEMPO_US_PER_QUARTER: u32 = 500_000;

fn vlq(mut v: u32, out: &mut Vec<u8>) {
    let mut buf = [0u8; 5];
    let mut n = 0;
    loop {
        buf[n] = (v & 0x7f) as u8;
        n += 1;
        v >>= 7;
        if v == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        out.push(if i > 0 { buf[i] | 0x80 } else { buf[i] });
    }
}

/// Encode a grid sequence as an SMF with time-signature meta events at
/// every meter change.
pub fn write_smf(seq: &GridSeq) -> Vec<u8> {
    // (tick, order, bytes): at equal ticks meta first, then note-offs, then note-ons.
    let mut timed: Vec<(i64, u8, Vec<u8>)> = Vec::new();
    timed.push((0, 0, {
        let t = TEMPO_US_PER_QUARTER.to_be_bytes();
        vec![0xff, 0x51, 0x03, t[1], t[2], t[3]]
    }));
    let end = seq.events.iter().map(|e| e.onset + e.duration).max().unwrap_or(0);
    let grid = measure_grid(&seq.meter, seq.measures, 0);
    let mut prev = None;
    for &(start, time) in &grid {
        if prev != Some(time) {
            let denom_pow = time.beat_type().trailing_zeros() as u8;
            timed.push((start, 0, vec![0xff, 0x58, 0x04, time.beats() as u8, denom_pow, 24, 8]));
            prev = Some(time);
        }
    }
    for e in &seq.events {
        let on = e.onset.max(0);
        timed.push((on, 2, vec![0x90, e.midi & 0x7f, VELOCITY]));
        timed.push((on + e.duration.max(1), 1, vec![0x80, e.midi & 0x7f, 0]));
    }
    timed.sort_by_key(|(t, order, _)| (*t, *order));

    let mut track = Vec::new();
    let mut now = 0;
    for (t, _, bytes) in timed {
        vlq((t - now) as u32, &mut track);
        track.extend(bytes);
        now = t;
    }
    let last = grid.last().map_or(0, |(s, t)| s + super::measure_ticks(*t)).max(end);
    vlq((last - now).max(0) as u32, &mut track);
    track.extend([0xff, 0x2f, 0x00]);

    let mut out = Vec::with_capacity(track.len() + 22);
    out.extend(b"MThd");
    out.extend(6u32.to_be_bytes());
    out.extend(0u16.to_be_bytes());
    out.extend(1u16.to_be_bytes());
    out.extend(24u16.to_be_bytes());
    out.extend(b"MTrk");
    out.extend((track.len() as u32).to_be_bytes());
    out.extend(track);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::note_level::{NoteLevelEvent, NoteLevelSeq};
    use crate::notation::TimeSignature;

    #[test]
    fn variable_length_quantities() {
        for (v, bytes) in [(0, vec![0x00]), (0x7f, vec![0x7f]), (0x80, vec![0x81, 0x00]), (0x3fff, vec![0xff, 0x7f])] {
            let mut out = Vec::new();
            vlq(v, &mut out);
            assert_eq!(out, bytes);
        }
    }

    #[test]
    fn single_note_file() {
        let s = NoteLevelSeq {
            events: vec![NoteLevelEvent { onset: 0, midi: 60, duration: 24 }],
            meter: vec![(0, TimeSignature::new(3, 4).unwrap())],
            measures: 1,
        };
        let bytes = write_smf(&s);
        assert_eq!(&bytes[..4], b"MThd");
        assert_eq!(&bytes[12..14], &[0, 24]);
        assert_eq!(&bytes[14..18], b"MTrk");
        let len = u32::from_be_bytes(bytes[18..22].try_into().unwrap()) as usize;
        assert_eq!(bytes.len(), 22 + len);
        let track = &bytes[22..];
        assert!(track.windows(3).any(|w| w == [0x90, 60, VELOCITY]));
        assert!(track.windows(4).any(|w| w == [0x18, 0x80, 60, 0]));
        assert!(track.windows(5).any(|w| w == [0x58, 0x04, 3, 2, 24]));
        assert_eq!(&track[track.len() - 4..], &[0x30, 0xff, 0x2f, 0x00]);
    }
}
