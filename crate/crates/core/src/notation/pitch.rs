use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::NotationError;

/// Diatonic pitch letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    C,
    D,
    E,
    F,
    G,
    A,
    B,
}

impl Step {
    pub const ALL: [Step; 7] = [Step::C, Step::D, Step::E, Step::F, Step::G, Step::A, Step::B];

    /// Semitones above C within the same octave.
    pub fn semitones(self) -> i32 {
        match self {
            Step::C => 0,
            Step::D => 2,
            Step::E => 4,
            Step::F => 5,
            Step::G => 7,
            Step::A => 9,
            Step::B => 11,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Step::C => 'C',
            Step::D => 'D',
            Step::E => 'E',
            Step::F => 'F',
            Step::G => 'G',
            Step::A => 'A',
            Step::B => 'B',
        }
    }

    pub fn from_letter(c: char) -> Option<Step> {
        Some(match c {
            'C' => Step::C,
            'D' => Step::D,
            'E' => Step::E,
            'F' => Step::F,
            'G' => Step::G,
            'A' => Step::A,
            'B' => Step::B,
            _ => return None,
        })
    }
}

/// Accidental applied to a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Alter {
    DoubleFlat,
    Flat,
    #[default]
    Natural,
    Sharp,
    DoubleSharp,
}

impl Alter {
    pub const ALL: [Alter; 5] = [
        Alter::DoubleSharp,
        Alter::Sharp,
        Alter::Flat,
        Alter::DoubleFlat,
        Alter::Natural,
    ];

    pub fn semitones(self) -> i32 {
        match self {
            Alter::DoubleFlat => -2,
            Alter::Flat => -1,
            Alter::Natural => 0,
            Alter::Sharp => 1,
            Alter::DoubleSharp => 2,
        }
    }

    pub fn from_semitones(n: i32) -> Option<Alter> {
        Some(match n {
            -2 => Alter::DoubleFlat,
            -1 => Alter::Flat,
            0 => Alter::Natural,
            1 => Alter::Sharp,
            2 => Alter::DoubleSharp,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Alter::DoubleFlat => "bb",
            Alter::Flat => "b",
            Alter::Natural => "",
            Alter::Sharp => "#",
            Alter::DoubleSharp => "##",
        }
    }
}

pub const MAX_OCTAVE: u8 = 8;

/// A spelled pitch. Rendered as `C4`, `F#3`, `Bbb5`.
///
/// Ordering is by MIDI number first, then by spelling, so enharmonic
/// spellings of one key are distinct but adjacent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pitch {
    step: Step,
    alter: Alter,
    octave: u8,
}

impl Pitch {
    pub fn new(step: Step, alter: Alter, octave: u8) -> Result<Pitch, NotationError> {
        if octave > MAX_OCTAVE {
            return Err(NotationError::Octave(octave));
        }
        Ok(Pitch { step, alter, octave })
    }

    pub fn natural(step: Step, octave: u8) -> Result<Pitch, NotationError> {
        Pitch::new(step, Alter::Natural, octave)
    }

    pub fn step(&self) -> Step {
        self.step
    }

    pub fn alter(&self) -> Alter {
        self.alter
    }

    pub fn octave(&self) -> u8 {
        self.octave
    }

    /// Chromatic key number with C4 = 60. Spans 10 (Cbb0) to 121 (B##8).
    pub fn midi_number(&self) -> u8 {
        let n = (self.octave as i32 + 1) * 12 + self.step.semitones() + self.alter.semitones();
        n as u8
    }

    /// Every representable spelling: 7 steps x 5 alters x 9 octaves.
    pub fn all() -> impl Iterator<Item = Pitch> {
        (0..=MAX_OCTAVE).flat_map(|octave| {
            Step::ALL.into_iter().flat_map(move |step| {
                Alter::ALL
                    .into_iter()
                    .map(move |alter| Pitch { step, alter, octave })
            })
        })
    }
}

impl Ord for Pitch {
    fn cmp(&self, other: &Self) -> Ordering {
        self.midi_number()
            .cmp(&other.midi_number())
            .then(self.octave.cmp(&other.octave))
            .then(self.step.cmp(&other.step))
            .then(self.alter.cmp(&other.alter))
    }
}

impl PartialOrd for Pitch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pitch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.step.letter(), self.alter.symbol(), self.octave)
    }
}

impl FromStr for Pitch {
    type Err = NotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NotationError::PitchSyntax(s.to_string());
        let mut chars = s.chars();
        let step = chars.next().and_then(Step::from_letter).ok_or_else(bad)?;
        let rest = chars.as_str();
        let digits_at = rest.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
        let (acc, oct) = rest.split_at(digits_at);
        let alter = match acc {
            "" => Alter::Natural,
            "#" => Alter::Sharp,
            "##" => Alter::DoubleSharp,
            "b" => Alter::Flat,
            "bb" => Alter::DoubleFlat,
            _ => return Err(bad()),
        };
        if oct.len() != 1 {
            return Err(bad());
        }
        let octave: u8 = oct.parse().map_err(|_| bad())?;
        Pitch::new(step, alter, octave)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midi_anchors() {
        assert_eq!(Pitch::natural(Step::C, 4).unwrap().midi_number(), 60);
        let b_sharp3 = Pitch::new(Step::B, Alter::Sharp, 3).unwrap();
        assert_eq!(b_sharp3.midi_number(), 60);
    }

    #[test]
    fn double_flat_against_table() {
        // Independent table: A in octave n sits at 21 + 12n.
        let table_a5 = 21 + 12 * 5;
        assert_eq!(table_a5, 81);
        let p: Pitch = "Abb5".parse().unwrap();
        assert_eq!(p.midi_number(), 79);
    }

    #[test]
    fn parse_and_render() {
        for s in ["C4", "F#3", "Bbb0", "G##8", "Eb5"] {
            let p: Pitch = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        for s in ["H4", "C", "C9", "C#x4", "c4", "C10", ""] {
            assert!(s.parse::<Pitch>().is_err(), "{s}");
        }
    }

    #[test]
    fn enumeration_is_315_and_distinct() {
        let all: Vec<_> = Pitch::all().collect();
        assert_eq!(all.len(), 315);
        let set: std::collections::HashSet<_> = all.iter().map(|p| p.to_string()).collect();
        assert_eq!(set.len(), 315);
        let lo = all.iter().map(|p| p.midi_number()).min().unwrap();
        let hi = all.iter().map(|p| p.midi_number()).max().unwrap();
        assert_eq!((lo, hi), (10, 121));
    }

    #[test]
    fn enharmonics_order_adjacent() {
        let b_sharp3: Pitch = "B#3".parse().unwrap();
        let c4: Pitch = "C4".parse().unwrap();
        let d_bb4: Pitch = "Dbb4".parse().unwrap();
        let c_sharp4: Pitch = "C#4".parse().unwrap();
        let mut v = vec![c_sharp4, d_bb4, c4, b_sharp3];
        v.sort();
        assert_eq!(v, vec![b_sharp3, c4, d_bb4, c_sharp4]);
    }
}
