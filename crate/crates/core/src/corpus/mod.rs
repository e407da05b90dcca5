//! Dataset construction: cut songs into slices, split song-wise into
//! train/validation/test, and write line-aligned (note-level input,
//! score target) token files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::notation::{tie_fixes, validate_score, Score, Staff, StaffId, ValidationReport};
use crate::note_level::{downconvert, perturb, snap_to_grid, tokenize_notelevel, PerturbParams};
use crate::tokens::{tokenize_score, Form};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("slice length must be at least one measure")]
    SliceLength,
    #[error("song `{song}` is not a valid score ({} issue(s), first: {})", .report.issues.len(), .report.issues[0])]
    InvalidSong { song: String, report: ValidationReport },
    #[error("need at least {needed} songs to fill every split, got {got}")]
    TooFewSongs { needed: usize, got: usize },
    #[error("song id `{0}` appears more than once")]
    DuplicateSong(String),
    #[error("split ratios must not all be zero")]
    Ratios,
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Where slices begin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SegmentPolicy {
    /// Every `n` measures; a shorter remainder forms the last slice.
    FixedMeasures { n: usize },
    /// At the system breaks recorded in the source, or every `fallback`
    /// measures when a song has none.
    SystemMarks { fallback: usize },
}

impl Default for SegmentPolicy {
    fn default() -> SegmentPolicy {
        SegmentPolicy::SystemMarks { fallback: 4 }
    }
}

/// A measure range of a song, re-rooted as a standalone score.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSlice {
    pub song: String,
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub score: Score,
}

fn reroot(staff: &Staff, id: StaffId, start: usize, end: usize) -> Staff {
    let at = staff.attributes_at(start);
    let mut out = Staff::new(at.clef, at.key, at.time);
    out.measures = staff.measures[start..end].to_vec();
    if let Some(first) = out.measures.first_mut() {
        first.clef = None;
        first.key = None;
        first.time = None;
    }
    // The slice was cut out of a valid staff, so the only broken chains are
    // the ones crossing its edges; each half loses its outward link.
    for fix in tie_fixes(id, &out) {
        if let Some(n) = out.measures[fix.measure].voices[fix.voice].events[fix.event].as_note_mut() {
            n.tie = fix.replacement;
        }
    }
    out
}

/// Cut a valid score into contiguous slices covering every measure.
/// `marks` are measure indices where a new system starts.
pub fn segment(song: &str, score: &Score, policy: SegmentPolicy, marks: &[usize]) -> Result<Vec<SystemSlice>, CorpusError> {
    let report = validate_score(score);
    if !report.is_empty() {
        return Err(CorpusError::InvalidSong { song: song.to_string(), report });
    }
    let total = score.measure_count();
    let every = |n: usize| -> Result<BTreeSet<usize>, CorpusError> {
        if n == 0 {
            return Err(CorpusError::SliceLength);
        }
        Ok((0..total).step_by(n).collect())
    };
    let mut starts: BTreeSet<usize> = match policy {
        SegmentPolicy::FixedMeasures { n } => every(n)?,
        SegmentPolicy::SystemMarks { fallback } => {
            let inside: BTreeSet<usize> = marks.iter().copied().filter(|m| *m < total).collect();
            if inside.iter().any(|m| *m > 0) {
                inside
            } else {
                every(fallback)?
            }
        }
    };
    starts.insert(0);
    let bounds: Vec<usize> = starts.into_iter().filter(|m| *m < total).chain([total]).collect();
    Ok(bounds
        .windows(2)
        .enumerate()
        .map(|(index, w)| SystemSlice {
            song: song.to_string(),
            index,
            start: w[0],
            end: w[1],
            score: Score {
                right: reroot(&score.right, StaffId::Right, w[0], w[1]),
                left: reroot(&score.left, StaffId::Left, w[0], w[1]),
            },
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_RATIOS: [u32; 3] = [8, 1, 1];

/// Split sizes by largest remainder, then topped up so that no split with a
/// nonzero ratio is empty.
pub fn split_sizes(n: usize, ratios: [u32; 3]) -> Result<[usize; 3], CorpusError> {
    let total: u64 = ratios.iter().map(|r| u64::from(*r)).sum();
    if total == 0 {
        return Err(CorpusError::Ratios);
    }
    let needed = ratios.iter().filter(|r| **r > 0).count();
    if n < needed {
        return Err(CorpusError::TooFewSongs { needed, got: n });
    }
    let mut sizes = [0usize; 3];
    let mut rem = [(0u64, 0usize); 3];
    for k in 0..3 {
        let exact = n as u64 * u64::from(ratios[k]);
        sizes[k] = (exact / total) as usize;
        rem[k] = (exact % total, k);
    }
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = n - sizes.iter().sum::<usize>();
    for &(_, k) in rem.iter().take(short) {
        sizes[k] += 1;
    }
    for k in 0..3 {
        if ratios[k] > 0 && sizes[k] == 0 {
            let donor = (0..3).max_by_key(|&j| (sizes[j], std::cmp::Reverse(j))).expect("three splits");
            sizes[donor] -= 1;
            sizes[k] += 1;
        }
    }
    Ok(sizes)
}

/// Token-length summary of one split.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub lines: usize,
    pub input_mean: f64,
    pub input_max: usize,
    pub target_mean: f64,
    pub target_max: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceRecord {
    pub song: String,
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub split: Split,
    pub input_tokens: usize,
    pub target_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedSlice {
    pub song: String,
    pub index: usize,
    pub reason: String,
}

/// Everything needed to rebuild a corpus byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub ratios: [u32; 3],
    pub policy: SegmentPolicy,
    pub form: Form,
    pub beat_tokens: bool,
    pub perturb: Option<PerturbParams>,
    /// Song id to split, sorted by id.
    pub assignment: BTreeMap<String, Split>,
    #[serde(default)]
    pub slices: Vec<SliceRecord>,
    #[serde(default)]
    pub skipped: Vec<SkippedSlice>,
    #[serde(default)]
    pub stats: BTreeMap<Split, LengthStats>,
}

impl CorpusManifest {
    pub fn songs_in(&self, split: Split) -> impl Iterator<Item = &str> {
        self.assignment.iter().filter(move |(_, s)| **s == split).map(|(id, _)| id.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Build options other than the split itself.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub seed: u64,
    pub ratios: [u32; 3],
    pub policy: SegmentPolicy,
    pub form: Form,
    pub beat_tokens: bool,
    pub perturb: Option<PerturbParams>,
}

impl Default for CorpusConfig {
    fn default() -> CorpusConfig {
        CorpusConfig {
            seed: 0,
            ratios: DEFAULT_RATIOS,
            policy: SegmentPolicy::default(),
            form: Form::Regular,
            beat_tokens: true,
            perturb: None,
        }
    }
}

/// Shuffle song ids with a seeded ChaCha stream and cut the shuffled list
/// into train, validation and test. Ids are sorted first, so the result
/// does not depend on input order.
pub fn split<S: AsRef<str>>(songs: &[S], ratios: [u32; 3], seed: u64) -> Result<BTreeMap<String, Split>, CorpusError> {
    let mut ids: Vec<String> = songs.iter().map(|s| s.as_ref().to_string()).collect();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(CorpusError::DuplicateSong(w[0].clone()));
    }
    let sizes = split_sizes(ids.len(), ratios)?;
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = BTreeMap::new();
    let mut it = ids.into_iter();
    for (split, size) in Split::ALL.into_iter().zip(sizes) {
        out.extend(it.by_ref().take(size).map(|id| (id, split)));
    }
    Ok(out)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Perturbation seed for one slice, independent of how work is scheduled.
pub fn slice_seed(seed: u64, song: &str, index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(fnv1a(song) ^ splitmix64(index as u64)))
}

/// One line pair: note-level input and score-level target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub song: String,
    pub index: usize,
    pub input: Vec<String>,
    pub target: Vec<String>,
}

fn make_pair(slice: &SystemSlice, cfg: &CorpusConfig) -> Result<Pair, String> {
    let grid = downconvert(&slice.score).map_err(|e| e.to_string())?;
    let grid = match cfg.perturb {
        Some(p) => {
            let p = p.with_seed(slice_seed(p.seed, &slice.song, slice.index));
            snap_to_grid(&perturb::<f64>(&grid, &p).map_err(|e| e.to_string())?)
        }
        None => grid,
    };
    let input = tokenize_notelevel(&grid, cfg.beat_tokens).map_err(|e| e.to_string())?;
    let target = tokenize_score(&slice.score, cfg.form).map_err(|e| e.to_string())?;
    Ok(Pair {
        song: slice.song.clone(),
        index: slice.index,
        input: input.iter().map(ToString::to_string).collect(),
        target: target.strings(),
    })
}

/// Tokenize every slice in parallel. Output keeps slice order; slices that
/// fail are reported instead.
pub fn build_pairs(slices: &[SystemSlice], cfg: &CorpusConfig) -> (Vec<Pair>, Vec<SkippedSlice>) {
    let results: Vec<_> = slices.par_iter().map(|s| make_pair(s, cfg).map_err(|e| (s, e))).collect();
    let mut pairs = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(p) => pairs.push(p),
            Err((s, reason)) => skipped.push(SkippedSlice { song: s.song.clone(), index: s.index, reason }),
        }
    }
    (pairs, skipped)
}

/// A song ready for corpus building.
#[derive(Debug, Clone, PartialEq)]
pub struct Song {
    pub id: String,
    pub score: Score,
    /// Measure indices where the source starts a new system.
    pub system_starts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    /// Pairs in (song id, slice index) order.
    pub pairs: Vec<Pair>,
}

impl Corpus {
    pub fn split_pairs(&self, split: Split) -> impl Iterator<Item = &Pair> {
        self.pairs.iter().filter(move |p| self.manifest.assignment.get(&p.song) == Some(&split))
    }

    /// Write `{split}/input.tokens`, `{split}/target.tokens` and
    /// `manifest.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CorpusError> {
        fs::create_dir_all(dir)?;
        for split in Split::ALL {
            let sub = dir.join(split.name());
            fs::create_dir_all(&sub)?;
            let mut input = String::new();
            let mut target = String::new();
            for p in self.split_pairs(split) {
                input.push_str(&p.input.join(" "));
                input.push('\n');
                target.push_str(&p.target.join(" "));
                target.push('\n');
            }
            fs::write(sub.join("input.tokens"), input)?;
            fs::write(sub.join("target.tokens"), target)?;
        }
        fs::write(dir.join("manifest.json"), self.manifest.to_json() + "\n")?;
        Ok(())
    }
}

/// Segment, split and tokenize a set of songs.
pub fn build_corpus(songs: &[Song], cfg: &CorpusConfig) -> Result<Corpus, CorpusError> {
    let ids: Vec<&str> = songs.iter().map(|s| s.id.as_str()).collect();
    let assignment = split(&ids, cfg.ratios, cfg.seed)?;
    let mut order: Vec<&Song> = songs.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let sliced: Vec<Vec<SystemSlice>> = order
        .par_iter()
        .map(|s| segment(&s.id, &s.score, cfg.policy, &s.system_starts))
        .collect::<Result<_, _>>()?;
    let slices: Vec<SystemSlice> = sliced.into_iter().flatten().collect();
    let (pairs, skipped) = build_pairs(&slices, cfg);

    let bounds: BTreeMap<(&str, usize), (usize, usize)> =
        slices.iter().map(|s| ((s.song.as_str(), s.index), (s.start, s.end))).collect();
    let records: Vec<SliceRecord> = pairs
        .iter()
        .map(|p| {
            let (start, end) = bounds[&(p.song.as_str(), p.index)];
            SliceRecord {
                song: p.song.clone(),
                index: p.index,
                start,
                end,
                split: assignment[&p.song],
                input_tokens: p.input.len(),
                target_tokens: p.target.len(),
            }
        })
        .collect();
    let mut stats = BTreeMap::new();
    for split in Split::ALL {
        let rs: Vec<&SliceRecord> = records.iter().filter(|r| r.split == split).collect();
        let n = rs.len();
        let mean = |f: fn(&SliceRecord) -> usize| {
            if n == 0 {
                0.0
            } else {
                rs.iter().map(|r| f(r) as f64).sum::<f64>() / n as f64
            }
        };
        stats.insert(
            split,
            LengthStats {
                lines: n,
                input_mean: mean(|r| r.input_tokens),
                input_max: rs.iter().map(|r| r.input_tokens).max().unwrap_or(0),
                target_mean: mean(|r| r.target_tokens),
                target_max: rs.iter().map(|r| r.target_tokens).max().unwrap_or(0),
            },
        );
    }
    Ok(Corpus {
        manifest: CorpusManifest {
            seed: cfg.seed,
            ratios: cfg.ratios,
            policy: cfg.policy,
            form: cfg.form,
            beat_tokens: cfg.beat_tokens,
            perturb: cfg.perturb,
            assignment,
            slices: records,
            skipped,
            stats,
        },
        pairs,
    })
}
