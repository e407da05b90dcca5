mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scoretok::note_level::PerturbParams;
use scoretok::tokens::Form;

/// Score and note-level tokenization, MusicXML conversion, corpus building
/// and evaluation for piano scores.
#[derive(Parser, Debug)]
#[command(name = "scoretok", version, max_term_width = 100)]
pub struct Cli {
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, env = "SCORETOK_JOBS", default_value_t = 0)]
    pub jobs: usize,

    /// Format of summaries written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Json)]
    pub report: ReportFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Regular,
    Concatenated,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Form {
        match f {
            FormArg::Regular => Form::Regular,
            FormArg::Concatenated => Form::Concatenated,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
pub struct FormOpt {
    /// Score token layout.
    #[arg(long, value_enum, default_value_t = FormArg::Regular)]
    pub form: FormArg,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct BeatOpt {
    /// Leave `beat` markers out of note-level tokens.
    #[arg(long)]
    pub no_beat_tokens: bool,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct PerturbOpt {
    /// Add timing noise to note-level sequences before tokenizing.
    #[arg(long)]
    pub perturb: bool,
    /// Standard deviation of the onset shift, in units of note duration.
    #[arg(long, default_value_t = 0.08)]
    pub onset_sigma: f64,
    /// Mean duration growth, in units of note duration.
    #[arg(long, default_value_t = 0.8)]
    pub dur_mu: f64,
    /// Standard deviation of the duration growth, in units of note duration.
    #[arg(long, default_value_t = 0.24)]
    pub dur_sigma: f64,
    /// Seed for shuffling and timing noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl PerturbOpt {
    pub fn params(&self) -> Option<PerturbParams> {
        self.perturb.then(|| PerturbParams {
            onset_sigma: self.onset_sigma,
            dur_mu: self.dur_mu,
            dur_sigma: self.dur_sigma,
            seed: self.seed,
            ..PerturbParams::default()
        })
    }
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SegmentOpt {
    /// Cut songs every N measures instead of at system breaks.
    #[arg(long, value_name = "N")]
    pub slice_measures: Option<usize>,
    /// Slice length for songs without system breaks.
    #[arg(long, value_name = "N", default_value_t = 4)]
    pub fallback_measures: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// MusicXML files to score tokens, one line per input.
    Tokenize {
        /// Files or directories of .musicxml/.xml files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output token file (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        form: FormOpt,
        /// Emit one line per slice of N measures instead of one per file.
        #[arg(long, value_name = "N")]
        slice_measures: Option<usize>,
    },
    /// Score token lines to MusicXML files, with a format-error summary.
    Detokenize {
        /// Token file, one sequence per line.
        input: PathBuf,
        /// Directory for the numbered .musicxml files.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// MusicXML files to note-level tokens (or JSON sequences), one line per input.
    Downconvert {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write note-level sequences as JSON lines instead of tokens.
        #[arg(long)]
        json: bool,
        /// Also write a standard MIDI file per input into this directory.
        #[arg(long, value_name = "DIR")]
        midi_dir: Option<PathBuf>,
        #[command(flatten)]
        beats: BeatOpt,
        #[command(flatten)]
        perturb: PerturbOpt,
    },
    /// Add timing noise to JSON note-level sequences from `downconvert --json`.
    Perturb {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// What to write per line.
        #[arg(long, value_enum, default_value_t = PerturbOutput::Tokens)]
        emit: PerturbOutput,
        #[command(flatten)]
        beats: BeatOpt,
        /// Standard deviation of the onset shift, in units of note duration.
        #[arg(long, default_value_t = 0.08)]
        onset_sigma: f64,
        /// Mean duration growth, in units of note duration.
        #[arg(long, default_value_t = 0.8)]
        dur_mu: f64,
        /// Standard deviation of the duration growth, in units of note duration.
        #[arg(long, default_value_t = 0.24)]
        dur_sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Assign songs to train/validation/test and write the manifest.
    CorpusSplit {
        /// Song files or directories; the file stem is the song id.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Manifest path (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Split ratios as train:validation:test.
        #[arg(long, default_value = "8:1:1")]
        ratios: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build line-aligned input/target token files for every split.
    BuildPairs {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Corpus directory: {train,validation,test}/{input,target}.tokens and manifest.json.
        #[arg(short, long)]
        output: PathBuf,
        /// Rebuild with the settings recorded in an existing manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value = "8:1:1")]
        ratios: String,
        #[command(flatten)]
        form: FormOpt,
        #[command(flatten)]
        beats: BeatOpt,
        #[command(flatten)]
        perturb: PerturbOpt,
        #[command(flatten)]
        segment: SegmentOpt,
    },
    /// Check MusicXML files or token files (.tokens, one sequence per line).
    Validate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Treat unsupported MusicXML elements as errors.
        #[arg(long)]
        strict: bool,
    },
    /// Compare generated scores against references, aspect by aspect.
    Evaluate {
        /// Reference directory of MusicXML files, or a reference token file.
        reference: PathBuf,
        /// Generated directory with matching file names, or a line-aligned token file.
        generated: PathBuf,
    },
    /// Tokens-per-line statistics; with two files, the ratio of their means.
    Stats {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Print a token inventory, one token per line.
    Vocab {
        #[arg(long, value_enum, default_value_t = VocabSide::Score)]
        side: VocabSide,
        #[command(flatten)]
        form: FormOpt,
        #[command(flatten)]
        beats: BeatOpt,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PerturbOutput {
    /// Note-level tokens of the snapped sequence.
    Tokens,
    /// Snapped sequence as JSON.
    Json,
    /// Unsnapped real-valued sequence as JSON.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VocabSide {
    Score,
    Note,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            io::diag("error", "jobs", e);
            return ExitCode::from(2);
        }
    };
    match pool.install(|| commands::run(&cli)) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            io::diag("error", "command", e);
            ExitCode::from(2)
        }
    }
}
