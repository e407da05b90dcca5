use std::collections::BTreeMap;
use std::error::Error;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use scoretok::corpus::{
    build_corpus, segment, slice_seed, split, CorpusConfig, CorpusManifest, SegmentPolicy, Song, DEFAULT_RATIOS,
};
use scoretok::metric::{aggregate, evaluate, Aspect, Category, MetricReport};
use scoretok::musicxml::{emit_musicxml, Profile};
use scoretok::note_level::{
    downconvert, perturb, snap_to_grid, tokenize_notelevel, write_smf, GridSeq, NoteLevelSeq, PerturbParams,
};
use scoretok::tokens::{detokenize, split_line, tokenize_score, validate_tokens, Form};
use scoretok::Score;
use serde_json::{json, Value};

use crate::io::{diag, diag_with, item_name, read_lines, read_score, score_inputs, stem, writer};
use crate::{Cli, Command, PerturbOutput, ReportFormat, SegmentOpt, VocabSide};

pub type Fallible<T> = Result<T, Box<dyn Error + Send + Sync>>;

/// Run one subcommand; returns the number of failed items.
pub fn run(cli: &Cli) -> Fallible<usize> {
    match &cli.command {
        Command::Tokenize { inputs, output, form, slice_measures } => {
            tokenize(inputs, output.as_deref(), form.form.into(), *slice_measures)
        }
        Command::Detokenize { input, output } => detokenize_file(input, output, cli.report),
        Command::Downconvert { inputs, output, json, midi_dir, beats, perturb } => cmd_downconvert(
            inputs,
            output.as_deref(),
            *json,
            midi_dir.as_deref(),
            !beats.no_beat_tokens,
            perturb.params(),
        ),
        Command::Perturb { input, output, emit, beats, onset_sigma, dur_mu, dur_sigma, seed } => {
            let params = PerturbParams {
                onset_sigma: *onset_sigma,
                dur_mu: *dur_mu,
                dur_sigma: *dur_sigma,
                seed: *seed,
                ..PerturbParams::default()
            };
            cmd_perturb(input, output.as_deref(), *emit, !beats.no_beat_tokens, params)
        }
        Command::CorpusSplit { inputs, output, ratios, seed } => corpus_split(inputs, output.as_deref(), ratios, *seed),
        Command::BuildPairs { inputs, output, manifest, ratios, form, beats, perturb, segment } => {
            let cfg = CorpusConfig {
                seed: perturb.seed,
                ratios: parse_ratios(ratios)?,
                policy: policy(segment),
                form: form.form.into(),
                beat_tokens: !beats.no_beat_tokens,
                perturb: perturb.params(),
            };
            build_pairs(inputs, output, manifest.as_deref(), cfg, cli.report)
        }
        Command::Validate { inputs, strict } => validate(inputs, *strict, cli.report),
        Command::Evaluate { reference, generated } => cmd_evaluate(reference, generated, cli.report),
        Command::Stats { inputs } => stats(inputs, cli.report),
        Command::Vocab { side, form, beats } => {
            let v = match side {
                VocabSide::Score => scoretok::tokens::vocabulary(form.form.into()),
                VocabSide::Note => scoretok::note_level::vocabulary(!beats.no_beat_tokens),
            };
            let mut out = writer(None)?;
            for t in v {
                writeln!(out, "{t}")?;
            }
            out.flush()?;
            Ok(0)
        }
    }
}

fn policy(s: &SegmentOpt) -> SegmentPolicy {
    match s.slice_measures {
        Some(n) => SegmentPolicy::FixedMeasures { n },
        None => SegmentPolicy::SystemMarks { fallback: s.fallback_measures },
    }
}

fn parse_ratios(s: &str) -> Fallible<[u32; 3]> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("ratios `{s}` must look like 8:1:1");
    if parts.len() != 3 {
        return Err(bad().into());
    }
    let mut out = DEFAULT_RATIOS;
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| bad())?;
    }
    Ok(out)
}

/// Write successful lines in input order and report failures; returns the
/// failure count.
fn emit_lines(results: Vec<(String, Result<Vec<String>, String>)>, output: Option<&Path>) -> Fallible<usize> {
    let mut out = writer(output)?;
    let mut failed = 0;
    for (item, r) in results {
        match r {
            Ok(lines) => {
                for l in lines {
                    writeln!(out, "{l}")?;
                }
            }
            Err(e) => {
                failed += 1;
                diag("error", &item, e);
            }
        }
    }
    out.flush()?;
    Ok(failed)
}

fn tokenize(inputs: &[PathBuf], output: Option<&Path>, form: Form, slice: Option<usize>) -> Fallible<usize> {
    let files = score_inputs(inputs)?;
    let results = files
        .par_iter()
        .map(|p| {
            let r = (|| {
                let score = read_score(p, &Profile::default())?.score;
                let parts = match slice {
                    None => vec![score],
                    Some(n) => segment(&stem(p), &score, SegmentPolicy::FixedMeasures { n }, &[])
                        .map_err(|e| e.to_string())?
                        .into_iter()
                        .map(|s| s.score)
                        .collect(),
                };
                parts
                    .iter()
                    .map(|s| tokenize_score(s, form).map(|t| t.to_line()).map_err(|e| e.to_string()))
                    .collect()
            })();
            (item_name(p), r)
        })
        .collect();
    emit_lines(results, output)
}

fn detokenize_file(input: &Path, output: &Path, report: ReportFormat) -> Fallible<usize> {
    let lines = read_lines(input)?;
    fs::create_dir_all(output)?;
    let width = lines.len().to_string().len().max(4);
    let results: Vec<_> = lines
        .par_iter()
        .enumerate()
        .map(|(i, line)| {
            let (score, errors) = detokenize(&split_line(line));
            let path = output.join(format!("{:0width$}.musicxml", i + 1));
            let written = emit_musicxml(&score)
                .map_err(|e| e.to_string())
                .and_then(|xml| fs::write(&path, xml).map_err(|e| e.to_string()));
            (i, errors, written)
        })
        .collect();
    let mut failed = 0;
    let mut recovered = 0;
    let mut kinds: BTreeMap<String, usize> = BTreeMap::new();
    for (i, errors, written) in results {
        let item = format!("{}:{}", item_name(input), i + 1);
        if !errors.is_empty() {
            recovered += 1;
            for e in &errors.errors {
                *kinds.entry(kind_name(e.kind)).or_default() += 1;
            }
            diag_with("warning", &item, "recovered from format errors", json!({ "errors": errors.errors }));
        }
        if let Err(e) = written {
            failed += 1;
            diag("error", &item, e);
        }
    }
    let n = lines.len();
    let rate = if n == 0 { 0.0 } else { recovered as f64 / n as f64 };
    let summary = json!({
        "lines": n,
        "lines_with_format_errors": recovered,
        "format_error_rate": (rate * 10000.0).round() / 10000.0,
        "error_kinds": kinds,
        "failed": failed,
    });
    print_report(report, &summary, || {
        let mut s = format!("{n} lines, {recovered} with format errors ({:.2}%)", 100.0 * rate);
        for (k, c) in &kinds {
            s.push_str(&format!("\n  {k}: {c}"));
        }
        s
    });
    Ok(failed)
}

fn kind_name<T: serde::Serialize>(k: T) -> String {
    serde_json::to_value(k).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn print_report(format: ReportFormat, value: &Value, text: impl FnOnce() -> String) {
    match format {
        ReportFormat::Json => println!("{value}"),
        ReportFormat::Text => println!("{}", text()),
    }
}

fn note_line(seq: &GridSeq, json: bool, beats: bool) -> Result<String, String> {
    if json {
        return serde_json::to_string(seq).map_err(|e| e.to_string());
    }
    let toks = tokenize_notelevel(seq, beats).map_err(|e| e.to_string())?;
    Ok(toks.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))
}

fn cmd_downconvert(
    inputs: &[PathBuf],
    output: Option<&Path>,
    json: bool,
    midi_dir: Option<&Path>,
    beats: bool,
    noise: Option<PerturbParams>,
) -> Fallible<usize> {
    let files = score_inputs(inputs)?;
    if let Some(d) = midi_dir {
        fs::create_dir_all(d)?;
    }
    let results = files
        .par_iter()
        .map(|p| {
            let r = (|| {
                let score = read_score(p, &Profile::default())?.score;
                let mut seq = downconvert(&score).map_err(|e| e.to_string())?;
                if let Some(params) = noise {
                    let params = params.with_seed(slice_seed(params.seed, &stem(p), 0));
                    seq = snap_to_grid(&perturb::<f64>(&seq, &params).map_err(|e| e.to_string())?);
                }
                if let Some(d) = midi_dir {
                    fs::write(d.join(format!("{}.mid", stem(p))), write_smf(&seq)).map_err(|e| e.to_string())?;
                }
                Ok(vec![note_line(&seq, json, beats)?])
            })();
            (item_name(p), r)
        })
        .collect();
    emit_lines(results, output)
}

fn cmd_perturb(input: &Path, output: Option<&Path>, emit: PerturbOutput, beats: bool, params: PerturbParams) -> Fallible<usize> {
    let lines = read_lines(input)?;
    let name = item_name(input);
    let results = lines
        .par_iter()
        .enumerate()
        .map(|(i, line)| {
            let r = (|| {
                let seq: GridSeq = serde_json::from_str(line).map_err(|e| e.to_string())?;
                let p = params.with_seed(slice_seed(params.seed, "", i));
                let noisy: NoteLevelSeq<f64> = perturb(&seq, &p).map_err(|e| e.to_string())?;
                let out = match emit {
                    PerturbOutput::Raw => serde_json::to_string(&noisy).map_err(|e| e.to_string())?,
                    PerturbOutput::Json => note_line(&snap_to_grid(&noisy), true, beats)?,
                    PerturbOutput::Tokens => note_line(&snap_to_grid(&noisy), false, beats)?,
                };
                Ok(vec![out])
            })();
            (format!("{name}:{}", i + 1), r)
        })
        .collect();
    emit_lines(results, output)
}

fn corpus_split(inputs: &[PathBuf], output: Option<&Path>, ratios: &str, seed: u64) -> Fallible<usize> {
    let ids: Vec<String> = score_inputs(inputs)?.iter().map(|p| stem(p)).collect();
    let ratios = parse_ratios(ratios)?;
    let assignment = split(&ids, ratios, seed)?;
    let cfg = CorpusConfig { seed, ratios, ..CorpusConfig::default() };
    let manifest = CorpusManifest {
        seed,
        ratios,
        policy: cfg.policy,
        form: cfg.form,
        beat_tokens: cfg.beat_tokens,
        perturb: cfg.perturb,
        assignment,
        slices: Vec::new(),
        skipped: Vec::new(),
        stats: BTreeMap::new(),
    };
    let mut out = writer(output)?;
    writeln!(out, "{}", manifest.to_json())?;
    out.flush()?;
    Ok(0)
}

fn build_pairs(
    inputs: &[PathBuf],
    output: &Path,
    manifest: Option<&Path>,
    mut cfg: CorpusConfig,
    report: ReportFormat,
) -> Fallible<usize> {
    let previous: Option<CorpusManifest> = match manifest {
        Some(p) => Some(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => None,
    };
    if let Some(m) = &previous {
        cfg = CorpusConfig {
            seed: m.seed,
            ratios: m.ratios,
            policy: m.policy,
            form: m.form,
            beat_tokens: m.beat_tokens,
            perturb: m.perturb,
        };
    }
    let files = score_inputs(inputs)?;
    let parsed: Vec<_> = files
        .par_iter()
        .map(|p| (p, read_score(p, &Profile::default())))
        .collect();
    let mut failed = 0;
    let mut songs = Vec::new();
    for (p, r) in parsed {
        match r {
            Ok(parsed) => songs.push(Song { id: stem(p), score: parsed.score, system_starts: parsed.system_starts }),
            Err(e) => {
                failed += 1;
                diag("error", &item_name(p), e);
            }
        }
    }
    let corpus = build_corpus(&songs, &cfg)?;
    if let Some(m) = &previous {
        if m.assignment != corpus.manifest.assignment {
            return Err("song set differs from the one recorded in the manifest".into());
        }
    }
    for s in &corpus.manifest.skipped {
        failed += 1;
        diag("error", &format!("{}#{}", s.song, s.index), &s.reason);
    }
    corpus.write(output)?;
    let stats = serde_json::to_value(&corpus.manifest.stats)?;
    let summary = json!({ "songs": songs.len(), "pairs": corpus.pairs.len(), "failed": failed, "stats": stats });
    print_report(report, &summary, || {
        let mut s = format!("{} songs, {} pairs, {failed} failed", songs.len(), corpus.pairs.len());
        for (split, st) in &corpus.manifest.stats {
            s.push_str(&format!(
                "\n  {split}: {} lines, input {:.1} tokens (max {}), target {:.1} tokens (max {})",
                st.lines, st.input_mean, st.input_max, st.target_mean, st.target_max
            ));
        }
        s
    });
    Ok(failed)
}

fn is_token_file(p: &Path) -> bool {
    p.extension().is_some_and(|e| e == "tokens" || e == "txt")
}

fn validate(inputs: &[PathBuf], strict: bool, report: ReportFormat) -> Fallible<usize> {
    let profile = if strict { Profile::strict() } else { Profile::default() };
    let mut items = 0;
    let mut failed = 0;
    let (token_files, others): (Vec<PathBuf>, Vec<PathBuf>) = inputs.iter().cloned().partition(|p| is_token_file(p));
    for f in &token_files {
        let lines = read_lines(f)?;
        let reports: Vec<_> = lines.par_iter().map(|l| validate_tokens(&split_line(l))).collect();
        for (i, r) in reports.into_iter().enumerate() {
            items += 1;
            if !r.is_empty() {
                failed += 1;
                diag_with("error", &format!("{}:{}", item_name(f), i + 1), "format errors", json!({ "errors": r.errors }));
            }
        }
    }
    let files = score_inputs(&others)?;
    let results: Vec<_> = files.par_iter().map(|p| read_score(p, &profile)).collect();
    for (p, r) in files.iter().zip(results) {
        items += 1;
        if let Err(e) = r {
            failed += 1;
            diag("error", &item_name(p), e);
        }
    }
    let summary = json!({ "items": items, "failed": failed });
    print_report(report, &summary, || format!("{items} items, {failed} failed"));
    Ok(failed)
}

/// Name, reference file and generated file.
type NamedPair = (String, PathBuf, PathBuf);

fn read_pair_dirs(reference: &Path, generated: &Path) -> Fallible<(Vec<NamedPair>, usize)> {
    let refs = score_inputs(&[reference.to_path_buf()])?;
    let gens = score_inputs(&[generated.to_path_buf()])?;
    let name = |p: &PathBuf| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let gen_by: BTreeMap<String, PathBuf> = gens.iter().map(|p| (name(p), p.clone())).collect();
    let mut unmatched = 0;
    let mut pairs = Vec::new();
    for r in &refs {
        match gen_by.get(&name(r)) {
            Some(g) => pairs.push((name(r), r.clone(), g.clone())),
            None => {
                unmatched += 1;
                diag("error", &item_name(r), "no generated file with this name");
            }
        }
    }
    for (n, g) in &gen_by {
        if !refs.iter().any(|r| &name(r) == n) {
            unmatched += 1;
            diag("error", &item_name(g), "no reference file with this name");
        }
    }
    Ok((pairs, unmatched))
}

fn cmd_evaluate(reference: &Path, generated: &Path, report: ReportFormat) -> Fallible<usize> {
    type Loaded = Result<(Score, Score), String>;
    let (named, mut failed): (Vec<(String, Loaded)>, usize) = if reference.is_dir() && generated.is_dir() {
        let (pairs, unmatched) = read_pair_dirs(reference, generated)?;
        let loaded = pairs
            .par_iter()
            .map(|(n, r, g)| {
                let load = || Ok((read_score(r, &Profile::default())?.score, read_score(g, &Profile::default())?.score));
                (n.clone(), load())
            })
            .collect();
        (loaded, unmatched)
    } else {
        let refs = read_lines(reference)?;
        let gens = read_lines(generated)?;
        let mut unmatched = 0;
        if refs.len() != gens.len() {
            unmatched += refs.len().abs_diff(gens.len());
            diag(
                "error",
                &item_name(generated),
                format!("{} reference lines but {} generated lines", refs.len(), gens.len()),
            );
        }
        let loaded = refs
            .par_iter()
            .zip(gens.par_iter())
            .enumerate()
            .map(|(i, (r, g))| {
                let (rs, rerr) = detokenize(&split_line(r));
                let load = if rerr.is_empty() {
                    Ok((rs, detokenize(&split_line(g)).0))
                } else {
                    Err(format!("reference line has format errors: {}", rerr.errors[0]))
                };
                (format!("line {}", i + 1), load)
            })
            .collect();
        (loaded, unmatched)
    };

    let scored: Vec<(String, Result<MetricReport, String>)> = named
        .into_par_iter()
        .map(|(n, l)| (n, l.and_then(|(r, g)| evaluate(&r, &g).map_err(|e| e.to_string()))))
        .collect();
    let mut ok = Vec::new();
    let mut out = writer(None)?;
    for (n, r) in scored {
        match r {
            Ok(rep) => {
                if report == ReportFormat::Json {
                    let mut v = rep.to_json();
                    v["name"] = json!(n);
                    writeln!(out, "{v}")?;
                } else {
                    writeln!(out, "{n}: average {:.2}", rep.average())?;
                }
                ok.push(rep);
            }
            Err(e) => {
                failed += 1;
                diag("error", &n, e);
            }
        }
    }
    match aggregate(&ok) {
        Ok(total) => match report {
            ReportFormat::Json => {
                let mut v = total.to_json();
                v["name"] = json!("aggregate");
                v["pairs"] = json!(ok.len());
                writeln!(out, "{v}")?;
            }
            ReportFormat::Text => writeln!(out, "{}", text_report(&total, ok.len()))?,
        },
        Err(e) => diag("warning", "aggregate", e),
    }
    out.flush()?;
    Ok(failed)
}

fn text_report(r: &MetricReport, pairs: usize) -> String {
    let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
    let mut s = format!("aggregate over {pairs} pairs ({} reference items), error rates in %", r.reference_items);
    for c in Category::ALL {
        s.push_str(&format!("\n{:<18} {:>7}", c.key(), fmt(r.category(c))));
        for a in Aspect::ALL.into_iter().filter(|a| a.category() == c) {
            s.push_str(&format!("\n  {:<16} {:>7}", a.key(), fmt(r.rate(a))));
        }
    }
    s.push_str(&format!("\n{:<18} {:>7.2}", "average", r.average()));
    s.push_str(&format!("\n{:<18} {:>7.2}", "category_average", r.category_average()));
    s
}

#[derive(serde::Serialize)]
struct LineStats {
    file: String,
    lines: usize,
    mean: f64,
    std: f64,
    min: usize,
    max: usize,
}

fn line_stats(path: &Path) -> Fallible<LineStats> {
    let lens: Vec<usize> = read_lines(path)?.iter().map(|l| split_line(l).len()).collect();
    let n = lens.len();
    let mean = if n == 0 { 0.0 } else { lens.iter().sum::<usize>() as f64 / n as f64 };
    let var = if n == 0 { 0.0 } else { lens.iter().map(|&l| (l as f64 - mean).powi(2)).sum::<f64>() / n as f64 };
    Ok(LineStats {
        file: item_name(path),
        lines: n,
        mean,
        std: var.sqrt(),
        min: lens.iter().copied().min().unwrap_or(0),
        max: lens.iter().copied().max().unwrap_or(0),
    })
}

fn stats(inputs: &[PathBuf], report: ReportFormat) -> Fallible<usize> {
    let all: Vec<LineStats> = inputs.iter().map(|p| line_stats(p)).collect::<Fallible<_>>()?;
    let ratio = match all.as_slice() {
        [a, b] if a.mean > 0.0 => Some(b.mean / a.mean),
        _ => None,
    };
    let summary = json!({ "files": all, "ratio": ratio });
    print_report(report, &summary, || {
        let mut s = String::new();
        for f in &all {
            s.push_str(&format!(
                "{}: {} lines, {:.2} ± {:.2} tokens (min {}, max {})\n",
                f.file, f.lines, f.mean, f.std, f.min, f.max
            ));
        }
        if let Some(r) = ratio {
            s.push_str(&format!("ratio second/first: {r:.4}\n"));
        }
        s.trim_end().to_string()
    });
    Ok(0)
}
