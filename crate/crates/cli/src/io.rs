use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use scoretok::musicxml::{parse_musicxml, Parsed, Profile};
use serde_json::{json, Value};

const SCORE_EXTENSIONS: [&str; 2] = ["musicxml", "xml"];

/// One structured diagnostic line on stderr.
pub fn diag(level: &str, item: &str, message: impl Display) {
    eprintln!("{}", json!({ "level": level, "item": item, "message": message.to_string() }));
}

pub fn diag_with(level: &str, item: &str, message: impl Display, extra: Value) {
    let mut v = json!({ "level": level, "item": item, "message": message.to_string() });
    if let (Some(m), Value::Object(x)) = (v.as_object_mut(), extra) {
        m.extend(x);
    }
    eprintln!("{v}");
}

/// Expand arguments into score files: files are kept as given, directories
/// contribute their `.musicxml`/`.xml` files in name order.
pub fn score_inputs(args: &[PathBuf]) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for a in args {
        if a.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(a)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && is_score_file(p))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(a.clone());
        }
    }
    Ok(out)
}

pub fn is_score_file(p: &Path) -> bool {
    p.extension().and_then(|e| e.to_str()).is_some_and(|e| SCORE_EXTENSIONS.contains(&e))
}

pub fn item_name(p: &Path) -> String {
    p.display().to_string()
}

pub fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| item_name(p), |s| s.to_string_lossy().into_owned())
}

/// Read and parse one MusicXML file, reporting import warnings.
pub fn read_score(path: &Path, profile: &Profile) -> Result<Parsed, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let parsed = parse_musicxml(&text, profile).map_err(|e| e.to_string())?;
    for w in &parsed.warnings {
        diag_with("warning", &item_name(path), w, json!({ "element": w.element, "measure": w.measure }));
    }
    Ok(parsed)
}

pub fn read_lines(path: &Path) -> io::Result<Vec<String>> {
    Ok(fs::read_to_string(path)?.lines().map(str::to_string).collect())
}

/// Destination for line output: a file or stdout.
pub fn writer(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(io::BufWriter::new(fs::File::create(p)?))
        }
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}
