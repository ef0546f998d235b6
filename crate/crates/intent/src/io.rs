//! File formats.
//!
//! * World: the tile grid accepted by [`GridWorld::parse`].
//! * Traces: one JSON object per step,
//!   `{"pos":[x,y],"props":["yellow"],"action":"N"}`. A blank line or a step
//!   whose action is `null` ends a trace, so a file can hold a corpus.
//! * Formulas: one per line; `#` starts a comment.
//!
//! Every write goes to a temporary file in the target directory and is
//! renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use intent_core::{parse_formula, Action, Alphabet, Cell, Formula, GridWorld, Step, Trace};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    World { path: PathBuf, source: intent_core::gridworld::WorldError },
    #[error("{path}:{line}: {msg}")]
    Trace { path: PathBuf, line: usize, msg: String },
    #[error("{path}:{line}: {source}")]
    Formula { path: PathBuf, line: usize, source: intent_core::pltl::ParseError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io { path: path.to_path_buf(), source }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Writes `contents` to `path` through a temporary file and a rename,
/// creating parent directories as needed.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), FormatError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| FormatError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

pub fn read_world(path: &Path, slip: f64, max_len: usize) -> Result<GridWorld, FormatError> {
    let wrap = |source| FormatError::World { path: path.to_path_buf(), source };
    GridWorld::parse(&read_text(path)?)
        .and_then(|w| w.with_slip(slip))
        .and_then(|w| w.with_max_len(max_len))
        .map_err(wrap)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepRecord {
    pos: [u32; 2],
    props: Vec<String>,
    action: Option<String>,
}

/// Serializes traces, separating them with blank lines.
pub fn traces_to_jsonl(traces: &[Trace], alphabet: &Alphabet) -> String {
    let mut out = String::new();
    for (i, t) in traces.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for s in t.steps() {
            let rec = StepRecord {
                pos: [s.pos.x, s.pos.y],
                props: alphabet.props_of(s.obs).into_iter().map(String::from).collect(),
                action: s.action.map(|a| a.letter().to_string()),
            };
            out.push_str(&serde_json::to_string(&rec).expect("step records serialize"));
            out.push('\n');
        }
    }
    out
}

pub fn parse_traces(text: &str, alphabet: &Alphabet, path: &Path) -> Result<Vec<Trace>, FormatError> {
    let bad = |line: usize, msg: String| FormatError::Trace { path: path.to_path_buf(), line, msg };
    let mut traces = Vec::new();
    let mut current = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            if !current.is_empty() {
                traces.push(Trace::new(std::mem::take(&mut current)));
            }
            continue;
        }
        let rec: StepRecord = serde_json::from_str(raw).map_err(|e| bad(line, e.to_string()))?;
        let obs = alphabet.observation(&rec.props).map_err(|e| bad(line, e.to_string()))?;
        let action = match rec.action.as_deref() {
            None => None,
            Some(a) => {
                let mut chars = a.chars();
                match (chars.next().and_then(Action::from_letter), chars.next()) {
                    (Some(act), None) => Some(act),
                    _ => return Err(bad(line, format!("unknown action {a:?}"))),
                }
            }
        };
        current.push(Step { pos: Cell::new(rec.pos[0], rec.pos[1]), obs, action });
        if action.is_none() {
            traces.push(Trace::new(std::mem::take(&mut current)));
        }
    }
    if !current.is_empty() {
        traces.push(Trace::new(current));
    }
    Ok(traces)
}

pub fn read_traces(path: &Path, alphabet: &Alphabet) -> Result<Vec<Trace>, FormatError> {
    parse_traces(&read_text(path)?, alphabet, path)
}

pub fn parse_formulas(text: &str, path: &Path) -> Result<Vec<Formula>, FormatError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let f = parse_formula(body).map_err(|source| FormatError::Formula {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(f);
    }
    Ok(out)
}

pub fn read_formulas(path: &Path) -> Result<Vec<Formula>, FormatError> {
    parse_formulas(&read_text(path)?, path)
}

pub fn formulas_to_text(formulas: &[Formula]) -> String {
    formulas.iter().map(|f| format!("{f}\n")).collect()
}
