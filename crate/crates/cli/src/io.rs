//! Input resolution and output writing shared by the subcommands.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use disco_core::mask_io::{load_mask, relabel_compact, InstanceMask, MaskFormat};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use crate::UsageError;

pub const MASK_EXTENSIONS: &[&str] = &["pgm", "csv"];

fn has_extension(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// Expands files, directories (non-recursive, filtered by extension) and
/// glob patterns into a sorted, de-duplicated list.
pub fn resolve_inputs(
    patterns: &[String],
    exts: &[&str],
    what: &str,
) -> Result<Vec<PathBuf>, UsageError> {
    if patterns.is_empty() {
        return Err(UsageError(format!("no {what} given (use --in)")));
    }
    let mut found = BTreeSet::new();
    for pattern in patterns {
        let path = Path::new(pattern);
        let before = found.len();
        if path.is_dir() {
            let entries = std::fs::read_dir(path)
                .map_err(|e| UsageError(format!("cannot list {}: {e}", path.display())))?;
            for entry in entries.flatten() {
                let p = entry.path();
                if p.is_file() && has_extension(&p, exts) {
                    found.insert(p);
                }
            }
        } else if path.is_file() {
            found.insert(path.to_path_buf());
        } else {
            let matches = glob::glob(pattern)
                .map_err(|e| UsageError(format!("bad pattern '{pattern}': {e}")))?;
            for p in matches.flatten() {
                if p.is_file() {
                    found.insert(p);
                }
            }
        }
        if found.len() == before {
            return Err(UsageError(format!("no {what} matched '{pattern}'")));
        }
    }
    Ok(found.into_iter().collect())
}

/// File name without its final extension.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Stems of `paths`, which must be pairwise distinct because outputs are
/// named after them.
pub fn unique_stems(paths: &[PathBuf]) -> Result<Vec<String>, UsageError> {
    let stems: Vec<String> = paths.iter().map(|p| stem(p)).collect();
    let mut seen = BTreeSet::new();
    for (s, p) in stems.iter().zip(paths) {
        if !seen.insert(s) {
            return Err(UsageError(format!(
                "two inputs share the name '{s}' (second is {})",
                p.display()
            )));
        }
    }
    Ok(stems)
}

pub fn require_out(out: &Option<PathBuf>) -> Result<&Path, UsageError> {
    out.as_deref()
        .ok_or_else(|| UsageError("--out is required".into()))
}

pub fn mask_format(path: &Path) -> Result<MaskFormat, UsageError> {
    MaskFormat::from_path(path)
        .ok_or_else(|| UsageError(format!("{}: expected a .pgm or .csv mask", path.display())))
}

pub fn read_mask(path: &Path) -> Result<InstanceMask> {
    let format = mask_format(path)?;
    load_mask(path, format).with_context(|| format!("reading {}", path.display()))
}

/// Reads a mask and renumbers its instances `1..=N` in first-appearance
/// order when the ids are not already contiguous.
pub fn read_compact_mask(path: &Path) -> Result<InstanceMask> {
    let mask = read_mask(path)?;
    Ok(if mask.is_compact() {
        mask
    } else {
        relabel_compact(&mask).0
    })
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

/// Runs `f` over `items` on `pool`, keeping input order. The first error in
/// input order wins, so failures are reported deterministically.
pub fn par_map<I, T, F>(pool: &ThreadPool, items: &[I], f: F) -> Result<Vec<T>>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T> + Sync,
{
    pool.install(|| items.par_iter().map(&f).collect::<Vec<_>>())
        .into_iter()
        .collect()
}
