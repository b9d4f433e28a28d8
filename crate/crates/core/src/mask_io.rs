//! Instance masks and their on-disk formats.
//!
//! Two formats are supported: Netpbm greymaps (P2 plain text or P5 binary,
//! 8- or 16-bit big-endian samples) and headerless comma-separated integer
//! grids. Everything is row-major with the origin at the top-left pixel.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DiscoError, Result};

/// A 2-D grid of instance ids; `0` is background.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstanceMask {
    height: usize,
    width: usize,
    labels: Vec<u32>,
}

impl fmt::Debug for InstanceMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "InstanceMask {}x{}", self.height, self.width)?;
        for row in self.labels.chunks(self.width) {
            writeln!(f, "  {row:?}")?;
        }
        Ok(())
    }
}

impl InstanceMask {
    pub fn new(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(DiscoError::Shape(format!(
                "mask must be at least 1x1, got {height}x{width}"
            )));
        }
        if labels.len() != height * width {
            return Err(DiscoError::Shape(format!(
                "expected {} labels for a {height}x{width} mask, got {}",
                height * width,
                labels.len()
            )));
        }
        Ok(Self {
            height,
            width,
            labels,
        })
    }

    /// An all-background mask.
    pub fn background(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![0; height * width])
    }

    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut labels = Vec::with_capacity(height * width);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != width {
                return Err(DiscoError::Shape(format!(
                    "row {i} has {} columns, expected {width}",
                    row.len()
                )));
            }
            labels.extend_from_slice(row);
        }
        Self::new(height, width, labels)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, label: u32) {
        self.labels[row * self.width + col] = label;
    }

    pub fn max_label(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Number of distinct nonzero ids.
    pub fn instance_count(&self) -> usize {
        let mut ids: Vec<u32> = self.labels.iter().copied().filter(|&l| l != 0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// True when the nonzero ids are exactly `1..=N`.
    pub fn is_compact(&self) -> bool {
        let max = self.max_label() as usize;
        if max > self.labels.len() {
            return false;
        }
        let mut seen = vec![false; max + 1];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        seen[1..].iter().all(|&s| s)
    }

    pub fn require_compact(&self) -> Result<()> {
        if self.is_compact() {
            Ok(())
        } else {
            Err(DiscoError::Precondition(
                "instance ids must be compacted to 1..N (see relabel_compact)".into(),
            ))
        }
    }

    /// Pixel counts per id, indexed by id (slot 0 counts background).
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0usize; self.max_label() as usize + 1];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }

    /// Pixel coordinates of one instance, in row-major order.
    pub fn pixels_of(&self, id: u32) -> Vec<(usize, usize)> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == id)
            .map(|(i, _)| (i / self.width, i % self.width))
            .collect()
    }
}

/// On-disk mask encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskFormat {
    Pgm,
    Csv,
}

impl MaskFormat {
    /// Guess the format from a file extension (`.pgm` / `.csv`).
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pgm" => Some(Self::Pgm),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Pgm => "pgm",
            Self::Csv => "csv",
        }
    }
}

impl FromStr for MaskFormat {
    type Err = DiscoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pgm" => Ok(Self::Pgm),
            "csv" => Ok(Self::Csv),
            other => Err(DiscoError::Domain(format!("unknown mask format '{other}'"))),
        }
    }
}

/// Sample layout used when writing PGM.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgmEncoding {
    /// P2
    Plain,
    /// P5
    Raw,
}

pub const PGM_MAX_VALUE: u32 = 65535;

pub fn load_mask(path: &Path, format: MaskFormat) -> Result<InstanceMask> {
    let bytes = fs::read(path)?;
    match format {
        MaskFormat::Pgm => decode_pgm(&bytes),
        MaskFormat::Csv => {
            let text = std::str::from_utf8(&bytes)
                .map_err(|e| DiscoError::Parse(format!("CSV is not UTF-8: {e}")))?;
            decode_csv(text)
        }
    }
}

/// Writes `mask`; PGM output is plain (P2) text.
pub fn save_mask(mask: &InstanceMask, path: &Path, format: MaskFormat) -> Result<()> {
    let bytes = match format {
        MaskFormat::Pgm => encode_pgm(mask, PgmEncoding::Plain)?,
        MaskFormat::Csv => encode_csv(mask).into_bytes(),
    };
    fs::write(path, bytes)?;
    Ok(())
}

pub fn encode_pgm(mask: &InstanceMask, encoding: PgmEncoding) -> Result<Vec<u8>> {
    let max = mask.max_label();
    if max > PGM_MAX_VALUE {
        return Err(DiscoError::Range(format!(
            "label {max} exceeds the PGM limit of {PGM_MAX_VALUE}"
        )));
    }
    // Netpbm requires 0 < maxval.
    let maxval = max.max(1);
    let (h, w) = (mask.height(), mask.width());
    match encoding {
        PgmEncoding::Plain => {
            let mut out = format!("P2\n{w} {h}\n{maxval}\n");
            for row in mask.labels().chunks(w) {
                let line: Vec<String> = row.iter().map(u32::to_string).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            Ok(out.into_bytes())
        }
        PgmEncoding::Raw => {
            let mut out = format!("P5\n{w} {h}\n{maxval}\n").into_bytes();
            if maxval < 256 {
                out.extend(mask.labels().iter().map(|&l| l as u8));
            } else {
                for &l in mask.labels() {
                    out.extend_from_slice(&(l as u16).to_be_bytes());
                }
            }
            Ok(out)
        }
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !self.bytes[self.pos].is_ascii_whitespace()
            && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        let tok = self
            .token()
            .ok_or_else(|| DiscoError::Parse(format!("PGM: missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| {
                DiscoError::Parse(format!(
                    "PGM: invalid {what} '{}'",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<InstanceMask> {
    let mut rd = HeaderReader { bytes, pos: 0 };
    let magic = rd
        .token()
        .ok_or_else(|| DiscoError::Parse("PGM: empty file".into()))?;
    let raw = match magic {
        b"P2" => false,
        b"P5" => true,
        other => {
            return Err(DiscoError::Parse(format!(
                "PGM: unsupported magic '{}'",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = rd.number("width")? as usize;
    let height = rd.number("height")? as usize;
    let maxval = rd.number("maxval")?;
    if maxval == 0 || maxval > PGM_MAX_VALUE as u64 {
        return Err(DiscoError::Parse(format!(
            "PGM: maxval {maxval} outside 1..={PGM_MAX_VALUE}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(DiscoError::Shape(format!(
            "PGM: degenerate size {width}x{height}"
        )));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| DiscoError::Parse("PGM: size overflow".into()))?;
    let mut labels = Vec::with_capacity(n);
    if raw {
        // exactly one whitespace byte separates maxval from the raster
        let start = rd.pos + 1;
        let sample = if maxval < 256 { 1 } else { 2 };
        let need = n * sample;
        let data = bytes
            .get(start..start + need)
            .ok_or_else(|| DiscoError::Parse(format!("PGM: raster shorter than {need} bytes")))?;
        if sample == 1 {
            labels.extend(data.iter().map(|&b| b as u32));
        } else {
            labels.extend(
                data.chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32),
            );
        }
    } else {
        for i in 0..n {
            let v = rd.number("sample")?;
            if v > maxval {
                return Err(DiscoError::Parse(format!(
                    "PGM: sample {i} = {v} exceeds maxval {maxval}"
                )));
            }
            labels.push(v as u32);
        }
    }
    if let Some(v) = labels.iter().find(|&&v| v as u64 > maxval) {
        return Err(DiscoError::Parse(format!(
            "PGM: sample {v} exceeds maxval {maxval}"
        )));
    }
    InstanceMask::new(height, width, labels)
}

pub fn encode_csv(mask: &InstanceMask) -> String {
    let mut out = String::new();
    for row in mask.labels().chunks(mask.width()) {
        let line: Vec<String> = row.iter().map(u32::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn decode_csv(text: &str) -> Result<InstanceMask> {
    let mut rows: Vec<Vec<u32>> = Vec::new();
    for (r, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (c, field) in line.split(',').enumerate() {
            let field = field.trim();
            let value: i64 = field.parse().map_err(|_| {
                DiscoError::Parse(format!(
                    "CSV: row {r} column {c}: '{field}' is not an integer"
                ))
            })?;
            if value < 0 {
                return Err(DiscoError::Domain(format!(
                    "CSV: row {r} column {c}: negative label {value}"
                )));
            }
            let value = u32::try_from(value).map_err(|_| {
                DiscoError::Range(format!("CSV: row {r} column {c}: label {value} too large"))
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DiscoError::Shape("CSV: no rows".into()));
    }
    InstanceMask::from_rows(&rows)
}

/// Renumbers instances to `1..=N` in order of first row-major appearance.
///
/// Returns the compacted mask and the old → new id map.
pub fn relabel_compact(mask: &InstanceMask) -> (InstanceMask, BTreeMap<u32, u32>) {
    let mut map = BTreeMap::new();
    let mut next = 1u32;
    let labels = mask
        .labels()
        .iter()
        .map(|&l| {
            if l == 0 {
                0
            } else {
                *map.entry(l).or_insert_with(|| {
                    let id = next;
                    next += 1;
                    id
                })
            }
        })
        .collect();
    let out = InstanceMask {
        height: mask.height(),
        width: mask.width(),
        labels,
    };
    (out, map)
}
