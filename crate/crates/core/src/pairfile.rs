//! Reading and writing cause-effect pair files.
//!
//! Format: UTF-8 text, one pair of whitespace-separated numeric columns per
//! line, `#` lines are comments, `\n` or `\r\n` endings, scientific
//! notation accepted.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::transform::{tie_fraction, SamplePair};

/// Minimum number of data rows accepted.
pub const MIN_ROWS: usize = 20;
/// Tie fraction above which a warning is attached (the transform-based
/// methods will refuse such pairs).
pub const TIE_WARN_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct PairFile {
    pub path: PathBuf,
    pub pair: SamplePair,
    pub rows: usize,
    pub tie_fraction_x: f64,
    pub tie_fraction_y: f64,
}

impl PairFile {
    /// Human-readable warning when either variable repeats more than the
    /// threshold fraction of its values.
    pub fn tie_warning(&self) -> Option<String> {
        let mut parts = Vec::new();
        if self.tie_fraction_x > TIE_WARN_THRESHOLD {
            parts.push(format!("x repeats {:.2}% of its values", self.tie_fraction_x * 100.0));
        }
        if self.tie_fraction_y > TIE_WARN_THRESHOLD {
            parts.push(format!("y repeats {:.2}% of its values", self.tie_fraction_y * 100.0));
        }
        if parts.is_empty() {
            None
        } else {
            Some(format!(
                "{} (threshold {:.0}%); transform-based methods will report the pair as unsuitable",
                parts.join(", "),
                TIE_WARN_THRESHOLD * 100.0
            ))
        }
    }
}

/// Parse a pair file. Malformed lines fail with their 1-based line number.
pub fn load_pair(path: &Path) -> Result<PairFile> {
    let text = std::fs::read_to_string(path)?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 2 numeric columns, found {}", tokens.len()),
            });
        }
        let mut values = [0.0f64; 2];
        for (slot, token) in values.iter_mut().zip(&tokens) {
            *slot = token.parse::<f64>().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("not a number: {token:?}"),
            })?;
            if !slot.is_finite() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("non-finite value: {token:?}"),
                });
            }
        }
        x.push(values[0]);
        y.push(values[1]);
    }
    let rows = x.len();
    if rows < MIN_ROWS {
        return Err(Error::InsufficientData(format!(
            "pair file has {rows} data rows, need at least {MIN_ROWS}"
        )));
    }
    let tie_fraction_x = tie_fraction(&x);
    let tie_fraction_y = tie_fraction(&y);
    Ok(PairFile {
        path: path.to_path_buf(),
        pair: SamplePair::new(x, y)?,
        rows,
        tie_fraction_x,
        tie_fraction_y,
    })
}

/// Write a pair in the same format, with round-trip-exact float formatting.
pub fn save_pair(path: &Path, pair: &SamplePair) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# x y")?;
    for (a, b) in pair.x.iter().zip(&pair.y) {
        writeln!(out, "{a} {b}")?;
    }
    out.flush()?;
    Ok(())
}
