//! Frame export as binary PGM (P5) or CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{FdtnError, Result};
use crate::grid::RealGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Pgm,
    Csv,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Pgm => "pgm",
            ExportFormat::Csv => "csv",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = FdtnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgm" => Ok(ExportFormat::Pgm),
            "csv" => Ok(ExportFormat::Csv),
            other => Err(FdtnError::InvalidArgument(format!(
                "unknown export format {other:?} (expected pgm or csv)"
            ))),
        }
    }
}

pub fn encode_pgm(frame: &RealGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend(
        frame
            .values()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

/// Full-precision values; Rust's float formatting round-trips exactly.
pub fn encode_csv(frame: &RealGrid) -> String {
    let mut out = String::new();
    for row in frame.values().chunks(frame.width()) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v:?}").expect("writing to a string cannot fail");
        }
        out.push('\n');
    }
    out
}

/// Write frames as `<prefix><index>.<ext>` with zero-padded indices.
pub fn export_frames(
    frames: &[RealGrid],
    directory: impl AsRef<Path>,
    prefix: &str,
    format: ExportFormat,
) -> Result<Vec<PathBuf>> {
    let dir = directory.as_ref();
    fs::create_dir_all(dir)?;
    let digits = frames.len().saturating_sub(1).to_string().len().max(3);
    let mut written = Vec::with_capacity(frames.len());
    for (idx, frame) in frames.iter().enumerate() {
        let path = dir.join(format!("{prefix}{idx:0digits$}.{}", format.extension()));
        let bytes = match format {
            ExportFormat::Pgm => encode_pgm(frame),
            ExportFormat::Csv => encode_csv(frame).into_bytes(),
        };
        fs::write(&path, bytes)?;
        written.push(path);
    }
    Ok(written)
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(FdtnError::format("pgm", "truncated header"));
    }
    Ok(&bytes[start..*pos])
}

pub fn decode_pgm(bytes: &[u8]) -> Result<RealGrid> {
    let mut pos = 0;
    if next_token(bytes, &mut pos)? != b"P5" {
        return Err(FdtnError::format("pgm", "not a binary P5 file"));
    }
    let mut num = |what: &str| -> Result<usize> {
        std::str::from_utf8(next_token(bytes, &mut pos)?)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FdtnError::format("pgm", format!("bad {what}")))
    };
    let (w, h, maxval) = (num("width")?, num("height")?, num("maxval")?);
    if maxval == 0 || maxval > 255 {
        return Err(FdtnError::format(
            "pgm",
            format!("unsupported maxval {maxval}"),
        ));
    }
    pos += 1;
    let body = bytes
        .get(pos..pos + w * h)
        .ok_or_else(|| FdtnError::format("pgm", "truncated pixels"))?;
    RealGrid::new(
        w,
        h,
        body.iter().map(|&b| b as f64 / maxval as f64).collect(),
    )
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<RealGrid> {
    decode_pgm(&fs::read(path)?)
}

pub fn decode_csv(text: &str) -> Result<RealGrid> {
    let mut width = 0;
    let mut values = Vec::new();
    let mut height = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| FdtnError::format("csv", e.to_string()))?;
        if height == 0 {
            width = row.len();
        } else if row.len() != width {
            return Err(FdtnError::format("csv", "ragged rows"));
        }
        values.extend(row);
        height += 1;
    }
    RealGrid::new(width, height, values)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<RealGrid> {
    decode_csv(&fs::read_to_string(path)?)
}
