//! Synthetic sequence datasets, their binary container, and image I/O.

pub mod ball;
pub mod digits;
pub mod export;
pub mod idx;
pub mod morse;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{FdtnError, Result};
use crate::grid::RealGrid;

pub use ball::{gen_bouncing_ball, BallParams, MotionState};
pub use digits::{builtin_glyphs, gen_moving_digit, DigitParams, Glyph};
pub use export::{export_frames, read_csv, read_pgm, ExportFormat};
pub use idx::{load_idx, parse_idx, GlyphSet};
pub use morse::{gen_morse, morse_code, render_morse, MorseParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = FdtnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(FdtnError::InvalidArgument(format!(
                "unknown split {other:?}"
            ))),
        }
    }
}

/// Generator name plus the ordered parameters that regenerate the data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Descriptor {
    pub generator: String,
    pub params: Vec<(String, String)>,
}

impl Descriptor {
    pub fn new(generator: impl Into<String>) -> Self {
        Descriptor {
            generator: generator.into(),
            params: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// `key=value` lines.
    pub fn to_text(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn from_text(generator: &str, text: &str) -> Result<Self> {
        let mut d = Descriptor::new(generator);
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| {
                FdtnError::format("dataset", format!("bad descriptor line {line:?}"))
            })?;
            d.params.push((k.to_string(), v.to_string()));
        }
        Ok(d)
    }
}

/// `N` sequences of `T` equally sized frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    pub descriptor: Descriptor,
    pub split: Split,
    pub sequences: Vec<Vec<RealGrid>>,
}

impl SequenceDataset {
    pub fn new(
        descriptor: Descriptor,
        split: Split,
        sequences: Vec<Vec<RealGrid>>,
    ) -> Result<Self> {
        let ds = SequenceDataset {
            descriptor,
            split,
            sequences,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let Some(first) = self.sequences.first().and_then(|s| s.first()) else {
            return Ok(());
        };
        let t = self.sequences[0].len();
        for seq in &self.sequences {
            if seq.len() != t {
                return Err(FdtnError::dims(
                    format!("{t} frames per sequence"),
                    format!("{}", seq.len()),
                ));
            }
            if let Some(bad) = seq.iter().find(|f| !f.same_shape(first)) {
                return Err(FdtnError::dims(first.shape_string(), bad.shape_string()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn frames_per_sequence(&self) -> usize {
        self.sequences.first().map_or(0, Vec::len)
    }

    /// `(width, height)` of every frame, if any.
    pub fn frame_size(&self) -> Option<(usize, usize)> {
        self.sequences
            .first()
            .and_then(|s| s.first())
            .map(|f| (f.width(), f.height()))
    }
}

const DATASET_MAGIC: &[u8; 8] = b"FDTNDSET";
pub const DATASET_VERSION: u32 = 1;

/// Binary container:
///
/// ```text
/// magic "FDTNDSET" | version u32 | generator (u32 length + UTF-8)
/// | descriptor key=value text (u32 length + UTF-8) | N, T, W, H as u64
/// | N·T·H·W frame values as f32, sequence-major, rows within frames
/// ```
///
/// All integers and floats are little-endian. The split is recorded in the
/// descriptor as `split=train|test`.
pub fn write_dataset(ds: &SequenceDataset, mut out: impl Write) -> Result<()> {
    let (w, h) = ds.frame_size().unwrap_or((0, 0));
    let mut desc = ds.descriptor.clone();
    desc.params.retain(|(k, _)| k != "split");
    desc.params.push(("split".into(), ds.split.to_string()));
    let text = desc.to_text();
    out.write_all(DATASET_MAGIC)?;
    out.write_all(&DATASET_VERSION.to_le_bytes())?;
    out.write_all(&(desc.generator.len() as u32).to_le_bytes())?;
    out.write_all(desc.generator.as_bytes())?;
    out.write_all(&(text.len() as u32).to_le_bytes())?;
    out.write_all(text.as_bytes())?;
    for dim in [ds.len(), ds.frames_per_sequence(), w, h] {
        out.write_all(&(dim as u64).to_le_bytes())?;
    }
    for seq in &ds.sequences {
        for frame in seq {
            for &v in frame.values() {
                out.write_all(&(v as f32).to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn read_exact_or(input: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    input
        .read_exact(buf)
        .map_err(|_| FdtnError::format("dataset", format!("truncated {what}")))
}

fn read_string(input: &mut impl Read, what: &str) -> Result<String> {
    let mut b = [0u8; 4];
    read_exact_or(input, &mut b, what)?;
    let len = u32::from_le_bytes(b) as usize;
    if len > 1 << 20 {
        return Err(FdtnError::format("dataset", format!("{what} too long")));
    }
    let mut s = vec![0u8; len];
    read_exact_or(input, &mut s, what)?;
    String::from_utf8(s).map_err(|_| FdtnError::format("dataset", format!("{what} is not UTF-8")))
}

pub fn read_dataset(mut input: impl Read) -> Result<SequenceDataset> {
    let mut magic = [0u8; 8];
    read_exact_or(&mut input, &mut magic, "header")?;
    if &magic != DATASET_MAGIC {
        return Err(FdtnError::format("dataset", "bad magic"));
    }
    let mut b4 = [0u8; 4];
    read_exact_or(&mut input, &mut b4, "version")?;
    let version = u32::from_le_bytes(b4);
    if version != DATASET_VERSION {
        return Err(FdtnError::format(
            "dataset",
            format!("unsupported version {version}"),
        ));
    }
    let generator = read_string(&mut input, "generator name")?;
    let text = read_string(&mut input, "descriptor")?;
    let mut descriptor = Descriptor::from_text(&generator, &text)?;
    let split: Split = descriptor
        .get("split")
        .ok_or_else(|| FdtnError::format("dataset", "descriptor lacks split"))?
        .parse()?;
    descriptor.params.retain(|(k, _)| k != "split");
    let mut dims = [0usize; 4];
    let mut b8 = [0u8; 8];
    for d in &mut dims {
        read_exact_or(&mut input, &mut b8, "dimensions")?;
        *d = u64::from_le_bytes(b8) as usize;
    }
    let [n, t, w, h] = dims;
    let total = n
        .checked_mul(t)
        .and_then(|x| x.checked_mul(w))
        .and_then(|x| x.checked_mul(h))
        .filter(|&x| x <= 1 << 32)
        .ok_or_else(|| FdtnError::format("dataset", "dimensions too large"))?;
    let mut raw = vec![0u8; total * 4];
    read_exact_or(&mut input, &mut raw, "frames")?;
    let mut values = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
    let mut sequences = Vec::with_capacity(n);
    for _ in 0..n {
        let mut seq = Vec::with_capacity(t);
        for _ in 0..t {
            let frame: Vec<f64> = values.by_ref().take(w * h).collect();
            seq.push(RealGrid::new(w, h, frame)?);
        }
        sequences.push(seq);
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(FdtnError::format("dataset", "trailing bytes"));
    }
    SequenceDataset::new(descriptor, split, sequences)
}
