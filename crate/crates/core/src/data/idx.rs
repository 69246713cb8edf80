//! IDX image files (`magic 0x00000803`, big-endian header, unsigned bytes).

use std::fs;
use std::path::Path;

use crate::data::digits::{Glyph, GLYPH_SIZE};
use crate::error::{FdtnError, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphSet {
    pub glyphs: Vec<Glyph>,
    pub rows: usize,
    pub cols: usize,
    /// Set when the images are not 28×28; they are still accepted.
    pub warning: Option<String>,
}

pub fn load_idx(path: impl AsRef<Path>) -> Result<GlyphSet> {
    let bytes = fs::read(path.as_ref())?;
    parse_idx(&bytes)
}

pub fn parse_idx(bytes: &[u8]) -> Result<GlyphSet> {
    let word = |k: usize| -> Result<u32> {
        bytes
            .get(4 * k..4 * k + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| FdtnError::format("idx", "truncated header"))
    };
    match word(0)? {
        IMAGES_MAGIC => {}
        LABELS_MAGIC => {
            return Err(FdtnError::format(
                "idx",
                "this is a label file (magic 0x00000801), expected images (0x00000803)",
            ))
        }
        other => return Err(FdtnError::format("idx", format!("bad magic {other:#010x}"))),
    }
    let count = word(1)? as usize;
    let rows = word(2)? as usize;
    let cols = word(3)? as usize;
    let pixels = rows
        .checked_mul(cols)
        .filter(|&p| p > 0)
        .ok_or_else(|| FdtnError::format("idx", format!("bad image size {rows}x{cols}")))?;
    let body = &bytes[16..];
    let needed = count
        .checked_mul(pixels)
        .ok_or_else(|| FdtnError::format("idx", "size overflow"))?;
    if body.len() < needed {
        return Err(FdtnError::format(
            "idx",
            format!(
                "truncated: {count} images need {needed} bytes, found {}",
                body.len()
            ),
        ));
    }
    let glyphs = body[..needed]
        .chunks_exact(pixels)
        .map(|img| Glyph {
            width: cols,
            height: rows,
            values: img.iter().map(|&b| b as f64 / 255.0).collect(),
        })
        .collect();
    let warning = (rows != GLYPH_SIZE || cols != GLYPH_SIZE)
        .then(|| format!("images are {rows}x{cols}, expected {GLYPH_SIZE}x{GLYPH_SIZE}"));
    Ok(GlyphSet {
        glyphs,
        rows,
        cols,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(magic: u32, count: u32, rows: u32, cols: u32) -> Vec<u8> {
        [magic, count, rows, cols]
            .iter()
            .flat_map(|v| v.to_be_bytes())
            .collect()
    }

    #[test]
    fn single_blank_image() {
        let mut bytes = header(0x803, 1, 28, 28);
        bytes.extend(vec![0u8; 784]);
        assert_eq!(&bytes[..4], &[0, 0, 8, 3]);
        let set = parse_idx(&bytes).unwrap();
        assert_eq!(set.glyphs.len(), 1);
        assert!(set.glyphs[0].values.iter().all(|&v| v == 0.0));
        assert!(set.warning.is_none());
    }

    #[test]
    fn byte_255_is_one() {
        let mut bytes = header(0x803, 1, 2, 2);
        bytes.extend([255, 0, 51, 255]);
        let set = parse_idx(&bytes).unwrap();
        assert_eq!(set.glyphs[0].values, vec![1.0, 0.0, 0.2, 1.0]);
        assert!(set.warning.is_some());
    }

    #[test]
    fn label_file_and_truncation() {
        let mut labels = header(0x801, 1, 28, 28);
        labels.extend(vec![0u8; 784]);
        let err = parse_idx(&labels).unwrap_err().to_string();
        assert!(err.contains("label"), "{err}");
        let mut short = header(0x803, 2, 28, 28);
        short.extend(vec![0u8; 784]);
        assert!(parse_idx(&short).is_err());
        assert!(parse_idx(&[0, 0, 8]).is_err());
    }
}
