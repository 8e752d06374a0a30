//! Netpbm graymap I/O. Writes binary `P5` at 8 bits; reads `P5` (8 or 16
//! bit) and plain `P2`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{ForegroundMask, Frame};

/// Raw graymap: dimensions, maximum value and row-major samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Graymap {
    pub fn to_frame(&self) -> Result<Frame> {
        let scale = f64::from(self.maxval);
        Frame::new(
            self.width,
            self.height,
            self.samples.iter().map(|&s| f64::from(s) / scale).collect(),
        )
    }

    /// Nonzero samples are foreground.
    pub fn to_mask(&self) -> ForegroundMask {
        ForegroundMask::from_bits(self.samples.iter().map(|&s| s != 0).collect())
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
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

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("{what} out of range")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Graymap> {
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'5' || bytes[1] == b'2') {
        return Err(Error::Format("not a P5 or P2 graymap".into()));
    }
    let binary = bytes[1] == b'5';
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format("zero dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {maxval}")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let mut samples = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(Error::Format("missing raster separator".into()));
        }
        let raster = &bytes[cur.pos + 1..];
        let depth = if maxval < 256 { 1 } else { 2 };
        if raster.len() < n * depth {
            return Err(Error::Format(format!(
                "truncated raster: {} of {} bytes",
                raster.len(),
                n * depth
            )));
        }
        if depth == 1 {
            samples.extend(raster[..n].iter().map(|&b| u16::from(b)));
        } else {
            samples.extend(raster[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])));
        }
    } else {
        for _ in 0..n {
            samples.push(cur.number("sample")? as u16);
        }
    }
    if let Some(s) = samples.iter().find(|&&s| usize::from(s) > maxval) {
        return Err(Error::Format(format!("sample {s} exceeds maxval {maxval}")));
    }
    Ok(Graymap {
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

/// 8-bit binary graymap.
pub fn encode(width: usize, height: usize, samples: &[u8]) -> Result<Vec<u8>> {
    Error::check_len(width * height, samples.len())?;
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    Ok(out)
}

pub fn read(path: &Path) -> Result<Graymap> {
    decode(&fs::read(path)?)
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    read(path)?.to_frame()
}

pub fn read_mask(path: &Path) -> Result<ForegroundMask> {
    Ok(read(path)?.to_mask())
}

/// Quantizes to 8 bits; reading back yields `frame.quantized_8bit()`.
pub fn write_frame(path: &Path, frame: &Frame) -> Result<()> {
    fs::write(path, encode(frame.width(), frame.height(), &frame.to_u8())?)?;
    Ok(())
}

/// Foreground as 255, background as 0.
pub fn write_mask(path: &Path, mask: &ForegroundMask, width: usize, height: usize) -> Result<()> {
    fs::write(path, encode(width, height, &mask.to_u8())?)?;
    Ok(())
}
