use std::ops::Index;

use crate::error::{Error, Result};

/// A grayscale image stored row-major as intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame("empty image".into()));
        }
        Error::check_len(width * height, pixels.len())?;
        if let Some((i, v)) = pixels
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidFrame(format!(
                "pixel {i} = {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds a frame from arbitrary values, clamping into `[0, 1]`.
    /// Non-finite values become 0.
    pub fn from_clamped(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        let pixels = values
            .iter()
            .map(|v| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 })
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pixels, `m`.
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Snaps every pixel to the nearest of the 256 levels `k / 255`.
    pub fn quantized_8bit(&self) -> Self {
        let pixels = self
            .pixels
            .iter()
            .map(|v| f64::from(to_u8(*v)) / 255.0)
            .collect();
        Self {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels.iter().map(|v| to_u8(*v)).collect()
    }

    pub(crate) fn same_shape(&self, other: &Frame) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Dimension {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for Frame {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.pixels[i]
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary per-pixel labels: `true` marks foreground.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ForegroundMask {
    bits: Vec<bool>,
}

impl ForegroundMask {
    /// All pixels background, i.e. every pixel participates in fitting.
    pub fn background(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn foreground(len: usize) -> Self {
        Self {
            bits: vec![true; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_foreground(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, fg: bool) {
        self.bits[i] = fg;
    }

    pub fn count_foreground(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn count_background(&self) -> usize {
        self.len() - self.count_foreground()
    }

    /// Indices of background-labelled pixels, the ones used for fitting.
    pub fn fitting_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| !**b)
            .map(|(i, _)| i)
    }

    /// 0/255 image bytes.
    pub fn to_u8(&self) -> Vec<u8> {
        self.bits.iter().map(|b| if *b { 255 } else { 0 }).collect()
    }
}
